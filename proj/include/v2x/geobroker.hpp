#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "v2x/geo.hpp"
#include "v2x/messages.hpp"
#include "v2x/time.hpp"
#include "v2x/trace.hpp"

namespace v2x {

struct Subscription {
  uint64_t sub_id = 0;
  StationId station;
  Circle area;               // radius <= 20 km
  std::set<MsgKind> kinds;   // non-empty
  uint16_t home_broker = 0;
};

struct HandoverCommand {
  StationId station;
  uint16_t from = 0;
  uint16_t to = 0;
  SimTime issued_at;
  uint64_t overlap_window_ms = 500;
};

struct HandoverRecord {
  StationId station;
  uint16_t from = 0;
  uint16_t to = 0;
  SimTime issued_at;
  SimTime copied_at;
  SimTime window_end;
};

struct MatchDetail {
  StationId station;
  uint64_t sub_id = 0;
  uint16_t broker = 0;
  bool federated = false;
};

struct PublishResult {
  uint16_t owning_broker = 0;
  std::vector<StationId> matched;    // deduplicated by station, sorted
  std::vector<MatchDetail> details;  // one per (broker, subscription) match
};

/// Region-partitioned geographic publish/subscribe brokers plus the Geo
/// Service side of MEC handover. Broker regions are identified with MEC
/// areas one-to-one; every tile is owned by at most one broker.
///
/// Handover is make-before-break: subscriptions are copied to the target
/// broker immediately, both brokers deliver during the overlap window
/// (client dedup suppresses the duplicates), and the source copy is removed
/// strictly after the window ends.
class BrokerFabric {
 public:
  explicit BrokerFabric(int tile_level = 14, double max_sub_radius_m = 20'000,
                        double federation_hop_ms = 5,
                        uint64_t handover_overlap_ms = 500,
                        TraceLog* trace = nullptr, Audit* audit = nullptr);

  /// Rejects overlap with an already-owned tile (region partition invariant).
  Result<void> add_broker(uint16_t id, std::set<TileId> region);

  /// Indexes the subscription at the broker owning the tile of area.center.
  Result<uint64_t> subscribe(StationId station, Circle area, std::set<MsgKind> kinds,
                             SimTime now);

  /// Idempotent; unknown ids are logged and accepted.
  void unsubscribe(uint64_t sub_id, SimTime now);

  /// Owning-broker match plus synchronous federation to every broker whose
  /// region intersects the max-radius circle around the position.
  Result<PublishResult> publish(const Envelope& envelope, GeoPosition position,
                                SimTime now);

  /// MEC (= broker) whose tile set contains the position's tile.
  Result<uint16_t> area_of(GeoPosition position) const;

  /// Phase 1 of the three-phase protocol: copy-and-activate at cmd.to.
  Result<HandoverRecord> handover(const HandoverCommand& cmd, SimTime now);

  /// Phase 3: drop the source-side subscriptions once now is past the window
  /// end. No-op while the window is still open.
  void complete_handover(StationId station, SimTime now);

  /// Geo Service position tracking; emits at most one HandoverCommand per
  /// completed overlap window. The first sighting of a station just
  /// establishes its home MEC.
  std::optional<HandoverCommand> track_position(StationId station, GeoPosition position,
                                                SimTime now);

  std::optional<uint16_t> home_of(StationId station) const;
  std::vector<Subscription> subscriptions_of(StationId station) const;
  std::vector<Subscription> all_subscriptions() const;
  double federation_hop_ms() const { return m_federation_hop_ms; }
  int tile_level() const { return m_tile_level; }

 private:
  struct Broker {
    uint16_t id = 0;
    std::set<TileId> region;
    std::map<uint64_t, Subscription> subs;
    std::map<TileId, std::set<uint64_t>> index;
  };

  struct StationHome {
    uint16_t mec = 0;
    bool handover_in_progress = false;
    uint16_t from = 0;
    SimTime window_end;
  };

  void index_subscription(Broker& broker, const Subscription& sub);
  void drop_subscription(Broker& broker, uint64_t sub_id);
  void match_at(const Broker& broker, const Envelope& envelope, GeoPosition position,
                bool federated, PublishResult& result);
  void lazy_complete(StationId station, SimTime now);

  int m_tile_level;
  double m_max_sub_radius_m;
  double m_federation_hop_ms;
  uint64_t m_handover_overlap_ms;
  TraceLog* m_trace;
  Audit* m_audit;

  std::map<uint16_t, Broker> m_brokers;
  std::map<TileId, uint16_t> m_tile_owner;
  std::map<uint32_t, StationHome> m_homes;
  uint64_t m_next_sub_id = 1;
};

}  // namespace v2x
