#pragma once

#include <map>
#include <optional>
#include <vector>

#include "v2x/geo.hpp"
#include "v2x/messages.hpp"
#include "v2x/sim.hpp"
#include "v2x/time.hpp"

namespace v2x {

struct Waypoint {
  SimTime t;
  GeoPosition pos;
};

/// Timed waypoint list; linear interpolation between points, stationary
/// before the first and after the last.
class Route {
 public:
  static Result<Route> make(std::vector<Waypoint> points);

  struct Sample {
    GeoPosition pos;
    double speed_mps = 0;
    double heading_deg = 0;
  };
  Sample sample(SimTime now) const;

  SimTime end_time() const;
  const std::vector<Waypoint>& points() const { return m_points; }

 private:
  std::vector<Waypoint> m_points;
};

struct VehicleState {
  StationId station;
  GeoPosition pos;
  double speed_mps = 0;
  double heading_deg = 0;
  Route route;
};

struct CamTriggerState {
  std::optional<SimTime> last_time;
  GeoPosition last_pos;
  double last_heading_deg = 0;
  double last_speed_mps = 0;
};

struct CamTriggerRules {
  uint64_t min_interval_ms = 100;
  uint64_t max_interval_ms = 1000;
  double move_threshold_m = 4.0;
  double heading_threshold_deg = 4.0;
  double speed_threshold_mps = 0.5;
};

/// CAM generation check. Emits iff the minimum interval has elapsed AND
/// (moved >= 4 m, turned >= 4 deg, speed changed >= 0.5 m/s, or the maximum
/// interval elapsed). Thresholds are inclusive, with a 1e-9 slack so exact
/// crossings are not lost to float roundoff. The first call always emits.
std::optional<Cam> cam_trigger_step(const VehicleState& vehicle, CamTriggerState& state,
                                    SimTime now, const CamTriggerRules& rules = {});

enum class DeliveryPolicy : uint8_t { ANY_ONE = 0, ALL_MATCHING = 1 };

struct QosRequirement {
  double max_latency_ms = 100;
  double min_reliability = 0.9;  // valid: (0, 1]
  DeliveryPolicy policy = DeliveryPolicy::ANY_ONE;
};

/// Per-kind defaults: CAM {100 ms, 0.9, ANY_ONE}; DENM {50 ms, 0.99,
/// ALL_MATCHING}; CPM/SPATEM/MAPEM {50 ms, 0.95, ANY_ONE}.
QosRequirement default_qos(MsgKind kind);

struct ChannelEstimate {
  ChannelKind channel;
  double est_latency_ms = 0;
  double est_reliability = 1;
  bool available = true;
};

/// Channels meeting the QoS bound; ANY_ONE picks the lowest-latency
/// candidate (ties broken by the ChannelKind order), ALL_MATCHING returns
/// every candidate. NO_CHANNEL_MEETS_QOS when none qualifies.
Result<std::vector<ChannelKind>> select_channels(
    MsgKind kind, const QosRequirement& qos,
    const std::vector<ChannelEstimate>& estimates);

enum class ReceiveOutcome : uint8_t { DELIVERED_TO_APP = 0, DUPLICATE_SUPPRESSED = 1 };

/// Cross-channel deliver-once filter keyed by msg_id. An entry suppresses
/// repeats until it is older than the ttl.
class DedupCache {
 public:
  explicit DedupCache(uint64_t ttl_ms = 10'000) : m_ttl_ms(ttl_ms) {}

  ReceiveOutcome on_receive(const MsgId& msg_id, SimTime now);
  void evict_expired(SimTime now);
  size_t size() const { return m_first_seen.size(); }

 private:
  std::map<MsgId, SimTime> m_first_seen;
  uint64_t m_ttl_ms;
};

}  // namespace v2x
