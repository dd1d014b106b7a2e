#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "v2x/geo.hpp"
#include "v2x/messages.hpp"
#include "v2x/rng.hpp"
#include "v2x/time.hpp"
#include "v2x/trace.hpp"

namespace v2x {

enum class SliceId : uint8_t { LOW_LATENCY = 0, DEFAULT = 1, HIGH_THROUGHPUT = 2 };

const char* slice_name(SliceId slice);
Result<SliceId> slice_from_name(const std::string& name);

enum class CellEndpoint : uint8_t { MEC = 0, CLOUD = 1 };

/// Transmission path: the ad-hoc broadcast radio or a cellular slice toward a
/// MEC or cloud endpoint. Slice/endpoint are meaningful only for CELLULAR.
struct ChannelKind {
  enum class Medium : uint8_t { ITS_G5 = 0, CELLULAR = 1 };

  Medium medium = Medium::ITS_G5;
  SliceId slice = SliceId::LOW_LATENCY;
  CellEndpoint endpoint = CellEndpoint::MEC;

  static ChannelKind g5() { return {}; }
  static ChannelKind cellular(SliceId slice, CellEndpoint endpoint = CellEndpoint::MEC) {
    return {Medium::CELLULAR, slice, endpoint};
  }

  std::string to_string() const;

  // Total order used for deterministic tie-breaks: ITS_G5 first, then
  // cellular by slice, then MEC before CLOUD.
  friend auto operator<=>(const ChannelKind&, const ChannelKind&) = default;
};

struct SliceParams {
  double latency_mean_ms = 0;
  double latency_std_ms = 0;
  double latency_min_ms = 1;  // must be > 0
  double loss = 0;
};

struct LinkModel {
  double g5_range_m = 500;
  double g5_loss = 0.05;
  double g5_proc_delay_ms = 2;
  double cloud_extra_ms = 40;
  std::map<SliceId, SliceParams> slices;

  static LinkModel defaults();
  const SliceParams& slice(SliceId id) const { return slices.at(id); }
};

using DeliveryHandler =
    std::function<void(const Envelope&, ChannelKind, SimTime)>;

/// Deterministic single-threaded discrete-event core for the hybrid network:
/// range-limited ITS-G5 broadcast plus slice-aware cellular paths. All
/// stochastic draws go through one seeded generator in event order.
class Simulator {
 public:
  explicit Simulator(uint64_t seed, LinkModel link = LinkModel::defaults(),
                     TraceLog* trace = nullptr);

  SimTime now() const { return m_now; }
  Rng& rng() { return m_rng; }
  const LinkModel& link() const { return m_link; }
  Audit& audit() { return m_audit; }

  /// Enqueue an action; FIFO among equal times via a sequence counter.
  Result<uint64_t> schedule(SimTime time, std::function<void()> action);

  /// Process every event with time <= t; afterwards now() == t.
  size_t run_until(SimTime t);

  void register_station(StationId id, GeoPosition pos, bool g5_capable,
                        bool cellular_attached, DeliveryHandler handler);
  Result<void> update_position(StationId id, GeoPosition pos);
  bool is_registered(StationId id) const;
  Result<GeoPosition> position_of(StationId id) const;

  /// Broadcast to every registered station within g5_range of sender_pos.
  /// Loss draws happen in registration order; returns the stations a delivery
  /// was scheduled for.
  std::vector<StationId> transmit_g5(GeoPosition sender_pos, const Envelope& envelope);

  struct CellularOutcome {
    bool delivered = false;
    SimTime delivery_time;
    double latency_ms = 0;
  };

  /// One latency draw, then one loss draw. CLOUD adds cloud_extra on top of
  /// the sampled slice latency.
  Result<CellularOutcome> transmit_cellular(const Envelope& envelope, SliceId slice,
                                            CellEndpoint endpoint, StationId dest);

 private:
  struct Event {
    SimTime time;
    uint64_t seq;
    std::function<void()> action;
  };
  struct EventLater {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.seq > b.seq;
    }
  };

  struct StationRec {
    StationId id;
    GeoPosition pos;
    bool g5_capable = false;
    bool cellular_attached = false;
    DeliveryHandler handler;
  };

  void deliver(size_t station_index, const Envelope& envelope, ChannelKind channel,
               SimTime sent_at);
  void log_outcome(const Envelope& envelope, ChannelKind channel, StationId dest,
                   const char* outcome, SimTime at, uint64_t latency_us);

  SimTime m_now;
  uint64_t m_next_seq = 0;
  std::vector<Event> m_heap;
  Rng m_rng;
  LinkModel m_link;
  TraceLog* m_trace = nullptr;
  Audit m_audit;

  std::vector<StationRec> m_stations;       // registration order
  std::map<uint32_t, size_t> m_station_index;
};

}  // namespace v2x
