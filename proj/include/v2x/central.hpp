#pragma once

#include <functional>
#include <map>
#include <set>
#include <vector>

#include "v2x/geo.hpp"
#include "v2x/messages.hpp"
#include "v2x/sim.hpp"
#include "v2x/time.hpp"
#include "v2x/trace.hpp"

namespace v2x {

/// MEC server identity plus the tiles it owns. Areas of distinct MECs are
/// disjoint; the union covers the scenario region (validated at load).
struct MecId {
  uint16_t value = 0;
  std::set<TileId> area;
};

struct GeoEntry {
  GeoPosition pos;
  ItsTimestamp gen_time;
  SimTime updated_at;
};

/// Last-known station positions driving proximity forwarding. Entries go
/// stale for forwarding after ttl and are purged after 10x ttl.
class GeoLocationTable {
 public:
  explicit GeoLocationTable(uint64_t ttl_ms = 5000) : m_ttl_ms(ttl_ms) {}

  /// Insert/replace if gen_time is strictly newer. Returns whether it changed.
  bool update(StationId station, GeoPosition pos, ItsTimestamp gen_time, SimTime now);

  bool fresh(SimTime now, const GeoEntry& entry) const {
    return (now.micros - entry.updated_at.micros) / 1000 <= m_ttl_ms;
  }
  const GeoEntry* find(StationId station) const;
  size_t purge_stale(SimTime now);

  uint64_t ttl_ms() const { return m_ttl_ms; }
  const std::map<uint32_t, GeoEntry>& entries() const { return m_entries; }

 private:
  std::map<uint32_t, GeoEntry> m_entries;
  uint64_t m_ttl_ms;
};

/// Kind-based relevance radii; DENM carries its own radius in the message.
struct RelevancePolicy {
  std::map<MsgKind, double> radius_m;

  static RelevancePolicy defaults();
  double radius_for(const Envelope& envelope) const;
};

struct ForwardRecord {
  std::vector<StationId> recipients;  // sorted by station id
  GeoPosition center;
  double radius_m = 0;
};

/// Central ITS station hosted on a MEC server: keeps the geo-location table
/// current from CAMs and forwards ITS messages to the stations around the
/// sender (or around the event, for environmental notifications).
class CentralStation {
 public:
  using SendHook = std::function<void(StationId dest, const Envelope&, SliceId)>;

  CentralStation(MecId mec, StationId self, uint64_t geo_ttl_ms = 5000,
                 RelevancePolicy policy = RelevancePolicy::defaults(),
                 TraceLog* trace = nullptr, Audit* audit = nullptr);

  void set_send_hook(SendHook hook) { m_send = std::move(hook); }

  struct IngestOutcome {
    bool table_updated = false;
  };
  IngestOutcome ingest(const Envelope& envelope, SimTime now);

  /// Recipients currently in the sender's proximity; schedules one cellular
  /// send per recipient through the hook. SENDER_UNKNOWN without a fresh
  /// sender entry.
  Result<ForwardRecord> forward(const Envelope& envelope, SimTime now);

  size_t purge_stale(SimTime now) { return m_table.purge_stale(now); }

  /// Forward centered on the event position with the DENM's own radius, on
  /// the LOW_LATENCY slice. EXPIRED once past ts + validity.
  Result<ForwardRecord> notify_environment(const Envelope& envelope, const Denm& denm,
                                           SimTime now);

  const GeoLocationTable& table() const { return m_table; }
  const MecId& mec() const { return m_mec; }
  StationId self() const { return m_self; }

 private:
  ForwardRecord collect(const Envelope& envelope, GeoPosition center, double radius_m,
                        SimTime now, SliceId slice, const char* reason);

  MecId m_mec;
  StationId m_self;
  GeoLocationTable m_table;
  RelevancePolicy m_policy;
  TraceLog* m_trace = nullptr;
  Audit* m_audit = nullptr;
  SendHook m_send;
};

}  // namespace v2x
