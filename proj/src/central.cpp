#include "v2x/central.hpp"

namespace v2x {

bool GeoLocationTable::update(StationId station, GeoPosition pos,
                              ItsTimestamp gen_time, SimTime now) {
  auto it = m_entries.find(station.value);
  if (it != m_entries.end() && gen_time <= it->second.gen_time) return false;
  m_entries[station.value] = GeoEntry{pos, gen_time, now};
  return true;
}

const GeoEntry* GeoLocationTable::find(StationId station) const {
  auto it = m_entries.find(station.value);
  return it == m_entries.end() ? nullptr : &it->second;
}

size_t GeoLocationTable::purge_stale(SimTime now) {
  size_t removed = 0;
  uint64_t limit_ms = 10 * m_ttl_ms;
  for (auto it = m_entries.begin(); it != m_entries.end();) {
    uint64_t age_ms = (now.micros - it->second.updated_at.micros) / 1000;
    if (age_ms > limit_ms) {
      it = m_entries.erase(it);
      ++removed;
    } else {
      ++it;
    }
  }
  return removed;
}

RelevancePolicy RelevancePolicy::defaults() {
  RelevancePolicy p;
  p.radius_m[MsgKind::CAM] = 300;
  p.radius_m[MsgKind::CPM] = 500;
  p.radius_m[MsgKind::SPATEM] = 1000;
  p.radius_m[MsgKind::MAPEM] = 1000;
  p.radius_m[MsgKind::DENM] = 1000;  // fallback; DENM normally carries its own
  return p;
}

double RelevancePolicy::radius_for(const Envelope& envelope) const {
  if (const auto* denm = std::get_if<Denm>(&envelope.payload))
    return denm->relevance_radius_m;
  auto it = radius_m.find(envelope.kind);
  return it == radius_m.end() ? 0 : it->second;
}

CentralStation::CentralStation(MecId mec, StationId self, uint64_t geo_ttl_ms,
                               RelevancePolicy policy, TraceLog* trace, Audit* audit)
    : m_mec(std::move(mec)),
      m_self(self),
      m_table(geo_ttl_ms),
      m_policy(std::move(policy)),
      m_trace(trace),
      m_audit(audit) {}

CentralStation::IngestOutcome CentralStation::ingest(const Envelope& envelope,
                                                     SimTime now) {
  IngestOutcome out;
  if (const auto* cam = std::get_if<Cam>(&envelope.payload))
    out.table_updated =
        m_table.update(envelope.sender, cam->pos, envelope.generation_time, now);
  return out;
}

ForwardRecord CentralStation::collect(const Envelope& envelope, GeoPosition center,
                                      double radius_m, SimTime now, SliceId slice,
                                      const char* reason) {
  ForwardRecord record;
  record.center = center;
  record.radius_m = radius_m;

  nlohmann::json snapshot = nlohmann::json::array();
  for (const auto& [station, entry] : m_table.entries()) {
    bool fresh = m_table.fresh(now, entry);
    bool in_radius = distance_m(center, entry.pos) <= radius_m;
    if (m_trace)
      snapshot.push_back({{"station", station},
                          {"lat_udeg", entry.pos.lat_udeg()},
                          {"lon_udeg", entry.pos.lon_udeg()},
                          {"fresh", fresh}});
    if (station == envelope.sender.value) continue;
    if (fresh && in_radius) record.recipients.push_back(StationId{station});
  }

  if (m_trace)
    m_trace->record({{"type", "forward"},
                     {"reason", reason},
                     {"time_us", now.micros},
                     {"mec", m_mec.value},
                     {"msg_id", envelope.msg_id.to_string()},
                     {"kind", msg_kind_name(envelope.kind)},
                     {"sender", envelope.sender.value},
                     {"center_lat_udeg", center.lat_udeg()},
                     {"center_lon_udeg", center.lon_udeg()},
                     {"radius_m", radius_m},
                     {"snapshot", snapshot},
                     {"recipients", [&] {
                        std::vector<uint32_t> ids;
                        for (auto r : record.recipients) ids.push_back(r.value);
                        return ids;
                      }()}});

  for (StationId dest : record.recipients) {
    if (m_audit && dest == envelope.sender)
      m_audit->violation("central forwarded a message back to its sender");
    if (m_send) m_send(dest, envelope, slice);
  }
  return record;
}

Result<ForwardRecord> CentralStation::forward(const Envelope& envelope, SimTime now) {
  const GeoEntry* sender_entry = m_table.find(envelope.sender);
  if (sender_entry == nullptr || !m_table.fresh(now, *sender_entry))
    return Error{Errc::SENDER_UNKNOWN, "no fresh geo-location entry for sender"};

  double radius = m_policy.radius_for(envelope);
  SliceId slice =
      envelope.kind == MsgKind::DENM ? SliceId::LOW_LATENCY : SliceId::DEFAULT;
  return collect(envelope, sender_entry->pos, radius, now, slice, "proximity");
}

Result<ForwardRecord> CentralStation::notify_environment(const Envelope& envelope,
                                                         const Denm& denm,
                                                         SimTime now) {
  if (now.to_ms() > denm.ts.millis + denm.validity_ms)
    return Error{Errc::EXPIRED, "DENM validity window elapsed"};
  return collect(envelope, denm.event_pos, denm.relevance_radius_m, now,
                 SliceId::LOW_LATENCY, "environment");
}

}  // namespace v2x
