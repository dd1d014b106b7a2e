#include "v2x/sim.hpp"

#include <algorithm>

namespace v2x {

const char* slice_name(SliceId slice) {
  switch (slice) {
    case SliceId::LOW_LATENCY: return "LOW_LATENCY";
    case SliceId::DEFAULT: return "DEFAULT";
    case SliceId::HIGH_THROUGHPUT: return "HIGH_THROUGHPUT";
  }
  return "?";
}

Result<SliceId> slice_from_name(const std::string& name) {
  if (name == "LOW_LATENCY") return SliceId::LOW_LATENCY;
  if (name == "DEFAULT") return SliceId::DEFAULT;
  if (name == "HIGH_THROUGHPUT") return SliceId::HIGH_THROUGHPUT;
  return Error{Errc::INVALID_FIELD, "unknown slice " + name};
}

std::string ChannelKind::to_string() const {
  if (medium == Medium::ITS_G5) return "ITS_G5";
  std::string out = "CELLULAR/";
  out += slice_name(slice);
  out += endpoint == CellEndpoint::MEC ? "/MEC" : "/CLOUD";
  return out;
}

LinkModel LinkModel::defaults() {
  LinkModel m;
  m.slices[SliceId::LOW_LATENCY] = {10, 2, 1, 0.001};
  m.slices[SliceId::DEFAULT] = {30, 10, 5, 0.01};
  m.slices[SliceId::HIGH_THROUGHPUT] = {50, 20, 10, 0.01};
  return m;
}

Simulator::Simulator(uint64_t seed, LinkModel link, TraceLog* trace)
    : m_rng(seed), m_link(std::move(link)), m_trace(trace) {}

Result<uint64_t> Simulator::schedule(SimTime time, std::function<void()> action) {
  if (time < m_now) return Error{Errc::TIME_IN_PAST, "schedule before now"};
  uint64_t seq = m_next_seq++;
  m_heap.push_back(Event{time, seq, std::move(action)});
  std::push_heap(m_heap.begin(), m_heap.end(), EventLater{});
  return seq;
}

size_t Simulator::run_until(SimTime t) {
  size_t processed = 0;
  while (!m_heap.empty() && m_heap.front().time <= t) {
    std::pop_heap(m_heap.begin(), m_heap.end(), EventLater{});
    Event ev = std::move(m_heap.back());
    m_heap.pop_back();
    if (ev.time < m_now)
      m_audit.violation("event loop observed decreasing time");
    m_now = ev.time;
    ev.action();
    ++processed;
  }
  if (t > m_now) m_now = t;
  return processed;
}

void Simulator::register_station(StationId id, GeoPosition pos, bool g5_capable,
                                 bool cellular_attached, DeliveryHandler handler) {
  m_station_index[id.value] = m_stations.size();
  m_stations.push_back(
      StationRec{id, pos, g5_capable, cellular_attached, std::move(handler)});
}

Result<void> Simulator::update_position(StationId id, GeoPosition pos) {
  auto it = m_station_index.find(id.value);
  if (it == m_station_index.end())
    return Error{Errc::UNKNOWN_STATION, "station not registered"};
  m_stations[it->second].pos = pos;
  return {};
}

bool Simulator::is_registered(StationId id) const {
  return m_station_index.count(id.value) > 0;
}

Result<GeoPosition> Simulator::position_of(StationId id) const {
  auto it = m_station_index.find(id.value);
  if (it == m_station_index.end())
    return Error{Errc::UNKNOWN_STATION, "station not registered"};
  return m_stations[it->second].pos;
}

void Simulator::log_outcome(const Envelope& envelope, ChannelKind channel,
                            StationId dest, const char* outcome, SimTime at,
                            uint64_t latency_us) {
  if (!m_trace) return;
  m_trace->record({{"type", "net"},
                   {"time_us", at.micros},
                   {"channel", channel.medium == ChannelKind::Medium::ITS_G5 ? "ITS_G5" : "CELLULAR"},
                   {"slice", channel.medium == ChannelKind::Medium::CELLULAR
                                 ? slice_name(channel.slice)
                                 : ""},
                   {"msg_id", envelope.msg_id.to_string()},
                   {"sender", envelope.sender.value},
                   {"dest", dest.value},
                   {"outcome", outcome},
                   {"latency_us", latency_us}});
}

void Simulator::deliver(size_t station_index, const Envelope& envelope,
                        ChannelKind channel, SimTime sent_at) {
  const auto& rec = m_stations[station_index];
  log_outcome(envelope, channel, rec.id, "DELIVERED", m_now,
              m_now.micros - sent_at.micros);
  if (rec.handler) rec.handler(envelope, channel, m_now);
}

std::vector<StationId> Simulator::transmit_g5(GeoPosition sender_pos,
                                              const Envelope& envelope) {
  std::vector<StationId> scheduled;
  SimTime sent_at = m_now;
  SimTime delivery_at = m_now.plus_ms(m_link.g5_proc_delay_ms);
  for (size_t i = 0; i < m_stations.size(); ++i) {
    const auto& rec = m_stations[i];
    if (!rec.g5_capable) continue;
    if (rec.id == envelope.sender) continue;
    double dist = distance_m(sender_pos, rec.pos);
    if (dist > m_link.g5_range_m) continue;
    double draw = m_rng.uniform();
    if (draw < m_link.g5_loss) {
      log_outcome(envelope, ChannelKind::g5(), rec.id, "LOST", m_now, 0);
      continue;
    }
    StationId dest = rec.id;
    Envelope copy = envelope;
    (void)schedule(delivery_at, [this, i, copy = std::move(copy), sent_at] {
      deliver(i, copy, ChannelKind::g5(), sent_at);
    });
    scheduled.push_back(dest);
  }
  return scheduled;
}

Result<Simulator::CellularOutcome> Simulator::transmit_cellular(
    const Envelope& envelope, SliceId slice, CellEndpoint endpoint, StationId dest) {
  auto it = m_station_index.find(dest.value);
  if (it == m_station_index.end() || !m_stations[it->second].cellular_attached)
    return Error{Errc::DEST_NOT_ATTACHED, "destination not cellular-attached"};

  const SliceParams& params = m_link.slice(slice);
  double latency_ms = params.latency_std_ms == 0
                          ? params.latency_mean_ms
                          : m_rng.normal(params.latency_mean_ms, params.latency_std_ms);
  latency_ms = std::max(latency_ms, params.latency_min_ms);
  if (endpoint == CellEndpoint::CLOUD) latency_ms += m_link.cloud_extra_ms;

  ChannelKind channel = ChannelKind::cellular(slice, endpoint);
  double loss_draw = m_rng.uniform();
  if (loss_draw < params.loss) {
    log_outcome(envelope, channel, dest, "LOST", m_now, 0);
    return CellularOutcome{false, m_now, latency_ms};
  }

  SimTime sent_at = m_now;
  SimTime delivery_at = m_now.plus_ms(latency_ms);
  size_t index = it->second;
  Envelope copy = envelope;
  (void)schedule(delivery_at, [this, index, copy = std::move(copy), channel, sent_at] {
    deliver(index, copy, channel, sent_at);
  });
  return CellularOutcome{true, delivery_at, latency_ms};
}

}  // namespace v2x
