#include "v2x/station.hpp"

#include <algorithm>
#include <cmath>

namespace v2x {

Result<Route> Route::make(std::vector<Waypoint> points) {
  for (size_t i = 1; i < points.size(); ++i)
    if (points[i].t <= points[i - 1].t)
      return Error{Errc::INVALID_FIELD, "waypoints not strictly increasing in time"};
  Route r;
  r.m_points = std::move(points);
  return r;
}

SimTime Route::end_time() const {
  return m_points.empty() ? SimTime{} : m_points.back().t;
}

namespace {

double segment_heading_deg(const GeoPosition& a, const GeoPosition& b) {
  auto off = enu_offset(a, b);
  if (!off) return 0;
  double deg = std::atan2(off->east_m, off->north_m) / kDegToRad;
  if (deg < 0) deg += 360.0;
  if (deg >= 360.0) deg -= 360.0;
  return deg;
}

}  // namespace

Route::Sample Route::sample(SimTime now) const {
  Sample s;
  if (m_points.empty()) return s;
  if (m_points.size() == 1 || now < m_points.front().t) {
    s.pos = m_points.front().pos;
    if (m_points.size() > 1)
      s.heading_deg = segment_heading_deg(m_points[0].pos, m_points[1].pos);
    return s;
  }
  if (now > m_points.back().t) {
    s.pos = m_points.back().pos;
    s.heading_deg = segment_heading_deg(m_points[m_points.size() - 2].pos,
                                        m_points.back().pos);
    return s;
  }
  size_t i = 1;
  while (m_points[i].t < now) ++i;
  const Waypoint& a = m_points[i - 1];
  const Waypoint& b = m_points[i];
  double dt_s = (b.t.micros - a.t.micros) * 1e-6;
  double f = (now.micros - a.t.micros) * 1e-6 / dt_s;
  double lat = a.pos.lat_deg() + f * (b.pos.lat_deg() - a.pos.lat_deg());
  double lon = a.pos.lon_deg() + f * (b.pos.lon_deg() - a.pos.lon_deg());
  auto pos = GeoPosition::from_degrees(lat, lon);
  s.pos = pos ? *pos : a.pos;
  s.speed_mps = distance_m(a.pos, b.pos) / dt_s;
  s.heading_deg = segment_heading_deg(a.pos, b.pos);
  return s;
}

std::optional<Cam> cam_trigger_step(const VehicleState& vehicle, CamTriggerState& state,
                                    SimTime now, const CamTriggerRules& rules) {
  constexpr double kSlack = 1e-9;
  bool emit = false;
  if (!state.last_time.has_value()) {
    emit = true;
  } else {
    uint64_t elapsed_ms = (now.micros - state.last_time->micros) / 1000;
    if (elapsed_ms >= rules.min_interval_ms) {
      double moved = distance_m(state.last_pos, vehicle.pos);
      double dheading = std::fabs(vehicle.heading_deg - state.last_heading_deg);
      if (dheading > 180.0) dheading = 360.0 - dheading;
      double dspeed = std::fabs(vehicle.speed_mps - state.last_speed_mps);
      emit = moved >= rules.move_threshold_m - kSlack ||
             dheading >= rules.heading_threshold_deg - kSlack ||
             dspeed >= rules.speed_threshold_mps - kSlack ||
             elapsed_ms >= rules.max_interval_ms;
    }
  }
  if (!emit) return std::nullopt;
  state.last_time = now;
  state.last_pos = vehicle.pos;
  state.last_heading_deg = vehicle.heading_deg;
  state.last_speed_mps = vehicle.speed_mps;
  return Cam::make(vehicle.station, now.to_its(), vehicle.pos, vehicle.speed_mps,
                   vehicle.heading_deg);
}

QosRequirement default_qos(MsgKind kind) {
  switch (kind) {
    case MsgKind::CAM: return {100, 0.9, DeliveryPolicy::ANY_ONE};
    case MsgKind::DENM: return {50, 0.99, DeliveryPolicy::ALL_MATCHING};
    case MsgKind::CPM:
    case MsgKind::SPATEM:
    case MsgKind::MAPEM: return {50, 0.95, DeliveryPolicy::ANY_ONE};
  }
  return {};
}

Result<std::vector<ChannelKind>> select_channels(
    MsgKind, const QosRequirement& qos,
    const std::vector<ChannelEstimate>& estimates) {
  std::vector<const ChannelEstimate*> candidates;
  for (const auto& est : estimates) {
    if (!est.available) continue;
    if (est.est_latency_ms > qos.max_latency_ms) continue;
    if (est.est_reliability < qos.min_reliability) continue;
    candidates.push_back(&est);
  }
  if (candidates.empty())
    return Error{Errc::NO_CHANNEL_MEETS_QOS, "no channel meets QoS"};

  if (qos.policy == DeliveryPolicy::ANY_ONE) {
    const ChannelEstimate* best = candidates.front();
    for (const auto* c : candidates) {
      if (c->est_latency_ms < best->est_latency_ms ||
          (c->est_latency_ms == best->est_latency_ms && c->channel < best->channel))
        best = c;
    }
    return std::vector<ChannelKind>{best->channel};
  }
  std::vector<ChannelKind> out;
  out.reserve(candidates.size());
  for (const auto* c : candidates) out.push_back(c->channel);
  std::sort(out.begin(), out.end());
  return out;
}

ReceiveOutcome DedupCache::on_receive(const MsgId& msg_id, SimTime now) {
  auto it = m_first_seen.find(msg_id);
  if (it != m_first_seen.end()) {
    uint64_t age_ms = (now.micros - it->second.micros) / 1000;
    if (age_ms <= m_ttl_ms) return ReceiveOutcome::DUPLICATE_SUPPRESSED;
    it->second = now;
    return ReceiveOutcome::DELIVERED_TO_APP;
  }
  m_first_seen.emplace(msg_id, now);
  return ReceiveOutcome::DELIVERED_TO_APP;
}

void DedupCache::evict_expired(SimTime now) {
  for (auto it = m_first_seen.begin(); it != m_first_seen.end();) {
    uint64_t age_ms = (now.micros - it->second.micros) / 1000;
    if (age_ms > m_ttl_ms)
      it = m_first_seen.erase(it);
    else
      ++it;
  }
}

}  // namespace v2x
