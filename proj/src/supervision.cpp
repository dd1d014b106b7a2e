#include "v2x/supervision.hpp"

#include <algorithm>
#include <set>

namespace v2x {

const char* sec_event_kind_name(SecEventKind kind) {
  switch (kind) {
    case SecEventKind::CAM_SEEN: return "CAM_SEEN";
    case SecEventKind::DENM_SEEN: return "DENM_SEEN";
    case SecEventKind::VERIFY_FAIL: return "VERIFY_FAIL";
    case SecEventKind::SENSOR_DETECTION: return "SENSOR_DETECTION";
  }
  return "?";
}

const char* rule_name(RuleId rule) {
  switch (rule) {
    case RuleId::TELEPORT: return "TELEPORT";
    case RuleId::FLOOD: return "FLOOD";
    case RuleId::GHOST: return "GHOST";
  }
  return "?";
}

void SupervisionEngine::ingest(const SecurityEvent& event) {
  m_events.push_back(event);
}

SupervisionEngine::GroupKey SupervisionEngine::group_of(uint64_t pseudonym,
                                                        SimTime now) {
  auto cached = m_link_cache.find(pseudonym);
  std::optional<uint64_t> ec;
  if (cached != m_link_cache.end()) {
    ec = cached->second;
  } else {
    ec = m_resolver ? m_resolver(pseudonym, now) : std::nullopt;
    m_link_cache[pseudonym] = ec;
  }
  if (ec.has_value()) return GroupKey{true, *ec};
  return GroupKey{false, pseudonym};
}

bool SupervisionEngine::in_sensor_zone(const GeoPosition& pos) const {
  for (const auto& zone : m_config.sensor_zones)
    if (distance_m(zone.center, pos) <= zone.radius_m) return true;
  return false;
}

bool SupervisionEngine::ghost_cam(const SecurityEvent& cam) const {
  if (!in_sensor_zone(cam.pos)) return false;
  for (const auto& pos : m_config.infrastructure_positions)
    if (distance_m(pos, cam.pos) <= m_config.ghost_gate_m) return false;
  uint64_t tol_us = m_config.ghost_pair_tolerance_ms * 1000;
  for (const auto& ev : m_events) {
    if (ev.kind != SecEventKind::SENSOR_DETECTION) continue;
    uint64_t dt = ev.ts.micros > cam.ts.micros ? ev.ts.micros - cam.ts.micros
                                               : cam.ts.micros - ev.ts.micros;
    if (dt > tol_us) continue;
    if (distance_m(ev.pos, cam.pos) <= m_config.ghost_gate_m) return false;
  }
  return true;
}

std::vector<Alert> SupervisionEngine::correlate(SimTime now) {
  uint64_t window_us = m_config.window_ms * 1000;
  while (!m_events.empty() &&
         m_events.front().ts.micros + window_us < now.micros)
    m_events.pop_front();

  // Group CAM streams by linked identity.
  std::map<GroupKey, std::vector<const SecurityEvent*>> cams;
  std::map<GroupKey, std::set<uint64_t>> pseudonyms_of;
  for (const auto& ev : m_events) {
    if (ev.kind != SecEventKind::CAM_SEEN) continue;
    GroupKey key = group_of(ev.pseudonym, now);
    cams[key].push_back(&ev);
    pseudonyms_of[key].insert(ev.pseudonym);
  }

  std::vector<Alert> alerts;
  auto raise = [&](RuleId rule, const GroupKey& key,
                   std::vector<SecurityEvent> evidence) {
    Alert alert;
    alert.rule = rule;
    if (key.linked) alert.ec_id = key.id;
    alert.pseudonyms.assign(pseudonyms_of[key].begin(), pseudonyms_of[key].end());
    alert.evidence = std::move(evidence);
    alert.ts = now;
    alerts.push_back(std::move(alert));
  };

  auto update_episode = [&](RuleId rule, const GroupKey& key, bool violated,
                            std::vector<SecurityEvent> evidence) {
    bool& active = m_episode_active[{static_cast<uint8_t>(rule), key}];
    if (violated && !active) {
      active = true;
      raise(rule, key, std::move(evidence));
    } else if (!violated) {
      active = false;
    }
  };

  for (const auto& [key, events] : cams) {
    if (m_config.teleport_enabled) {
      bool violated = false;
      std::vector<SecurityEvent> evidence;
      for (size_t i = 1; i < events.size(); ++i) {
        const SecurityEvent& a = *events[i - 1];
        const SecurityEvent& b = *events[i];
        double dist = distance_m(a.pos, b.pos);
        double dt_s = (b.ts.micros - a.ts.micros) * 1e-6;
        bool pair_violates =
            dt_s > 0 ? dist / dt_s > m_config.teleport_speed_mps : dist > 1e-6;
        if (pair_violates) {
          violated = true;
          if (evidence.empty()) evidence = {a, b};
        }
      }
      update_episode(RuleId::TELEPORT, key, violated, std::move(evidence));
    }

    if (m_config.flood_enabled) {
      // Trailing one-second window (now - 1 s, now].
      size_t count = 0;
      std::vector<SecurityEvent> evidence;
      for (const auto* ev : events) {
        if (ev->ts.micros + 1'000'000 > now.micros && ev->ts <= now) {
          ++count;
          evidence.push_back(*ev);
        }
      }
      bool violated = count > m_config.flood_max_per_second;
      if (!violated) evidence.clear();
      update_episode(RuleId::FLOOD, key, violated, std::move(evidence));
    }

    if (m_config.ghost_enabled && !m_config.sensor_zones.empty()) {
      size_t run = 0;
      bool violated = false;
      std::vector<SecurityEvent> evidence;
      std::vector<SecurityEvent> current_run;
      for (const auto* ev : events) {
        if (ghost_cam(*ev)) {
          ++run;
          current_run.push_back(*ev);
          if (run >= m_config.ghost_consecutive && !violated) {
            violated = true;
            evidence = current_run;
          }
        } else {
          run = 0;
          current_run.clear();
        }
      }
      update_episode(RuleId::GHOST, key, violated, std::move(evidence));
    }
  }

  // Groups that dropped out of the window entirely reset their episodes.
  for (auto& [rule_key, active] : m_episode_active) {
    if (!active) continue;
    if (!cams.count(rule_key.second)) active = false;
  }
  return alerts;
}

}  // namespace v2x
