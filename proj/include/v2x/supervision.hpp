#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "v2x/geo.hpp"
#include "v2x/time.hpp"

namespace v2x {

enum class SecEventKind : uint8_t {
  CAM_SEEN = 0,
  DENM_SEEN = 1,
  VERIFY_FAIL = 2,
  SENSOR_DETECTION = 3,
};

const char* sec_event_kind_name(SecEventKind kind);

/// Security event as collected from ITS messages and sensors. Carries the
/// pseudonym (at_id) only, never a canonical identity.
struct SecurityEvent {
  SimTime ts;
  uint64_t pseudonym = 0;
  SecEventKind kind = SecEventKind::CAM_SEEN;
  GeoPosition pos;
  double speed_mps = 0;
};

enum class RuleId : uint8_t { TELEPORT = 0, FLOOD = 1, GHOST = 2 };

const char* rule_name(RuleId rule);

struct Alert {
  RuleId rule = RuleId::TELEPORT;
  std::optional<uint64_t> ec_id;     // resolved subject when linkable
  std::vector<uint64_t> pseudonyms;  // pseudonyms observed for the group
  std::vector<SecurityEvent> evidence;
  SimTime ts;
};

struct SupervisionConfig {
  uint64_t window_ms = 10'000;
  bool teleport_enabled = true;
  bool flood_enabled = true;
  bool ghost_enabled = true;
  double teleport_speed_mps = 70;
  size_t flood_max_per_second = 10;  // alert strictly above this
  double ghost_gate_m = 5;
  size_t ghost_consecutive = 3;
  uint64_t ghost_pair_tolerance_ms = 250;
  std::vector<Circle> sensor_zones;
  // Known fixed equipment (RSUs, traffic lights). Their periodic CAMs sit
  // inside sensor zones without ever being detected as road users, so the
  // ghost rule matches against this inventory as well.
  std::vector<GeoPosition> infrastructure_positions;
};

/// Rule-based correlation engine over a sliding window. Events are grouped
/// by linkability partition (via the resolver, backed by an authorized
/// escrow lookup) so pseudonym rotation does not break the rules. Each alert
/// fires once per (rule, group, episode): the predicate must clear before
/// the same rule can fire again for that group.
class SupervisionEngine {
 public:
  /// Resolves a pseudonym to its enrolment identity; nullopt when the escrow
  /// does not know it (the pseudonym then forms its own group).
  using GroupResolver = std::function<std::optional<uint64_t>(uint64_t at_id, SimTime now)>;

  SupervisionEngine(SupervisionConfig config, GroupResolver resolver)
      : m_config(std::move(config)), m_resolver(std::move(resolver)) {}

  void ingest(const SecurityEvent& event);
  std::vector<Alert> correlate(SimTime now);

  const SupervisionConfig& config() const { return m_config; }

 private:
  struct GroupKey {
    bool linked = false;
    uint64_t id = 0;  // ec_id when linked, pseudonym otherwise
    friend auto operator<=>(const GroupKey&, const GroupKey&) = default;
  };

  GroupKey group_of(uint64_t pseudonym, SimTime now);
  bool in_sensor_zone(const GeoPosition& pos) const;
  bool ghost_cam(const SecurityEvent& cam) const;

  SupervisionConfig m_config;
  GroupResolver m_resolver;
  std::deque<SecurityEvent> m_events;
  std::map<uint64_t, std::optional<uint64_t>> m_link_cache;
  std::map<std::pair<uint8_t, GroupKey>, bool> m_episode_active;
};

}  // namespace v2x
