#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "v2x/central.hpp"
#include "v2x/geo.hpp"
#include "v2x/messages.hpp"
#include "v2x/sim.hpp"
#include "v2x/station.hpp"
#include "v2x/supervision.hpp"

namespace v2x {

struct TileRect {
  uint32_t x_min = 0, x_max = 0;
  uint32_t y_min = 0, y_max = 0;
};

struct MecConfig {
  uint16_t id = 0;
  StationId station;  // address of the central station endpoint
  GeoPosition center;
  double region_radius_m = 2000;
  std::vector<TileRect> tiles;
};

struct SubscriptionConfig {
  std::optional<GeoPosition> center;  // default: station position at t=0
  double radius_m = 1000;
  std::set<MsgKind> kinds;
};

struct VehicleConfig {
  StationId station;
  std::vector<Waypoint> route;
  bool g5 = true;
  bool cellular = true;
  std::vector<ChannelKind> channels;  // derived from flags when empty
  std::optional<SubscriptionConfig> subscription;
};

struct DenmSourceConfig {
  uint64_t period_ms = 1000;
  uint64_t start_ms = 0;
  std::optional<uint64_t> stop_ms;
  EventKind event_kind = EventKind::HAZARD;
  std::optional<GeoPosition> event_pos;  // default: station position
  uint16_t relevance_radius_m = 1000;
  uint32_t validity_ms = 60'000;
};

struct RsuConfig {
  StationId station;
  GeoPosition pos;
  bool g5 = true;
  bool cellular = true;
  std::vector<ChannelKind> channels;
  std::optional<DenmSourceConfig> denm;
  std::optional<SubscriptionConfig> subscription;
};

struct SensorConfig {
  StationId station;
  GeoPosition pos;
  double coverage_radius_m = 150;
  double noise_sigma_m = 0.5;  // total 2-D RMS displacement
  uint64_t period_ms = 100;
  double detection_confidence = 0.9;
};

struct ObjectConfig {
  uint32_t id = 0;
  GeoPosition pos;
  ObjectClass obj_class = ObjectClass::UNKNOWN;
};

struct PhaseConfig {
  SignalState state = SignalState::RED;
  uint32_t duration_ms = 30'000;
};

struct SignalGroupConfig {
  uint32_t id = 0;
  std::vector<PhaseConfig> phases;
};

struct LaneConfig {
  uint32_t lane_id = 0;
  std::vector<GeoPosition> polyline;
  uint32_t signal_group = 0;
};

struct TrafficLightConfig {
  StationId station;
  GeoPosition pos;
  uint32_t intersection = 0;
  uint64_t spatem_period_ms = 1000;
  uint64_t mapem_period_ms = 5000;
  bool g5 = true;
  bool cellular = true;
  std::vector<ChannelKind> channels;
  std::vector<SignalGroupConfig> groups;
  std::vector<LaneConfig> lanes;
};

enum class AttackerType : uint8_t { TELEPORT = 0, FLOOD = 1, GHOST = 2 };

struct AttackerConfig {
  StationId station;
  AttackerType type = AttackerType::TELEPORT;
  GeoPosition pos;                     // true physical position
  std::optional<GeoPosition> claim_pos;  // ghost: claimed position (in a zone)
  uint64_t start_ms = 0;
  std::optional<uint64_t> stop_ms;
  uint64_t period_ms = 100;
  double jump_m = 200;  // teleport displacement per emission
};

struct SecurityScenarioConfig {
  bool enabled = true;
  size_t pool_size = 20;
  bool supervision_enabled = true;
  uint64_t window_ms = 10'000;
  bool teleport_enabled = true;
  bool flood_enabled = true;
  bool ghost_enabled = true;
  double teleport_speed_mps = 70;
  size_t flood_max_per_second = 10;
  double ghost_gate_m = 5;
};

struct Scenario {
  std::string name;
  double duration_s = 0;
  uint64_t seed = 1;
  int tile_level = 14;

  LinkModel link = LinkModel::defaults();
  std::vector<MecConfig> mecs;
  std::vector<VehicleConfig> vehicles;
  std::vector<RsuConfig> rsus;
  std::vector<SensorConfig> sensors;
  std::vector<ObjectConfig> objects;
  std::vector<TrafficLightConfig> traffic_lights;
  std::vector<AttackerConfig> attackers;

  SecurityScenarioConfig security;
  std::map<MsgKind, QosRequirement> qos;  // merged over built-in defaults
  RelevancePolicy relevance = RelevancePolicy::defaults();

  uint64_t geo_ttl_ms = 5000;
  uint64_t handover_overlap_ms = 500;
  double broker_hop_ms = 5;
  uint64_t cam_check_period_ms = 100;
  uint64_t cpm_period_ms = 100;
  uint64_t correlate_period_ms = 100;

  QosRequirement qos_for(MsgKind kind) const;
};

struct Diagnostic {
  std::string path;
  std::string message;
};

struct ScenarioLoad {
  std::optional<Scenario> scenario;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return scenario.has_value() && diagnostics.empty(); }
};

/// Parses and validates; diagnostics carry a path-to-field for every
/// violation found, not just the first.
ScenarioLoad parse_scenario(const nlohmann::json& doc);
ScenarioLoad load_scenario_file(const std::string& path);

/// Semantic checks on a parsed scenario (tile partition, routes inside the
/// region, probability ranges, unique station ids, ...).
std::vector<Diagnostic> validate_scenario(const Scenario& scenario);

}  // namespace v2x
