#include "v2x/scenario.hpp"

#include <fstream>
#include <set>

namespace v2x {

namespace {

using nlohmann::json;

struct Ctx {
  std::vector<Diagnostic>& diags;

  void add(const std::string& path, const std::string& message) {
    diags.push_back({path, message});
  }
};

bool has(const json& j, const char* key) { return j.is_object() && j.contains(key); }

double get_num(const json& j, const char* key, const std::string& path, Ctx& ctx,
               double fallback) {
  if (!has(j, key)) return fallback;
  if (!j[key].is_number()) {
    ctx.add(path + "." + key, "expected a number");
    return fallback;
  }
  return j[key].get<double>();
}

uint64_t get_u64(const json& j, const char* key, const std::string& path, Ctx& ctx,
                 uint64_t fallback) {
  if (!has(j, key)) return fallback;
  if (!j[key].is_number_unsigned() && !j[key].is_number_integer()) {
    ctx.add(path + "." + key, "expected an integer");
    return fallback;
  }
  if (j[key].is_number_integer() && j[key].get<int64_t>() < 0) {
    ctx.add(path + "." + key, "expected a non-negative integer");
    return fallback;
  }
  return j[key].get<uint64_t>();
}

bool get_bool(const json& j, const char* key, const std::string& path, Ctx& ctx,
              bool fallback) {
  if (!has(j, key)) return fallback;
  if (!j[key].is_boolean()) {
    ctx.add(path + "." + key, "expected a boolean");
    return fallback;
  }
  return j[key].get<bool>();
}

std::string get_str(const json& j, const char* key, const std::string& path, Ctx& ctx,
                    const std::string& fallback) {
  if (!has(j, key)) return fallback;
  if (!j[key].is_string()) {
    ctx.add(path + "." + key, "expected a string");
    return fallback;
  }
  return j[key].get<std::string>();
}

GeoPosition get_pos(const json& j, const std::string& path, Ctx& ctx) {
  if (!j.is_object() || !j.contains("lat") || !j.contains("lon")) {
    ctx.add(path, "expected an object with lat/lon degrees");
    return {};
  }
  double lat = j["lat"].is_number() ? j["lat"].get<double>() : 1e9;
  double lon = j["lon"].is_number() ? j["lon"].get<double>() : 1e9;
  auto pos = GeoPosition::from_degrees(lat, lon);
  if (!pos) {
    ctx.add(path, pos.error().message);
    return {};
  }
  return *pos;
}

std::optional<MsgKind> kind_from_name(const std::string& name) {
  if (name == "CAM") return MsgKind::CAM;
  if (name == "DENM") return MsgKind::DENM;
  if (name == "CPM") return MsgKind::CPM;
  if (name == "SPATEM") return MsgKind::SPATEM;
  if (name == "MAPEM") return MsgKind::MAPEM;
  return std::nullopt;
}

std::set<MsgKind> get_kinds(const json& j, const char* key, const std::string& path,
                            Ctx& ctx, std::set<MsgKind> fallback) {
  if (!has(j, key)) return fallback;
  if (!j[key].is_array()) {
    ctx.add(path + "." + key, "expected an array of message kinds");
    return fallback;
  }
  std::set<MsgKind> out;
  for (size_t i = 0; i < j[key].size(); ++i) {
    const auto& item = j[key][i];
    auto kind = item.is_string() ? kind_from_name(item.get<std::string>())
                                 : std::nullopt;
    if (!kind) {
      ctx.add(path + "." + key + "[" + std::to_string(i) + "]",
              "unknown message kind");
      continue;
    }
    out.insert(*kind);
  }
  return out;
}

std::vector<ChannelKind> get_channels(const json& j, const std::string& path, Ctx& ctx,
                                      bool g5, bool cellular) {
  std::vector<ChannelKind> out;
  if (has(j, "channels")) {
    if (!j["channels"].is_array()) {
      ctx.add(path + ".channels", "expected an array of channel names");
    } else {
      for (size_t i = 0; i < j["channels"].size(); ++i) {
        std::string item_path = path + ".channels[" + std::to_string(i) + "]";
        if (!j["channels"][i].is_string()) {
          ctx.add(item_path, "expected a string");
          continue;
        }
        std::string name = j["channels"][i].get<std::string>();
        if (name == "ITS_G5") {
          out.push_back(ChannelKind::g5());
          continue;
        }
        // CELLULAR/<SLICE>[/MEC|/CLOUD]
        if (name.rfind("CELLULAR/", 0) == 0) {
          std::string rest = name.substr(9);
          CellEndpoint endpoint = CellEndpoint::MEC;
          auto slash = rest.find('/');
          if (slash != std::string::npos) {
            std::string ep = rest.substr(slash + 1);
            rest = rest.substr(0, slash);
            if (ep == "CLOUD")
              endpoint = CellEndpoint::CLOUD;
            else if (ep != "MEC") {
              ctx.add(item_path, "unknown endpoint " + ep);
              continue;
            }
          }
          auto slice = slice_from_name(rest);
          if (!slice) {
            ctx.add(item_path, slice.error().message);
            continue;
          }
          out.push_back(ChannelKind::cellular(*slice, endpoint));
          continue;
        }
        ctx.add(item_path, "unknown channel " + name);
      }
    }
  }
  if (out.empty()) {
    if (g5) out.push_back(ChannelKind::g5());
    if (cellular) {
      out.push_back(ChannelKind::cellular(SliceId::LOW_LATENCY));
      out.push_back(ChannelKind::cellular(SliceId::DEFAULT));
    }
  }
  return out;
}

std::optional<SubscriptionConfig> get_subscription(const json& j,
                                                   const std::string& path, Ctx& ctx) {
  if (!has(j, "subscription")) return std::nullopt;
  const json& s = j["subscription"];
  SubscriptionConfig cfg;
  if (has(s, "center")) cfg.center = get_pos(s["center"], path + ".subscription.center", ctx);
  cfg.radius_m = get_num(s, "radius_m", path + ".subscription", ctx, 1000);
  cfg.kinds = get_kinds(s, "kinds", path + ".subscription", ctx,
                        {MsgKind::DENM, MsgKind::CPM});
  return cfg;
}

void parse_link(const json& j, const std::string& path, Ctx& ctx, LinkModel& link) {
  link.g5_range_m = get_num(j, "g5_range_m", path, ctx, link.g5_range_m);
  link.g5_loss = get_num(j, "g5_loss", path, ctx, link.g5_loss);
  link.g5_proc_delay_ms = get_num(j, "g5_proc_delay_ms", path, ctx, link.g5_proc_delay_ms);
  link.cloud_extra_ms = get_num(j, "cloud_extra_ms", path, ctx, link.cloud_extra_ms);
  if (!has(j, "slices")) return;
  if (!j["slices"].is_object()) {
    ctx.add(path + ".slices", "expected an object keyed by slice name");
    return;
  }
  for (auto it = j["slices"].begin(); it != j["slices"].end(); ++it) {
    auto slice = slice_from_name(it.key());
    std::string slice_path = path + ".slices." + it.key();
    if (!slice) {
      ctx.add(slice_path, "unknown slice name");
      continue;
    }
    SliceParams params = link.slices.count(*slice) ? link.slices[*slice] : SliceParams{};
    params.latency_mean_ms = get_num(it.value(), "latency_mean_ms", slice_path, ctx,
                                     params.latency_mean_ms);
    params.latency_std_ms = get_num(it.value(), "latency_std_ms", slice_path, ctx,
                                    params.latency_std_ms);
    params.latency_min_ms = get_num(it.value(), "latency_min_ms", slice_path, ctx,
                                    params.latency_min_ms);
    params.loss = get_num(it.value(), "loss", slice_path, ctx, params.loss);
    link.slices[*slice] = params;
  }
}

}  // namespace

QosRequirement Scenario::qos_for(MsgKind kind) const {
  auto it = qos.find(kind);
  return it == qos.end() ? default_qos(kind) : it->second;
}

ScenarioLoad parse_scenario(const json& doc) {
  ScenarioLoad load;
  Ctx ctx{load.diagnostics};
  if (!doc.is_object()) {
    ctx.add("", "scenario document must be a JSON object");
    return load;
  }

  Scenario sc;
  sc.name = get_str(doc, "name", "", ctx, "unnamed");
  sc.duration_s = get_num(doc, "duration_s", "", ctx, 0);
  sc.seed = get_u64(doc, "seed", "", ctx, 1);
  sc.tile_level = static_cast<int>(get_u64(doc, "tile_level", "", ctx, 14));
  sc.geo_ttl_ms = get_u64(doc, "geo_ttl_ms", "", ctx, 5000);
  sc.handover_overlap_ms = get_u64(doc, "handover_overlap_ms", "", ctx, 500);
  sc.broker_hop_ms = get_num(doc, "broker_hop_ms", "", ctx, 5);
  sc.cam_check_period_ms = get_u64(doc, "cam_check_period_ms", "", ctx, 100);
  sc.cpm_period_ms = get_u64(doc, "cpm_period_ms", "", ctx, 100);
  sc.correlate_period_ms = get_u64(doc, "correlate_period_ms", "", ctx, 100);

  if (has(doc, "link")) parse_link(doc["link"], "link", ctx, sc.link);

  if (has(doc, "mecs") && doc["mecs"].is_array()) {
    for (size_t i = 0; i < doc["mecs"].size(); ++i) {
      const json& m = doc["mecs"][i];
      std::string path = "mecs[" + std::to_string(i) + "]";
      MecConfig mec;
      mec.id = static_cast<uint16_t>(get_u64(m, "id", path, ctx, i + 1));
      mec.station = StationId{static_cast<uint32_t>(
          get_u64(m, "station", path, ctx, 60'000 + mec.id))};
      if (has(m, "center")) mec.center = get_pos(m["center"], path + ".center", ctx);
      else ctx.add(path + ".center", "required");
      mec.region_radius_m = get_num(m, "region_radius_m", path, ctx, 2000);
      if (has(m, "tiles") && m["tiles"].is_array()) {
        for (size_t t = 0; t < m["tiles"].size(); ++t) {
          const json& r = m["tiles"][t];
          std::string tpath = path + ".tiles[" + std::to_string(t) + "]";
          TileRect rect;
          rect.x_min = static_cast<uint32_t>(get_u64(r, "x_min", tpath, ctx, 0));
          rect.x_max = static_cast<uint32_t>(get_u64(r, "x_max", tpath, ctx, rect.x_min));
          rect.y_min = static_cast<uint32_t>(get_u64(r, "y_min", tpath, ctx, 0));
          rect.y_max = static_cast<uint32_t>(get_u64(r, "y_max", tpath, ctx, rect.y_min));
          mec.tiles.push_back(rect);
        }
      } else {
        ctx.add(path + ".tiles", "required (array of tile rectangles)");
      }
      sc.mecs.push_back(std::move(mec));
    }
  } else if (has(doc, "mecs")) {
    ctx.add("mecs", "expected an array");
  }

  if (has(doc, "vehicles") && doc["vehicles"].is_array()) {
    for (size_t i = 0; i < doc["vehicles"].size(); ++i) {
      const json& v = doc["vehicles"][i];
      std::string path = "vehicles[" + std::to_string(i) + "]";
      VehicleConfig veh;
      veh.station =
          StationId{static_cast<uint32_t>(get_u64(v, "station", path, ctx, 0))};
      veh.g5 = get_bool(v, "g5", path, ctx, true);
      veh.cellular = get_bool(v, "cellular", path, ctx, true);
      veh.channels = get_channels(v, path, ctx, veh.g5, veh.cellular);
      if (has(v, "route") && v["route"].is_array()) {
        for (size_t w = 0; w < v["route"].size(); ++w) {
          const json& wp = v["route"][w];
          std::string wpath = path + ".route[" + std::to_string(w) + "]";
          Waypoint point;
          point.t = SimTime::from_ms(get_u64(wp, "t_ms", wpath, ctx, 0));
          point.pos = get_pos(wp, wpath, ctx);
          veh.route.push_back(point);
        }
      } else {
        ctx.add(path + ".route", "required (array of timed waypoints)");
      }
      veh.subscription = get_subscription(v, path, ctx);
      sc.vehicles.push_back(std::move(veh));
    }
  }

  if (has(doc, "rsus") && doc["rsus"].is_array()) {
    for (size_t i = 0; i < doc["rsus"].size(); ++i) {
      const json& r = doc["rsus"][i];
      std::string path = "rsus[" + std::to_string(i) + "]";
      RsuConfig rsu;
      rsu.station =
          StationId{static_cast<uint32_t>(get_u64(r, "station", path, ctx, 0))};
      if (has(r, "pos")) rsu.pos = get_pos(r["pos"], path + ".pos", ctx);
      else ctx.add(path + ".pos", "required");
      rsu.g5 = get_bool(r, "g5", path, ctx, true);
      rsu.cellular = get_bool(r, "cellular", path, ctx, true);
      rsu.channels = get_channels(r, path, ctx, rsu.g5, rsu.cellular);
      if (has(r, "denm")) {
        const json& d = r["denm"];
        std::string dpath = path + ".denm";
        DenmSourceConfig denm;
        denm.period_ms = get_u64(d, "period_ms", dpath, ctx, 1000);
        denm.start_ms = get_u64(d, "start_ms", dpath, ctx, 0);
        if (has(d, "stop_ms")) denm.stop_ms = get_u64(d, "stop_ms", dpath, ctx, 0);
        std::string kind = get_str(d, "event_kind", dpath, ctx, "HAZARD");
        if (kind == "ACCIDENT") denm.event_kind = EventKind::ACCIDENT;
        else if (kind == "ROAD_CLOSURE") denm.event_kind = EventKind::ROAD_CLOSURE;
        else if (kind == "HAZARD") denm.event_kind = EventKind::HAZARD;
        else if (kind == "OTHER") denm.event_kind = EventKind::OTHER;
        else ctx.add(dpath + ".event_kind", "unknown event kind " + kind);
        if (has(d, "event_pos"))
          denm.event_pos = get_pos(d["event_pos"], dpath + ".event_pos", ctx);
        denm.relevance_radius_m = static_cast<uint16_t>(
            get_u64(d, "relevance_radius_m", dpath, ctx, 1000));
        denm.validity_ms =
            static_cast<uint32_t>(get_u64(d, "validity_ms", dpath, ctx, 60'000));
        rsu.denm = denm;
      }
      rsu.subscription = get_subscription(r, path, ctx);
      sc.rsus.push_back(std::move(rsu));
    }
  }

  if (has(doc, "sensors") && doc["sensors"].is_array()) {
    for (size_t i = 0; i < doc["sensors"].size(); ++i) {
      const json& s = doc["sensors"][i];
      std::string path = "sensors[" + std::to_string(i) + "]";
      SensorConfig sensor;
      sensor.station =
          StationId{static_cast<uint32_t>(get_u64(s, "station", path, ctx, 0))};
      if (has(s, "pos")) sensor.pos = get_pos(s["pos"], path + ".pos", ctx);
      else ctx.add(path + ".pos", "required");
      sensor.coverage_radius_m = get_num(s, "coverage_radius_m", path, ctx, 150);
      sensor.noise_sigma_m = get_num(s, "noise_sigma_m", path, ctx, 0.5);
      sensor.period_ms = get_u64(s, "period_ms", path, ctx, 100);
      sensor.detection_confidence = get_num(s, "detection_confidence", path, ctx, 0.9);
      sc.sensors.push_back(sensor);
    }
  }

  if (has(doc, "objects") && doc["objects"].is_array()) {
    for (size_t i = 0; i < doc["objects"].size(); ++i) {
      const json& o = doc["objects"][i];
      std::string path = "objects[" + std::to_string(i) + "]";
      ObjectConfig obj;
      obj.id = static_cast<uint32_t>(get_u64(o, "id", path, ctx, i + 1));
      if (has(o, "pos")) obj.pos = get_pos(o["pos"], path + ".pos", ctx);
      else ctx.add(path + ".pos", "required");
      std::string cls = get_str(o, "class", path, ctx, "UNKNOWN");
      if (cls == "VEHICLE") obj.obj_class = ObjectClass::VEHICLE;
      else if (cls == "PEDESTRIAN") obj.obj_class = ObjectClass::PEDESTRIAN;
      else if (cls == "UNKNOWN") obj.obj_class = ObjectClass::UNKNOWN;
      else ctx.add(path + ".class", "unknown object class " + cls);
      sc.objects.push_back(obj);
    }
  }

  if (has(doc, "traffic_lights") && doc["traffic_lights"].is_array()) {
    for (size_t i = 0; i < doc["traffic_lights"].size(); ++i) {
      const json& t = doc["traffic_lights"][i];
      std::string path = "traffic_lights[" + std::to_string(i) + "]";
      TrafficLightConfig light;
      light.station =
          StationId{static_cast<uint32_t>(get_u64(t, "station", path, ctx, 0))};
      if (has(t, "pos")) light.pos = get_pos(t["pos"], path + ".pos", ctx);
      else ctx.add(path + ".pos", "required");
      light.intersection =
          static_cast<uint32_t>(get_u64(t, "intersection", path, ctx, 1));
      light.spatem_period_ms = get_u64(t, "spatem_period_ms", path, ctx, 1000);
      light.mapem_period_ms = get_u64(t, "mapem_period_ms", path, ctx, 5000);
      light.g5 = get_bool(t, "g5", path, ctx, true);
      light.cellular = get_bool(t, "cellular", path, ctx, true);
      light.channels = get_channels(t, path, ctx, light.g5, light.cellular);
      if (has(t, "groups") && t["groups"].is_array()) {
        for (size_t g = 0; g < t["groups"].size(); ++g) {
          const json& gj = t["groups"][g];
          std::string gpath = path + ".groups[" + std::to_string(g) + "]";
          SignalGroupConfig group;
          group.id = static_cast<uint32_t>(get_u64(gj, "id", gpath, ctx, g + 1));
          if (has(gj, "phases") && gj["phases"].is_array()) {
            for (size_t p = 0; p < gj["phases"].size(); ++p) {
              const json& pj = gj["phases"][p];
              std::string ppath = gpath + ".phases[" + std::to_string(p) + "]";
              PhaseConfig phase;
              std::string state = get_str(pj, "state", ppath, ctx, "RED");
              if (state == "RED") phase.state = SignalState::RED;
              else if (state == "GREEN") phase.state = SignalState::GREEN;
              else if (state == "AMBER") phase.state = SignalState::AMBER;
              else ctx.add(ppath + ".state", "unknown signal state " + state);
              phase.duration_ms =
                  static_cast<uint32_t>(get_u64(pj, "duration_ms", ppath, ctx, 30'000));
              group.phases.push_back(phase);
            }
          }
          light.groups.push_back(std::move(group));
        }
      }
      if (has(t, "lanes") && t["lanes"].is_array()) {
        for (size_t l = 0; l < t["lanes"].size(); ++l) {
          const json& lj = t["lanes"][l];
          std::string lpath = path + ".lanes[" + std::to_string(l) + "]";
          LaneConfig lane;
          lane.lane_id = static_cast<uint32_t>(get_u64(lj, "lane_id", lpath, ctx, l + 1));
          lane.signal_group =
              static_cast<uint32_t>(get_u64(lj, "signal_group", lpath, ctx, 1));
          if (has(lj, "polyline") && lj["polyline"].is_array()) {
            for (size_t p = 0; p < lj["polyline"].size(); ++p)
              lane.polyline.push_back(get_pos(
                  lj["polyline"][p], lpath + ".polyline[" + std::to_string(p) + "]", ctx));
          }
          light.lanes.push_back(std::move(lane));
        }
      }
      sc.traffic_lights.push_back(std::move(light));
    }
  }

  if (has(doc, "attackers") && doc["attackers"].is_array()) {
    for (size_t i = 0; i < doc["attackers"].size(); ++i) {
      const json& a = doc["attackers"][i];
      std::string path = "attackers[" + std::to_string(i) + "]";
      AttackerConfig atk;
      atk.station =
          StationId{static_cast<uint32_t>(get_u64(a, "station", path, ctx, 0))};
      std::string type = get_str(a, "type", path, ctx, "teleport");
      if (type == "teleport") atk.type = AttackerType::TELEPORT;
      else if (type == "flood") atk.type = AttackerType::FLOOD;
      else if (type == "ghost") atk.type = AttackerType::GHOST;
      else ctx.add(path + ".type", "unknown attacker type " + type);
      if (has(a, "pos")) atk.pos = get_pos(a["pos"], path + ".pos", ctx);
      else ctx.add(path + ".pos", "required");
      if (has(a, "claim_pos"))
        atk.claim_pos = get_pos(a["claim_pos"], path + ".claim_pos", ctx);
      atk.start_ms = get_u64(a, "start_ms", path, ctx, 0);
      if (has(a, "stop_ms")) atk.stop_ms = get_u64(a, "stop_ms", path, ctx, 0);
      atk.period_ms = get_u64(a, "period_ms", path, ctx, 100);
      atk.jump_m = get_num(a, "jump_m", path, ctx, 200);
      sc.attackers.push_back(atk);
    }
  }

  if (has(doc, "security")) {
    const json& s = doc["security"];
    sc.security.enabled = get_bool(s, "enabled", "security", ctx, true);
    sc.security.pool_size =
        static_cast<size_t>(get_u64(s, "pool_size", "security", ctx, 20));
    sc.security.supervision_enabled =
        get_bool(s, "supervision_enabled", "security", ctx, true);
    sc.security.window_ms = get_u64(s, "window_ms", "security", ctx, 10'000);
    sc.security.teleport_enabled = get_bool(s, "teleport", "security", ctx, true);
    sc.security.flood_enabled = get_bool(s, "flood", "security", ctx, true);
    sc.security.ghost_enabled = get_bool(s, "ghost", "security", ctx, true);
    sc.security.teleport_speed_mps =
        get_num(s, "teleport_speed_mps", "security", ctx, 70);
    sc.security.flood_max_per_second = static_cast<size_t>(
        get_u64(s, "flood_max_per_second", "security", ctx, 10));
    sc.security.ghost_gate_m = get_num(s, "ghost_gate_m", "security", ctx, 5);
  }

  if (has(doc, "qos")) {
    if (!doc["qos"].is_object()) {
      ctx.add("qos", "expected an object keyed by message kind");
    } else {
      for (auto it = doc["qos"].begin(); it != doc["qos"].end(); ++it) {
        auto kind = kind_from_name(it.key());
        std::string qpath = "qos." + it.key();
        if (!kind) {
          ctx.add(qpath, "unknown message kind");
          continue;
        }
        QosRequirement q = default_qos(*kind);
        q.max_latency_ms = get_num(it.value(), "max_latency_ms", qpath, ctx,
                                   q.max_latency_ms);
        q.min_reliability = get_num(it.value(), "min_reliability", qpath, ctx,
                                    q.min_reliability);
        std::string policy = get_str(it.value(), "policy", qpath, ctx,
                                     q.policy == DeliveryPolicy::ANY_ONE
                                         ? "ANY_ONE"
                                         : "ALL_MATCHING");
        if (policy == "ANY_ONE") q.policy = DeliveryPolicy::ANY_ONE;
        else if (policy == "ALL_MATCHING") q.policy = DeliveryPolicy::ALL_MATCHING;
        else ctx.add(qpath + ".policy", "unknown policy " + policy);
        sc.qos[*kind] = q;
      }
    }
  }

  if (has(doc, "relevance_radius_m")) {
    const json& r = doc["relevance_radius_m"];
    if (!r.is_object()) {
      ctx.add("relevance_radius_m", "expected an object keyed by message kind");
    } else {
      for (auto it = r.begin(); it != r.end(); ++it) {
        auto kind = kind_from_name(it.key());
        if (!kind) {
          ctx.add("relevance_radius_m." + it.key(), "unknown message kind");
          continue;
        }
        if (!it.value().is_number()) {
          ctx.add("relevance_radius_m." + it.key(), "expected a number");
          continue;
        }
        sc.relevance.radius_m[*kind] = it.value().get<double>();
      }
    }
  }

  auto semantic = validate_scenario(sc);
  load.diagnostics.insert(load.diagnostics.end(), semantic.begin(), semantic.end());
  load.scenario = std::move(sc);
  return load;
}

ScenarioLoad load_scenario_file(const std::string& path) {
  ScenarioLoad load;
  std::ifstream in(path);
  if (!in) {
    load.diagnostics.push_back({path, "cannot open file"});
    return load;
  }
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) {
    load.diagnostics.push_back({path, "not valid JSON"});
    return load;
  }
  return parse_scenario(doc);
}

namespace {

struct TileOwnership {
  std::map<TileId, std::pair<size_t, size_t>> owner;  // tile -> (mec idx, rect idx)
};

}  // namespace

std::vector<Diagnostic> validate_scenario(const Scenario& sc) {
  std::vector<Diagnostic> diags;
  Ctx ctx{diags};

  if (sc.duration_s <= 0) ctx.add("duration_s", "must be > 0");
  if (sc.tile_level < 0 || sc.tile_level > 20)
    ctx.add("tile_level", "must be in [0, 20]");

  auto check_prob = [&](double p, const std::string& path) {
    if (p < 0 || p > 1)
      ctx.add(path, "probability " + std::to_string(p) + " out of [0, 1]");
  };
  check_prob(sc.link.g5_loss, "link.g5_loss");
  if (sc.link.g5_range_m <= 0) ctx.add("link.g5_range_m", "must be > 0");
  for (const auto& [slice, params] : sc.link.slices) {
    std::string path = std::string("link.slices.") + slice_name(slice);
    check_prob(params.loss, path + ".loss");
    if (params.latency_min_ms <= 0) ctx.add(path + ".latency_min_ms", "must be > 0");
    if (params.latency_mean_ms < 0) ctx.add(path + ".latency_mean_ms", "must be >= 0");
    if (params.latency_std_ms < 0) ctx.add(path + ".latency_std_ms", "must be >= 0");
  }

  // Tile ownership partition.
  uint32_t grid = sc.tile_level < 31 ? (1u << sc.tile_level) : 0;
  TileOwnership ownership;
  std::set<uint16_t> mec_ids;
  for (size_t i = 0; i < sc.mecs.size(); ++i) {
    const auto& mec = sc.mecs[i];
    std::string path = "mecs[" + std::to_string(i) + "]";
    if (!mec_ids.insert(mec.id).second) ctx.add(path + ".id", "duplicate MEC id");
    if (mec.region_radius_m <= 0) ctx.add(path + ".region_radius_m", "must be > 0");
    for (size_t t = 0; t < mec.tiles.size(); ++t) {
      const auto& rect = mec.tiles[t];
      std::string tpath = path + ".tiles[" + std::to_string(t) + "]";
      if (rect.x_max < rect.x_min || rect.y_max < rect.y_min) {
        ctx.add(tpath, "empty rectangle (max < min)");
        continue;
      }
      if (rect.x_max >= grid || rect.y_max >= grid) {
        ctx.add(tpath, "tile indices exceed level " + std::to_string(sc.tile_level) +
                           " grid");
        continue;
      }
      for (uint32_t x = rect.x_min; x <= rect.x_max; ++x)
        for (uint32_t y = rect.y_min; y <= rect.y_max; ++y) {
          TileId tile{static_cast<uint8_t>(sc.tile_level), x, y};
          auto [it, inserted] = ownership.owner.emplace(tile, std::make_pair(i, t));
          if (!inserted && it->second.first != i)
            ctx.add(tpath, "tile (" + std::to_string(x) + "," + std::to_string(y) +
                               ") also owned by mecs[" +
                               std::to_string(it->second.first) + "]");
          else if (!inserted)
            ctx.add(tpath, "tile (" + std::to_string(x) + "," + std::to_string(y) +
                               ") listed twice within this MEC");
        }
    }
  }

  auto owned = [&](GeoPosition pos) {
    return ownership.owner.count(tile_for(pos, sc.tile_level)) > 0;
  };

  // Unique station ids across every entity.
  std::map<uint32_t, std::string> stations;
  auto check_station = [&](StationId id, const std::string& path) {
    if (id.value == 0) {
      ctx.add(path, "station id must be > 0");
      return;
    }
    auto [it, inserted] = stations.emplace(id.value, path);
    if (!inserted)
      ctx.add(path, "station id " + std::to_string(id.value) + " also used at " +
                        it->second);
  };
  for (size_t i = 0; i < sc.mecs.size(); ++i)
    check_station(sc.mecs[i].station, "mecs[" + std::to_string(i) + "].station");
  for (size_t i = 0; i < sc.vehicles.size(); ++i)
    check_station(sc.vehicles[i].station, "vehicles[" + std::to_string(i) + "].station");
  for (size_t i = 0; i < sc.rsus.size(); ++i)
    check_station(sc.rsus[i].station, "rsus[" + std::to_string(i) + "].station");
  for (size_t i = 0; i < sc.sensors.size(); ++i)
    check_station(sc.sensors[i].station, "sensors[" + std::to_string(i) + "].station");
  for (size_t i = 0; i < sc.traffic_lights.size(); ++i)
    check_station(sc.traffic_lights[i].station,
                  "traffic_lights[" + std::to_string(i) + "].station");
  for (size_t i = 0; i < sc.attackers.size(); ++i)
    check_station(sc.attackers[i].station,
                  "attackers[" + std::to_string(i) + "].station");

  bool have_mecs = !sc.mecs.empty();
  auto check_subscription = [&](const std::optional<SubscriptionConfig>& sub,
                                const std::string& path) {
    if (!sub) return;
    if (sub->radius_m <= 0 || sub->radius_m > 20'000)
      ctx.add(path + ".radius_m", "must be in (0, 20000]");
    if (sub->kinds.empty()) ctx.add(path + ".kinds", "must be non-empty");
    if (sub->center && have_mecs && !owned(*sub->center))
      ctx.add(path + ".center", "outside every broker region");
  };

  for (size_t i = 0; i < sc.vehicles.size(); ++i) {
    const auto& veh = sc.vehicles[i];
    std::string path = "vehicles[" + std::to_string(i) + "]";
    if (veh.route.empty()) ctx.add(path + ".route", "must have at least one waypoint");
    for (size_t w = 1; w < veh.route.size(); ++w)
      if (veh.route[w].t <= veh.route[w - 1].t)
        ctx.add(path + ".route[" + std::to_string(w) + "]",
                "waypoint times must be strictly increasing");
    if (have_mecs)
      for (size_t w = 0; w < veh.route.size(); ++w)
        if (!owned(veh.route[w].pos))
          ctx.add(path + ".route[" + std::to_string(w) + "]",
                  "waypoint outside every broker region");
    if (veh.cellular && !have_mecs)
      ctx.add(path, "cellular station but scenario defines no MECs");
    check_subscription(veh.subscription, path + ".subscription");
  }

  for (size_t i = 0; i < sc.rsus.size(); ++i) {
    const auto& rsu = sc.rsus[i];
    std::string path = "rsus[" + std::to_string(i) + "]";
    if (rsu.cellular && !have_mecs)
      ctx.add(path, "cellular station but scenario defines no MECs");
    if (have_mecs && !owned(rsu.pos))
      ctx.add(path + ".pos", "outside every broker region");
    if (rsu.denm) {
      std::string dpath = path + ".denm";
      if (rsu.denm->period_ms == 0) ctx.add(dpath + ".period_ms", "must be > 0");
      if (rsu.denm->relevance_radius_m == 0 || rsu.denm->relevance_radius_m > 20'000)
        ctx.add(dpath + ".relevance_radius_m", "must be in (0, 20000]");
      if (rsu.denm->validity_ms == 0 || rsu.denm->validity_ms > 3'600'000)
        ctx.add(dpath + ".validity_ms", "must be in (0, 3600000]");
    }
    check_subscription(rsu.subscription, path + ".subscription");
  }

  for (size_t i = 0; i < sc.sensors.size(); ++i) {
    const auto& sensor = sc.sensors[i];
    std::string path = "sensors[" + std::to_string(i) + "]";
    if (sensor.coverage_radius_m <= 0) ctx.add(path + ".coverage_radius_m", "must be > 0");
    if (sensor.noise_sigma_m < 0) ctx.add(path + ".noise_sigma_m", "must be >= 0");
    if (sensor.period_ms == 0) ctx.add(path + ".period_ms", "must be > 0");
    if (sensor.detection_confidence <= 0 || sensor.detection_confidence > 1)
      ctx.add(path + ".detection_confidence", "must be in (0, 1]");
    if (have_mecs && !owned(sensor.pos))
      ctx.add(path + ".pos", "outside every broker region");
  }

  for (size_t i = 0; i < sc.traffic_lights.size(); ++i) {
    const auto& light = sc.traffic_lights[i];
    std::string path = "traffic_lights[" + std::to_string(i) + "]";
    if (light.cellular && !have_mecs)
      ctx.add(path, "cellular station but scenario defines no MECs");
    std::set<uint32_t> group_ids;
    for (size_t g = 0; g < light.groups.size(); ++g) {
      const auto& group = light.groups[g];
      std::string gpath = path + ".groups[" + std::to_string(g) + "]";
      if (!group_ids.insert(group.id).second)
        ctx.add(gpath + ".id", "duplicate signal group id");
      if (group.phases.empty()) ctx.add(gpath + ".phases", "must be non-empty");
      for (size_t p = 0; p < group.phases.size(); ++p)
        if (group.phases[p].duration_ms == 0)
          ctx.add(gpath + ".phases[" + std::to_string(p) + "].duration_ms",
                  "must be > 0");
    }
    for (size_t l = 0; l < light.lanes.size(); ++l)
      if (light.lanes[l].polyline.size() < 2)
        ctx.add(path + ".lanes[" + std::to_string(l) + "].polyline",
                "needs at least 2 points");
  }

  for (size_t i = 0; i < sc.attackers.size(); ++i) {
    const auto& atk = sc.attackers[i];
    std::string path = "attackers[" + std::to_string(i) + "]";
    if (atk.period_ms == 0) ctx.add(path + ".period_ms", "must be > 0");
    if (atk.type == AttackerType::GHOST && !atk.claim_pos)
      ctx.add(path + ".claim_pos", "required for ghost attackers");
    if (!have_mecs) ctx.add(path, "attackers require MECs (cellular uplink)");
  }

  for (const auto& [kind, q] : sc.qos) {
    std::string path = std::string("qos.") + msg_kind_name(kind);
    if (q.min_reliability <= 0 || q.min_reliability > 1)
      ctx.add(path + ".min_reliability", "must be in (0, 1]");
    if (q.max_latency_ms <= 0) ctx.add(path + ".max_latency_ms", "must be > 0");
  }

  for (const auto& [kind, radius] : sc.relevance.radius_m)
    if (radius <= 0)
      ctx.add(std::string("relevance_radius_m.") + msg_kind_name(kind), "must be > 0");

  if (sc.security.enabled && sc.security.pool_size == 0)
    ctx.add("security.pool_size", "must be >= 1 when security is enabled");

  return diags;
}

}  // namespace v2x
