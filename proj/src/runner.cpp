#include "v2x/runner.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "v2x/central.hpp"
#include "v2x/geobroker.hpp"
#include "v2x/perception.hpp"
#include "v2x/sim.hpp"
#include "v2x/station.hpp"
#include "v2x/supervision.hpp"

namespace v2x {

namespace {

using nlohmann::json;

SliceId forward_slice(MsgKind kind) {
  return kind == MsgKind::DENM ? SliceId::LOW_LATENCY : SliceId::DEFAULT;
}

class Runner {
 public:
  Runner(Scenario scenario) : m_sc(std::move(scenario)) {}

  RunResult run();

 private:
  struct Node {
    enum class Role : uint8_t { VEHICLE, RSU, LIGHT, ATTACKER } role = Role::VEHICLE;
    StationId station;
    bool g5 = false;
    bool cellular = false;
    std::vector<ChannelEstimate> estimates;
    GeoPosition pos;
    Route route;
    VehicleState vstate;
    CamTriggerState trigger;
    DedupCache dedup{10'000};
    PseudonymPool pool;
    uint16_t denm_seq = 0;
    size_t attack_emissions = 0;
    const VehicleConfig* veh = nullptr;
    const RsuConfig* rsu = nullptr;
    const TrafficLightConfig* light = nullptr;
    const AttackerConfig* attacker = nullptr;
    std::set<MsgKind> subscribed_kinds;
  };

  struct MecRt {
    const MecConfig* cfg = nullptr;
    std::unique_ptr<CentralStation> central;
    std::unique_ptr<Epm> epm;
    DedupCache dedup{10'000};
    PseudonymPool pool;
  };

  struct SensorRt {
    const SensorConfig* cfg = nullptr;
    size_t mec_index = 0;
    PseudonymPool pool;
  };

  void setup();
  void enroll_all();
  void subscribe_all();
  void schedule_all();

  void vehicle_step(size_t node_index);
  void infra_cam_step(size_t node_index);
  void rsu_denm_emit(size_t node_index, const DenmSourceConfig& cfg);
  void light_spatem_emit(size_t node_index);
  void light_mapem_emit(size_t node_index);
  void attacker_emit(size_t node_index);
  void sensor_sweep(size_t sensor_index);
  void mec_cpm_emit(size_t mec_index);
  void purge_step(size_t mec_index);
  void correlate_step();

  void emit_envelope(Node& node, Payload payload);
  void deliver_publish(const Envelope& envelope, const PublishResult& pub);
  void on_mec_receive(size_t mec_index, const Envelope& envelope, ChannelKind channel,
                      SimTime now);
  void on_node_receive(size_t node_index, const Envelope& envelope, ChannelKind channel,
                       SimTime now);

  PseudonymPool make_pool(StationId station);
  std::vector<ChannelEstimate> make_estimates(const std::vector<ChannelKind>& channels);
  Result<StationId> serving_mec_station(GeoPosition pos) const;
  GeoPosition publish_position(const Envelope& envelope) const;
  bool sign_onto(Envelope& envelope, PseudonymPool& pool);
  void schedule_or_die(SimTime t, std::function<void()> action);

  json build_summary();

  Scenario m_sc;
  TraceLog m_trace;
  Audit m_audit;
  std::unique_ptr<Simulator> m_sim;
  std::unique_ptr<BrokerFabric> m_fabric;
  std::unique_ptr<SupervisionEngine> m_supervision;
  std::optional<Pki> m_pki;
  std::optional<AccessToken> m_link_token;
  MsgIdGenerator m_msg_ids;

  std::vector<MecRt> m_mecs;
  std::map<uint16_t, size_t> m_mec_by_id;
  std::vector<Node> m_nodes;
  std::vector<SensorRt> m_sensors;

  std::map<uint32_t, std::vector<uint64_t>> m_station_pseudonyms;
  std::vector<json> m_alerts;
  SimTime m_end;
  size_t m_enrolled = 0;
  size_t m_tickets_issued = 0;
};

void Runner::schedule_or_die(SimTime t, std::function<void()> action) {
  auto handle = m_sim->schedule(t, std::move(action));
  if (!handle) m_audit.violation("internal schedule rejected: " + handle.error().message);
}

PseudonymPool Runner::make_pool(StationId station) {
  if (!m_pki) return PseudonymPool{};
  auto ec = m_pki->enroll(station, ItsTimestamp{0});
  if (!ec) {
    m_audit.violation("enroll failed for station " + std::to_string(station.value));
    return PseudonymPool{};
  }
  ++m_enrolled;
  m_trace.record({{"type", "ec_issued"},
                  {"time_us", 0},
                  {"station", station.value},
                  {"ec_id", ec->ec_id}});
  auto tickets = m_pki->issue_tickets(*ec, m_sc.security.pool_size, ItsTimestamp{0});
  if (!tickets) {
    m_audit.violation("ticket issuance failed for station " +
                      std::to_string(station.value));
    return PseudonymPool{};
  }
  std::vector<uint64_t> at_ids;
  for (const auto& t : *tickets) at_ids.push_back(t.at.at_id);
  m_tickets_issued += at_ids.size();
  m_station_pseudonyms[station.value] = at_ids;
  // Issuance record carries pseudonyms only; the ec linkage stays in escrow.
  m_trace.record({{"type", "at_issued"}, {"time_us", 0}, {"count", at_ids.size()}});
  return PseudonymPool{std::move(*tickets)};
}

std::vector<ChannelEstimate> Runner::make_estimates(
    const std::vector<ChannelKind>& channels) {
  std::vector<ChannelEstimate> out;
  for (const auto& ch : channels) {
    ChannelEstimate est;
    est.channel = ch;
    est.available = true;
    if (ch.medium == ChannelKind::Medium::ITS_G5) {
      est.est_latency_ms = m_sc.link.g5_proc_delay_ms;
      est.est_reliability = 1.0 - m_sc.link.g5_loss;
    } else {
      auto it = m_sc.link.slices.find(ch.slice);
      if (it == m_sc.link.slices.end()) {
        est.available = false;
      } else {
        est.est_latency_ms = it->second.latency_mean_ms +
                             (ch.endpoint == CellEndpoint::CLOUD
                                  ? m_sc.link.cloud_extra_ms
                                  : 0.0);
        est.est_reliability = 1.0 - it->second.loss;
      }
    }
    out.push_back(est);
  }
  return out;
}

Result<StationId> Runner::serving_mec_station(GeoPosition pos) const {
  auto area = m_fabric->area_of(pos);
  if (!area) return area.error();
  return m_mecs[m_mec_by_id.at(*area)].cfg->station;
}

void Runner::setup() {
  m_end = SimTime::from_ms(static_cast<uint64_t>(std::llround(m_sc.duration_s * 1000)));
  m_sim = std::make_unique<Simulator>(m_sc.seed, m_sc.link, &m_trace);
  m_fabric = std::make_unique<BrokerFabric>(m_sc.tile_level, 20'000, m_sc.broker_hop_ms,
                                            m_sc.handover_overlap_ms, &m_trace, &m_audit);

  if (m_sc.security.enabled) {
    m_pki = Pki::init(m_sc.seed);
    auto token = m_pki->issue_token(
        "supervision", {kRightLinkability}, ItsTimestamp{0},
        static_cast<uint64_t>(m_sc.duration_s * 1000) + 3'600'000);
    if (token) {
      m_link_token = *token;
      m_trace.record({{"type", "token_issued"},
                      {"time_us", 0},
                      {"subject", "supervision"},
                      {"rights", {kRightLinkability}}});
    }
  }

  SupervisionConfig sup_cfg;
  sup_cfg.window_ms = m_sc.security.window_ms;
  sup_cfg.teleport_enabled = m_sc.security.teleport_enabled;
  sup_cfg.flood_enabled = m_sc.security.flood_enabled;
  sup_cfg.ghost_enabled = m_sc.security.ghost_enabled;
  sup_cfg.teleport_speed_mps = m_sc.security.teleport_speed_mps;
  sup_cfg.flood_max_per_second = m_sc.security.flood_max_per_second;
  sup_cfg.ghost_gate_m = m_sc.security.ghost_gate_m;
  for (const auto& sensor : m_sc.sensors)
    sup_cfg.sensor_zones.push_back(Circle{sensor.pos, sensor.coverage_radius_m});
  for (const auto& rsu : m_sc.rsus) sup_cfg.infrastructure_positions.push_back(rsu.pos);
  for (const auto& light : m_sc.traffic_lights)
    sup_cfg.infrastructure_positions.push_back(light.pos);
  SupervisionEngine::GroupResolver resolver;
  if (m_pki && m_link_token) {
    resolver = [this](uint64_t at_id, SimTime now) -> std::optional<uint64_t> {
      auto part = m_pki->link({at_id}, *m_link_token, now.to_its());
      if (!part || part->empty()) return std::nullopt;
      return part->front().ec_id;
    };
  }
  m_supervision = std::make_unique<SupervisionEngine>(sup_cfg, std::move(resolver));

  // Brokers own the MEC tile rectangles.
  for (const auto& mec : m_sc.mecs) {
    std::set<TileId> region;
    for (const auto& rect : mec.tiles)
      for (uint32_t x = rect.x_min; x <= rect.x_max; ++x)
        for (uint32_t y = rect.y_min; y <= rect.y_max; ++y)
          region.insert(TileId{static_cast<uint8_t>(m_sc.tile_level), x, y});
    if (auto added = m_fabric->add_broker(mec.id, std::move(region)); !added)
      m_audit.violation("broker setup: " + added.error().message);
  }

  for (size_t i = 0; i < m_sc.mecs.size(); ++i) {
    const auto& cfg = m_sc.mecs[i];
    MecRt rt;
    rt.cfg = &cfg;
    MecId mec_id;
    mec_id.value = cfg.id;
    rt.central = std::make_unique<CentralStation>(mec_id, cfg.station, m_sc.geo_ttl_ms,
                                                  m_sc.relevance, &m_trace, &m_audit);
    rt.central->set_send_hook([this](StationId dest, const Envelope& env, SliceId slice) {
      auto outcome = m_sim->transmit_cellular(env, slice, CellEndpoint::MEC, dest);
      if (!outcome)
        m_trace.record({{"type", "undeliverable"},
                        {"time_us", m_sim->now().micros},
                        {"msg_id", env.msg_id.to_string()},
                        {"dest", dest.value},
                        {"code", errc_name(outcome.code())}});
    });
    rt.epm = std::make_unique<Epm>(cfg.center, cfg.region_radius_m);
    m_mecs.push_back(std::move(rt));
    m_mec_by_id[cfg.id] = i;
    size_t index = i;
    m_sim->register_station(cfg.station, cfg.center, /*g5=*/false, /*cellular=*/true,
                            [this, index](const Envelope& env, ChannelKind ch, SimTime t) {
                              on_mec_receive(index, env, ch, t);
                            });
  }

  auto add_node = [&](Node node) {
    size_t index = m_nodes.size();
    m_nodes.push_back(std::move(node));
    Node& ref = m_nodes.back();
    m_sim->register_station(ref.station, ref.pos, ref.g5, ref.cellular,
                            [this, index](const Envelope& env, ChannelKind ch, SimTime t) {
                              on_node_receive(index, env, ch, t);
                            });
  };

  for (const auto& veh : m_sc.vehicles) {
    Node node;
    node.role = Node::Role::VEHICLE;
    node.station = veh.station;
    node.g5 = veh.g5;
    node.cellular = veh.cellular;
    node.estimates = make_estimates(veh.channels);
    auto route = Route::make(veh.route);
    if (route) node.route = *route;
    node.pos = node.route.sample(SimTime{}).pos;
    node.vstate.station = veh.station;
    node.veh = &veh;
    add_node(std::move(node));
  }
  for (const auto& rsu : m_sc.rsus) {
    Node node;
    node.role = Node::Role::RSU;
    node.station = rsu.station;
    node.g5 = rsu.g5;
    node.cellular = rsu.cellular;
    node.estimates = make_estimates(rsu.channels);
    node.pos = rsu.pos;
    node.vstate.station = rsu.station;
    node.vstate.pos = rsu.pos;
    node.rsu = &rsu;
    add_node(std::move(node));
  }
  for (const auto& light : m_sc.traffic_lights) {
    Node node;
    node.role = Node::Role::LIGHT;
    node.station = light.station;
    node.g5 = light.g5;
    node.cellular = light.cellular;
    node.estimates = make_estimates(light.channels);
    node.pos = light.pos;
    node.vstate.station = light.station;
    node.vstate.pos = light.pos;
    node.light = &light;
    add_node(std::move(node));
  }
  for (const auto& attacker : m_sc.attackers) {
    Node node;
    node.role = Node::Role::ATTACKER;
    node.station = attacker.station;
    node.g5 = false;
    node.cellular = true;
    node.estimates =
        make_estimates({ChannelKind::cellular(SliceId::LOW_LATENCY)});
    node.pos = attacker.pos;
    node.vstate.station = attacker.station;
    node.vstate.pos = attacker.pos;
    node.attacker = &attacker;
    add_node(std::move(node));
  }

  for (const auto& sensor : m_sc.sensors) {
    SensorRt rt;
    rt.cfg = &sensor;
    auto area = m_fabric->area_of(sensor.pos);
    rt.mec_index = area ? m_mec_by_id.at(*area) : 0;
    if (!area) m_audit.violation("sensor outside every broker region");
    m_sensors.push_back(std::move(rt));
  }
}

void Runner::enroll_all() {
  if (!m_pki) return;
  for (auto& mec : m_mecs) mec.pool = make_pool(mec.cfg->station);
  for (auto& node : m_nodes) node.pool = make_pool(node.station);
  for (auto& sensor : m_sensors) sensor.pool = make_pool(sensor.cfg->station);
}

void Runner::subscribe_all() {
  auto subscribe_node = [&](Node& node, const SubscriptionConfig& cfg) {
    GeoPosition center = cfg.center ? *cfg.center : node.pos;
    auto sub = m_fabric->subscribe(node.station, Circle{center, cfg.radius_m},
                                   cfg.kinds, SimTime{});
    if (!sub) {
      m_audit.violation("subscribe failed: " + sub.error().message);
      return;
    }
    node.subscribed_kinds.insert(cfg.kinds.begin(), cfg.kinds.end());
  };
  for (auto& node : m_nodes) {
    if (node.veh && node.veh->subscription) subscribe_node(node, *node.veh->subscription);
    if (node.rsu && node.rsu->subscription) subscribe_node(node, *node.rsu->subscription);
  }
}

void Runner::schedule_all() {
  for (size_t i = 0; i < m_nodes.size(); ++i) {
    Node& node = m_nodes[i];
    switch (node.role) {
      case Node::Role::VEHICLE:
        schedule_or_die(SimTime{}, [this, i] { vehicle_step(i); });
        break;
      case Node::Role::RSU: {
        schedule_or_die(SimTime{}, [this, i] { infra_cam_step(i); });
        if (node.rsu->denm) {
          const DenmSourceConfig& denm = *node.rsu->denm;
          schedule_or_die(SimTime::from_ms(denm.start_ms),
                          [this, i, &denm] { rsu_denm_emit(i, denm); });
        }
        break;
      }
      case Node::Role::LIGHT:
        schedule_or_die(SimTime{}, [this, i] { infra_cam_step(i); });
        schedule_or_die(SimTime{}, [this, i] { light_spatem_emit(i); });
        schedule_or_die(SimTime{}, [this, i] { light_mapem_emit(i); });
        break;
      case Node::Role::ATTACKER:
        schedule_or_die(SimTime::from_ms(node.attacker->start_ms),
                        [this, i] { attacker_emit(i); });
        break;
    }
  }
  for (size_t s = 0; s < m_sensors.size(); ++s)
    schedule_or_die(SimTime{}, [this, s] { sensor_sweep(s); });
  for (size_t m = 0; m < m_mecs.size(); ++m) {
    schedule_or_die(SimTime{}, [this, m] { mec_cpm_emit(m); });
    if (SimTime::from_ms(10'000) <= m_end)
      schedule_or_die(SimTime::from_ms(10'000), [this, m] { purge_step(m); });
  }
  if (m_sc.security.enabled && m_sc.security.supervision_enabled)
    schedule_or_die(SimTime{}, [this] { correlate_step(); });
}

bool Runner::sign_onto(Envelope& envelope, PseudonymPool& pool) {
  if (!m_pki) return true;
  auto ticket = pool.active(m_sim->now().to_its());
  if (!ticket) {
    m_trace.record({{"type", "sign_skip"},
                    {"time_us", m_sim->now().micros},
                    {"sender", envelope.sender.value},
                    {"code", errc_name(ticket.code())}});
    return false;
  }
  auto trailer = sign_envelope(envelope, **ticket, m_sim->now().to_its());
  if (!trailer) {
    m_trace.record({{"type", "sign_skip"},
                    {"time_us", m_sim->now().micros},
                    {"sender", envelope.sender.value},
                    {"code", errc_name(trailer.code())}});
    return false;
  }
  envelope.trailer = *trailer;
  return true;
}

void Runner::emit_envelope(Node& node, Payload payload) {
  MsgKind kind = kind_of(payload);
  Envelope envelope = Envelope::make(m_msg_ids.next(node.station), node.station,
                                     m_sim->now().to_its(), std::move(payload));
  if (!sign_onto(envelope, node.pool)) return;

  auto channels = select_channels(kind, m_sc.qos_for(kind), node.estimates);
  if (!channels) {
    m_trace.record({{"type", "no_channel"},
                    {"time_us", m_sim->now().micros},
                    {"sender", node.station.value},
                    {"kind", msg_kind_name(kind)}});
    return;
  }

  std::vector<std::string> channel_names;
  for (const auto& ch : *channels) channel_names.push_back(ch.to_string());
  m_trace.record({{"type", "emit"},
                  {"time_us", m_sim->now().micros},
                  {"kind", msg_kind_name(kind)},
                  {"msg_id", envelope.msg_id.to_string()},
                  {"sender", node.station.value},
                  {"channels", channel_names}});

  for (const auto& ch : *channels) {
    if (ch.medium == ChannelKind::Medium::ITS_G5) {
      m_sim->transmit_g5(node.pos, envelope);
    } else {
      auto dest = serving_mec_station(node.pos);
      if (!dest) {
        m_trace.record({{"type", "uplink_skip"},
                        {"time_us", m_sim->now().micros},
                        {"sender", node.station.value},
                        {"code", errc_name(dest.code())}});
        continue;
      }
      auto outcome = m_sim->transmit_cellular(envelope, ch.slice, ch.endpoint, *dest);
      if (!outcome)
        m_trace.record({{"type", "uplink_skip"},
                        {"time_us", m_sim->now().micros},
                        {"sender", node.station.value},
                        {"code", errc_name(outcome.code())}});
    }
  }
}

void Runner::vehicle_step(size_t node_index) {
  Node& node = m_nodes[node_index];
  SimTime now = m_sim->now();
  auto sample = node.route.sample(now);
  node.pos = sample.pos;
  node.vstate.pos = sample.pos;
  node.vstate.speed_mps = sample.speed_mps;
  node.vstate.heading_deg = sample.heading_deg;
  (void)m_sim->update_position(node.station, node.pos);

  if (node.cellular) {
    if (auto cmd = m_fabric->track_position(node.station, node.pos, now)) {
      auto record = m_fabric->handover(*cmd, now);
      if (record) {
        StationId station = node.station;
        schedule_or_die(record->window_end.plus_us(1),
                        [this, station] { m_fabric->complete_handover(station, m_sim->now()); });
      } else {
        m_audit.violation("handover failed: " + record.error().message);
      }
    }
  }

  if (auto cam = cam_trigger_step(node.vstate, node.trigger, now))
    emit_envelope(node, Payload{*cam});

  SimTime next = now.plus_ms(m_sc.cam_check_period_ms);
  if (next <= m_end)
    schedule_or_die(next, [this, node_index] { vehicle_step(node_index); });
}

void Runner::infra_cam_step(size_t node_index) {
  Node& node = m_nodes[node_index];
  SimTime now = m_sim->now();
  node.vstate.pos = node.pos;
  node.vstate.speed_mps = 0;
  node.vstate.heading_deg = 0;
  if (auto cam = cam_trigger_step(node.vstate, node.trigger, now))
    emit_envelope(node, Payload{*cam});
  SimTime next = now.plus_ms(m_sc.cam_check_period_ms);
  if (next <= m_end)
    schedule_or_die(next, [this, node_index] { infra_cam_step(node_index); });
}

void Runner::rsu_denm_emit(size_t node_index, const DenmSourceConfig& cfg) {
  Node& node = m_nodes[node_index];
  SimTime now = m_sim->now();

  Denm denm;
  denm.station = node.station;
  denm.ts = now.to_its();
  denm.event_pos = cfg.event_pos ? *cfg.event_pos : node.pos;
  denm.event_kind = cfg.event_kind;
  denm.relevance_radius_m = cfg.relevance_radius_m;
  denm.validity_ms = cfg.validity_ms;
  denm.seq = node.denm_seq++;
  emit_envelope(node, Payload{denm});

  SimTime next = now.plus_ms(cfg.period_ms);
  uint64_t stop_us = cfg.stop_ms ? *cfg.stop_ms * 1000 : m_end.micros;
  if (next.micros <= std::min(stop_us, m_end.micros))
    schedule_or_die(next, [this, node_index, &cfg] { rsu_denm_emit(node_index, cfg); });
}

void Runner::light_spatem_emit(size_t node_index) {
  Node& node = m_nodes[node_index];
  const TrafficLightConfig& cfg = *node.light;
  SimTime now = m_sim->now();

  Spatem spatem;
  spatem.intersection = cfg.intersection;
  spatem.ts = now.to_its();
  for (const auto& group : cfg.groups) {
    uint64_t total = 0;
    for (const auto& phase : group.phases) total += phase.duration_ms;
    if (total == 0) continue;
    uint64_t elapsed = now.to_ms() % total;
    SignalGroupState state;
    state.signal_group = group.id;
    for (const auto& phase : group.phases) {
      if (elapsed < phase.duration_ms) {
        state.state = phase.state;
        state.time_to_change_ms = static_cast<uint32_t>(phase.duration_ms - elapsed);
        break;
      }
      elapsed -= phase.duration_ms;
    }
    spatem.groups.push_back(state);
  }
  emit_envelope(node, Payload{spatem});

  SimTime next = now.plus_ms(cfg.spatem_period_ms);
  if (next <= m_end)
    schedule_or_die(next, [this, node_index] { light_spatem_emit(node_index); });
}

void Runner::light_mapem_emit(size_t node_index) {
  Node& node = m_nodes[node_index];
  const TrafficLightConfig& cfg = *node.light;
  SimTime now = m_sim->now();

  Mapem mapem;
  mapem.intersection = cfg.intersection;
  for (const auto& lane : cfg.lanes) {
    MapLane out;
    out.lane_id = lane.lane_id;
    out.polyline = lane.polyline;
    out.signal_group = lane.signal_group;
    mapem.lanes.push_back(std::move(out));
  }
  emit_envelope(node, Payload{mapem});

  SimTime next = now.plus_ms(cfg.mapem_period_ms);
  if (next <= m_end)
    schedule_or_die(next, [this, node_index] { light_mapem_emit(node_index); });
}

void Runner::attacker_emit(size_t node_index) {
  Node& node = m_nodes[node_index];
  const AttackerConfig& cfg = *node.attacker;
  SimTime now = m_sim->now();

  GeoPosition claimed = node.pos;
  switch (cfg.type) {
    case AttackerType::TELEPORT:
      claimed = offset_position(cfg.pos,
                                cfg.jump_m * static_cast<double>(node.attack_emissions + 1),
                                0);
      break;
    case AttackerType::FLOOD:
      claimed = cfg.pos;
      break;
    case AttackerType::GHOST:
      claimed = cfg.claim_pos ? *cfg.claim_pos : cfg.pos;
      break;
  }
  ++node.attack_emissions;
  emit_envelope(node, Payload{Cam::make(node.station, now.to_its(), claimed, 0, 0)});

  SimTime next = now.plus_ms(cfg.period_ms);
  uint64_t stop_us = cfg.stop_ms ? *cfg.stop_ms * 1000 : m_end.micros;
  if (next.micros <= std::min(stop_us, m_end.micros))
    schedule_or_die(next, [this, node_index] { attacker_emit(node_index); });
}

void Runner::sensor_sweep(size_t sensor_index) {
  SensorRt& sensor = m_sensors[sensor_index];
  const SensorConfig& cfg = *sensor.cfg;
  SimTime now = m_sim->now();
  Epm& epm = *m_mecs[sensor.mec_index].epm;
  double axis_sigma = cfg.noise_sigma_m / std::sqrt(2.0);

  uint64_t sensor_at = 0;
  if (m_pki) {
    auto ticket = sensor.pool.active(now.to_its());
    if (ticket) sensor_at = (*ticket)->at.at_id;
  }

  auto observe = [&](uint32_t target_id, GeoPosition true_pos, double vel_east,
                     double vel_north, ObjectClass cls) {
    if (distance_m(cfg.pos, true_pos) > cfg.coverage_radius_m) return;
    double de = m_sim->rng().normal(0, axis_sigma);
    double dn = m_sim->rng().normal(0, axis_sigma);
    GeoPosition measured = offset_position(true_pos, de, dn);

    PerceivedObject obj;
    obj.object_id = target_id;
    obj.pos = measured;
    obj.vel_east_cm_s = static_cast<int16_t>(
        std::clamp<long long>(std::llround(vel_east * 100), -32768, 32767));
    obj.vel_north_cm_s = static_cast<int16_t>(
        std::clamp<long long>(std::llround(vel_north * 100), -32768, 32767));
    obj.confidence_pm =
        static_cast<uint16_t>(std::llround(cfg.detection_confidence * 1000));
    obj.obj_class = cls;
    auto result = epm.ingest_detection({cfg.station, obj, now}, now);
    if (!result)
      m_trace.record({{"type", "detection_skip"},
                      {"time_us", now.micros},
                      {"sensor", cfg.station.value},
                      {"code", errc_name(result.code())}});
    if (m_supervision)
      m_supervision->ingest(SecurityEvent{now, sensor_at,
                                          SecEventKind::SENSOR_DETECTION, measured, 0});
  };

  for (const auto& node : m_nodes) {
    if (node.role == Node::Role::VEHICLE) {
      auto sample = node.route.sample(now);
      double heading_rad = sample.heading_deg * kDegToRad;
      observe(node.station.value, sample.pos, sample.speed_mps * std::sin(heading_rad),
              sample.speed_mps * std::cos(heading_rad), ObjectClass::VEHICLE);
    } else if (node.role == Node::Role::ATTACKER) {
      observe(node.station.value, node.pos, 0, 0, ObjectClass::VEHICLE);
    }
  }
  for (const auto& obj : m_sc.objects)
    observe(obj.id, obj.pos, 0, 0, obj.obj_class);

  SimTime next = now.plus_ms(cfg.period_ms);
  if (next <= m_end)
    schedule_or_die(next, [this, sensor_index] { sensor_sweep(sensor_index); });
}

void Runner::mec_cpm_emit(size_t mec_index) {
  MecRt& mec = m_mecs[mec_index];
  SimTime now = m_sim->now();

  Cpm cpm = mec.epm->snapshot(mec.cfg->station, now);
  Envelope envelope = Envelope::make(m_msg_ids.next(mec.cfg->station), mec.cfg->station,
                                     now.to_its(), Payload{cpm});
  bool ok = sign_onto(envelope, mec.pool);
  if (ok) {
    m_trace.record({{"type", "emit"},
                    {"time_us", now.micros},
                    {"kind", "CPM"},
                    {"msg_id", envelope.msg_id.to_string()},
                    {"sender", mec.cfg->station.value},
                    {"channels", {"BROKER"}}});
    auto pub = m_fabric->publish(envelope, mec.cfg->center, now);
    if (pub) deliver_publish(envelope, *pub);
  }

  SimTime next = now.plus_ms(m_sc.cpm_period_ms);
  if (next <= m_end)
    schedule_or_die(next, [this, mec_index] { mec_cpm_emit(mec_index); });
}

void Runner::purge_step(size_t mec_index) {
  m_mecs[mec_index].central->purge_stale(m_sim->now());
  SimTime next = m_sim->now().plus_ms(uint64_t{10'000});
  if (next <= m_end)
    schedule_or_die(next, [this, mec_index] { purge_step(mec_index); });
}

void Runner::correlate_step() {
  SimTime now = m_sim->now();
  auto alerts = m_supervision->correlate(now);
  for (const auto& alert : alerts) {
    json subject;
    if (alert.ec_id.has_value())
      subject = {{"ec_id", *alert.ec_id}};
    else
      subject = {{"pseudonyms", alert.pseudonyms}};
    json record = {{"type", "alert"},
                   {"time_us", now.micros},
                   {"rule", rule_name(alert.rule)},
                   {"subject", subject},
                   {"evidence_count", alert.evidence.size()}};
    m_trace.record(record);
    m_alerts.push_back(record);
  }
  SimTime next = now.plus_ms(m_sc.correlate_period_ms);
  if (next <= m_end) schedule_or_die(next, [this] { correlate_step(); });
}

GeoPosition Runner::publish_position(const Envelope& envelope) const {
  if (const auto* cam = std::get_if<Cam>(&envelope.payload)) return cam->pos;
  if (const auto* denm = std::get_if<Denm>(&envelope.payload)) return denm->event_pos;
  if (const auto* cpm = std::get_if<Cpm>(&envelope.payload)) return cpm->sensor_pos;
  auto pos = m_sim->position_of(envelope.sender);
  return pos ? *pos : GeoPosition{};
}

void Runner::deliver_publish(const Envelope& envelope, const PublishResult& pub) {
  for (const auto& detail : pub.details) {
    SliceId slice = forward_slice(envelope.kind);
    StationId dest = detail.station;
    if (detail.federated) {
      Envelope copy = envelope;
      schedule_or_die(m_sim->now().plus_ms(m_fabric->federation_hop_ms()),
                      [this, copy = std::move(copy), slice, dest] {
                        auto outcome =
                            m_sim->transmit_cellular(copy, slice, CellEndpoint::MEC, dest);
                        if (!outcome)
                          m_trace.record({{"type", "undeliverable"},
                                          {"time_us", m_sim->now().micros},
                                          {"msg_id", copy.msg_id.to_string()},
                                          {"dest", dest.value},
                                          {"code", errc_name(outcome.code())}});
                      });
    } else {
      auto outcome = m_sim->transmit_cellular(envelope, slice, CellEndpoint::MEC, dest);
      if (!outcome)
        m_trace.record({{"type", "undeliverable"},
                        {"time_us", m_sim->now().micros},
                        {"msg_id", envelope.msg_id.to_string()},
                        {"dest", dest.value},
                        {"code", errc_name(outcome.code())}});
    }
  }
}

void Runner::on_mec_receive(size_t mec_index, const Envelope& envelope,
                            ChannelKind, SimTime now) {
  MecRt& mec = m_mecs[mec_index];
  if (mec.dedup.on_receive(envelope.msg_id, now) == ReceiveOutcome::DUPLICATE_SUPPRESSED)
    return;

  uint64_t pseudonym = envelope.trailer ? envelope.trailer->at_id : 0;
  if (m_pki) {
    auto verdict =
        verify_envelope(envelope, m_pki->trust_store(), m_pki->crl(), now.to_its());
    if (!verdict) {
      m_trace.record({{"type", "verify_fail"},
                      {"time_us", now.micros},
                      {"mec", mec.cfg->id},
                      {"msg_id", envelope.msg_id.to_string()},
                      {"code", errc_name(verdict.code())}});
      if (m_supervision)
        m_supervision->ingest(SecurityEvent{now, pseudonym, SecEventKind::VERIFY_FAIL,
                                            publish_position(envelope), 0});
      return;
    }
  }

  if (m_supervision) {
    if (const auto* cam = std::get_if<Cam>(&envelope.payload))
      m_supervision->ingest(SecurityEvent{now, pseudonym, SecEventKind::CAM_SEEN,
                                          cam->pos, cam->speed_mps()});
    else if (const auto* denm = std::get_if<Denm>(&envelope.payload))
      m_supervision->ingest(SecurityEvent{now, pseudonym, SecEventKind::DENM_SEEN,
                                          denm->event_pos, 0});
  }

  mec.central->ingest(envelope, now);
  if (const auto* cam = std::get_if<Cam>(&envelope.payload))
    mec.epm->ingest_cam(*cam, now);

  if (const auto* denm = std::get_if<Denm>(&envelope.payload)) {
    auto fwd = mec.central->notify_environment(envelope, *denm, now);
    if (!fwd)
      m_trace.record({{"type", "forward_skip"},
                      {"time_us", now.micros},
                      {"msg_id", envelope.msg_id.to_string()},
                      {"code", errc_name(fwd.code())}});
  } else {
    auto fwd = mec.central->forward(envelope, now);
    if (!fwd)
      m_trace.record({{"type", "forward_skip"},
                      {"time_us", now.micros},
                      {"msg_id", envelope.msg_id.to_string()},
                      {"code", errc_name(fwd.code())}});
  }

  auto pub = m_fabric->publish(envelope, publish_position(envelope), now);
  if (pub)
    deliver_publish(envelope, *pub);
  else
    m_trace.record({{"type", "publish_skip"},
                    {"time_us", now.micros},
                    {"msg_id", envelope.msg_id.to_string()},
                    {"code", errc_name(pub.code())}});
}

void Runner::on_node_receive(size_t node_index, const Envelope& envelope,
                             ChannelKind channel, SimTime now) {
  Node& node = m_nodes[node_index];
  if (m_pki) {
    auto verdict =
        verify_envelope(envelope, m_pki->trust_store(), m_pki->crl(), now.to_its());
    if (!verdict) {
      m_trace.record({{"type", "verify_fail"},
                      {"time_us", now.micros},
                      {"station", node.station.value},
                      {"msg_id", envelope.msg_id.to_string()},
                      {"code", errc_name(verdict.code())}});
      return;
    }
  }
  auto outcome = node.dedup.on_receive(envelope.msg_id, now);
  m_trace.record({{"type", "app"},
                  {"time_us", now.micros},
                  {"station", node.station.value},
                  {"msg_id", envelope.msg_id.to_string()},
                  {"kind", msg_kind_name(envelope.kind)},
                  {"channel", channel.to_string()},
                  {"outcome", outcome == ReceiveOutcome::DELIVERED_TO_APP
                                  ? "DELIVERED"
                                  : "DUPLICATE"}});
}

json Runner::build_summary() {
  struct ChannelStats {
    uint64_t delivered = 0;
    uint64_t lost = 0;
    std::vector<uint64_t> latencies_us;
  };
  std::map<std::string, ChannelStats> channels;
  std::map<std::string, uint64_t> counts;
  uint64_t app_delivered = 0, app_duplicates = 0;
  uint64_t forwards = 0, publishes = 0, verify_fails = 0;
  uint64_t handover_count = 0, handover_completed = 0;
  std::map<uint32_t, std::vector<std::pair<uint64_t, MsgKind>>> app_times;

  for (const auto& line : m_trace.parsed()) {
    std::string type = line.value("type", "");
    if (type == "net") {
      std::string key = line["channel"].get<std::string>();
      std::string slice = line.value("slice", "");
      if (!slice.empty()) key += "/" + slice;
      auto& stats = channels[key];
      if (line["outcome"] == "DELIVERED") {
        ++stats.delivered;
        stats.latencies_us.push_back(line["latency_us"].get<uint64_t>());
      } else {
        ++stats.lost;
      }
    } else if (type == "emit") {
      ++counts[line["kind"].get<std::string>()];
    } else if (type == "app") {
      if (line["outcome"] == "DELIVERED") {
        ++app_delivered;
        auto kind = line["kind"].get<std::string>();
        MsgKind mk = MsgKind::CAM;
        for (auto k : {MsgKind::CAM, MsgKind::DENM, MsgKind::CPM, MsgKind::SPATEM,
                       MsgKind::MAPEM})
          if (kind == msg_kind_name(k)) mk = k;
        app_times[line["station"].get<uint32_t>()].push_back(
            {line["time_us"].get<uint64_t>(), mk});
      } else {
        ++app_duplicates;
      }
    } else if (type == "forward") {
      ++forwards;
    } else if (type == "publish") {
      ++publishes;
    } else if (type == "verify_fail") {
      ++verify_fails;
    } else if (type == "handover_start") {
      ++handover_count;
    } else if (type == "handover_complete") {
      ++handover_completed;
    }
  }

  auto percentile = [](std::vector<uint64_t>& samples, double p) -> uint64_t {
    if (samples.empty()) return 0;
    size_t rank = static_cast<size_t>(std::ceil(p * static_cast<double>(samples.size())));
    if (rank == 0) rank = 1;
    return samples[rank - 1];
  };

  json channel_json = json::object();
  json latency_json = json::object();
  for (auto& [key, stats] : channels) {
    uint64_t total = stats.delivered + stats.lost;
    channel_json[key] = {{"delivered", stats.delivered},
                         {"lost", stats.lost},
                         {"delivery_ratio",
                          total ? static_cast<double>(stats.delivered) / total : 0.0}};
    std::sort(stats.latencies_us.begin(), stats.latencies_us.end());
    latency_json[key] = {{"count", stats.latencies_us.size()},
                         {"p50_us", percentile(stats.latencies_us, 0.50)},
                         {"p95_us", percentile(stats.latencies_us, 0.95)},
                         {"p99_us", percentile(stats.latencies_us, 0.99)}};
  }

  // Max inter-delivery gap for subscribed stations, over subscribed kinds.
  uint64_t max_gap_us = 0;
  for (const auto& node : m_nodes) {
    if (node.subscribed_kinds.empty()) continue;
    auto it = app_times.find(node.station.value);
    if (it == app_times.end()) continue;
    std::vector<uint64_t> times;
    for (const auto& [t, kind] : it->second)
      if (node.subscribed_kinds.count(kind)) times.push_back(t);
    std::sort(times.begin(), times.end());
    for (size_t i = 1; i < times.size(); ++i)
      max_gap_us = std::max(max_gap_us, times[i] - times[i - 1]);
  }

  json epm_json = json::array();
  for (auto& mec : m_mecs) {
    Cpm snapshot = mec.epm->snapshot(mec.cfg->station, m_end);
    Cpm in_region;
    in_region.sensor_pos = snapshot.sensor_pos;
    for (const auto& obj : snapshot.objects)
      if (distance_m(mec.cfg->center, obj.pos) <= mec.cfg->region_radius_m)
        in_region.objects.push_back(obj);

    // Ground truth is every physical entity the EPM can observe: static
    // objects, road users, and the CAM-emitting roadside equipment.
    std::vector<GroundTruthObject> truth;
    for (const auto& obj : m_sc.objects)
      if (distance_m(mec.cfg->center, obj.pos) <= mec.cfg->region_radius_m)
        truth.push_back({obj.id, obj.pos});
    for (const auto& node : m_nodes) {
      GeoPosition pos = node.role == Node::Role::VEHICLE
                            ? node.route.sample(m_end).pos
                            : node.pos;
      if (distance_m(mec.cfg->center, pos) <= mec.cfg->region_radius_m)
        truth.push_back({node.station.value, pos});
    }
    AccuracyReport report = accuracy(in_region, truth);
    epm_json.push_back({{"mec", mec.cfg->id},
                        {"tracks", in_region.objects.size()},
                        {"truth", truth.size()},
                        {"rmse_m", report.rmse_m},
                        {"count_delta", report.count_delta}});
  }

  json counts_json = json::object();
  for (auto kind : {MsgKind::CAM, MsgKind::DENM, MsgKind::CPM, MsgKind::SPATEM,
                    MsgKind::MAPEM}) {
    auto it = counts.find(msg_kind_name(kind));
    counts_json[msg_kind_name(kind)] = it == counts.end() ? 0 : it->second;
  }
  counts_json["forwards"] = forwards;
  counts_json["publishes"] = publishes;
  counts_json["verify_fails"] = verify_fails;

  json crl_json = json::array();
  if (m_pki)
    for (uint64_t id : m_pki->crl().revoked) crl_json.push_back(id);

  json summary = {
      {"scenario", m_sc.name},
      {"seed", m_sc.seed},
      {"duration_s", m_sc.duration_s},
      {"counts", counts_json},
      {"channels", channel_json},
      {"latency", latency_json},
      {"app", {{"delivered", app_delivered}, {"duplicates", app_duplicates}}},
      {"handover",
       {{"count", handover_count},
        {"completed", handover_completed},
        {"max_app_gap_us", max_gap_us}}},
      {"epm", epm_json},
      {"alerts", m_alerts},
      {"security",
       {{"enabled", m_sc.security.enabled},
        {"enrolled", m_enrolled},
        {"tickets", m_tickets_issued},
        {"crl", crl_json}}},
      {"audit", {{"violations", m_audit.violations}, {"notes", m_audit.notes}}},
  };
  summary["determinism_hash"] = [this] {
    char buf[17];
    snprintf(buf, sizeof(buf), "%016llx",
             static_cast<unsigned long long>(m_trace.determinism_hash()));
    return std::string(buf);
  }();
  return summary;
}

RunResult Runner::run() {
  setup();
  enroll_all();
  subscribe_all();
  schedule_all();
  m_sim->run_until(m_end);

  // Fold simulator audit into the run audit.
  for (const auto& note : m_sim->audit().notes) m_audit.violation(note);

  RunResult result;
  result.summary = build_summary();
  result.trace = std::move(m_trace);
  result.exit_code = m_audit.violations > 0 ? 2 : 0;
  result.station_pseudonyms = std::move(m_station_pseudonyms);
  result.pki = std::move(m_pki);
  result.linkability_token = std::move(m_link_token);
  return result;
}

}  // namespace

RunResult run_scenario(const Scenario& scenario, const RunOptions& options) {
  Scenario sc = scenario;
  if (options.seed) sc.seed = *options.seed;
  if (options.duration_s) sc.duration_s = *options.duration_s;
  Runner runner(std::move(sc));
  return runner.run();
}

}  // namespace v2x
