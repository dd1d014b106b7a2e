#include "v2x/geobroker.hpp"

#include <algorithm>

namespace v2x {

BrokerFabric::BrokerFabric(int tile_level, double max_sub_radius_m,
                           double federation_hop_ms, uint64_t handover_overlap_ms,
                           TraceLog* trace, Audit* audit)
    : m_tile_level(tile_level),
      m_max_sub_radius_m(max_sub_radius_m),
      m_federation_hop_ms(federation_hop_ms),
      m_handover_overlap_ms(handover_overlap_ms),
      m_trace(trace),
      m_audit(audit) {}

Result<void> BrokerFabric::add_broker(uint16_t id, std::set<TileId> region) {
  if (m_brokers.count(id))
    return Error{Errc::INVALID_FIELD, "duplicate broker id"};
  for (const auto& tile : region) {
    auto it = m_tile_owner.find(tile);
    if (it != m_tile_owner.end())
      return Error{Errc::INVALID_FIELD,
                   "tile (" + std::to_string(tile.level) + "," +
                       std::to_string(tile.x) + "," + std::to_string(tile.y) +
                       ") already owned by broker " + std::to_string(it->second)};
  }
  for (const auto& tile : region) m_tile_owner[tile] = id;
  Broker broker;
  broker.id = id;
  broker.region = std::move(region);
  m_brokers.emplace(id, std::move(broker));
  return {};
}

void BrokerFabric::index_subscription(Broker& broker, const Subscription& sub) {
  broker.subs[sub.sub_id] = sub;
  for (const auto& tile : tiles_covering(sub.area, m_tile_level))
    broker.index[tile].insert(sub.sub_id);
}

void BrokerFabric::drop_subscription(Broker& broker, uint64_t sub_id) {
  auto it = broker.subs.find(sub_id);
  if (it == broker.subs.end()) return;
  for (const auto& tile : tiles_covering(it->second.area, m_tile_level)) {
    auto idx = broker.index.find(tile);
    if (idx == broker.index.end()) continue;
    idx->second.erase(sub_id);
    if (idx->second.empty()) broker.index.erase(idx);
  }
  broker.subs.erase(it);
}

Result<uint64_t> BrokerFabric::subscribe(StationId station, Circle area,
                                         std::set<MsgKind> kinds, SimTime now) {
  if (area.radius_m <= 0 || area.radius_m > m_max_sub_radius_m)
    return Error{Errc::INVALID_FIELD, "subscription radius out of (0, 20 km]"};
  if (kinds.empty())
    return Error{Errc::INVALID_FIELD, "subscription kinds must be non-empty"};
  auto owner = area_of(area.center);
  if (!owner) return owner.error();

  Subscription sub;
  sub.sub_id = m_next_sub_id++;
  sub.station = station;
  sub.area = area;
  sub.kinds = std::move(kinds);
  sub.home_broker = *owner;
  index_subscription(m_brokers.at(*owner), sub);

  if (m_trace)
    m_trace->record({{"type", "subscribe"},
                     {"time_us", now.micros},
                     {"sub_id", sub.sub_id},
                     {"station", station.value},
                     {"broker", *owner},
                     {"lat_udeg", area.center.lat_udeg()},
                     {"lon_udeg", area.center.lon_udeg()},
                     {"radius_m", area.radius_m}});
  return sub.sub_id;
}

void BrokerFabric::unsubscribe(uint64_t sub_id, SimTime now) {
  bool found = false;
  for (auto& [id, broker] : m_brokers) {
    if (broker.subs.count(sub_id)) {
      drop_subscription(broker, sub_id);
      found = true;
    }
  }
  if (m_trace)
    m_trace->record({{"type", "unsubscribe"},
                     {"time_us", now.micros},
                     {"sub_id", sub_id},
                     {"known", found}});
}

Result<uint16_t> BrokerFabric::area_of(GeoPosition position) const {
  auto it = m_tile_owner.find(tile_for(position, m_tile_level));
  if (it == m_tile_owner.end())
    return Error{Errc::NO_BROKER_FOR_POSITION, "position tile is unowned"};
  return it->second;
}

void BrokerFabric::match_at(const Broker& broker, const Envelope& envelope,
                            GeoPosition position, bool federated,
                            PublishResult& result) {
  auto idx = broker.index.find(tile_for(position, m_tile_level));
  if (idx == broker.index.end()) return;
  for (uint64_t sub_id : idx->second) {
    const Subscription& sub = broker.subs.at(sub_id);
    if (!sub.kinds.count(envelope.kind)) continue;
    if (distance_m(position, sub.area.center) > sub.area.radius_m) continue;
    result.details.push_back({sub.station, sub_id, broker.id, federated});
  }
}

Result<PublishResult> BrokerFabric::publish(const Envelope& envelope,
                                            GeoPosition position, SimTime now) {
  for (auto& [station, home] : m_homes)
    lazy_complete(StationId{station}, now);

  auto owner = area_of(position);
  if (!owner) return owner.error();

  PublishResult result;
  result.owning_broker = *owner;
  match_at(m_brokers.at(*owner), envelope, position, false, result);

  Circle reach{position, m_max_sub_radius_m};
  std::set<uint16_t> federated;
  for (const auto& tile : tiles_covering(reach, m_tile_level)) {
    auto it = m_tile_owner.find(tile);
    if (it != m_tile_owner.end() && it->second != *owner) federated.insert(it->second);
  }
  for (uint16_t id : federated)
    match_at(m_brokers.at(id), envelope, position, true, result);

  std::set<uint32_t> stations;
  for (const auto& d : result.details) stations.insert(d.station.value);
  for (uint32_t s : stations) result.matched.push_back(StationId{s});

  if (m_trace) {
    nlohmann::json subs = nlohmann::json::array();
    for (const auto& [id, broker] : m_brokers)
      for (const auto& [sid, sub] : broker.subs) {
        std::vector<std::string> kind_names;
        for (auto k : sub.kinds) kind_names.emplace_back(msg_kind_name(k));
        subs.push_back({{"sub_id", sid},
                        {"station", sub.station.value},
                        {"broker", id},
                        {"lat_udeg", sub.area.center.lat_udeg()},
                        {"lon_udeg", sub.area.center.lon_udeg()},
                        {"radius_m", sub.area.radius_m},
                        {"kinds", kind_names}});
      }
    std::vector<uint32_t> matched_ids;
    for (auto s : result.matched) matched_ids.push_back(s.value);
    m_trace->record({{"type", "publish"},
                     {"time_us", now.micros},
                     {"msg_id", envelope.msg_id.to_string()},
                     {"kind", msg_kind_name(envelope.kind)},
                     {"lat_udeg", position.lat_udeg()},
                     {"lon_udeg", position.lon_udeg()},
                     {"owning_broker", *owner},
                     {"subs", subs},
                     {"matched", matched_ids}});
  }
  return result;
}

Result<HandoverRecord> BrokerFabric::handover(const HandoverCommand& cmd, SimTime now) {
  if (cmd.from == cmd.to)
    return Error{Errc::INVALID_FIELD, "handover with from == to"};
  auto home_it = m_homes.find(cmd.station.value);
  if (home_it == m_homes.end())
    return Error{Errc::UNKNOWN_STATION, "station has no home MEC"};
  if (home_it->second.mec != cmd.from)
    return Error{Errc::WRONG_SOURCE, "station not homed at cmd.from"};
  auto from_it = m_brokers.find(cmd.from);
  auto to_it = m_brokers.find(cmd.to);
  if (from_it == m_brokers.end() || to_it == m_brokers.end())
    return Error{Errc::UNKNOWN_STATION, "unknown broker in handover command"};

  SimTime window_end = cmd.issued_at.plus_ms(cmd.overlap_window_ms);
  for (const auto& [sub_id, sub] : from_it->second.subs) {
    if (sub.station != cmd.station) continue;
    Subscription copy = sub;
    copy.home_broker = cmd.to;
    index_subscription(to_it->second, copy);
  }

  home_it->second.mec = cmd.to;
  home_it->second.handover_in_progress = true;
  home_it->second.from = cmd.from;
  home_it->second.window_end = window_end;

  HandoverRecord record{cmd.station, cmd.from, cmd.to, cmd.issued_at, now, window_end};
  if (m_trace)
    m_trace->record({{"type", "handover_start"},
                     {"time_us", now.micros},
                     {"station", cmd.station.value},
                     {"from", cmd.from},
                     {"to", cmd.to},
                     {"window_end_us", window_end.micros}});
  return record;
}

void BrokerFabric::complete_handover(StationId station, SimTime now) {
  lazy_complete(station, now);
}

void BrokerFabric::lazy_complete(StationId station, SimTime now) {
  auto it = m_homes.find(station.value);
  if (it == m_homes.end() || !it->second.handover_in_progress) return;
  if (now <= it->second.window_end) return;

  auto broker_it = m_brokers.find(it->second.from);
  if (broker_it != m_brokers.end()) {
    std::vector<uint64_t> to_drop;
    for (const auto& [sub_id, sub] : broker_it->second.subs)
      if (sub.station == station) to_drop.push_back(sub_id);
    for (uint64_t sub_id : to_drop) drop_subscription(broker_it->second, sub_id);
  }
  it->second.handover_in_progress = false;
  if (m_trace)
    m_trace->record({{"type", "handover_complete"},
                     {"time_us", now.micros},
                     {"station", station.value},
                     {"from", it->second.from},
                     {"to", it->second.mec}});
}

std::optional<HandoverCommand> BrokerFabric::track_position(StationId station,
                                                            GeoPosition position,
                                                            SimTime now) {
  lazy_complete(station, now);
  auto area = area_of(position);
  if (!area) {
    if (m_audit) m_audit->violation("tracked position outside every broker region");
    return std::nullopt;
  }
  auto it = m_homes.find(station.value);
  if (it == m_homes.end()) {
    m_homes[station.value] = StationHome{*area, false, 0, SimTime{}};
    return std::nullopt;
  }
  if (it->second.handover_in_progress) return std::nullopt;
  if (it->second.mec == *area) return std::nullopt;

  HandoverCommand cmd;
  cmd.station = station;
  cmd.from = it->second.mec;
  cmd.to = *area;
  cmd.issued_at = now;
  cmd.overlap_window_ms = m_handover_overlap_ms;
  return cmd;
}

std::optional<uint16_t> BrokerFabric::home_of(StationId station) const {
  auto it = m_homes.find(station.value);
  if (it == m_homes.end()) return std::nullopt;
  return it->second.mec;
}

std::vector<Subscription> BrokerFabric::subscriptions_of(StationId station) const {
  std::vector<Subscription> out;
  for (const auto& [id, broker] : m_brokers)
    for (const auto& [sid, sub] : broker.subs)
      if (sub.station == station) out.push_back(sub);
  return out;
}

std::vector<Subscription> BrokerFabric::all_subscriptions() const {
  std::vector<Subscription> out;
  for (const auto& [id, broker] : m_brokers)
    for (const auto& [sid, sub] : broker.subs) out.push_back(sub);
  return out;
}

}  // namespace v2x
