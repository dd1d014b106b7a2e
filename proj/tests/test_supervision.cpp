#include <doctest.h>

#include <map>

#include "test_util.hpp"
#include "v2x/supervision.hpp"

using namespace v2x;

namespace {

const GeoPosition kBase = GeoPosition::from_microdegrees(48'100'000, 11'600'000);

// Escrow stand-in: pseudonyms map to vehicles through a fixed table.
SupervisionEngine::GroupResolver table_resolver(std::map<uint64_t, uint64_t> table) {
  return [table = std::move(table)](uint64_t at_id,
                                    SimTime) -> std::optional<uint64_t> {
    auto it = table.find(at_id);
    if (it == table.end()) return std::nullopt;
    return it->second;
  };
}

SecurityEvent cam_seen(uint64_t at_id, uint64_t t_ms, GeoPosition pos,
                       double speed = 10) {
  return SecurityEvent{SimTime::from_ms(t_ms), at_id, SecEventKind::CAM_SEEN, pos,
                       speed};
}

SecurityEvent sensor_seen(uint64_t t_ms, GeoPosition pos) {
  return SecurityEvent{SimTime::from_ms(t_ms), 0xBEEF, SecEventKind::SENSOR_DETECTION,
                       pos, 0};
}

}  // namespace

TEST_CASE("benign traffic raises no alerts") {
  SupervisionConfig cfg;
  cfg.sensor_zones = {Circle{kBase, 150}};
  SupervisionEngine engine(cfg, table_resolver({{1, 100}}));

  // 40 m/s straight line, 10 Hz CAMs, detections tracking the vehicle
  for (uint64_t t = 0; t <= 60'000; t += 100) {
    GeoPosition pos = offset_position(kBase, 4.0 * (t / 100.0), 0);
    engine.ingest(cam_seen(1, t, pos, 40));
    engine.ingest(sensor_seen(t, offset_position(pos, 0.5, -0.3)));
    if (t % 1000 == 0) {
      auto alerts = engine.correlate(SimTime::from_ms(t));
      CHECK(alerts.empty());
    }
  }
}

TEST_CASE("teleport fires within three CAMs and once per episode") {
  SupervisionEngine engine(SupervisionConfig{}, table_resolver({{1, 100}}));

  engine.ingest(cam_seen(1, 0, kBase));
  engine.ingest(cam_seen(1, 100, offset_position(kBase, 200, 0)));
  auto alerts = engine.correlate(SimTime::from_ms(100));
  REQUIRE(alerts.size() == 1);
  CHECK(alerts[0].rule == RuleId::TELEPORT);
  CHECK(alerts[0].ec_id == 100);
  REQUIRE(alerts[0].evidence.size() == 2);

  // episode continues: no second alert
  engine.ingest(cam_seen(1, 200, offset_position(kBase, 400, 0)));
  CHECK(engine.correlate(SimTime::from_ms(200)).empty());

  // let the window clear the episode, then violate again
  auto cleared = engine.correlate(SimTime::from_ms(30'000));
  CHECK(cleared.empty());
  engine.ingest(cam_seen(1, 30'100, kBase));
  engine.ingest(cam_seen(1, 30'200, offset_position(kBase, 300, 0)));
  CHECK(engine.correlate(SimTime::from_ms(30'200)).size() == 1);
}

TEST_CASE("teleport groups across a pseudonym rotation") {
  // pseudonyms 1 and 2 belong to the same vehicle
  SupervisionEngine engine(SupervisionConfig{},
                           table_resolver({{1, 100}, {2, 100}}));
  engine.ingest(cam_seen(1, 0, kBase));
  engine.ingest(cam_seen(2, 100, offset_position(kBase, 200, 0)));
  auto alerts = engine.correlate(SimTime::from_ms(100));
  REQUIRE(alerts.size() == 1);
  CHECK(alerts[0].rule == RuleId::TELEPORT);
  CHECK(alerts[0].ec_id == 100);
  CHECK(alerts[0].pseudonyms == std::vector<uint64_t>{1, 2});

  // unlinked pseudonyms form separate groups: consecutive positions within
  // one pseudonym are benign, so no alert
  SupervisionEngine unlinked(SupervisionConfig{}, table_resolver({}));
  unlinked.ingest(cam_seen(5, 0, kBase));
  unlinked.ingest(cam_seen(6, 100, offset_position(kBase, 200, 0)));
  unlinked.ingest(cam_seen(5, 200, offset_position(kBase, 1, 0)));
  unlinked.ingest(cam_seen(6, 300, offset_position(kBase, 201, 0)));
  CHECK(unlinked.correlate(SimTime::from_ms(300)).empty());
}

TEST_CASE("flood fires above ten CAMs per second") {
  SupervisionEngine engine(SupervisionConfig{}, table_resolver({{1, 100}}));

  // 20 Hz sender
  bool alerted = false;
  for (uint64_t t = 0; t <= 2000; t += 50) {
    engine.ingest(cam_seen(1, t, kBase, 0));
    for (const auto& alert : engine.correlate(SimTime::from_ms(t))) {
      CHECK(alert.rule == RuleId::FLOOD);
      alerted = true;
    }
  }
  CHECK(alerted);

  // 10 Hz sender stays below the threshold
  SupervisionEngine calm(SupervisionConfig{}, table_resolver({{1, 100}}));
  for (uint64_t t = 0; t <= 5000; t += 100) {
    calm.ingest(cam_seen(1, t, kBase, 0));
    CHECK(calm.correlate(SimTime::from_ms(t)).empty());
  }
}

TEST_CASE("ghost fires after three consecutive unmatched in-zone CAMs") {
  SupervisionConfig cfg;
  cfg.sensor_zones = {Circle{kBase, 150}};
  SupervisionEngine engine(cfg, table_resolver({{1, 100}}));

  GeoPosition claim = offset_position(kBase, 20, 0);
  engine.ingest(cam_seen(1, 0, claim, 0));
  engine.ingest(cam_seen(1, 100, claim, 0));
  CHECK(engine.correlate(SimTime::from_ms(100)).empty());  // only 2 so far
  engine.ingest(cam_seen(1, 200, claim, 0));
  auto alerts = engine.correlate(SimTime::from_ms(200));
  REQUIRE(alerts.size() == 1);
  CHECK(alerts[0].rule == RuleId::GHOST);
  CHECK(alerts[0].evidence.size() == 3);

  // matched CAMs never count: detections within the gate suppress the rule
  SupervisionEngine matched(cfg, table_resolver({{1, 100}}));
  for (uint64_t t = 0; t <= 500; t += 100) {
    matched.ingest(cam_seen(1, t, claim, 0));
    matched.ingest(sensor_seen(t, offset_position(claim, 2, 1)));
    CHECK(matched.correlate(SimTime::from_ms(t)).empty());
  }

  // out-of-zone CAMs never count
  SupervisionEngine outside(cfg, table_resolver({{1, 100}}));
  GeoPosition far_away = offset_position(kBase, 5000, 0);
  for (uint64_t t = 0; t <= 500; t += 100) {
    outside.ingest(cam_seen(1, t, far_away, 0));
    CHECK(outside.correlate(SimTime::from_ms(t)).empty());
  }
}

TEST_CASE("rules can be disabled") {
  SupervisionConfig cfg;
  cfg.teleport_enabled = false;
  cfg.flood_enabled = false;
  SupervisionEngine engine(cfg, table_resolver({{1, 100}}));
  for (uint64_t t = 0; t <= 1000; t += 50)
    engine.ingest(cam_seen(1, t, offset_position(kBase, 300.0 * (t / 50.0), 0)));
  CHECK(engine.correlate(SimTime::from_ms(1000)).empty());
}

TEST_CASE("events older than the window are pruned") {
  SupervisionEngine engine(SupervisionConfig{}, table_resolver({{1, 100}}));
  engine.ingest(cam_seen(1, 0, kBase));
  engine.ingest(cam_seen(1, 100, offset_position(kBase, 500, 0)));
  // first correlate far in the future: pair is long gone
  CHECK(engine.correlate(SimTime::from_ms(60'000)).empty());
}
