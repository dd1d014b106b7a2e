#include <doctest.h>

#include "test_util.hpp"
#include "v2x/runner.hpp"
#include "v2x/scenario.hpp"

using namespace v2x;
using nlohmann::json;

namespace {

Scenario parse_or_die(const json& doc) {
  auto load = parse_scenario(doc);
  for (const auto& d : load.diagnostics) {
    CAPTURE(d.path);
    CAPTURE(d.message);
    CHECK(false);
  }
  REQUIRE(load.ok());
  return *load.scenario;
}

json base_doc() {
  return json::parse(R"({
    "name": "runner-test",
    "duration_s": 5,
    "seed": 3,
    "mecs": [
      {"id": 1, "station": 60001,
       "center": {"lat": 48.10, "lon": 11.60},
       "region_radius_m": 3000,
       "tiles": [{"x_min": 8717, "x_max": 8721, "y_min": 12568, "y_max": 12572}]}
    ],
    "link": {
      "g5_loss": 0.0,
      "slices": {
        "LOW_LATENCY": {"latency_mean_ms": 10, "latency_std_ms": 2, "latency_min_ms": 1, "loss": 0.0},
        "DEFAULT": {"latency_mean_ms": 30, "latency_std_ms": 10, "latency_min_ms": 5, "loss": 0.0}
      }
    },
    "qos": {"CAM": {"max_latency_ms": 100, "min_reliability": 0.9, "policy": "ALL_MATCHING"}}
  })");
}

json two_vehicle_doc() {
  json doc = base_doc();
  doc["vehicles"] = json::array(
      {json{{"station", 101},
            {"route", json::array({json{{"t_ms", 0}, {"lat", 48.0995}, {"lon", 11.5995}},
                                   json{{"t_ms", 5000}, {"lat", 48.1000}, {"lon", 11.5995}}})},
            {"channels", json::array({"ITS_G5", "CELLULAR/LOW_LATENCY"})}},
       json{{"station", 102},
            {"route", json::array({json{{"t_ms", 0}, {"lat", 48.0996}, {"lon", 11.5996}}})},
            {"channels", json::array({"ITS_G5", "CELLULAR/LOW_LATENCY"})}}});
  return doc;
}

}  // namespace

TEST_CASE("empty scenario runs to all-zero counters and exit 0") {
  json doc = json::parse(R"({"name": "empty", "duration_s": 1, "seed": 1})");
  Scenario sc = parse_or_die(doc);
  RunResult result = run_scenario(sc);
  CHECK(result.exit_code == 0);
  CHECK(result.summary["counts"]["CAM"] == 0);
  CHECK(result.summary["counts"]["DENM"] == 0);
  CHECK(result.summary["counts"]["CPM"] == 0);
  CHECK(result.summary["counts"]["forwards"] == 0);
  CHECK(result.summary["app"]["delivered"] == 0);
  CHECK(result.summary["audit"]["violations"] == 0);
}

TEST_CASE("same scenario and seed produce byte-identical summaries") {
  Scenario sc = parse_or_die(two_vehicle_doc());
  RunResult a = run_scenario(sc);
  RunResult b = run_scenario(sc);
  CHECK(a.summary.dump() == b.summary.dump());
  CHECK(a.trace.determinism_hash() == b.trace.determinism_hash());
  CHECK(a.trace.lines() == b.trace.lines());

  RunOptions other_seed;
  other_seed.seed = 999;
  RunResult c = run_scenario(sc, other_seed);
  CHECK(a.summary["determinism_hash"] != c.summary["determinism_hash"]);
}

TEST_CASE("two vehicles exchange CAMs over G5 and through the MEC") {
  Scenario sc = parse_or_die(two_vehicle_doc());
  RunResult result = run_scenario(sc);
  CHECK(result.exit_code == 0);

  // both vehicles emit CAMs; the moving one more often than 1 Hz
  CHECK(result.summary["counts"]["CAM"].get<uint64_t>() >= 12);
  // G5 delivered at least the same CAMs cross-wise, lossless
  CHECK(result.summary["channels"]["ITS_G5"]["delivered"].get<uint64_t>() > 0);
  CHECK(result.summary["channels"]["ITS_G5"]["delivery_ratio"].get<double>() == 1.0);
  // app layer saw deliveries and suppressed the cellular duplicates
  CHECK(result.summary["app"]["delivered"].get<uint64_t>() > 0);
  CHECK(result.summary["app"]["duplicates"].get<uint64_t>() > 0);
  // the MEC forwarded (both vehicles are in each other's proximity)
  CHECK(result.summary["counts"]["forwards"].get<uint64_t>() > 0);
  CHECK(result.summary["audit"]["violations"] == 0);

  // every forwarded CAM respected the deliver-once contract per station
  std::map<std::string, std::map<uint32_t, int>> app_seen;
  for (const auto& line : result.trace.parsed()) {
    if (line.value("type", "") != "app") continue;
    if (line["outcome"] != "DELIVERED") continue;
    ++app_seen[line["msg_id"].get<std::string>()][line["station"].get<uint32_t>()];
  }
  for (const auto& [msg, per_station] : app_seen)
    for (const auto& [station, count] : per_station) CHECK(count == 1);
}

TEST_CASE("security disabled still runs the pipeline") {
  json doc = two_vehicle_doc();
  doc["security"] = {{"enabled", false}};
  Scenario sc = parse_or_die(doc);
  RunResult result = run_scenario(sc);
  CHECK(result.exit_code == 0);
  CHECK(!result.pki.has_value());
  CHECK(result.summary["security"]["enabled"] == false);
  CHECK(result.summary["counts"]["CAM"].get<uint64_t>() > 0);
  CHECK(result.summary["counts"]["verify_fails"] == 0);
}

TEST_CASE("duration and seed overrides are applied") {
  Scenario sc = parse_or_die(two_vehicle_doc());
  RunOptions options;
  options.duration_s = 1.0;
  options.seed = 42;
  RunResult result = run_scenario(sc, options);
  CHECK(result.summary["duration_s"] == 1.0);
  CHECK(result.summary["seed"] == 42);
  CHECK(result.summary["counts"]["CAM"].get<uint64_t>() < 12);
}
