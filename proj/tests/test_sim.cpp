#include <doctest.h>

#include <algorithm>

#include "test_util.hpp"
#include "v2x/sim.hpp"

using namespace v2x;

namespace {

GeoPosition deg(double lat, double lon) {
  auto p = GeoPosition::from_degrees(lat, lon);
  REQUIRE(p.ok());
  return *p;
}

Envelope cam_envelope(uint32_t sender, GeoPosition pos) {
  Cam cam = Cam::make(StationId{sender}, ItsTimestamp{0}, pos, 10, 0);
  return Envelope::make(MsgId::make(StationId{sender}, 0), StationId{sender},
                        ItsTimestamp{0}, cam);
}

}  // namespace

TEST_CASE("schedule is FIFO among equal times") {
  Simulator sim(1);
  std::vector<int> order;
  REQUIRE(sim.schedule(SimTime{}, [&] { order.push_back(1); }).ok());
  REQUIRE(sim.schedule(SimTime{}, [&] { order.push_back(2); }).ok());
  sim.run_until(SimTime::from_ms(1));
  CHECK(order == std::vector<int>{1, 2});
}

TEST_CASE("schedule rejects past times") {
  Simulator sim(1);
  sim.run_until(SimTime::from_ms(10));
  auto r = sim.schedule(SimTime::from_ms(9), [] {});
  CHECK(r.code() == Errc::TIME_IN_PAST);
  CHECK(sim.schedule(SimTime::from_ms(10), [] {}).ok());
}

TEST_CASE("10k random events execute in sorted (time, seq) order") {
  Simulator sim(3);
  Rng rng(3);
  struct Expected {
    uint64_t time_us;
    uint64_t seq;
  };
  std::vector<Expected> expected;
  std::vector<Expected> actual;
  for (int i = 0; i < 10'000; ++i) {
    SimTime t{rng.below(1'000'000)};
    auto handle = sim.schedule(t, [&actual, t, i] {
      actual.push_back({t.micros, static_cast<uint64_t>(i)});
    });
    REQUIRE(handle.ok());
    expected.push_back({t.micros, static_cast<uint64_t>(i)});
  }
  std::stable_sort(expected.begin(), expected.end(),
                   [](const Expected& a, const Expected& b) {
                     return a.time_us < b.time_us;
                   });
  sim.run_until(SimTime{1'000'000});
  REQUIRE(actual.size() == expected.size());
  for (size_t i = 0; i < actual.size(); ++i) {
    CHECK(actual[i].time_us == expected[i].time_us);
    CHECK(actual[i].seq == expected[i].seq);
  }
}

TEST_CASE("run_until on an empty queue just advances the clock") {
  Simulator sim(1);
  CHECK(sim.run_until(SimTime::from_ms(1000)) == 0);
  CHECK(sim.now() == SimTime::from_ms(1000));
}

TEST_CASE("split run_until is equivalent to a single run") {
  auto script = [](Simulator& sim, std::vector<uint64_t>& log) {
    for (uint64_t t : {5u, 1u, 9u, 3u, 7u})
      REQUIRE(sim.schedule(SimTime::from_ms(t),
                           [&log, &sim] { log.push_back(sim.now().micros); })
                  .ok());
  };
  Simulator one(9);
  std::vector<uint64_t> log_one;
  script(one, log_one);
  one.run_until(SimTime::from_ms(10));

  Simulator two(9);
  std::vector<uint64_t> log_two;
  script(two, log_two);
  two.run_until(SimTime::from_ms(4));
  two.run_until(SimTime::from_ms(10));

  CHECK(log_one == log_two);
  CHECK(log_one == std::vector<uint64_t>{1000, 3000, 5000, 7000, 9000});
}

TEST_CASE("same seed and script give hash-equal event logs") {
  auto run_once = [](uint64_t seed) {
    TraceLog trace;
    Simulator sim(seed, LinkModel::defaults(), &trace);
    GeoPosition center = deg(48.1, 11.6);
    sim.register_station(StationId{1}, center, true, true, {});
    sim.register_station(StationId{2}, offset_position(center, 100, 0), true, true, {});
    sim.register_station(StationId{3}, offset_position(center, 0, 200), true, true, {});
    for (int i = 0; i < 200; ++i) {
      sim.transmit_g5(center, cam_envelope(1, center));
      (void)sim.transmit_cellular(cam_envelope(1, center), SliceId::DEFAULT,
                                  CellEndpoint::MEC, StationId{2});
      sim.run_until(SimTime::from_ms(static_cast<uint64_t>(i + 1) * 10));
    }
    return trace.determinism_hash();
  };
  CHECK(run_once(42) == run_once(42));
  CHECK(run_once(42) != run_once(43));
}

TEST_CASE("g5 range cut-off is exact") {
  Simulator sim(5);
  GeoPosition center = deg(48.1, 11.6);
  int delivered = 0;
  sim.register_station(StationId{1}, center, true, false, {});
  // g5_range defaults to 500 m
  sim.register_station(StationId{2}, offset_position(center, 501, 0), true, false,
                       [&](const Envelope&, ChannelKind, SimTime) { ++delivered; });
  auto scheduled = sim.transmit_g5(center, cam_envelope(1, center));
  CHECK(scheduled.empty());
  sim.run_until(SimTime::from_ms(100));
  CHECK(delivered == 0);
}

TEST_CASE("g5 with zero loss reaches every in-range station") {
  LinkModel link = LinkModel::defaults();
  link.g5_loss = 0;
  Simulator sim(5, link);
  GeoPosition center = deg(48.1, 11.6);
  int delivered = 0;
  auto on_rx = [&](const Envelope&, ChannelKind ch, SimTime) {
    CHECK(ch.medium == ChannelKind::Medium::ITS_G5);
    ++delivered;
  };
  sim.register_station(StationId{1}, center, true, false, {});
  sim.register_station(StationId{2}, offset_position(center, 100, 0), true, false, on_rx);
  sim.register_station(StationId{3}, offset_position(center, 0, -300), true, false, on_rx);
  sim.register_station(StationId{4}, offset_position(center, 499, 0), true, false, on_rx);
  sim.register_station(StationId{5}, offset_position(center, 0, 9000), true, false, on_rx);
  auto scheduled = sim.transmit_g5(center, cam_envelope(1, center));
  CHECK(scheduled.size() == 3);
  sim.run_until(SimTime::from_ms(100));
  CHECK(delivered == 3);
}

TEST_CASE("g5 delivery ratio matches the loss model") {
  LinkModel link = LinkModel::defaults();
  link.g5_loss = 0.05;
  Simulator sim(1234, link);
  GeoPosition center = deg(48.1, 11.6);
  int delivered = 0;
  sim.register_station(StationId{1}, center, true, false, {});
  sim.register_station(StationId{2}, offset_position(center, 50, 0), true, false,
                       [&](const Envelope&, ChannelKind, SimTime) { ++delivered; });
  const int trials = 10'000;
  for (int i = 0; i < trials; ++i) sim.transmit_g5(center, cam_envelope(1, center));
  sim.run_until(SimTime::from_ms(100));
  double ratio = static_cast<double>(delivered) / trials;
  // binomial: sd = sqrt(p(1-p)/n) ~ 0.0022, bound is ~4.6 sd
  CHECK(ratio > 0.94);
  CHECK(ratio < 0.96);
}

TEST_CASE("g5 deliveries are delayed by the processing delay") {
  LinkModel link = LinkModel::defaults();
  link.g5_loss = 0;
  Simulator sim(6, link);
  GeoPosition center = deg(48.1, 11.6);
  std::vector<uint64_t> times;
  sim.register_station(StationId{1}, center, true, false, {});
  sim.register_station(StationId{2}, offset_position(center, 10, 0), true, false,
                       [&](const Envelope&, ChannelKind, SimTime t) {
                         times.push_back(t.micros);
                       });
  sim.run_until(SimTime::from_ms(50));
  sim.transmit_g5(center, cam_envelope(1, center));
  sim.run_until(SimTime::from_ms(100));
  REQUIRE(times.size() == 1);
  CHECK(times[0] == 52'000);  // 50 ms + 2 ms proc delay
}

TEST_CASE("cellular degenerate distribution is exact") {
  LinkModel link = LinkModel::defaults();
  link.slices[SliceId::LOW_LATENCY] = {10, 0, 1, 0};
  Simulator sim(7, link);
  GeoPosition center = deg(48.1, 11.6);
  std::vector<uint64_t> times;
  sim.register_station(StationId{1}, center, false, true,
                       [&](const Envelope&, ChannelKind ch, SimTime t) {
                         CHECK(ch.medium == ChannelKind::Medium::CELLULAR);
                         times.push_back(t.micros);
                       });
  auto outcome = sim.transmit_cellular(cam_envelope(2, center), SliceId::LOW_LATENCY,
                                       CellEndpoint::MEC, StationId{1});
  REQUIRE(outcome.ok());
  CHECK(outcome->delivered);
  CHECK(outcome->latency_ms == 10.0);
  sim.run_until(SimTime::from_ms(100));
  REQUIRE(times.size() == 1);
  CHECK(times[0] == 10'000);

  // CLOUD adds cloud_extra on top of the sampled value
  auto cloud = sim.transmit_cellular(cam_envelope(2, center), SliceId::LOW_LATENCY,
                                     CellEndpoint::CLOUD, StationId{1});
  REQUIRE(cloud.ok());
  CHECK(cloud->latency_ms == 50.0);
}

TEST_CASE("cellular requires an attached destination") {
  Simulator sim(8);
  GeoPosition center = deg(48.1, 11.6);
  sim.register_station(StationId{1}, center, true, false, {});
  auto r = sim.transmit_cellular(cam_envelope(2, center), SliceId::DEFAULT,
                                 CellEndpoint::MEC, StationId{1});
  CHECK(r.code() == Errc::DEST_NOT_ATTACHED);
  auto missing = sim.transmit_cellular(cam_envelope(2, center), SliceId::DEFAULT,
                                       CellEndpoint::MEC, StationId{99});
  CHECK(missing.code() == Errc::DEST_NOT_ATTACHED);
}

TEST_CASE("cellular latency statistics over 10k sends") {
  LinkModel link = LinkModel::defaults();
  link.slices[SliceId::LOW_LATENCY] = {10, 2, 1, 0};
  Simulator sim(2024, link);
  GeoPosition center = deg(48.1, 11.6);
  sim.register_station(StationId{1}, center, false, true, {});

  std::vector<double> samples;
  for (int i = 0; i < 10'000; ++i) {
    auto outcome = sim.transmit_cellular(cam_envelope(2, center), SliceId::LOW_LATENCY,
                                         CellEndpoint::MEC, StationId{1});
    REQUIRE(outcome.ok());
    samples.push_back(outcome->latency_ms);
    CHECK(outcome->latency_ms >= 1.0);  // causality floor
  }
  double mean = 0;
  for (double s : samples) mean += s;
  mean /= samples.size();
  CHECK(std::fabs(mean - 10.0) < 0.1);

  std::sort(samples.begin(), samples.end());
  double p99 = samples[static_cast<size_t>(std::ceil(0.99 * samples.size())) - 1];
  CHECK(p99 <= 50.0);
}

TEST_CASE("net trace records carry the delivery outcome") {
  TraceLog trace;
  LinkModel link = LinkModel::defaults();
  link.g5_loss = 0;
  Simulator sim(11, link, &trace);
  GeoPosition center = deg(48.1, 11.6);
  sim.register_station(StationId{1}, center, true, false, {});
  sim.register_station(StationId{2}, offset_position(center, 10, 0), true, false, {});
  sim.transmit_g5(center, cam_envelope(1, center));
  sim.run_until(SimTime::from_ms(10));
  auto parsed = trace.parsed();
  REQUIRE(parsed.size() == 1);
  CHECK(parsed[0]["type"] == "net");
  CHECK(parsed[0]["channel"] == "ITS_G5");
  CHECK(parsed[0]["outcome"] == "DELIVERED");
  CHECK(parsed[0]["dest"] == 2);
  CHECK(parsed[0]["latency_us"] == 2000);
}
