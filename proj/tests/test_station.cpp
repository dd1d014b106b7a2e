#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "v2x/station.hpp"

using namespace v2x;

namespace {

GeoPosition deg(double lat, double lon) {
  auto p = GeoPosition::from_degrees(lat, lon);
  REQUIRE(p.ok());
  return *p;
}

// Straight route north at the given speed, long enough for duration_s.
// Padded 0.1% so micro-degree quantization of the end point never undershoots
// the nominal speed (0.5 udeg of latitude is ~0.056 m per 100 m).
Route straight_route(GeoPosition start, double speed_mps, double duration_s) {
  double north = speed_mps * duration_s * 1.001;
  auto end = offset_position(start, 0, north);
  auto route = Route::make({{SimTime{}, start},
                            {SimTime::from_ms(static_cast<uint64_t>(duration_s * 1000)),
                             end}});
  REQUIRE(route.ok());
  return *route;
}

// Rule reference: re-derives CAM emission times from the trigger definition
// using scalar positions, independent of Route/GeoPosition arithmetic.
std::vector<uint64_t> expected_cam_times_straight(double speed_mps, uint64_t end_ms,
                                                  uint64_t check_every_ms) {
  std::vector<uint64_t> out;
  bool first = true;
  uint64_t last_t = 0;
  double last_pos = 0;
  for (uint64_t t = 0; t <= end_ms; t += check_every_ms) {
    double pos = speed_mps * (static_cast<double>(t) / 1000.0);
    bool emit;
    if (first) {
      emit = true;
    } else if (t - last_t < 100) {
      emit = false;
    } else {
      emit = (pos - last_pos >= 4.0 - 1e-9) || (t - last_t >= 1000);
    }
    if (emit) {
      out.push_back(t);
      last_t = t;
      last_pos = pos;
      first = false;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("route interpolation") {
  GeoPosition start = deg(48.1, 11.6);
  Route route = straight_route(start, 10, 10);

  auto at0 = route.sample(SimTime{});
  CHECK(at0.pos == start);
  CHECK(at0.speed_mps == doctest::Approx(10).epsilon(1e-3));
  CHECK(at0.heading_deg == doctest::Approx(0).epsilon(1e-6));

  auto mid = route.sample(SimTime::from_ms(5000));
  CHECK(distance_m(start, mid.pos) == doctest::Approx(50).epsilon(3e-3));

  auto past = route.sample(SimTime::from_ms(20'000));
  CHECK(past.speed_mps == 0);
  CHECK(distance_m(start, past.pos) == doctest::Approx(100).epsilon(3e-3));

  CHECK(!Route::make({{SimTime::from_ms(5), start}, {SimTime::from_ms(5), start}}).ok());
}

TEST_CASE("stationary vehicle emits exactly one CAM per second") {
  GeoPosition pos = deg(48.1, 11.6);
  VehicleState vehicle{StationId{7}, pos, 0, 0, Route{}};
  CamTriggerState state;
  std::vector<uint64_t> times;
  for (uint64_t t = 0; t <= 10'000; t += 100) {
    if (cam_trigger_step(vehicle, state, SimTime::from_ms(t)))
      times.push_back(t);
  }
  REQUIRE(times.size() == 11);
  for (size_t i = 1; i < times.size(); ++i) CHECK(times[i] - times[i - 1] == 1000);
}

TEST_CASE("straight line at 10 m/s for 10 s yields exactly 26 CAMs") {
  GeoPosition start = deg(48.1, 11.6);
  Route route = straight_route(start, 10, 10);
  VehicleState vehicle{StationId{7}, start, 0, 0, route};
  CamTriggerState state;

  std::vector<uint64_t> actual;
  for (uint64_t t = 0; t <= 10'000; t += 100) {
    auto sample = route.sample(SimTime::from_ms(t));
    vehicle.pos = sample.pos;
    vehicle.speed_mps = sample.speed_mps;
    vehicle.heading_deg = sample.heading_deg;
    if (cam_trigger_step(vehicle, state, SimTime::from_ms(t))) actual.push_back(t);
  }

  auto expected = expected_cam_times_straight(10, 10'000, 100);
  CHECK(expected.size() == 26);
  CHECK(actual == expected);
}

TEST_CASE("minimum interval gates even large jumps") {
  GeoPosition start = deg(48.1, 11.6);
  VehicleState vehicle{StationId{7}, start, 0, 0, Route{}};
  CamTriggerState state;
  CHECK(cam_trigger_step(vehicle, state, SimTime::from_ms(0)).has_value());
  vehicle.pos = offset_position(start, 5, 0);
  CHECK(!cam_trigger_step(vehicle, state, SimTime::from_ms(50)).has_value());
  CHECK(cam_trigger_step(vehicle, state, SimTime::from_ms(100)).has_value());
}

TEST_CASE("heading and speed deltas trigger") {
  GeoPosition pos = deg(48.1, 11.6);
  VehicleState vehicle{StationId{7}, pos, 10, 0, Route{}};
  CamTriggerState state;
  REQUIRE(cam_trigger_step(vehicle, state, SimTime::from_ms(0)).has_value());

  vehicle.heading_deg = 3.9;
  CHECK(!cam_trigger_step(vehicle, state, SimTime::from_ms(100)).has_value());
  vehicle.heading_deg = 4.0;
  CHECK(cam_trigger_step(vehicle, state, SimTime::from_ms(200)).has_value());

  vehicle.speed_mps = 10.4;
  CHECK(!cam_trigger_step(vehicle, state, SimTime::from_ms(300)).has_value());
  vehicle.speed_mps = 10.5;
  CHECK(cam_trigger_step(vehicle, state, SimTime::from_ms(400)).has_value());

  // heading delta wraps around 360
  vehicle.heading_deg = 358.0;
  CHECK(cam_trigger_step(vehicle, state, SimTime::from_ms(500)).has_value());
  vehicle.heading_deg = 1.0;  // 3 degrees across the wrap
  CHECK(!cam_trigger_step(vehicle, state, SimTime::from_ms(600)).has_value());
}

TEST_CASE("CAM inter-emission time stays within [100, 1000] ms") {
  Rng rng(31);
  GeoPosition start = deg(48.1, 11.6);
  for (int run = 0; run < 20; ++run) {
    VehicleState vehicle{StationId{7}, start, 0, 0, Route{}};
    CamTriggerState state;
    std::vector<uint64_t> times;
    GeoPosition pos = start;
    for (uint64_t t = 0; t <= 30'000; t += 100) {
      pos = offset_position(pos, rng.uniform(-3, 3), rng.uniform(-3, 3));
      vehicle.pos = pos;
      vehicle.speed_mps = rng.uniform(0, 30);
      vehicle.heading_deg = rng.uniform(0, 360);
      if (cam_trigger_step(vehicle, state, SimTime::from_ms(t))) times.push_back(t);
    }
    for (size_t i = 1; i < times.size(); ++i) {
      CHECK(times[i] - times[i - 1] >= 100);
      CHECK(times[i] - times[i - 1] <= 1000);
    }
  }
}

TEST_CASE("select_channels policies") {
  std::vector<ChannelEstimate> estimates = {
      {ChannelKind::g5(), 2, 0.95, true},
      {ChannelKind::cellular(SliceId::LOW_LATENCY), 10, 0.999, true},
  };

  auto any = select_channels(MsgKind::CAM, {100, 0.9, DeliveryPolicy::ANY_ONE},
                             estimates);
  REQUIRE(any.ok());
  REQUIRE(any->size() == 1);
  CHECK((*any)[0] == ChannelKind::g5());

  auto all = select_channels(MsgKind::DENM, {50, 0.99, DeliveryPolicy::ALL_MATCHING},
                             {{ChannelKind::g5(), 2, 0.995, true},
                              {ChannelKind::cellular(SliceId::LOW_LATENCY), 10, 0.999,
                               true}});
  REQUIRE(all.ok());
  REQUIRE(all->size() == 2);
  CHECK((*all)[0] == ChannelKind::g5());
  CHECK((*all)[1] == ChannelKind::cellular(SliceId::LOW_LATENCY));

  auto none = select_channels(MsgKind::CAM, {1, 0.9, DeliveryPolicy::ANY_ONE},
                              estimates);
  CHECK(none.code() == Errc::NO_CHANNEL_MEETS_QOS);

  // reliability bound filters G5 out
  auto reliable = select_channels(MsgKind::DENM, {50, 0.99, DeliveryPolicy::ALL_MATCHING},
                                  {{ChannelKind::g5(), 2, 0.95, true},
                                   {ChannelKind::cellular(SliceId::LOW_LATENCY), 10,
                                    0.999, true}});
  REQUIRE(reliable.ok());
  REQUIRE(reliable->size() == 1);
  CHECK((*reliable)[0].medium == ChannelKind::Medium::CELLULAR);

  // unavailable channels never qualify
  auto unavailable = select_channels(
      MsgKind::CAM, {100, 0.5, DeliveryPolicy::ANY_ONE},
      {{ChannelKind::g5(), 2, 0.95, false},
       {ChannelKind::cellular(SliceId::DEFAULT), 30, 0.99, true}});
  REQUIRE(unavailable.ok());
  CHECK((*unavailable)[0].medium == ChannelKind::Medium::CELLULAR);

  // tie-break on equal latency: G5 before cellular
  auto tie = select_channels(MsgKind::CAM, {100, 0.5, DeliveryPolicy::ANY_ONE},
                             {{ChannelKind::cellular(SliceId::LOW_LATENCY), 5, 0.9, true},
                              {ChannelKind::g5(), 5, 0.9, true}});
  REQUIRE(tie.ok());
  CHECK((*tie)[0] == ChannelKind::g5());
}

TEST_CASE("dedup suppresses within ttl and re-admits after") {
  DedupCache cache(10'000);
  MsgId id = MsgId::make(StationId{7}, 1);
  CHECK(cache.on_receive(id, SimTime::from_ms(0)) == ReceiveOutcome::DELIVERED_TO_APP);
  CHECK(cache.on_receive(id, SimTime::from_ms(5)) ==
        ReceiveOutcome::DUPLICATE_SUPPRESSED);
  CHECK(cache.on_receive(id, SimTime::from_ms(10'000)) ==
        ReceiveOutcome::DUPLICATE_SUPPRESSED);
  CHECK(cache.on_receive(id, SimTime::from_ms(10'001)) ==
        ReceiveOutcome::DELIVERED_TO_APP);
}

TEST_CASE("dedup delivers each msg id at most once across dual channels") {
  Rng rng(55);
  DedupCache cache(10'000);
  std::map<uint64_t, int> delivered;
  for (int i = 0; i < 1000; ++i) {
    MsgId id = MsgId::make(StationId{9}, static_cast<uint64_t>(i));
    SimTime t = SimTime::from_ms(static_cast<uint64_t>(i) * 5);
    bool g5 = rng.uniform() < 0.9;
    bool cell = rng.uniform() < 0.9;
    if (g5 && cache.on_receive(id, t) == ReceiveOutcome::DELIVERED_TO_APP)
      ++delivered[id.lo];
    if (cell && cache.on_receive(id, t.plus_ms(uint64_t{5})) ==
                    ReceiveOutcome::DELIVERED_TO_APP)
      ++delivered[id.lo];
  }
  CHECK(delivered.size() <= 1000);
  for (const auto& [lo, count] : delivered) CHECK(count == 1);
}

TEST_CASE("dedup eviction bounds the cache") {
  DedupCache cache(1000);
  for (int i = 0; i < 100; ++i)
    cache.on_receive(MsgId::make(StationId{1}, static_cast<uint64_t>(i)),
                     SimTime::from_ms(static_cast<uint64_t>(i)));
  CHECK(cache.size() == 100);
  cache.evict_expired(SimTime::from_ms(2000));
  CHECK(cache.size() == 0);
}
