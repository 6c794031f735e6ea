#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "airmon/calibration.hpp"
#include "airmon/dht11.hpp"
#include "airmon/pms5003.hpp"
#include "airmon/simulator.hpp"

using namespace airmon;

namespace {

Scenario basic_scenario() {
  Scenario s;
  s.seed = 1;
  s.steps = {{3, 180, 108, 29, 62, 5.27}, {2, 209, 118, 29, 61, 5.03}};
  return s;
}

} // namespace

TEST_CASE("simulator: identical seed and scenario give identical octets") {
  auto s = basic_scenario();
  s.noise = {5, 5, 3, 3, 10};
  const Mq135Config cal{};
  const auto a = run_scenario(s, cal);
  const auto b = run_scenario(s, cal);
  CHECK(a.pms5003.flat() == b.pms5003.flat());
  CHECK(a.dht11.flat() == b.dht11.flat());
  CHECK(a.adc.flat() == b.adc.flat());

  auto s2 = s;
  s2.seed = 2;
  const auto c = run_scenario(s2, cal);
  CHECK(a.pms5003.flat() != c.pms5003.flat());
}

TEST_CASE("simulator: noise-free streams decode back to the scripted values") {
  const auto s = basic_scenario();
  const Mq135Config cal{};
  const auto streams = run_scenario(s, cal);
  REQUIRE(streams.pms5003.per_cycle.size() == 5);
  REQUIRE(streams.dht11.per_cycle.size() == 5);
  REQUIRE(streams.adc.per_cycle.size() == 5);

  for (int cycle = 1; cycle <= 5; ++cycle) {
    const auto& expect = cycle <= 3 ? s.steps[0] : s.steps[1];

    const auto& pms_bytes = streams.pms5003.per_cycle[cycle - 1];
    REQUIRE(pms_bytes.size() == kPmsFrameSize);
    const auto pf = pms5003_decode(pms_bytes);
    REQUIRE(pf.status == Pms5003Status::ok);
    CHECK(pf.frame.pm2_5_atm == static_cast<std::uint16_t>(expect.pm2_5));
    CHECK(pf.frame.pm10_atm == static_cast<std::uint16_t>(expect.pm10));
    CHECK(pf.frame.pm2_5_cf1 == pf.frame.pm2_5_atm);
    CHECK(pf.frame.counts_monotone());

    const auto& dht_bytes = streams.dht11.per_cycle[cycle - 1];
    REQUIRE(dht_bytes.size() == kDht11FrameSize);
    const auto df = dht11_decode(std::span<const std::uint8_t, 5>(dht_bytes.data(), 5));
    REQUIRE(df.status == Dht11Status::ok);
    CHECK(df.frame.temperature() == expect.temperature);
    CHECK(df.frame.humidity() == expect.humidity);

    const auto& adc_bytes = streams.adc.per_cycle[cycle - 1];
    REQUIRE(adc_bytes.size() == 2);
    const int adc = (adc_bytes[0] << 8) | adc_bytes[1];
    const auto rs = adc_to_rs(adc, cal);
    REQUIRE(rs.has_value());
    const double ppm = rs_to_ppm(*rs, cal);
    // within one quantization step of the scripted concentration
    const double step = std::abs(rs_to_ppm(*adc_to_rs(adc + 1, cal), cal) -
                                 rs_to_ppm(*adc_to_rs(adc - 1, cal), cal));
    CHECK(std::abs(ppm - expect.co_ppm) <= step);
  }
}

TEST_CASE("simulator: fault injection") {
  SECTION("corrupt-checksum breaks exactly that cycle") {
    auto s = basic_scenario();
    s.faults = {{2, FaultKind::corrupt_checksum, 0, FaultChannel::pms5003}};
    const auto streams = run_scenario(s, Mq135Config{});
    CHECK(pms5003_decode(streams.pms5003.per_cycle[0]).status == Pms5003Status::ok);
    CHECK(pms5003_decode(streams.pms5003.per_cycle[1]).status == Pms5003Status::bad_checksum);
    CHECK(pms5003_decode(streams.pms5003.per_cycle[2]).status == Pms5003Status::ok);
  }
  SECTION("garbage-burst prepends the requested octets") {
    auto s = basic_scenario();
    s.faults = {{3, FaultKind::garbage_burst, 7, FaultChannel::pms5003}};
    const auto streams = run_scenario(s, Mq135Config{});
    CHECK(streams.pms5003.per_cycle[2].size() == kPmsFrameSize + 7);
  }
  SECTION("silence empties whole cycles") {
    auto s = basic_scenario();
    s.faults = {{2, FaultKind::silence, 2, FaultChannel::all}};
    const auto streams = run_scenario(s, Mq135Config{});
    for (int idx : {1, 2}) {
      CHECK(streams.pms5003.per_cycle[idx].empty());
      CHECK(streams.dht11.per_cycle[idx].empty());
      CHECK(streams.adc.per_cycle[idx].empty());
    }
    CHECK_FALSE(streams.pms5003.per_cycle[0].empty());
    CHECK_FALSE(streams.pms5003.per_cycle[3].empty());
  }
  SECTION("truncate-frame halves the frame") {
    auto s = basic_scenario();
    s.faults = {{1, FaultKind::truncate_frame, 0, FaultChannel::pms5003}};
    const auto streams = run_scenario(s, Mq135Config{});
    CHECK(streams.pms5003.per_cycle[0].size() == kPmsFrameSize / 2);
  }
}

TEST_CASE("scenario: json round-trip") {
  auto s = basic_scenario();
  s.noise = {1, 2, 3, 4, 5};
  s.faults = {{2, FaultKind::garbage_burst, 9, FaultChannel::dht11},
              {4, FaultKind::silence, 1, FaultChannel::all}};
  const auto back = Scenario::from_json(s.to_json());
  CHECK(back.seed == s.seed);
  REQUIRE(back.steps.size() == s.steps.size());
  CHECK(back.steps[1].pm2_5 == 209);
  CHECK(back.noise.adc_counts == 5);
  REQUIRE(back.faults.size() == 2);
  CHECK(back.faults[0].kind == FaultKind::garbage_burst);
  CHECK(back.faults[0].count == 9);
  CHECK(back.faults[1].channel == FaultChannel::all);
}

TEST_CASE("scenario: invalid inputs are rejected") {
  CHECK_THROWS_AS(Scenario::from_json("{}"), InvalidScenario);
  CHECK_THROWS_AS(Scenario::from_json("{\"steps\": []}"), InvalidScenario);
  CHECK_THROWS_AS(Scenario::from_json("not json"), InvalidScenario);
  CHECK_THROWS_AS(Scenario::from_json(R"({"steps":[{"cycles":0}]})"), InvalidScenario);
  CHECK_THROWS_AS(
      Scenario::from_json(R"({"steps":[{"cycles":1}],"faults":[{"at_cycle":1,"kind":"garbage-burst"}]})"),
      InvalidScenario);
  CHECK_THROWS_AS(
      Scenario::from_json(R"({"steps":[{"cycles":1}],"faults":[{"at_cycle":1,"kind":"corrupt-checksum","channel":"adc"}]})"),
      InvalidScenario);
  CHECK_THROWS_AS(
      Scenario::from_json(R"({"steps":[{"cycles":1}],"faults":[{"at_cycle":1,"kind":"warp-core-breach"}]})"),
      InvalidScenario);
}

TEST_CASE("dump round-trip preserves per-cycle grouping") {
  auto s = basic_scenario();
  s.noise = {2, 2, 1, 1, 4};
  s.faults = {{2, FaultKind::silence, 1, FaultChannel::all}};
  const auto streams = run_scenario(s, Mq135Config{});

  std::stringstream ss;
  write_streams_dump(ss, streams);
  const auto records = read_dump(ss);
  REQUIRE(records.size() == 15); // 5 cycles x 3 channels

  const auto back = streams_from_dump(records);
  CHECK(back.pms5003.per_cycle == streams.pms5003.per_cycle);
  CHECK(back.dht11.per_cycle == streams.dht11.per_cycle);
  CHECK(back.adc.per_cycle == streams.adc.per_cycle);
}

TEST_CASE("replay: frames delivered in order, empty dump is clean") {
  std::stringstream ss;
  for (int i = 0; i < 5; ++i) {
    Pms5003Frame f;
    f.pm2_5_atm = static_cast<std::uint16_t>(i + 1);
    const auto bytes = pms5003_encode(f);
    write_dump_record(ss, ChannelKind::pms5003, bytes);
  }
  const auto streams = streams_from_dump(read_dump(ss));
  REQUIRE(streams.pms5003.per_cycle.size() == 5);
  for (int i = 0; i < 5; ++i) {
    const auto r = pms5003_decode(streams.pms5003.per_cycle[i]);
    REQUIRE(r.status == Pms5003Status::ok);
    CHECK(r.frame.pm2_5_atm == i + 1);
  }

  std::stringstream empty;
  const auto none = streams_from_dump(read_dump(empty));
  CHECK(none.pms5003.per_cycle.empty());
  CHECK(none.adc.per_cycle.empty());
}
