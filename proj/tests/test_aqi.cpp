#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <map>

#include "airmon/aqi.hpp"
#include "airmon/rng.hpp"

using namespace airmon;

namespace {

// Independent brute-force oracle for the PM2.5 sub-index. Its own copy of
// the table, in tenths of a ug/m3, scanned linearly; the interpolation is
// exact int64 rational arithmetic with round-half-up. Deliberately shares
// no code or representation with compute_sub_index.
struct OracleRow {
  std::int64_t lo10, hi10;
  std::int64_t i_lo, i_hi;
};

constexpr OracleRow kPm25Oracle[] = {
    {0, 120, 0, 50},      {121, 354, 51, 100},   {355, 554, 101, 150},
    {555, 1504, 151, 200}, {1505, 2504, 201, 300}, {2505, 3504, 301, 400},
    {3505, 5004, 401, 500},
};

int pm25_oracle(std::int64_t c10) {
  for (const auto& row : kPm25Oracle) {
    if (c10 > row.hi10) continue;
    const std::int64_t num = (row.i_hi - row.i_lo) * (c10 - row.lo10);
    const std::int64_t den = row.hi10 - row.lo10;
    // floor((num/den) + 1/2) over non-negative rationals
    return static_cast<int>(row.i_lo + (2 * num + den) / (2 * den));
  }
  return -1;
}

const BreakpointTable& pm25() { return default_breakpoint_tables().table(Pollutant::pm2_5); }
const BreakpointTable& pm10() { return default_breakpoint_tables().table(Pollutant::pm10); }
const BreakpointTable& co() { return default_breakpoint_tables().table(Pollutant::co); }

} // namespace

TEST_CASE("sub-index: anchored values") {
  // 55.5 ug/m3 is the lower edge of the 151..200 band.
  CHECK(compute_sub_index(pm25(), 55.5) == 151);
  CHECK(compute_sub_index(pm25(), 150.4) == 200);
  CHECK(compute_sub_index(pm25(), 0.0) == 0);
  // Hand-evaluated: (200-151)/(150.4-55.5)*(100-55.5)+151 = 173.97...
  CHECK(compute_sub_index(pm25(), 100.0) == 174);
  // (100-51)/(9.4-4.5)*(5.68-4.5)+51 = 62.8
  CHECK(compute_sub_index(co(), 5.68) == 63);
  CHECK(compute_sub_index(pm10(), 108.0) == 77);
}

TEST_CASE("sub-index: oracle equivalence over the full PM2.5 sweep") {
  for (std::int64_t c10 = 0; c10 <= 5004; ++c10) {
    const double conc = static_cast<double>(c10) / 10.0;
    REQUIRE(compute_sub_index(pm25(), conc) == pm25_oracle(c10));
  }
}

TEST_CASE("sub-index: boundary exactness on every row of every table") {
  for (Pollutant p : kPollutants) {
    const auto& table = default_breakpoint_tables().table(p);
    for (const auto& row : table.rows()) {
      CHECK(compute_sub_index(table, row.c_low) == row.i_low);
      CHECK(compute_sub_index(table, row.c_high) == row.i_high);
    }
  }
}

TEST_CASE("sub-index: monotone and range-contained") {
  SplitMix64 rng(2024);
  for (int i = 0; i < 5000; ++i) {
    const double a = static_cast<double>(rng.range(0, 5004)) / 10.0;
    const double b = static_cast<double>(rng.range(0, 5004)) / 10.0;
    const int ia = compute_sub_index(pm25(), a);
    const int ib = compute_sub_index(pm25(), b);
    if (a <= b) REQUIRE(ia <= ib);
    else REQUIRE(ia >= ib);
  }
  for (const auto& row : pm25().rows()) {
    const double mid = (row.c_low + row.c_high) / 2.0;
    const int v = compute_sub_index(pm25(), pm25().truncate(mid));
    REQUIRE(v >= row.i_low);
    REQUIRE(v <= row.i_high);
  }
}

TEST_CASE("sub-index: off-scale handling") {
  REQUIRE_THROWS_AS(compute_sub_index(pm25(), 500.5), OutOfRange);
  CHECK(compute_sub_index(pm25(), 500.5, true) == 500);
  CHECK(compute_sub_index(pm25(), 99999.0, true) == 500);
  REQUIRE_THROWS_AS(compute_sub_index(pm25(), -1.0), OutOfRange);
  REQUIRE_THROWS_AS(compute_sub_index(BreakpointTable{}, 1.0), NoTable);
}

TEST_CASE("sub-index: pollutant mismatch is rejected") {
  PollutantConcentration conc{Pollutant::co, 5.0};
  REQUIRE_THROWS_AS(compute_sub_index(pm25(), conc), OutOfRange);
  CHECK(compute_sub_index(co(), conc) == compute_sub_index(co(), 5.0));
}

TEST_CASE("categorize: bands") {
  CHECK(categorize(0) == AqiCategory::good);
  CHECK(categorize(50) == AqiCategory::good);
  CHECK(categorize(51) == AqiCategory::moderate);
  CHECK(categorize(100) == AqiCategory::moderate);
  CHECK(categorize(101) == AqiCategory::unhealthy_sensitive);
  CHECK(categorize(150) == AqiCategory::unhealthy_sensitive);
  CHECK(categorize(151) == AqiCategory::unhealthy);
  CHECK(categorize(193) == AqiCategory::unhealthy);
  CHECK(categorize(200) == AqiCategory::unhealthy);
  CHECK(categorize(201) == AqiCategory::very_unhealthy);
  CHECK(categorize(300) == AqiCategory::very_unhealthy);
  CHECK(categorize(301) == AqiCategory::hazardous);
  CHECK(categorize(500) == AqiCategory::hazardous);
  REQUIRE_THROWS_AS(categorize(-1), OutOfRange);
  REQUIRE_THROWS_AS(categorize(501), OutOfRange);
}

TEST_CASE("overall: max rule and tie-break") {
  {
    const auto r = compute_overall({{Pollutant::pm2_5, 151}, {Pollutant::pm10, 77}, {Pollutant::co, 63}});
    CHECK(r.overall == 151);
    CHECK(r.dominant == Pollutant::pm2_5);
    CHECK(r.category == AqiCategory::unhealthy);
  }
  {
    const auto r = compute_overall({{Pollutant::pm2_5, 0}, {Pollutant::pm10, 0}, {Pollutant::co, 0}});
    CHECK(r.overall == 0);
    CHECK(r.dominant == Pollutant::pm2_5);
    CHECK(r.category == AqiCategory::good);
  }
  {
    const auto r = compute_overall({{Pollutant::pm2_5, 174}, {Pollutant::pm10, 174}, {Pollutant::co, 10}});
    CHECK(r.overall == 174);
    CHECK(r.dominant == Pollutant::pm2_5);
  }
  {
    // co alone can dominate
    const auto r = compute_overall({{Pollutant::pm10, 20}, {Pollutant::co, 63}});
    CHECK(r.overall == 63);
    CHECK(r.dominant == Pollutant::co);
  }
  REQUIRE_THROWS_AS(compute_overall({}), EmptyInput);
}

TEST_CASE("overall: dominance property") {
  SplitMix64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    std::map<Pollutant, int> sub{
        {Pollutant::pm2_5, static_cast<int>(rng.range(0, 500))},
        {Pollutant::pm10, static_cast<int>(rng.range(0, 500))},
        {Pollutant::co, static_cast<int>(rng.range(0, 500))},
    };
    const auto r = compute_overall(sub);
    for (const auto& [p, v] : sub) REQUIRE(r.overall >= v);
    REQUIRE(sub.at(r.dominant) == r.overall);
    // removing a non-dominant pollutant leaves the overall unchanged
    for (Pollutant p : kPollutants) {
      if (p == r.dominant) continue;
      auto reduced = sub;
      reduced.erase(p);
      REQUIRE(compute_overall(reduced).overall == r.overall);
    }
  }
}

TEST_CASE("tables: embedded defaults carry the standard rows") {
  const auto& rows = pm25().rows();
  REQUIRE(rows.size() == 7);
  CHECK(rows[3].c_low == 55.5);
  CHECK(rows[3].c_high == 150.4);
  CHECK(rows[3].i_low == 151);
  CHECK(rows[3].i_high == 200);
  CHECK(pm25().precision() == 1);
  CHECK(pm10().precision() == 0);
  CHECK(co().precision() == 1);
  CHECK(pm25().max_concentration() == 500.4);
}

TEST_CASE("tables: truncation to table precision") {
  CHECK(co().truncate(5.27) == 5.2);
  CHECK(co().truncate(5.3) == 5.3);
  CHECK(co().truncate(5.68) == 5.6);
  CHECK(pm25().truncate(55.59) == 55.5);
  CHECK(pm10().truncate(54.9) == 54.0);
  CHECK(pm10().truncate(108.0) == 108.0);
  CHECK(pm25().truncate(-3.0) == 0.0);
}

TEST_CASE("tables: loader rejects bad configs") {
  // concentration gap 50 -> 60
  const char* gap = R"({
    "pm2_5": {"precision": 0, "rows": [[0, 50, 0, 50], [60, 100, 51, 100]]},
    "pm10": {"precision": 0, "rows": [[0, 54, 0, 50]]},
    "co": {"precision": 1, "rows": [[0.0, 4.4, 0, 50]]}
  })";
  REQUIRE_THROWS_AS(load_breakpoint_tables(gap), NonContiguousRows);
  REQUIRE_THROWS_WITH(load_breakpoint_tables(gap), Catch::Matchers::ContainsSubstring("PM2.5"));

  // index gap 50 -> 52
  const char* igap = R"({
    "pm2_5": {"precision": 0, "rows": [[0, 50, 0, 50], [51, 100, 52, 100]]},
    "pm10": {"precision": 0, "rows": [[0, 54, 0, 50]]},
    "co": {"precision": 1, "rows": [[0.0, 4.4, 0, 50]]}
  })";
  REQUIRE_THROWS_AS(load_breakpoint_tables(igap), NonContiguousRows);

  const char* no_co = R"({
    "pm2_5": {"precision": 1, "rows": [[0.0, 12.0, 0, 50]]},
    "pm10": {"precision": 0, "rows": [[0, 54, 0, 50]]}
  })";
  REQUIRE_THROWS_AS(load_breakpoint_tables(no_co), ConfigError);
  REQUIRE_THROWS_AS(load_breakpoint_tables("not json at all"), ConfigError);
  REQUIRE_THROWS_AS(load_breakpoint_tables("[1,2,3]"), ConfigError);
}

TEST_CASE("tables: custom table round-trips through the loader") {
  const char* text = R"({
    "pm2_5": {"precision": 1, "rows": [[0.0, 10.0, 0, 100], [10.1, 20.0, 101, 200]]},
    "pm10": {"precision": 0, "rows": [[0, 99, 0, 250]]},
    "co": {"precision": 1, "rows": [[0.0, 50.0, 0, 500]]}
  })";
  const auto set = load_breakpoint_tables(text);
  CHECK(compute_sub_index(set.table(Pollutant::pm2_5), 10.0) == 100);
  CHECK(compute_sub_index(set.table(Pollutant::pm2_5), 10.1) == 101);
  CHECK(compute_sub_index(set.table(Pollutant::co), 25.0) == 250);
}
