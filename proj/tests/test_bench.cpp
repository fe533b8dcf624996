#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sclc/bench.hpp"

using namespace sclc;

namespace {

TimingTable synthetic_table(const std::string& kind,
                            const std::vector<int>& sides,
                            double (*law)(double hw)) {
  TimingTable t;
  for (int s : sides) {
    const double hw = static_cast<double>(s) * s;
    t.push_back({kind, s, 3, 5, law(hw), 0.0, false});
  }
  return t;
}

}  // namespace

TEST_CASE("time_layer harness contract") {
  TimingTable t = time_layer(BenchKind::MaxPool, {16}, 3, 5);
  REQUIRE(t.size() == 1);
  CHECK(t[0].kind == "max_pool");
  CHECK(t[0].side == 16);
  CHECK(t[0].reps == 5);
  CHECK(t[0].median_ms >= 0.0);
  CHECK(t[0].mad_ms >= 0.0);
  CHECK_FALSE(t[0].skipped);

  CHECK_THROWS_AS(time_layer(BenchKind::MaxPool, {16}, 3, 4), ConfigError);
  CHECK_THROWS_AS(time_layer(BenchKind::MaxPool, {17}, 3, 5), ConfigError);
}

TEST_CASE("time_layer runs every kind") {
  for (BenchKind k : {BenchKind::SpatialConv, BenchKind::SpectralConv,
                      BenchKind::MaxPool, BenchKind::SpectralPool}) {
    TimingTable t = time_layer(k, {8, 16}, 3, 5);
    REQUIRE(t.size() == 2);
    for (const auto& r : t) CHECK_FALSE(r.skipped);
  }
  // transform-inclusive variant also runs
  TimingTable t = time_layer(BenchKind::SpectralConv, {16}, 3, 5, true);
  CHECK_FALSE(t[0].skipped);
}

TEST_CASE("slope fitting recovers synthetic laws") {
  const std::vector<int> sides{64, 128, 256, 512, 1024};
  SUBCASE("linear law gives slope 1") {
    TimingTable t = synthetic_table("x", sides, [](double hw) { return 2e-6 * hw; });
    CHECK(std::abs(fit_loglog_slope(t, "x") - 1.0) < 1e-6);
  }
  SUBCASE("HW log HW law gives slope slightly above 1") {
    TimingTable t = synthetic_table(
        "x", sides, [](double hw) { return 1e-7 * hw * std::log(hw); });
    const double slope = fit_loglog_slope(t, "x");
    CHECK(slope > 1.0);
    CHECK(slope < 1.25);
  }
  SUBCASE("quadratic law gives slope 2") {
    TimingTable t = synthetic_table("x", sides, [](double hw) { return 1e-9 * hw * hw; });
    CHECK(std::abs(fit_loglog_slope(t, "x") - 2.0) < 1e-6);
  }
  SUBCASE("rows of other kinds are ignored") {
    TimingTable t = synthetic_table("x", sides, [](double hw) { return hw; });
    TimingTable noise = synthetic_table("y", sides, [](double) { return 1.0; });
    t.insert(t.end(), noise.begin(), noise.end());
    CHECK(std::abs(fit_loglog_slope(t, "x") - 1.0) < 1e-6);
  }
  SUBCASE("too few rows") {
    TimingTable t = synthetic_table("x", {64, 128, 256}, [](double hw) { return hw; });
    CHECK_THROWS_AS(fit_loglog_slope(t, "x"), ConfigError);
  }
}

TEST_CASE("crossover detection") {
  const std::vector<int> sides{64, 128, 256};
  TimingTable spatial = synthetic_table("spatial_conv", sides,
                                        [](double hw) { return hw; });
  SUBCASE("spectral always faster -> smallest size") {
    TimingTable spectral = synthetic_table("spectral_conv", sides,
                                           [](double hw) { return hw / 2; });
    CHECK(crossover_size(spatial, spectral) == 64);
  }
  SUBCASE("spectral never faster -> none") {
    TimingTable spectral = synthetic_table("spectral_conv", sides,
                                           [](double hw) { return hw * 2; });
    CHECK_FALSE(crossover_size(spatial, spectral).has_value());
  }
  SUBCASE("crossover in the middle") {
    TimingTable spectral = synthetic_table(
        "spectral_conv", sides, [](double hw) { return 150.0 * std::sqrt(hw); });
    // hw=4096: 150*64=9600 > 4096; hw=16384: 150*128=19200 > 16384;
    // hw=65536: 150*256=38400 < 65536
    CHECK(crossover_size(spatial, spectral) == 256);
  }
  SUBCASE("disjoint grids") {
    TimingTable spectral = synthetic_table("spectral_conv", {32, 512},
                                           [](double hw) { return hw; });
    CHECK_THROWS_AS(crossover_size(spatial, spectral), ConfigError);
  }
}

TEST_CASE("latency model") {
  SUBCASE("reference operating point") {
    LatencyModel m{100000.0, 2.5e9, 0.28, 0.0};
    const LatencyBreakdown b = latency_estimate(m);
    CHECK(b.transduction_ms == doctest::Approx(0.32));
    CHECK(b.total_ms == doctest::Approx(0.60));
    // matches the published per-image figure within 0.02 ms
    CHECK(std::abs(b.total_ms - 0.61) <= 0.02);
  }
  SUBCASE("zero payload and backend") {
    LatencyModel m{0.0, 1e9, 0.0, 0.0};
    CHECK(latency_estimate(m).total_ms == 0.0);
  }
  SUBCASE("doubling the link rate halves transduction exactly") {
    LatencyModel m{12345.0, 1e9, 0.5, 0.1};
    LatencyModel m2 = m;
    m2.link_rate_bits_per_s *= 2.0;
    CHECK(latency_estimate(m2).transduction_ms ==
          latency_estimate(m).transduction_ms / 2.0);
  }
  SUBCASE("breakdown sums bit-exactly") {
    LatencyModel m{77777.0, 3.3e9, 0.137, 0.041};
    const LatencyBreakdown b = latency_estimate(m);
    CHECK(b.total_ms == b.optical_ms + b.transduction_ms + b.backend_ms);
  }
  SUBCASE("invalid models") {
    CHECK_THROWS_AS(latency_estimate(LatencyModel{1.0, 0.0, 0.0, 0.0}),
                    ConfigError);
    CHECK_THROWS_AS(latency_estimate(LatencyModel{-1.0, 1.0, 0.0, 0.0}),
                    ConfigError);
  }
}

TEST_CASE("csv and markdown emission") {
  TimingTable t = synthetic_table("spatial_conv", {64, 128, 256, 512},
                                  [](double hw) { return 1e-3 * hw; });
  std::ostringstream csv;
  write_timing_csv(t, csv);
  CHECK(csv.str().rfind("kind,side,kernel,reps,median_ms,mad_ms\n", 0) == 0);
  CHECK(csv.str().find("spatial_conv,64,3,5,") != std::string::npos);

  TimingTable sp = synthetic_table("spectral_conv", {64, 128, 256, 512},
                                   [](double hw) { return 1e-4 * hw; });
  const std::string md = bench_report_markdown(t, sp);
  CHECK(md.find("spatial_conv") != std::string::npos);
  CHECK(md.find("spectral_conv") != std::string::npos);
  CHECK(md.find("side 64") != std::string::npos);

  // skipped rows render as 'skipped'
  t[1].skipped = true;
  std::ostringstream csv2;
  write_timing_csv(t, csv2);
  CHECK(csv2.str().find("skipped,skipped") != std::string::npos);
}
