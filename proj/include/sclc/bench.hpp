#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sclc/tensor.hpp"

namespace sclc {

enum class BenchKind { SpatialConv, SpectralConv, MaxPool, SpectralPool };
const char* bench_kind_name(BenchKind k);

struct TimingRow {
  std::string kind;
  int side = 0;
  int kernel = 0;
  int reps = 0;
  double median_ms = 0.0;
  double mad_ms = 0.0;  // median absolute deviation
  bool skipped = false; // out of memory at this size
};
using TimingTable = std::vector<TimingRow>;

// Wall-clock medians over `reps` runs after 3 discarded warmups, single
// threaded, inputs random with a fixed seed. Spectral conv is timed with its
// kernel spectra precomputed (they are static during inference);
// include_transforms adds the input FFT/iFFT pair.
TimingTable time_layer(BenchKind kind, const std::vector<int>& side_lengths,
                       int kernel_size, int reps, bool include_transforms = false);

// Least-squares slope of log(median_ms) vs log(side^2) over the rows of the
// given kind. Throws ConfigError with fewer than 4 usable rows.
double fit_loglog_slope(const TimingTable& table, const std::string& kind);

// Smallest shared side length where the spectral median beats the spatial
// one; nullopt if it never does. Throws ConfigError on disjoint size grids.
std::optional<int> crossover_size(const TimingTable& spatial,
                                  const TimingTable& spectral);

struct LatencyModel {
  double payload_bytes = 0.0;
  double link_rate_bits_per_s = 0.0;
  double backend_ms = 0.0;
  double optical_ms = 0.0;
};

struct LatencyBreakdown {
  double optical_ms = 0.0;
  double transduction_ms = 0.0;
  double backend_ms = 0.0;
  double total_ms = 0.0;
};

// total = optical + payload_bytes*8/link_rate*1000 + backend, bit-exactly.
LatencyBreakdown latency_estimate(const LatencyModel& m);

void write_timing_csv(const TimingTable& table, std::ostream& out);
void write_timing_csv(const TimingTable& table, const std::string& path);

// Markdown summary: per-kind fitted slopes plus the crossover side.
std::string bench_report_markdown(const TimingTable& spatial,
                                  const TimingTable& spectral);

}  // namespace sclc
