#include "sclc/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sclc/layers.hpp"
#include "sclc/rng.hpp"

namespace sclc {

const char* bench_kind_name(BenchKind k) {
  switch (k) {
    case BenchKind::SpatialConv: return "spatial_conv";
    case BenchKind::SpectralConv: return "spectral_conv";
    case BenchKind::MaxPool: return "max_pool";
    case BenchKind::SpectralPool: return "spectral_pool";
  }
  return "?";
}

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// keeps results observable so the timed calls cannot be elided
volatile double g_sink = 0.0;

RealTensor4 random_real_input(Shape4 sh, Rng& rng) {
  RealTensor4 t(sh);
  for (std::size_t i = 0; i < t.size(); ++i)
    t.data()[i] = rng.uniform(-1.0, 1.0);
  return t;
}

ComplexTensor4 random_complex_input(Shape4 sh, Rng& rng) {
  ComplexTensor4 t(sh);
  for (std::size_t i = 0; i < t.size(); ++i)
    t.data()[i] = cplx(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  return t;
}

}  // namespace

TimingTable time_layer(BenchKind kind, const std::vector<int>& side_lengths,
                       int kernel_size, int reps, bool include_transforms) {
  if (reps < 5) throw ConfigError("time_layer: reps must be >= 5");
  TimingTable table;
  for (int side : side_lengths) {
    if (side < 2 || (side & (side - 1)) != 0)
      throw ConfigError("time_layer: side lengths must be powers of two");
    TimingRow row{bench_kind_name(kind), side, kernel_size, reps, 0.0, 0.0, false};
    try {
      Rng rng(0xbe9c000u + static_cast<std::uint64_t>(side));
      const Shape4 sh{1, 1, side, side};
      RealTensor4 kernels(Shape4{1, 1, kernel_size, kernel_size});
      for (std::size_t i = 0; i < kernels.size(); ++i)
        kernels.data()[i] = rng.uniform(-1.0, 1.0);

      RealTensor4 x;
      ComplexTensor4 X;
      std::optional<SpectralConvLayer> spectral;
      if (kind == BenchKind::SpectralConv) {
        spectral.emplace(kernels, side, side);
        (void)spectral->spectra();  // kernel spectra are static at inference
        if (include_transforms) {
          x = random_real_input(sh, rng);
        } else {
          X = random_complex_input(sh, rng);
        }
      } else if (kind == BenchKind::SpectralPool && !include_transforms) {
        X = random_complex_input(sh, rng);
      } else {
        x = random_real_input(sh, rng);
      }

      auto run_once = [&] {
        switch (kind) {
          case BenchKind::SpatialConv:
            g_sink = spatial_conv_forward(kernels, x, ConvMode::ZeroPad)
                         .at(0, 0, 0, 0);
            break;
          case BenchKind::SpectralConv: {
            if (include_transforms) {
              g_sink = real_part(ifft2(spectral->forward(fft2(x))))
                           .at(0, 0, 0, 0);
            } else {
              g_sink = spectral->forward(X).at(0, 0, 0, 0).real();
            }
            break;
          }
          case BenchKind::MaxPool:
            g_sink = max_pool_forward(x, 2).out.at(0, 0, 0, 0);
            break;
          case BenchKind::SpectralPool: {
            SpectralPoolLayer pool{side / 2, side / 2};
            if (include_transforms) {
              g_sink = spectral_pool_forward(pool, x).at(0, 0, 0, 0);
            } else {
              g_sink = spectral_pool_forward(pool, X).at(0, 0, 0, 0).real();
            }
            break;
          }
        }
      };

      for (int w = 0; w < 3; ++w) run_once();
      std::vector<double> samples(reps);
      for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        run_once();
        samples[r] = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
      }
      row.median_ms = median_of(samples);
      std::vector<double> dev(reps);
      for (int r = 0; r < reps; ++r) dev[r] = std::abs(samples[r] - row.median_ms);
      row.mad_ms = median_of(dev);
    } catch (const std::bad_alloc&) {
      row.skipped = true;
    }
    table.push_back(row);
  }
  return table;
}

double fit_loglog_slope(const TimingTable& table, const std::string& kind) {
  std::vector<double> xs, ys;
  for (const auto& r : table) {
    if (r.kind != kind || r.skipped || r.median_ms <= 0.0) continue;
    xs.push_back(std::log(static_cast<double>(r.side) * r.side));
    ys.push_back(std::log(r.median_ms));
  }
  if (xs.size() < 4)
    throw ConfigError("fit_loglog_slope: need >= 4 usable rows for kind '" +
                      kind + "', have " + std::to_string(xs.size()));
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
  mx /= xs.size();
  my /= ys.size();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  return num / den;
}

std::optional<int> crossover_size(const TimingTable& spatial,
                                  const TimingTable& spectral) {
  std::optional<int> best;
  bool shared = false;
  for (const auto& a : spatial) {
    for (const auto& b : spectral) {
      if (a.side != b.side || a.skipped || b.skipped) continue;
      shared = true;
      if (b.median_ms < a.median_ms && (!best || a.side < *best)) best = a.side;
    }
  }
  if (!shared) throw ConfigError("crossover_size: size grids are disjoint");
  return best;
}

LatencyBreakdown latency_estimate(const LatencyModel& m) {
  if (!(m.link_rate_bits_per_s > 0.0))
    throw ConfigError("latency_estimate: link rate must be > 0");
  if (m.payload_bytes < 0.0 || m.backend_ms < 0.0 || m.optical_ms < 0.0)
    throw ConfigError("latency_estimate: negative model field");
  LatencyBreakdown b;
  b.optical_ms = m.optical_ms;
  b.transduction_ms = m.payload_bytes * 8.0 / m.link_rate_bits_per_s * 1000.0;
  b.backend_ms = m.backend_ms;
  b.total_ms = b.optical_ms + b.transduction_ms + b.backend_ms;
  return b;
}

void write_timing_csv(const TimingTable& table, std::ostream& out) {
  out << "kind,side,kernel,reps,median_ms,mad_ms\n";
  out.precision(9);
  for (const auto& r : table) {
    out << r.kind << ',' << r.side << ',' << r.kernel << ',' << r.reps << ',';
    if (r.skipped) {
      out << "skipped,skipped\n";
    } else {
      out << r.median_ms << ',' << r.mad_ms << '\n';
    }
  }
}

void write_timing_csv(const TimingTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  write_timing_csv(table, out);
}

std::string bench_report_markdown(const TimingTable& spatial,
                                  const TimingTable& spectral) {
  std::ostringstream md;
  md.precision(4);
  md << "# Layer runtime scaling\n\n";
  md << "| kind | kernel | log-log slope vs H*W |\n|---|---|---|\n";
  for (const auto* t : {&spatial, &spectral}) {
    if (t->empty()) continue;
    const std::string kind = t->front().kind;
    md << "| " << kind << " | " << t->front().kernel << " | "
       << fit_loglog_slope(*t, kind) << " |\n";
  }
  md << "\n";
  const auto cross = crossover_size(spatial, spectral);
  if (cross) {
    md << "Spectral convolution first beats spatial convolution at side "
       << *cross << ".\n";
  } else {
    md << "Spectral convolution never beats spatial convolution on the "
          "measured grid.\n";
  }
  return md.str();
}

}  // namespace sclc
