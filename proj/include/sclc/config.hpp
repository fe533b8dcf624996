#pragma once

#include <string>
#include <vector>

#include "sclc/bench.hpp"
#include "sclc/distill.hpp"

namespace sclc {

struct ExperimentConfig {
  std::string dataset = "synthetic";  // synthetic | cifar10 | mnist
  std::string data_dir;               // dataset root; DATA_DIR env as fallback
  int train_subset = 2000;
  int test_subset = 500;
  int synth_train = 4000;  // generated sizes when dataset == synthetic
  int synth_test = 1000;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool kd = true;
  std::string variant = "sclc";  // sclc | sclc_maxpool | sq | sq_norm

  TrainConfig teacher;
  TrainConfig student;

  ExperimentConfig() {
    teacher.lr = 0.01;  // the pinned 1e-4 applies to students
    teacher.alpha = 1.0;
    teacher.epochs = 10;
    student.epochs = 10;
  }

  std::vector<int> resolutions = {8, 16, 32};

  std::vector<int> bench_sides = {64, 128, 256, 512, 1024};
  int bench_kernel = 11;
  int bench_reps = 5;

  LatencyModel latency{100000.0, 2.5e9, 0.28, 0.0};

  std::vector<double> grid_alphas = {0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<double> grid_temps = {1.0, 2.0, 4.0, 8.0, 16.0};

  void validate() const;  // throws ConfigError
};

// Applies one key=value pair; throws ConfigError on unknown keys/bad values.
void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                        const std::string& value);

// INI-style file: key = value lines, # or ; comments, blank lines ignored.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(std::istream& in, const std::string& origin);

}  // namespace sclc
