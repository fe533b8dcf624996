#pragma once

#include <string>

#include "sclc/config.hpp"
#include "sclc/data.hpp"
#include "sclc/distill.hpp"

namespace sclc {

struct DataPair {
  Dataset train;
  Dataset test;
};

// Loads the configured dataset, truncated to the configured subsets and
// resampled to side x side (side 0 keeps the native 32). The synthetic
// dataset is generated once, in CIFAR-10 binary layout, and read back
// through the regular loader.
DataPair prepare_data(const ExperimentConfig& cfg, int side = 0);

struct TrainedNet {
  NetworkSpec spec;
  ParamStore params;
  History hist;  // empty when loaded from a checkpoint
  double test_acc = 0.0;
};

StudentVariant variant_from_name(const std::string& name);

// Trains the mini teacher, or loads the cached checkpoint for this seed and
// image side if one exists in cfg.out_dir.
TrainedNet train_teacher_cached(const ExperimentConfig& cfg, const DataPair& data,
                                std::uint64_t seed, bool quiet = false);

// Trains a student of the given variant; with a teacher it runs KD,
// without one plain cross-entropy. Artifacts land in cfg.out_dir.
TrainedNet train_student_run(const ExperimentConfig& cfg, const DataPair& data,
                             const TrainedNet* teacher, StudentVariant variant,
                             std::uint64_t seed, bool quiet = false);

// Dense classifier on raw pixels (the ablation's backend-only row).
TrainedNet train_backend_only(const ExperimentConfig& cfg, const DataPair& data,
                              std::uint64_t seed, bool quiet = false);

// Command dispatch shared by the CLI: train-teacher, train-student, ablate,
// sweep-resolution, bench, latency, gridsearch. Returns a process exit code.
int run_command(const std::string& cmd, const ExperimentConfig& cfg);

}  // namespace sclc
