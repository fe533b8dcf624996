#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "sclc/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Spectral CNN linear-counterpart experiments"};

  std::string config_path;
  std::string cmd;
  std::string kd_flag;
  std::string out_dir;
  std::int64_t seed = -1;

  app.add_option("--config", config_path, "INI-style experiment config file")
      ->check(CLI::ExistingFile);
  app.add_option("--cmd", cmd, "command to run")
      ->required()
      ->check(CLI::IsMember({"train-teacher", "train-student", "ablate",
                             "sweep-resolution", "bench", "latency",
                             "gridsearch"}));
  app.add_option("--kd", kd_flag, "knowledge distillation on/off")
      ->check(CLI::IsMember({"on", "off"}));
  app.add_option("--seed", seed, "override the config seed");
  app.add_option("--out", out_dir, "output directory for artifacts");

  CLI11_PARSE(app, argc, argv);

  try {
    sclc::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = sclc::load_config(config_path);
    if (!kd_flag.empty()) cfg.kd = kd_flag == "on";
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (cfg.data_dir.empty()) {
      if (const char* env = std::getenv("DATA_DIR")) cfg.data_dir = env;
    }
    return sclc::run_command(cmd, cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
