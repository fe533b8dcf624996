#include "sclc/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace sclc {

void ExperimentConfig::validate() const {
  if (dataset != "synthetic" && dataset != "cifar10" && dataset != "mnist")
    throw ConfigError("unknown dataset '" + dataset + "'");
  if (variant != "sclc" && variant != "sclc_maxpool" && variant != "sq" &&
      variant != "sq_norm")
    throw ConfigError("unknown student variant '" + variant + "'");
  if (train_subset < 1 || test_subset < 1)
    throw ConfigError("subset sizes must be >= 1");
  for (int r : resolutions) {
    if (r < 8 || (r & (r - 1)) != 0)
      throw ConfigError("resolutions must be powers of two >= 8");
  }
  for (int s : bench_sides) {
    if (s < 2 || (s & (s - 1)) != 0)
      throw ConfigError("bench sides must be powers of two");
  }
  teacher.validate();
  student.validate();
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': bad number '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  const int i = static_cast<int>(d);
  if (i != d) throw ConfigError("config key '" + key + "': expected integer");
  return i;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "': expected on/off, got '" + v + "'");
}

template <typename T, typename F>
std::vector<T> to_list(const std::string& key, const std::string& v, F conv) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(conv(key, trim(item)));
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

bool apply_train_entry(TrainConfig& t, const std::string& field,
                       const std::string& key, const std::string& v) {
  if (field == "lr") t.lr = to_double(key, v);
  else if (field == "momentum") t.momentum = to_double(key, v);
  else if (field == "weight_decay") t.weight_decay = to_double(key, v);
  else if (field == "batch_size") t.batch_size = to_int(key, v);
  else if (field == "epochs") t.epochs = to_int(key, v);
  else if (field == "alpha") t.alpha = to_double(key, v);
  else if (field == "temperature") t.temperature = to_double(key, v);
  else if (field == "t_squared_scaling") t.t_squared_scaling = to_bool(key, v);
  else return false;
  return true;
}

}  // namespace

void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                        const std::string& value) {
  if (key == "dataset") cfg.dataset = value;
  else if (key == "data_dir") cfg.data_dir = value;
  else if (key == "train_subset") cfg.train_subset = to_int(key, value);
  else if (key == "test_subset") cfg.test_subset = to_int(key, value);
  else if (key == "synth_train") cfg.synth_train = to_int(key, value);
  else if (key == "synth_test") cfg.synth_test = to_int(key, value);
  else if (key == "out_dir") cfg.out_dir = value;
  else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_double(key, value));
  else if (key == "kd") cfg.kd = to_bool(key, value);
  else if (key == "variant") cfg.variant = value;
  else if (key == "resolutions") cfg.resolutions = to_list<int>(key, value, to_int);
  else if (key == "bench_sides") cfg.bench_sides = to_list<int>(key, value, to_int);
  else if (key == "bench_kernel") cfg.bench_kernel = to_int(key, value);
  else if (key == "bench_reps") cfg.bench_reps = to_int(key, value);
  else if (key == "latency.payload_bytes") cfg.latency.payload_bytes = to_double(key, value);
  else if (key == "latency.link_rate") cfg.latency.link_rate_bits_per_s = to_double(key, value);
  else if (key == "latency.backend_ms") cfg.latency.backend_ms = to_double(key, value);
  else if (key == "latency.optical_ms") cfg.latency.optical_ms = to_double(key, value);
  else if (key == "grid_alphas") cfg.grid_alphas = to_list<double>(key, value, to_double);
  else if (key == "grid_temps") cfg.grid_temps = to_list<double>(key, value, to_double);
  else if (key.rfind("teacher.", 0) == 0) {
    if (!apply_train_entry(cfg.teacher, key.substr(8), key, value))
      throw ConfigError("unknown config key '" + key + "'");
  } else if (key.rfind("student.", 0) == 0) {
    if (!apply_train_entry(cfg.student, key.substr(8), key, value))
      throw ConfigError("unknown config key '" + key + "'");
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

ExperimentConfig parse_config(std::istream& in, const std::string& origin) {
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.resize(comment);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected key = value");
    try {
      apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in, path);
}

}  // namespace sclc
