#include "sclc/distill.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "sclc/rng.hpp"

namespace sclc {

void TrainConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in [0,1]");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  if (!(lr >= 0.0)) throw ConfigError("lr must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw ConfigError("momentum must be in [0,1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
}

std::vector<double> softmax_temp(const std::vector<double>& z, double T) {
  if (!(T > 0.0)) throw ConfigError("softmax temperature must be > 0");
  if (z.empty()) throw ConfigError("softmax of an empty logit vector");
  double m = z[0];
  for (double v : z) {
    if (!std::isfinite(v)) throw NumericError("non-finite logit in softmax");
    m = std::max(m, v);
  }
  std::vector<double> p(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp((z[i] - m) / T);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<double> softmax(const std::vector<double>& z) {
  return softmax_temp(z, 1.0);
}

double cross_entropy(const std::vector<double>& p, int label) {
  if (label < 0 || label >= static_cast<int>(p.size()))
    throw ConfigError("cross_entropy: label out of range");
  return -std::log(std::max(p[label], 1e-300));
}

double kl_div(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw ShapeError("kl_div: length mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) d += p[i] * std::log(p[i] / std::max(q[i], 1e-300));
  }
  return std::max(d, 0.0);
}

namespace {

std::vector<double> logits_row(const RealTensor4& t, int s) {
  const int k = t.shape().w;
  std::vector<double> z(k);
  for (int j = 0; j < k; ++j) z[j] = t.at(s, 0, 0, j);
  return z;
}

}  // namespace

KdLoss kd_loss(const RealTensor4& student_logits, const RealTensor4& teacher_logits,
               const std::vector<int>& labels, const TrainConfig& cfg) {
  cfg.validate();
  const Shape4 sh = student_logits.shape();
  if (sh.c != 1 || sh.h != 1) throw ShapeError("kd_loss: logits must be (S,1,1,K)");
  if (static_cast<int>(labels.size()) != sh.s)
    throw ShapeError("kd_loss: label count does not match batch");
  const bool use_soft = cfg.alpha < 1.0;
  if (use_soft && !(teacher_logits.shape() == sh))
    throw ShapeError("kd_loss: teacher/student logit shape mismatch");

  const double tau = cfg.temperature;
  const double soft_scale =
      (1.0 - cfg.alpha) * (cfg.t_squared_scaling ? tau * tau : 1.0);
  const double inv_s = 1.0 / sh.s;
  KdLoss out;
  out.logit_grad = RealTensor4(sh);
  for (int s = 0; s < sh.s; ++s) {
    const std::vector<double> z = logits_row(student_logits, s);
    if (cfg.alpha > 0.0) {
      const std::vector<double> p = softmax(z);
      out.hard_term += cfg.alpha * cross_entropy(p, labels[s]) * inv_s;
      for (int j = 0; j < sh.w; ++j) {
        double g = p[j] - (j == labels[s] ? 1.0 : 0.0);
        out.logit_grad.at(s, 0, 0, j) += cfg.alpha * g * inv_s;
      }
    }
    if (use_soft) {
      const std::vector<double> q = softmax_temp(z, tau);
      const std::vector<double> pt = softmax_temp(logits_row(teacher_logits, s), tau);
      out.soft_term += soft_scale * kl_div(pt, q) * inv_s;
      for (int j = 0; j < sh.w; ++j) {
        out.logit_grad.at(s, 0, 0, j) +=
            soft_scale * (q[j] - pt[j]) / tau * inv_s;
      }
    }
  }
  out.loss = out.hard_term + out.soft_term;
  return out;
}

KdLoss ce_loss(const RealTensor4& logits, const std::vector<int>& labels) {
  TrainConfig cfg;
  cfg.alpha = 1.0;
  return kd_loss(logits, logits, labels, cfg);
}

void sgd_step(ParamStore& params, const ParamGrads& grads, const TrainConfig& cfg) {
  for (const auto& [name, tensors] : grads) {
    auto pit = params.params.find(name);
    if (pit == params.params.end())
      throw StateError("sgd_step: gradient for unknown layer '" + name + "'");
    for (const auto& [key, g] : tensors) {
      auto tit = pit->second.find(key);
      if (tit == pit->second.end() || !(tit->second.shape() == g.shape()))
        throw ShapeError("sgd_step: shape mismatch for '" + name + "." + key + "'");
      RealTensor4& p = tit->second;
      RealTensor4& v = params.momentum[name][key];
      if (v.size() != p.size()) v = RealTensor4(p.shape());
      for (std::size_t i = 0; i < p.size(); ++i) {
        v.data()[i] = cfg.momentum * v.vec()[i] + g.vec()[i] +
                      cfg.weight_decay * p.vec()[i];
        p.data()[i] -= cfg.lr * v.vec()[i];
      }
    }
  }
}

void write_history_csv(const History& h, std::ostream& out) {
  out << "epoch,train_loss,student_loss_term,temp_loss_term,test_accuracy,wall_ms\n";
  out.precision(12);
  for (const auto& r : h.records) {
    out << r.epoch << ',' << r.train_loss << ',' << r.student_loss_term << ','
        << r.temp_loss_term << ',' << r.test_accuracy << ',' << r.wall_ms << '\n';
  }
}

void write_history_csv(const History& h, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  write_history_csv(h, out);
}

double evaluate(const NetworkSpec& spec, const ParamStore& params,
                const Dataset& data, int eval_batch) {
  if (data.size() == 0) throw ConfigError("evaluate: empty dataset");
  int correct = 0;
  for (int start = 0; start < data.size(); start += eval_batch) {
    const int n = std::min(eval_batch, data.size() - start);
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), start);
    const RealTensor4 logits =
        forward(spec, params, gather_images(data, idx), false, nullptr);
    for (int s = 0; s < n; ++s) {
      int best = 0;
      for (int j = 1; j < logits.shape().w; ++j)
        if (logits.at(s, 0, 0, j) > logits.at(s, 0, 0, best)) best = j;
      if (best == data.labels[idx[s]]) ++correct;
    }
  }
  return static_cast<double>(correct) / data.size();
}

namespace {

// Shared epoch loop; teacher is null for plain training.
History train_loop(const NetworkSpec* teacher_spec, const ParamStore* teacher_params,
                   const NetworkSpec& spec, ParamStore& params,
                   const Dataset& train, const Dataset& test,
                   const TrainConfig& cfg) {
  cfg.validate();
  if (train.size() == 0) throw ConfigError("training set is empty");
  train.validate();
  test.validate();
  validate_params(spec, params);

  TrainConfig loss_cfg = cfg;
  if (!teacher_spec) loss_cfg.alpha = 1.0;

  Rng rng(cfg.seed);
  std::vector<int> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  History hist;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    // seeded Fisher-Yates
    for (int i = train.size() - 1; i > 0; --i)
      std::swap(order[i], order[rng.below(i + 1)]);

    EpochRecord rec;
    rec.epoch = epoch;
    int batches = 0;
    for (int start = 0; start < train.size(); start += cfg.batch_size) {
      const int n = std::min(cfg.batch_size, train.size() - start);
      const std::vector<int> idx(order.begin() + start, order.begin() + start + n);
      const RealTensor4 batch = gather_images(train, idx);
      const std::vector<int> labels = gather_labels(train, idx);

      Tape tape;
      forward(spec, params, batch, true, &tape);
      RealTensor4 teacher_logits;
      if (teacher_spec) {
        teacher_logits =
            forward(*teacher_spec, *teacher_params, batch, false, nullptr);
      }
      const KdLoss l = teacher_spec ? kd_loss(tape.logits, teacher_logits, labels,
                                              loss_cfg)
                                    : ce_loss(tape.logits, labels);
      if (!std::isfinite(l.loss)) {
        std::ostringstream msg;
        msg << "training diverged: non-finite loss at epoch " << epoch
            << ", batch " << batches << " (|logit|max=" << [&] {
                 double m = 0.0;
                 for (double v : tape.logits.vec()) m = std::max(m, std::abs(v));
                 return m;
               }() << ")";
        throw NumericError(msg.str());
      }
      rec.train_loss += l.loss;
      rec.student_loss_term += l.hard_term;
      rec.temp_loss_term += l.soft_term;
      ++batches;

      const ParamGrads grads = backward(spec, params, tape, l.logit_grad);
      sgd_step(params, grads, cfg);
    }
    rec.train_loss /= batches;
    rec.student_loss_term /= batches;
    rec.temp_loss_term /= batches;
    rec.test_accuracy = test.size() > 0 ? evaluate(spec, params, test) : 0.0;
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    hist.records.push_back(rec);
  }
  return hist;
}

}  // namespace

History train_plain(const NetworkSpec& spec, ParamStore& params,
                    const Dataset& train, const Dataset& test,
                    const TrainConfig& cfg) {
  return train_loop(nullptr, nullptr, spec, params, train, test, cfg);
}

History train_student_kd(const NetworkSpec& teacher_spec,
                         const ParamStore& teacher_params,
                         const NetworkSpec& student_spec, ParamStore& student_params,
                         const Dataset& train, const Dataset& test,
                         const TrainConfig& cfg) {
  validate_params(teacher_spec, teacher_params);
  return train_loop(&teacher_spec, &teacher_params, student_spec, student_params,
                    train, test, cfg);
}

}  // namespace sclc
