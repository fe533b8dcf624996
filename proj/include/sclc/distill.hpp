#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sclc/data.hpp"
#include "sclc/network.hpp"

namespace sclc {

struct TrainConfig {
  double alpha = 0.5;        // hard-loss weight in [0,1]
  double temperature = 4.0;  // distillation temperature, > 0
  double lr = 1e-4;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int batch_size = 16;
  int epochs = 1;
  std::uint64_t seed = 0;
  bool t_squared_scaling = false;  // scale the soft term by temperature^2
  void validate() const;           // throws ConfigError on out-of-range values
};

// Numerically stable softmax (max subtraction). Throws NumericError on
// non-finite logits, ConfigError on T <= 0.
std::vector<double> softmax(const std::vector<double>& z);
std::vector<double> softmax_temp(const std::vector<double>& z, double T);

// -log p[label]; gradient w.r.t. the logits is p - onehot(label).
double cross_entropy(const std::vector<double>& p, int label);

// KL(p || q) >= 0; gradient w.r.t. q's logits is q - p.
double kl_div(const std::vector<double>& p, const std::vector<double>& q);

struct KdLoss {
  double loss = 0.0;
  double hard_term = 0.0;  // alpha * mean cross-entropy
  double soft_term = 0.0;  // (1-alpha) * mean KL at temperature
  RealTensor4 logit_grad;  // d(loss)/d(student logits), batch-mean reduced
};

// Eq.-style combined loss over a batch. Teacher logits are treated as
// constants. alpha = 1 reduces exactly to mean cross-entropy.
KdLoss kd_loss(const RealTensor4& student_logits, const RealTensor4& teacher_logits,
               const std::vector<int>& labels, const TrainConfig& cfg);

// Plain-CE convenience: kd_loss with alpha = 1 and no teacher.
KdLoss ce_loss(const RealTensor4& logits, const std::vector<int>& labels);

// v <- momentum*v + grad + weight_decay*param; param <- param - lr*v
void sgd_step(ParamStore& params, const ParamGrads& grads, const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double student_loss_term = 0.0;  // hard (cross-entropy) component
  double temp_loss_term = 0.0;     // soft (KL) component
  double test_accuracy = 0.0;
  double wall_ms = 0.0;
};

struct History {
  std::vector<EpochRecord> records;
};

void write_history_csv(const History& h, std::ostream& out);
void write_history_csv(const History& h, const std::string& path);

// Fraction of argmax-correct predictions. Throws ConfigError on empty data.
double evaluate(const NetworkSpec& spec, const ParamStore& params,
                const Dataset& data, int eval_batch = 32);

// Supervised training with plain cross-entropy; updates params in place.
History train_plain(const NetworkSpec& spec, ParamStore& params,
                    const Dataset& train, const Dataset& test,
                    const TrainConfig& cfg);

// Knowledge distillation: the teacher is frozen (const), only the student's
// params move. Non-finite loss aborts with a NumericError naming the batch.
History train_student_kd(const NetworkSpec& teacher_spec,
                         const ParamStore& teacher_params,
                         const NetworkSpec& student_spec, ParamStore& student_params,
                         const Dataset& train, const Dataset& test,
                         const TrainConfig& cfg);

}  // namespace sclc
