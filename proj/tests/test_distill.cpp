#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sclc/distill.hpp"

using namespace sclc;

namespace {

RealTensor4 logits_tensor(const std::vector<std::vector<double>>& rows) {
  const int s = static_cast<int>(rows.size());
  const int k = static_cast<int>(rows[0].size());
  RealTensor4 t(Shape4{s, 1, 1, k});
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < k; ++j) t.at(i, 0, 0, j) = rows[i][j];
  return t;
}

// Two-class 4x4 toy set: class 0 bright on the left, class 1 on the right.
Dataset toy_separable(int n, std::uint64_t seed) {
  oracle::TestRng rng(seed);
  Dataset d;
  d.name = "toy";
  d.class_count = 2;
  d.images = RealTensor4(Shape4{n, 1, 4, 4});
  d.labels.resize(n);
  for (int s = 0; s < n; ++s) {
    const int label = s % 2;
    d.labels[s] = label;
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) {
        const bool bright = (label == 0) ? (x < 2) : (x >= 2);
        d.images.at(s, 0, y, x) =
            (bright ? 0.8 : 0.2) + 0.05 * rng.uniform();
      }
  }
  return d;
}

NetworkSpec toy_net() {
  NetworkSpec net;
  net.input_shape = Shape4{1, 1, 4, 4};
  net.class_count = 2;
  net.layers = {LayerSpec::flatten(), LayerSpec::dense(16, 2)};
  finalize_names(net);
  return net;
}

}  // namespace

TEST_CASE("softmax basics") {
  auto p = softmax({2.0, 2.0, 2.0, 2.0});
  for (double v : p) CHECK(v == doctest::Approx(0.25));

  auto a = softmax({1.0, 2.0, 3.0});
  auto b = softmax({101.0, 102.0, 103.0});  // shift invariance
  for (int i = 0; i < 3; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));

  // scalar oracle
  const double z0 = std::exp(1.0), z1 = std::exp(2.0), z2 = std::exp(3.0);
  const double sum = z0 + z1 + z2;
  CHECK(std::abs(a[0] - z0 / sum) < 1e-12);
  CHECK(std::abs(a[1] - z1 / sum) < 1e-12);
  CHECK(std::abs(a[2] - z2 / sum) < 1e-12);

  CHECK_THROWS_AS(softmax({1.0, std::nan("")}), NumericError);
}

TEST_CASE("softmax with temperature") {
  const std::vector<double> z{1.0, 2.0, 3.0};
  auto t1 = softmax_temp(z, 1.0);
  auto plain = softmax(z);
  CHECK(t1 == plain);  // exact equality

  auto hot = softmax_temp(z, 1e6);
  for (double v : hot) CHECK(std::abs(v - 1.0 / 3.0) < 1e-5);

  auto t2 = softmax_temp(z, 2.0);
  const double e0 = std::exp(0.5), e1 = std::exp(1.0), e2 = std::exp(1.5);
  const double sum = e0 + e1 + e2;
  CHECK(std::abs(t2[0] - e0 / sum) < 1e-12);
  CHECK(std::abs(t2[2] - e2 / sum) < 1e-12);

  CHECK_THROWS_AS(softmax_temp(z, 0.0), ConfigError);
  CHECK_THROWS_AS(softmax_temp(z, -1.0), ConfigError);

  // argmax invariance across temperatures
  oracle::TestRng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> r(5);
    for (double& v : r) v = 3.0 * rng.uniform();
    const auto ref = std::max_element(r.begin(), r.end()) - r.begin();
    for (double T : {0.25, 1.0, 4.0, 16.0}) {
      auto pT = softmax_temp(r, T);
      CHECK(std::max_element(pT.begin(), pT.end()) - pT.begin() == ref);
    }
  }
}

TEST_CASE("cross entropy") {
  CHECK(cross_entropy({1.0, 0.0}, 0) == doctest::Approx(0.0));
  std::vector<double> uniform(10, 0.1);
  CHECK(cross_entropy(uniform, 4) == doctest::Approx(std::log(10.0)));
  CHECK_THROWS_AS(cross_entropy(uniform, 10), ConfigError);
  CHECK_THROWS_AS(cross_entropy(uniform, -1), ConfigError);

  // gradient vs finite differences, through ce_loss
  oracle::TestRng rng(7);
  RealTensor4 z = oracle::random_real(Shape4{2, 1, 1, 5}, rng);
  const std::vector<int> labels{3, 0};
  const KdLoss l = ce_loss(z, labels);
  auto f = [&] { return ce_loss(z, labels).loss; };
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double fd = oracle::central_diff(f, z.data()[i], 1e-6);
    CHECK(oracle::rel_err(l.logit_grad.vec()[i], fd) < 1e-7);
  }
}

TEST_CASE("kl divergence") {
  std::vector<double> p{0.3, 0.7};
  CHECK(kl_div(p, p) == doctest::Approx(0.0));
  CHECK(kl_div({1.0, 0.0}, {0.5, 0.5}) == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(kl_div(p, {0.2, 0.3, 0.5}), ShapeError);

  // nonnegative on random pairs
  oracle::TestRng rng(11);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> a(4), b(4);
    for (double& v : a) v = std::exp(rng.uniform());
    for (double& v : b) v = std::exp(rng.uniform());
    double sa = 0.0, sb = 0.0;
    for (int i = 0; i < 4; ++i) sa += a[i], sb += b[i];
    for (int i = 0; i < 4; ++i) a[i] /= sa, b[i] /= sb;
    CHECK(kl_div(a, b) >= 0.0);
  }
}

TEST_CASE("kd loss") {
  oracle::TestRng rng(13);
  RealTensor4 zs = oracle::random_real(Shape4{3, 1, 1, 4}, rng);
  RealTensor4 zt = oracle::random_real(Shape4{3, 1, 1, 4}, rng);
  const std::vector<int> labels{0, 2, 3};
  TrainConfig cfg;

  SUBCASE("alpha = 1 reduces to cross-entropy") {
    cfg.alpha = 1.0;
    const KdLoss a = kd_loss(zs, zt, labels, cfg);
    const KdLoss b = ce_loss(zs, labels);
    CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-15));
    CHECK(a.soft_term == 0.0);
    CHECK(a.logit_grad.vec() == b.logit_grad.vec());
  }
  SUBCASE("alpha = 0 with identical logits is zero") {
    cfg.alpha = 0.0;
    const KdLoss l = kd_loss(zs, zs, labels, cfg);
    CHECK(l.loss == doctest::Approx(0.0));
    for (double g : l.logit_grad.vec()) CHECK(std::abs(g) < 1e-12);
  }
  SUBCASE("scalar composition oracle at alpha 0.5, tau 4") {
    cfg.alpha = 0.5;
    cfg.temperature = 4.0;
    RealTensor4 s1 = logits_tensor({{0.2, -1.0, 0.7, 0.1}});
    RealTensor4 t1 = logits_tensor({{1.5, 0.3, -0.2, 0.0}});
    const KdLoss l = kd_loss(s1, t1, {2}, cfg);
    std::vector<double> zrow{0.2, -1.0, 0.7, 0.1};
    std::vector<double> trow{1.5, 0.3, -0.2, 0.0};
    const double expect = 0.5 * cross_entropy(softmax(zrow), 2) +
                          0.5 * kl_div(softmax_temp(trow, 4.0),
                                       softmax_temp(zrow, 4.0));
    CHECK(std::abs(l.loss - expect) < 1e-12);
  }
  SUBCASE("tau-squared scaling multiplies the soft term") {
    cfg.alpha = 0.3;
    cfg.temperature = 4.0;
    const KdLoss off = kd_loss(zs, zt, labels, cfg);
    cfg.t_squared_scaling = true;
    const KdLoss on = kd_loss(zs, zt, labels, cfg);
    CHECK(on.soft_term == doctest::Approx(16.0 * off.soft_term).epsilon(1e-12));
    CHECK(on.hard_term == doctest::Approx(off.hard_term).epsilon(1e-12));
  }
  SUBCASE("gradient matches finite differences") {
    cfg.alpha = 0.4;
    cfg.temperature = 3.0;
    const KdLoss l = kd_loss(zs, zt, labels, cfg);
    auto f = [&] { return kd_loss(zs, zt, labels, cfg).loss; };
    for (std::size_t i = 0; i < zs.size(); ++i) {
      const double fd = oracle::central_diff(f, zs.data()[i], 1e-6);
      CHECK(oracle::rel_err(l.logit_grad.vec()[i], fd) < 1e-6);
    }
    // no gradient flows to the teacher: loss unchanged slope wrt zt is
    // irrelevant to the student grad; perturbing zt must not change the
    // student grad shape/finiteness
    CHECK(l.logit_grad.shape() == zs.shape());
  }
  SUBCASE("config validation") {
    cfg.alpha = 1.5;
    CHECK_THROWS_AS(kd_loss(zs, zt, labels, cfg), ConfigError);
    cfg.alpha = 0.5;
    cfg.temperature = 0.0;
    CHECK_THROWS_AS(kd_loss(zs, zt, labels, cfg), ConfigError);
  }
}

TEST_CASE("sgd step") {
  NetworkSpec net = toy_net();
  TrainConfig cfg;
  cfg.lr = 0.1;

  SUBCASE("zero grad, zero weight decay leaves params unchanged") {
    cfg.weight_decay = 0.0;
    ParamStore p = init_params(net, 1);
    const auto before = p.params.at("dense0").at("weight").vec();
    ParamGrads g;
    g["dense0"]["weight"] = RealTensor4(Shape4{1, 1, 2, 16});
    g["dense0"]["bias"] = RealTensor4(Shape4{1, 1, 1, 2});
    sgd_step(p, g, cfg);
    CHECK(p.params.at("dense0").at("weight").vec() == before);
  }
  SUBCASE("plain gradient descent when momentum and wd are off") {
    cfg.momentum = 0.0;
    cfg.weight_decay = 0.0;
    ParamStore p = init_params(net, 1);
    const double w0 = p.params.at("dense0").at("weight").at(0, 0, 0, 0);
    ParamGrads g;
    g["dense0"]["weight"] = RealTensor4(Shape4{1, 1, 2, 16});
    g["dense0"]["weight"].at(0, 0, 0, 0) = 2.0;
    g["dense0"]["bias"] = RealTensor4(Shape4{1, 1, 1, 2});
    sgd_step(p, g, cfg);
    CHECK(p.params.at("dense0").at("weight").at(0, 0, 0, 0) ==
          doctest::Approx(w0 - 0.1 * 2.0).epsilon(1e-15));
  }
  SUBCASE("two momentum steps match the scalar recurrence") {
    cfg.momentum = 0.9;
    cfg.weight_decay = 0.0005;
    cfg.lr = 0.01;
    ParamStore p;
    p.params["dense0"]["weight"] = RealTensor4(Shape4{1, 1, 1, 1}, 0.7);
    ParamGrads g;
    g["dense0"]["weight"] = RealTensor4(Shape4{1, 1, 1, 1}, 0.3);

    double w = 0.7, v = 0.0;
    for (int i = 0; i < 2; ++i) {
      sgd_step(p, g, cfg);
      v = 0.9 * v + 0.3 + 0.0005 * w;
      w -= 0.01 * v;
    }
    CHECK(std::abs(p.params["dense0"]["weight"].at(0, 0, 0, 0) - w) < 1e-12);
  }
  SUBCASE("shape mismatch is rejected") {
    ParamStore p = init_params(net, 1);
    ParamGrads g;
    g["dense0"]["weight"] = RealTensor4(Shape4{1, 1, 2, 15});
    CHECK_THROWS_AS(sgd_step(p, g, cfg), ShapeError);
  }
}

TEST_CASE("evaluate") {
  NetworkSpec net = toy_net();
  ParamStore p = init_params(net, 3);
  Dataset d = toy_separable(20, 5);
  const double acc = evaluate(net, p, d);
  // manual tally
  int correct = 0;
  for (int s = 0; s < d.size(); ++s) {
    RealTensor4 one = gather_images(d, {s});
    RealTensor4 l = forward(net, p, one, false, nullptr);
    correct += (l.at(0, 0, 0, 1) > l.at(0, 0, 0, 0) ? 1 : 0) == d.labels[s];
  }
  CHECK(acc == doctest::Approx(static_cast<double>(correct) / d.size()));
  Dataset empty;
  empty.class_count = 2;
  CHECK_THROWS_AS(evaluate(net, p, empty), ConfigError);
}

TEST_CASE("plain training") {
  NetworkSpec net = toy_net();
  Dataset train = toy_separable(16, 1);
  Dataset test = toy_separable(8, 2);
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.weight_decay = 0.0;
  cfg.seed = 9;

  SUBCASE("lr 0 leaves accuracy at its initial value") {
    cfg.lr = 0.0;
    cfg.epochs = 1;
    ParamStore p = init_params(net, 21);
    const double before = evaluate(net, p, test);
    History h = train_plain(net, p, train, test, cfg);
    CHECK(h.records.size() == 1);
    CHECK(h.records[0].test_accuracy == doctest::Approx(before));
  }
  SUBCASE("separable toy data reaches 100% within 50 epochs") {
    cfg.lr = 0.1;
    cfg.epochs = 50;
    ParamStore p = init_params(net, 21);
    History h = train_plain(net, p, train, test, cfg);
    CHECK(h.records.back().test_accuracy == doctest::Approx(1.0));
    // loss decreased
    CHECK(h.records.back().train_loss < h.records.front().train_loss);
  }
  SUBCASE("two runs with the same seed are identical") {
    cfg.lr = 0.05;
    cfg.epochs = 3;
    ParamStore p1 = init_params(net, 21);
    ParamStore p2 = init_params(net, 21);
    History h1 = train_plain(net, p1, train, test, cfg);
    History h2 = train_plain(net, p2, train, test, cfg);
    REQUIRE(h1.records.size() == h2.records.size());
    for (std::size_t i = 0; i < h1.records.size(); ++i) {
      CHECK(h1.records[i].train_loss == h2.records[i].train_loss);
      CHECK(h1.records[i].test_accuracy == h2.records[i].test_accuracy);
    }
    CHECK(p1.params.at("dense0").at("weight").vec() ==
          p2.params.at("dense0").at("weight").vec());
  }
  SUBCASE("empty dataset is rejected") {
    Dataset empty;
    empty.class_count = 2;
    ParamStore p = init_params(net, 21);
    CHECK_THROWS_AS(train_plain(net, p, empty, test, cfg), ConfigError);
  }
  SUBCASE("divergence aborts with a numeric error") {
    cfg.lr = 1e200;
    cfg.weight_decay = 0.0005;  // compounds the blow-up into overflow
    cfg.epochs = 10;
    ParamStore p = init_params(net, 21);
    CHECK_THROWS_AS(train_plain(net, p, train, test, cfg), NumericError);
  }
}

TEST_CASE("knowledge distillation training") {
  NetworkSpec teacher = toy_net();
  NetworkSpec student = toy_net();
  Dataset train = toy_separable(16, 1);
  Dataset test = toy_separable(8, 2);

  TrainConfig tcfg;
  tcfg.lr = 0.1;
  tcfg.epochs = 30;
  tcfg.batch_size = 4;
  tcfg.weight_decay = 0.0;
  ParamStore tp = init_params(teacher, 33);
  train_plain(teacher, tp, train, test, tcfg);

  TrainConfig scfg;
  scfg.lr = 0.1;
  scfg.epochs = 30;
  scfg.batch_size = 4;
  scfg.alpha = 0.5;
  scfg.temperature = 4.0;
  scfg.weight_decay = 0.0;
  ParamStore sp = init_params(student, 44);

  // teacher params byte-identical before/after (frozen-teacher contract)
  const auto snapshot_w = tp.params.at("dense0").at("weight").vec();
  const auto snapshot_b = tp.params.at("dense0").at("bias").vec();
  History h = train_student_kd(teacher, tp, student, sp, train, test, scfg);
  CHECK(tp.params.at("dense0").at("weight").vec() == snapshot_w);
  CHECK(tp.params.at("dense0").at("bias").vec() == snapshot_b);

  CHECK(h.records.back().test_accuracy == doctest::Approx(1.0));
  // both loss terms populated
  CHECK(h.records.front().student_loss_term > 0.0);
  CHECK(h.records.front().temp_loss_term >= 0.0);
  CHECK(h.records.front().train_loss ==
        doctest::Approx(h.records.front().student_loss_term +
                        h.records.front().temp_loss_term));
}

TEST_CASE("history csv layout") {
  History h;
  h.records.push_back({0, 1.5, 1.0, 0.5, 0.25, 12.0});
  std::ostringstream out;
  write_history_csv(h, out);
  CHECK(out.str() ==
        "epoch,train_loss,student_loss_term,temp_loss_term,test_accuracy,"
        "wall_ms\n0,1.5,1,0.5,0.25,12\n");
}
