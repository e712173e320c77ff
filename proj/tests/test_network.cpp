#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "anedl/losses.hpp"
#include "anedl/network.hpp"
#include "oracles.hpp"

using namespace anedl;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.input_dim = 2;
  cfg.extractor_hidden = {};
  cfg.feature_dim = 3;
  cfg.edl_hidden = {3};
  cfg.num_classes = 2;
  return cfg;
}

Batch random_batch(std::mt19937_64& rng, std::size_t n, std::size_t dim, double scale = 1.5) {
  std::normal_distribution<double> d(0.0, scale);
  Batch x(n, std::vector<double>(dim));
  for (auto& row : x)
    for (double& v : row) v = d(rng);
  return x;
}

}  // namespace

TEST_CASE("model config validation") {
  CHECK_NOTHROW(ModelConfig{}.validate());
  ModelConfig bad = tiny_config();
  bad.num_classes = 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = tiny_config();
  bad.input_dim = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = tiny_config();
  bad.edl_hidden = {4, 0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("initialization is a pure function of the seed") {
  const ModelConfig cfg;
  const TwoHeadModel a(cfg, 42), b(cfg, 42), c(cfg, 43);
  CHECK(a.parameters() == b.parameters());
  CHECK(a.parameters() != c.parameters());
  CHECK(a.parameter_count() == a.parameters().size());
}

TEST_CASE("zero parameters give flat logits and minimal evidence") {
  const ModelConfig cfg = tiny_config();
  TwoHeadModel model(cfg, 1);
  model.set_parameters(std::vector<double>(model.parameter_count(), 0.0));

  std::mt19937_64 rng(2);
  const Batch x = random_batch(rng, 5, cfg.input_dim);
  const ForwardResult out = model.forward(x);
  const double alpha0 = 1.0 + std::log(2.0);  // softplus(0) on top of the +1 floor
  for (std::size_t i = 0; i < 5; ++i) {
    for (double l : out.logits[i]) CHECK(l == 0.0);
    for (std::size_t k = 0; k < cfg.num_classes; ++k)
      CHECK(out.alpha[i][k] == doctest::Approx(alpha0).epsilon(1e-15));
  }
}

TEST_CASE("concentrations stay at or above one under extreme parameters") {
  const ModelConfig cfg = tiny_config();
  TwoHeadModel model(cfg, 3);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> wild(-60.0, 60.0);
  std::vector<double> p(model.parameter_count());
  for (int trial = 0; trial < 20; ++trial) {
    for (double& v : p) v = wild(rng);
    model.set_parameters(p);
    const ForwardResult out = model.forward(random_batch(rng, 8, cfg.input_dim, 3.0));
    for (const auto& a : out.alpha)
      for (std::size_t k = 0; k < cfg.num_classes; ++k) {
        CHECK(std::isfinite(a[k]));
        CHECK(a[k] >= 1.0);
      }
    for (const auto& row : out.logits)
      for (double l : row) CHECK(std::isfinite(l));
  }
}

TEST_CASE("batched forward equals per-row forward") {
  const ModelConfig cfg;  // default, wider model
  const TwoHeadModel model(cfg, 5);
  std::mt19937_64 rng(6);
  const Batch x = random_batch(rng, 7, cfg.input_dim);
  const ForwardResult all = model.forward(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const ForwardResult one = model.forward({x[i]});
    CHECK(one.logits[0] == all.logits[i]);
    for (std::size_t k = 0; k < cfg.num_classes; ++k) CHECK(one.alpha[0][k] == all.alpha[i][k]);
  }
  CHECK_THROWS_AS(model.forward(Batch{{1.0, 2.0, 3.0}}), std::invalid_argument);
}

TEST_CASE("backward matches finite differences over every parameter") {
  const ModelConfig cfg = tiny_config();
  TwoHeadModel model(cfg, 7);
  REQUIRE(model.parameter_count() <= 100);

  std::mt19937_64 rng(8);
  const Batch x = random_batch(rng, 3, cfg.input_dim);
  const std::vector<std::vector<double>> ys = {one_hot(2, 0), one_hot(2, 1), one_hot(2, 0)};
  const LossWeights w;

  // Scalar objective: mean classification loss plus mean detector loss, so
  // both heads receive upstream gradients.
  const auto objective = [&](const std::vector<double>& params) {
    TwoHeadModel m(cfg, 0);
    m.set_parameters(params);
    const ForwardResult out = m.forward(x);
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      total += loss_ce(out.logits[i], ys[i]).value / static_cast<double>(x.size());
      total += loss_nedl(out.alpha[i], w).value / static_cast<double>(x.size());
    }
    return total;
  };

  ForwardTrace trace;
  const ForwardResult out = model.forward(x, trace);
  Batch grad_logits(x.size()), grad_alpha(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const LossValue ce = loss_ce(out.logits[i], ys[i]);
    const LossValue ne = loss_nedl(out.alpha[i], w);
    grad_logits[i] = ce.grad;
    grad_alpha[i] = ne.grad;
    for (double& g : grad_logits[i]) g /= static_cast<double>(x.size());
    for (double& g : grad_alpha[i]) g /= static_cast<double>(x.size());
  }
  std::vector<double> analytic(model.parameter_count(), 0.0);
  model.backward(trace, grad_logits, grad_alpha, analytic);

  const std::vector<double> fd = oracle::fd_gradient(objective, model.parameters());
  for (std::size_t i = 0; i < fd.size(); ++i) {
    INFO("parameter ", i);
    CHECK(oracle::close(analytic[i], fd[i], 1e-4, 1e-7));
  }
}

TEST_CASE("backward treats an empty head gradient as zero") {
  const ModelConfig cfg = tiny_config();
  TwoHeadModel model(cfg, 9);
  std::mt19937_64 rng(10);
  const Batch x = random_batch(rng, 2, cfg.input_dim);
  ForwardTrace trace;
  const ForwardResult out = model.forward(x, trace);

  Batch grad_logits(x.size(), std::vector<double>(cfg.num_classes, 0.25));
  Batch grad_alpha(x.size(), std::vector<double>(cfg.num_classes, -0.5));
  (void)out;

  std::vector<double> both(model.parameter_count(), 0.0);
  model.backward(trace, grad_logits, grad_alpha, both);
  std::vector<double> logits_only(model.parameter_count(), 0.0);
  model.backward(trace, grad_logits, {}, logits_only);
  std::vector<double> alpha_only(model.parameter_count(), 0.0);
  model.backward(trace, {}, grad_alpha, alpha_only);

  for (std::size_t i = 0; i < both.size(); ++i)
    CHECK(both[i] == doctest::Approx(logits_only[i] + alpha_only[i]).epsilon(1e-12));
}

TEST_CASE("learning-rate schedule endpoints") {
  SgdConfig cfg;
  cfg.learning_rate = 0.03;
  cfg.total_steps = 40;
  SgdOptimizer opt(cfg, 4);
  CHECK(opt.current_learning_rate() == doctest::Approx(0.03).epsilon(1e-15));

  TwoHeadModel model(tiny_config(), 11);
  SgdConfig cfg2 = cfg;
  cfg2.momentum = 0.0;
  cfg2.weight_decay = 0.0;
  SgdOptimizer opt2(cfg2, model.parameter_count());
  const std::vector<double> zero(model.parameter_count(), 0.0);
  for (std::size_t t = 0; t < cfg.total_steps + 5; ++t) opt2.step(model, zero);
  // Past total_steps the rate clamps at cos(7 pi / 16) of the base rate.
  const double pi = std::acos(-1.0);
  CHECK(opt2.current_learning_rate() ==
        doctest::Approx(0.03 * std::cos(7.0 * pi / 16.0)).epsilon(1e-12));
}

TEST_CASE("optimizer update rule") {
  const ModelConfig cfg = tiny_config();
  TwoHeadModel model(cfg, 12);
  const std::vector<double> start = model.parameters();

  SgdConfig scfg;
  scfg.learning_rate = 0.1;
  scfg.momentum = 0.9;
  scfg.weight_decay = 0.0;
  scfg.total_steps = 100;
  SgdOptimizer opt(scfg, model.parameter_count());

  std::vector<double> g(model.parameter_count(), 0.0);
  g[0] = 1.0;

  const double lr0 = opt.current_learning_rate();
  opt.step(model, g);
  const double lr1 = opt.current_learning_rate();
  opt.step(model, g);

  // v1 = g, v2 = 0.9 g + g; parameter 0 moves by lr0 * 1 + lr1 * 1.9.
  CHECK(model.parameters()[0] ==
        doctest::Approx(start[0] - lr0 - lr1 * 1.9).epsilon(1e-12));
  CHECK(opt.momentum_buffer()[0] == doctest::Approx(1.9).epsilon(1e-12));
  for (std::size_t i = 1; i < start.size(); ++i) CHECK(model.parameters()[i] == start[i]);

  CHECK_THROWS_AS(opt.step(model, std::vector<double>(model.parameter_count(), NAN)),
                  std::runtime_error);
}

TEST_CASE("weight decay pulls parameters toward zero even with zero gradient") {
  const ModelConfig cfg = tiny_config();
  TwoHeadModel model(cfg, 13);
  const std::vector<double> start = model.parameters();

  SgdConfig scfg;
  scfg.learning_rate = 0.1;
  scfg.momentum = 0.0;
  scfg.weight_decay = 0.01;
  SgdOptimizer opt(scfg, model.parameter_count());
  opt.step(model, std::vector<double>(model.parameter_count(), 0.0));
  for (std::size_t i = 0; i < start.size(); ++i)
    CHECK(model.parameters()[i] == doctest::Approx(start[i] * (1.0 - 0.1 * 0.01)).epsilon(1e-14));
}

TEST_CASE("checkpoint round trip is bit exact") {
  const ModelConfig cfg;
  TwoHeadModel model(cfg, 14);
  SgdConfig scfg;
  scfg.total_steps = 123;
  SgdOptimizer opt(scfg, model.parameter_count());
  std::mt19937_64 rng(15);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int t = 0; t < 17; ++t) {
    std::vector<double> g(model.parameter_count());
    for (double& v : g) v = n(rng);
    opt.step(model, g);
  }
  std::ostringstream rng_state;
  rng_state << rng;

  const std::string path = "test_network_checkpoint.json";
  save_checkpoint(path, model, opt, rng_state.str());
  const Checkpoint ckpt = load_checkpoint(path);
  std::remove(path.c_str());

  CHECK(ckpt.parameters == model.parameters());
  CHECK(ckpt.momentum == opt.momentum_buffer());
  CHECK(ckpt.step_count == 17);
  CHECK(ckpt.rng_state == rng_state.str());
  CHECK(ckpt.model_config.num_classes == cfg.num_classes);
  CHECK(ckpt.optimizer_config.total_steps == 123);

  const TwoHeadModel restored = model_from_checkpoint(ckpt);
  CHECK(restored.parameters() == model.parameters());

  // The restored optimizer continues exactly where the original stopped.
  SgdOptimizer resumed(ckpt.optimizer_config, restored.parameter_count());
  resumed.restore(ckpt.step_count, ckpt.momentum);
  CHECK(resumed.current_learning_rate() == opt.current_learning_rate());

  CHECK_THROWS_AS(load_checkpoint("no_such_checkpoint_file.json"), std::runtime_error);
}
