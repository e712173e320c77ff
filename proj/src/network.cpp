#include "anedl/network.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace anedl {

namespace {

double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void tanh_inplace(std::vector<double>& v) {
  for (double& x : v) x = std::tanh(x);
}

}  // namespace

void ModelConfig::validate() const {
  if (input_dim == 0) throw std::invalid_argument("ModelConfig: input_dim must be >= 1");
  if (feature_dim == 0) throw std::invalid_argument("ModelConfig: feature_dim must be >= 1");
  if (num_classes < 2) throw std::invalid_argument("ModelConfig: num_classes must be >= 2");
  for (std::size_t w : extractor_hidden)
    if (w == 0) throw std::invalid_argument("ModelConfig: extractor widths must be >= 1");
  for (std::size_t w : edl_hidden)
    if (w == 0) throw std::invalid_argument("ModelConfig: evidential head widths must be >= 1");
}

TwoHeadModel::TwoHeadModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();

  std::size_t off = 0;
  auto make_layer = [&off](std::size_t in, std::size_t out) {
    LayerSpec l;
    l.in = in;
    l.out = out;
    l.w_off = off;
    off += in * out;
    l.b_off = off;
    off += out;
    return l;
  };

  std::size_t prev = cfg_.input_dim;
  for (std::size_t w : cfg_.extractor_hidden) {
    extractor_.push_back(make_layer(prev, w));
    prev = w;
  }
  extractor_.push_back(make_layer(prev, cfg_.feature_dim));

  softmax_head_ = make_layer(cfg_.feature_dim, cfg_.num_classes);

  prev = cfg_.feature_dim;
  for (std::size_t w : cfg_.edl_hidden) {
    edl_.push_back(make_layer(prev, w));
    prev = w;
  }
  edl_.push_back(make_layer(prev, cfg_.num_classes));

  params_.assign(off, 0.0);
  std::mt19937_64 rng(seed);
  auto init_layer = [&](const LayerSpec& l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (std::size_t i = 0; i < l.in * l.out; ++i) params_[l.w_off + i] = u(rng);
    for (std::size_t i = 0; i < l.out; ++i) params_[l.b_off + i] = u(rng);
  };
  for (const auto& l : extractor_) init_layer(l);
  init_layer(softmax_head_);
  for (const auto& l : edl_) init_layer(l);
}

void TwoHeadModel::affine(const LayerSpec& l, const std::vector<double>& x,
                          std::vector<double>& y) const {
  y.assign(l.out, 0.0);
  for (std::size_t o = 0; o < l.out; ++o) {
    double acc = params_[l.b_off + o];
    const double* w = &params_[l.w_off + o * l.in];
    for (std::size_t i = 0; i < l.in; ++i) acc += w[i] * x[i];
    y[o] = acc;
  }
}

void TwoHeadModel::affine_backward(const LayerSpec& l, const std::vector<double>& x,
                                   const std::vector<double>& dy, std::vector<double>& dx,
                                   std::vector<double>& grad) const {
  dx.assign(l.in, 0.0);
  for (std::size_t o = 0; o < l.out; ++o) {
    const double g = dy[o];
    grad[l.b_off + o] += g;
    const double* w = &params_[l.w_off + o * l.in];
    double* gw = &grad[l.w_off + o * l.in];
    for (std::size_t i = 0; i < l.in; ++i) {
      gw[i] += g * x[i];
      dx[i] += g * w[i];
    }
  }
}

ForwardResult TwoHeadModel::forward(const Batch& x) const {
  ForwardTrace trace;
  return forward(x, trace);
}

ForwardResult TwoHeadModel::forward(const Batch& x, ForwardTrace& trace) const {
  const std::size_t n = x.size();
  trace.input = x;
  trace.extractor_act.assign(extractor_.size(), Batch(n));
  trace.edl_act.assign(edl_.size() - 1, Batch(n));
  trace.evidence_pre.assign(n, {});

  ForwardResult out;
  out.logits.assign(n, {});
  out.features.assign(n, {});
  out.alpha.reserve(n);

  for (std::size_t s = 0; s < n; ++s) {
    if (x[s].size() != cfg_.input_dim)
      throw std::invalid_argument("forward: sample dimension does not match input_dim");

    std::vector<double> h = x[s];
    for (std::size_t l = 0; l < extractor_.size(); ++l) {
      std::vector<double> z;
      affine(extractor_[l], h, z);
      tanh_inplace(z);
      trace.extractor_act[l][s] = z;
      h = std::move(z);
    }
    out.features[s] = h;

    affine(softmax_head_, h, out.logits[s]);

    std::vector<double> e = h;
    for (std::size_t l = 0; l + 1 < edl_.size(); ++l) {
      std::vector<double> z;
      affine(edl_[l], e, z);
      tanh_inplace(z);
      trace.edl_act[l][s] = z;
      e = std::move(z);
    }
    std::vector<double> pre;
    affine(edl_.back(), e, pre);
    trace.evidence_pre[s] = pre;

    std::vector<double> alpha(cfg_.num_classes);
    for (std::size_t k = 0; k < cfg_.num_classes; ++k) alpha[k] = 1.0 + softplus(pre[k]);
    out.alpha.emplace_back(alpha);
  }
  return out;
}

void TwoHeadModel::backward(const ForwardTrace& trace, const Batch& grad_logits,
                            const Batch& grad_alpha, std::vector<double>& grad) const {
  if (grad.size() != params_.size())
    throw std::invalid_argument("backward: gradient buffer has wrong size");
  const std::size_t n = trace.input.size();
  if (!grad_logits.empty() && grad_logits.size() != n)
    throw std::invalid_argument("backward: grad_logits batch size mismatch");
  if (!grad_alpha.empty() && grad_alpha.size() != n)
    throw std::invalid_argument("backward: grad_alpha batch size mismatch");

  for (std::size_t s = 0; s < n; ++s) {
    const std::vector<double>& features = trace.extractor_act.back()[s];
    std::vector<double> dfeat(cfg_.feature_dim, 0.0);
    std::vector<double> dx;

    if (!grad_logits.empty()) {
      affine_backward(softmax_head_, features, grad_logits[s], dx, grad);
      for (std::size_t i = 0; i < dfeat.size(); ++i) dfeat[i] += dx[i];
    }

    if (!grad_alpha.empty()) {
      // d alpha / d pre = softplus'(pre) = sigmoid(pre)
      std::vector<double> dz(cfg_.num_classes);
      for (std::size_t k = 0; k < cfg_.num_classes; ++k)
        dz[k] = grad_alpha[s][k] * sigmoid(trace.evidence_pre[s][k]);
      for (std::size_t l = edl_.size(); l-- > 0;) {
        const std::vector<double>& in =
            l == 0 ? features : trace.edl_act[l - 1][s];
        affine_backward(edl_[l], in, dz, dx, grad);
        if (l > 0) {
          const std::vector<double>& a = trace.edl_act[l - 1][s];
          for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= 1.0 - a[i] * a[i];
        }
        dz = std::move(dx);
      }
      for (std::size_t i = 0; i < dfeat.size(); ++i) dfeat[i] += dz[i];
    }

    std::vector<double> dh = std::move(dfeat);
    for (std::size_t l = extractor_.size(); l-- > 0;) {
      const std::vector<double>& a = trace.extractor_act[l][s];
      for (std::size_t i = 0; i < dh.size(); ++i) dh[i] *= 1.0 - a[i] * a[i];
      const std::vector<double>& in = l == 0 ? trace.input[s] : trace.extractor_act[l - 1][s];
      affine_backward(extractor_[l], in, dh, dx, grad);
      dh = std::move(dx);
    }
  }
}

void TwoHeadModel::set_parameters(const std::vector<double>& p) {
  if (p.size() != params_.size())
    throw std::invalid_argument("set_parameters: expected " + std::to_string(params_.size()) +
                                " values, got " + std::to_string(p.size()));
  for (double v : p)
    if (!std::isfinite(v)) throw std::invalid_argument("set_parameters: non-finite value");
  params_ = p;
}

void SgdConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("SgdConfig: learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw std::invalid_argument("SgdConfig: momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay))
    throw std::invalid_argument("SgdConfig: weight_decay must be >= 0");
  if (total_steps == 0) throw std::invalid_argument("SgdConfig: total_steps must be >= 1");
}

SgdOptimizer::SgdOptimizer(const SgdConfig& cfg, std::size_t parameter_count)
    : cfg_(cfg), velocity_(parameter_count, 0.0) {
  cfg_.validate();
}

double SgdOptimizer::current_learning_rate() const {
  const double t = static_cast<double>(std::min(step_, cfg_.total_steps));
  const double frac = t / static_cast<double>(cfg_.total_steps);
  constexpr double kPi = 3.14159265358979323846;
  return cfg_.learning_rate * std::cos(7.0 * kPi * frac / 16.0);
}

void SgdOptimizer::step(TwoHeadModel& model, const std::vector<double>& grad) {
  if (grad.size() != velocity_.size())
    throw std::invalid_argument("sgd: gradient size mismatch");
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!std::isfinite(grad[i]))
      throw std::runtime_error("sgd: non-finite gradient at parameter " + std::to_string(i) +
                               " on step " + std::to_string(step_));

  const double lr = current_learning_rate();
  std::vector<double> p = model.parameters();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double g = grad[i] + cfg_.weight_decay * p[i];
    velocity_[i] = cfg_.momentum * velocity_[i] + g;
    p[i] -= lr * velocity_[i];
  }
  model.set_parameters(p);
  ++step_;
}

void SgdOptimizer::restore(std::size_t step, const std::vector<double>& velocity) {
  if (velocity.size() != velocity_.size())
    throw std::invalid_argument("sgd: momentum buffer size mismatch");
  step_ = step;
  velocity_ = velocity;
}

void save_checkpoint(const std::string& path, const TwoHeadModel& model,
                     const SgdOptimizer& opt, const std::string& rng_state) {
  nlohmann::json j;
  j["format_version"] = 1;
  const ModelConfig& mc = model.config();
  j["model"]["config"] = {{"input_dim", mc.input_dim},
                          {"extractor_hidden", mc.extractor_hidden},
                          {"feature_dim", mc.feature_dim},
                          {"edl_hidden", mc.edl_hidden},
                          {"num_classes", mc.num_classes}};
  j["model"]["parameters"] = model.parameters();
  const SgdConfig& oc = opt.config();
  j["optimizer"]["config"] = {{"learning_rate", oc.learning_rate},
                              {"momentum", oc.momentum},
                              {"weight_decay", oc.weight_decay},
                              {"total_steps", oc.total_steps}};
  j["optimizer"]["step_count"] = opt.step_count();
  j["optimizer"]["momentum_buffer"] = opt.momentum_buffer();
  j["rng"] = rng_state;

  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
  f << j.dump(2) << "\n";
  if (!f) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
  nlohmann::json j;
  f >> j;
  if (j.at("format_version").get<int>() != 1)
    throw std::runtime_error("load_checkpoint: unsupported format version");

  Checkpoint c;
  const auto& mc = j.at("model").at("config");
  c.model_config.input_dim = mc.at("input_dim").get<std::size_t>();
  c.model_config.extractor_hidden = mc.at("extractor_hidden").get<std::vector<std::size_t>>();
  c.model_config.feature_dim = mc.at("feature_dim").get<std::size_t>();
  c.model_config.edl_hidden = mc.at("edl_hidden").get<std::vector<std::size_t>>();
  c.model_config.num_classes = mc.at("num_classes").get<std::size_t>();
  c.parameters = j.at("model").at("parameters").get<std::vector<double>>();
  const auto& oc = j.at("optimizer").at("config");
  c.optimizer_config.learning_rate = oc.at("learning_rate").get<double>();
  c.optimizer_config.momentum = oc.at("momentum").get<double>();
  c.optimizer_config.weight_decay = oc.at("weight_decay").get<double>();
  c.optimizer_config.total_steps = oc.at("total_steps").get<std::size_t>();
  c.step_count = j.at("optimizer").at("step_count").get<std::size_t>();
  c.momentum = j.at("optimizer").at("momentum_buffer").get<std::vector<double>>();
  c.rng_state = j.at("rng").get<std::string>();
  return c;
}

TwoHeadModel model_from_checkpoint(const Checkpoint& ckpt) {
  TwoHeadModel model(ckpt.model_config, 0);
  model.set_parameters(ckpt.parameters);
  return model;
}

}  // namespace anedl
