#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "anedl/dirichlet.hpp"

// A small two-head dense network: a shared tanh feature extractor feeding a
// linear classification head (logits) and an evidential head whose softplus
// output becomes a Dirichlet concentration via alpha = evidence + 1.
// Parameters live in one flat vector so gradient checks and the optimizer can
// treat the model as a plain R^n -> R function.

namespace anedl {

struct ModelConfig {
  std::size_t input_dim = 2;
  std::vector<std::size_t> extractor_hidden = {32};
  std::size_t feature_dim = 16;
  std::vector<std::size_t> edl_hidden = {32, 32};
  std::size_t num_classes = 4;

  void validate() const;  // throws std::invalid_argument
};

using Batch = std::vector<std::vector<double>>;  // row-major samples

struct ForwardResult {
  Batch logits;
  std::vector<ConcentrationVector> alpha;
  Batch features;
};

// Intermediate activations captured during a training forward pass, enough to
// run backward without recomputation. Tanh layers store only their outputs
// (the derivative is 1 - a^2); the evidence layer stores its pre-activation.
struct ForwardTrace {
  Batch input;
  std::vector<Batch> extractor_act;  // one entry per extractor layer
  std::vector<Batch> edl_act;        // hidden layers of the evidential head
  Batch evidence_pre;
};

class TwoHeadModel {
 public:
  TwoHeadModel(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }

  ForwardResult forward(const Batch& x) const;
  ForwardResult forward(const Batch& x, ForwardTrace& trace) const;

  // Accumulates parameter gradients into grad (sized parameter_count()).
  // grad_logits / grad_alpha hold per-sample upstream gradients; either may be
  // empty to mean "all zero" for that head.
  void backward(const ForwardTrace& trace, const Batch& grad_logits, const Batch& grad_alpha,
                std::vector<double>& grad) const;

  std::size_t parameter_count() const { return params_.size(); }
  const std::vector<double>& parameters() const { return params_; }
  void set_parameters(const std::vector<double>& p);

 private:
  struct LayerSpec {
    std::size_t in = 0, out = 0;
    std::size_t w_off = 0, b_off = 0;  // offsets into the flat parameter vector
  };

  void affine(const LayerSpec& l, const std::vector<double>& x, std::vector<double>& y) const;
  void affine_backward(const LayerSpec& l, const std::vector<double>& x,
                       const std::vector<double>& dy, std::vector<double>& dx,
                       std::vector<double>& grad) const;

  ModelConfig cfg_;
  std::vector<LayerSpec> extractor_;
  LayerSpec softmax_head_;
  std::vector<LayerSpec> edl_;
  std::vector<double> params_;
};

struct SgdConfig {
  double learning_rate = 0.03;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::size_t total_steps = 1;

  void validate() const;  // throws std::invalid_argument
};

// SGD with momentum, classic L2 weight decay (added to the gradient), and a
// slow cosine decay ending at cos(7 pi / 16) of the initial rate rather than
// at zero.
class SgdOptimizer {
 public:
  SgdOptimizer(const SgdConfig& cfg, std::size_t parameter_count);

  double current_learning_rate() const;
  std::size_t step_count() const { return step_; }
  const SgdConfig& config() const { return cfg_; }

  // Applies one update; throws std::runtime_error on any non-finite gradient.
  void step(TwoHeadModel& model, const std::vector<double>& grad);

  const std::vector<double>& momentum_buffer() const { return velocity_; }
  void restore(std::size_t step, const std::vector<double>& velocity);

 private:
  SgdConfig cfg_;
  std::vector<double> velocity_;
  std::size_t step_ = 0;
};

// Serializes model parameters, optimizer state and the caller's RNG state to
// a single JSON file, and restores them exactly (bit-identical doubles).
void save_checkpoint(const std::string& path, const TwoHeadModel& model,
                     const SgdOptimizer& opt, const std::string& rng_state);

struct Checkpoint {
  ModelConfig model_config;
  std::vector<double> parameters;
  SgdConfig optimizer_config;
  std::size_t step_count = 0;
  std::vector<double> momentum;
  std::string rng_state;
};

Checkpoint load_checkpoint(const std::string& path);

TwoHeadModel model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace anedl
