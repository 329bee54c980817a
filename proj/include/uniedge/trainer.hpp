#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "uniedge/dataio.hpp"
#include "uniedge/model.hpp"
#include "uniedge/params.hpp"

namespace uniedge {

// ---- optimizer -------------------------------------------------------------

struct AdamWHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::uint64_t step = 0;
  double base_lr = 1e-3;
  double weight_decay = 1e-4;
  AdamWHyper hyper{};
};

OptimizerState make_optimizer(const ParameterStore& params, double base_lr, double weight_decay = 1e-4);

// Bias-corrected adaptive-moment update with decoupled weight decay:
//   w <- w - lr * decay * w - lr * m_hat / (sqrt(v_hat) + eps)
// Throws NonFiniteGradient (and leaves everything untouched) if any gradient
// entry is NaN or infinite.
void optimizer_step(ParameterStore& params, const GradientSet& grads, OptimizerState& state, double lr);

// ---- schedule and metrics --------------------------------------------------

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 128;
  double base_lr = 1e-3;
  std::size_t lr_halve_every = 50;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;
  bool augment = false;
  std::size_t eval_samples = 20;
  std::size_t eval_every = 1;
};

// base_lr * 0.5^floor(epoch / lr_halve_every)
double lr_at(std::size_t epoch, const TrainConfig& cfg);

struct DisplacementError {
  double ade = 0.0;
  double fde = 0.0;
};

// pred, truth: [N, T, 2].
DisplacementError ade_fde(const Tensor& pred, const Tensor& truth);

// samples: [K, N, T, 2]. Per pedestrian, the sample with the smallest ADE is
// kept; returns the mean ADE and FDE of the kept samples.
DisplacementError best_of_k_eval(const Tensor& samples, const Tensor& truth);
// Index of the chosen sample per pedestrian.
std::vector<std::size_t> best_of_k_choice(const Tensor& samples, const Tensor& truth);

// ---- evaluation and training -----------------------------------------------

struct EvalResult {
  double ade = 0.0;
  double fde = 0.0;
  std::size_t n_windows = 0;
};

// Best-of-`samples` errors averaged over all pedestrians of all windows.
// Window i samples from the stream (seed, "eval", i).
EvalResult evaluate(const std::vector<Window>& windows, const ModelConfig& model, const ParameterStore& params,
                    std::size_t samples, std::uint64_t seed);

struct EpochMetrics {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  std::optional<EvalResult> eval;
};

struct TrainSinks {
  std::optional<std::filesystem::path> checkpoint;
  std::ostream* metrics = nullptr;  // one JSON object per line
  std::function<void(const EpochMetrics&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochMetrics> history;
};

// Mean loss of a batch and its averaged gradients.
struct BatchGradient {
  double loss = 0.0;
  GradientSet grads;
};

BatchGradient batch_gradient(const std::vector<const Window*>& batch, const ModelConfig& model,
                             const ParameterStore& params);

// Full-batch-per-step training loop. Deterministic given cfg.seed. Writes the
// checkpoint after every epoch; on NonFiniteGradient the previous checkpoint
// is left in place and the exception propagates.
TrainResult train(const std::vector<Window>& train_windows, const std::vector<Window>& eval_windows,
                  const ModelConfig& model, const TrainConfig& cfg, ParameterStore& params,
                  const TrainSinks& sinks = {});

std::string metrics_json(const EpochMetrics& m);

}  // namespace uniedge
