#include "uniedge/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "uniedge/checkpoint.hpp"
#include "uniedge/errors.hpp"
#include "uniedge/rng.hpp"

namespace uniedge {

OptimizerState make_optimizer(const ParameterStore& params, double base_lr, double weight_decay) {
  OptimizerState s;
  s.first_moment = params.zeros_like();
  s.second_moment = params.zeros_like();
  s.base_lr = base_lr;
  s.weight_decay = weight_decay;
  return s;
}

void optimizer_step(ParameterStore& params, const GradientSet& grads, OptimizerState& state, double lr) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size()) {
    throw ShapeMismatch("optimizer state does not match the parameter store");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].shape() != params.at(i).value.shape()) {
      throw ShapeMismatch("gradient for " + params.at(i).name + " has shape " + to_string(grads[i].shape()));
    }
    if (!grads[i].all_finite()) throw NonFiniteGradient("non-finite gradient for " + params.at(i).name);
  }
  ++state.step;
  const auto& h = state.hyper;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    auto w = params.at(i).value.data();
    auto m = state.first_moment[i].data();
    auto v = state.second_moment[i].data();
    auto g = grads[i].data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = h.beta1 * m[j] + (1.0 - h.beta1) * g[j];
      v[j] = h.beta2 * v[j] + (1.0 - h.beta2) * g[j] * g[j];
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      w[j] -= lr * state.weight_decay * w[j];
      w[j] -= lr * m_hat / (std::sqrt(v_hat) + h.eps);
    }
  }
}

double lr_at(std::size_t epoch, const TrainConfig& cfg) {
  if (cfg.lr_halve_every == 0) return cfg.base_lr;
  return cfg.base_lr * std::pow(0.5, static_cast<double>(epoch / cfg.lr_halve_every));
}

namespace {

void check_track_shapes(const Tensor& pred, const Tensor& truth) {
  if (pred.shape() != truth.shape() || pred.rank() != 3 || pred.dim(2) != 2) {
    throw ShapeMismatch("prediction " + to_string(pred.shape()) + " and truth " + to_string(truth.shape()) +
                        " must both be [N, T, 2]");
  }
}

double point_error(const double* a, const double* b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

}  // namespace

DisplacementError ade_fde(const Tensor& pred, const Tensor& truth) {
  check_track_shapes(pred, truth);
  const std::size_t n = pred.dim(0), t = pred.dim(1);
  DisplacementError e;
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t k = 0; k < t; ++k) {
      const std::size_t idx = (p * t + k) * 2;
      const double err = point_error(&pred.data()[idx], &truth.data()[idx]);
      e.ade += err;
      if (k + 1 == t) e.fde += err;
    }
  }
  e.ade /= static_cast<double>(n * t);
  e.fde /= static_cast<double>(n);
  return e;
}

std::vector<std::size_t> best_of_k_choice(const Tensor& samples, const Tensor& truth) {
  if (samples.rank() != 4 || samples.dim(0) < 1) throw ShapeMismatch("samples must be [K, N, T, 2]");
  const std::size_t k = samples.dim(0), n = samples.dim(1), t = samples.dim(2);
  check_track_shapes(Tensor({n, t, 2}), truth);
  if (samples.dim(3) != 2) throw ShapeMismatch("samples must be [K, N, T, 2]");
  std::vector<std::size_t> choice(n, 0);
  for (std::size_t p = 0; p < n; ++p) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < k; ++s) {
      double total = 0.0;
      for (std::size_t step = 0; step < t; ++step) {
        total += point_error(&samples.data()[((s * n + p) * t + step) * 2], &truth.data()[(p * t + step) * 2]);
      }
      if (total < best) {
        best = total;
        choice[p] = s;
      }
    }
  }
  return choice;
}

DisplacementError best_of_k_eval(const Tensor& samples, const Tensor& truth) {
  const auto choice = best_of_k_choice(samples, truth);
  const std::size_t n = samples.dim(1), t = samples.dim(2);
  Tensor chosen({n, t, 2});
  for (std::size_t p = 0; p < n; ++p) {
    std::copy_n(samples.data().data() + (choice[p] * n + p) * t * 2, t * 2, chosen.data().data() + p * t * 2);
  }
  return ade_fde(chosen, truth);
}

EvalResult evaluate(const std::vector<Window>& windows, const ModelConfig& model, const ParameterStore& params,
                    std::size_t samples, std::uint64_t seed) {
  EvalResult r;
  std::size_t peds = 0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const Window& w = windows[i];
    const GaussianTrack track = predict_track(w, model, params);
    Rng stream = make_stream(seed, "eval", i);
    const Tensor drawn = sample_trajectories(track, w.origin, samples, stream());
    const DisplacementError e = best_of_k_eval(drawn, w.fut);
    r.ade += e.ade * static_cast<double>(w.num_peds());
    r.fde += e.fde * static_cast<double>(w.num_peds());
    peds += w.num_peds();
  }
  if (peds > 0) {
    r.ade /= static_cast<double>(peds);
    r.fde /= static_cast<double>(peds);
  }
  r.n_windows = windows.size();
  return r;
}

BatchGradient batch_gradient(const std::vector<const Window*>& batch, const ModelConfig& model,
                             const ParameterStore& params) {
  if (batch.empty()) throw Error("empty batch");
  BatchGradient out;
  out.grads = params.zeros_like();
  const double weight = 1.0 / static_cast<double>(batch.size());
  for (const Window* w : batch) {
    Graph g;
    Var loss = window_loss(g, *w, model, params);
    g.backward(loss);
    out.loss += weight * loss.value().item();
    accumulate(out.grads, g.parameter_gradients(params), weight);
  }
  return out;
}

std::string metrics_json(const EpochMetrics& m) {
  nlohmann::ordered_json j;
  j["epoch"] = m.epoch;
  j["lr"] = m.lr;
  j["train_loss"] = m.train_loss;
  if (m.eval) {
    j["eval_ade"] = m.eval->ade;
    j["eval_fde"] = m.eval->fde;
    j["eval_windows"] = m.eval->n_windows;
  }
  return j.dump();
}

TrainResult train(const std::vector<Window>& train_windows, const std::vector<Window>& eval_windows,
                  const ModelConfig& model, const TrainConfig& cfg, ParameterStore& params,
                  const TrainSinks& sinks) {
  if (train_windows.empty()) throw Error("training needs at least one window");
  if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.base_lr > 0.0) || cfg.eval_samples < 1) {
    throw BadConfig("train.epochs, train.batch_size, train.base_lr and eval.samples must be positive");
  }
  OptimizerState opt = make_optimizer(params, cfg.base_lr, cfg.weight_decay);
  Rng batching = make_stream(cfg.seed, "batching");
  Rng augmenting = make_stream(cfg.seed, "augment");
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);

  TrainResult result;
  std::vector<std::size_t> order(train_windows.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    EpochMetrics m;
    m.epoch = epoch;
    m.lr = lr_at(epoch, cfg);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), batching);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::vector<Window> augmented;
      std::vector<const Window*> batch;
      if (cfg.augment) {
        augmented.reserve(stop - start);
        for (std::size_t i = start; i < stop; ++i) {
          augmented.push_back(rotate_window(train_windows[order[i]], angle(augmenting)));
        }
        for (const auto& w : augmented) batch.push_back(&w);
      } else {
        for (std::size_t i = start; i < stop; ++i) batch.push_back(&train_windows[order[i]]);
      }
      BatchGradient bg;
      try {
        bg = batch_gradient(batch, model, params);
      } catch (const NonFinite& e) {
        throw NonFiniteGradient(std::string("epoch ") + std::to_string(epoch) + ": " + e.what());
      }
      optimizer_step(params, bg.grads, opt, m.lr);
      loss_sum += bg.loss * static_cast<double>(batch.size());
    }
    m.train_loss = loss_sum / static_cast<double>(order.size());

    const bool last = epoch + 1 == cfg.epochs;
    if (!eval_windows.empty() && cfg.eval_every > 0 && ((epoch + 1) % cfg.eval_every == 0 || last)) {
      m.eval = evaluate(eval_windows, model, params, cfg.eval_samples, cfg.seed);
    }
    if (sinks.checkpoint) save_checkpoint(*sinks.checkpoint, params);
    if (sinks.metrics) *sinks.metrics << metrics_json(m) << '\n' << std::flush;
    if (sinks.on_epoch) sinks.on_epoch(m);
    result.history.push_back(m);
  }
  return result;
}

}  // namespace uniedge
