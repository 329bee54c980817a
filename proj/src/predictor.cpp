#include "uniedge/predictor.hpp"

#include <cmath>
#include <string_view>
#include <numbers>
#include <random>

#include "uniedge/dataio.hpp"
#include "uniedge/errors.hpp"
#include "uniedge/rng.hpp"

namespace uniedge {

void EncoderConfig::validate() const {
  if (layers < 1 || heads < 1 || model_dim < 1 || ffn_dim < 1) {
    throw BadConfig("encoder sizes must be positive");
  }
  if (model_dim % heads != 0) {
    throw BadConfig("encoder.dim (" + std::to_string(model_dim) + ") must be divisible by encoder.heads (" +
                    std::to_string(heads) + ")");
  }
}

Var stack_and_pool(std::span<const Var> patch_embeddings, std::size_t num_peds, std::size_t length) {
  if (patch_embeddings.empty()) throw ShapeMismatch("no patch embeddings to pool");
  std::vector<Var> pooled;
  pooled.reserve(patch_embeddings.size());
  for (const Var& h : patch_embeddings) {
    if (h.shape().size() != 2 || h.dim(0) != num_peds * length) {
      throw ShapeMismatch("patch embedding " + to_string(h.shape()) + " is not [N * L, D] for N = " +
                          std::to_string(num_peds) + ", L = " + std::to_string(length));
    }
    pooled.push_back(mean(reshape(h, {num_peds, length, h.dim(1)}), 1, true));
  }
  return concat(pooled, 1);
}

Var assemble_tokens(Var history, Var placeholders, Var positions) {
  Graph& g = *history.graph;
  if (history.shape().size() != 3) throw ShapeMismatch("history tokens must be [N, K, D]");
  const std::size_t n = history.dim(0), k = history.dim(1), d = history.dim(2);
  if (placeholders.shape().size() != 2 || placeholders.dim(1) != d) {
    throw ShapeMismatch("placeholders " + to_string(placeholders.shape()) + " do not match width " +
                        std::to_string(d));
  }
  const std::size_t t_pred = placeholders.dim(0);
  if (positions.shape() != Shape{k + t_pred, d}) {
    throw ShapeMismatch("positional table " + to_string(positions.shape()) + " is not [" +
                        std::to_string(k + t_pred) + ", " + std::to_string(d) + "]");
  }
  Var future = g.constant(Tensor({n, t_pred, d}, 0.0)) + placeholders;
  const Var parts[] = {history, future};
  return concat(parts, 1) + positions;
}

namespace {

std::string layer_key(std::size_t layer, const char* name) {
  return "encoder.layer" + std::to_string(layer) + "." + name;
}

Var linear(Graph& g, Var x, const ParameterStore& params, const std::string& w, const std::string& b) {
  return matmul(x, g.parameter(params[w])) + g.parameter(params[b]);
}

Var layer_norm(Graph& g, Var x, const ParameterStore& params, const std::string& prefix) {
  const std::size_t last = x.shape().size() - 1;
  Var centered = x - mean(x, last, true);
  Var var = mean(centered * centered, last, true);
  Var normed = centered * pow_scalar(add_scalar(var, 1e-5), -0.5);
  return normed * g.parameter(params[prefix + ".gamma"]) + g.parameter(params[prefix + ".beta"]);
}

}  // namespace

void declare_encoder_parameters(ParameterStore& store, const EncoderConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t d = cfg.model_dim, f = cfg.ffn_dim;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    for (const char* name : {"wq", "wk", "wv", "wo"}) {
      store.declare(layer_key(l, name), glorot_uniform({d, d}, d, d, rng));
      // A key bias shifts every score of a softmax row equally, so it is omitted.
      if (std::string_view(name) != "wk") store.declare(layer_key(l, name) + ".b", Tensor({d}, 0.0));
    }
    store.declare(layer_key(l, "ln1.gamma"), Tensor({d}, 1.0));
    store.declare(layer_key(l, "ln1.beta"), Tensor({d}, 0.0));
    store.declare(layer_key(l, "ffn1"), glorot_uniform({d, f}, d, f, rng));
    store.declare(layer_key(l, "ffn1.b"), Tensor({f}, 0.0));
    store.declare(layer_key(l, "ffn2"), glorot_uniform({f, d}, f, d, rng));
    store.declare(layer_key(l, "ffn2.b"), Tensor({d}, 0.0));
    store.declare(layer_key(l, "ln2.gamma"), Tensor({d}, 1.0));
    store.declare(layer_key(l, "ln2.beta"), Tensor({d}, 0.0));
  }
}

EncoderOutput encoder_forward(Var tokens, const EncoderConfig& cfg, const ParameterStore& params) {
  cfg.validate();
  Graph& g = *tokens.graph;
  if (tokens.shape().size() != 3 || tokens.dim(2) != cfg.model_dim) {
    throw ShapeMismatch("encoder tokens " + to_string(tokens.shape()) + " are not [N, S, " +
                        std::to_string(cfg.model_dim) + "]");
  }
  const std::size_t n = tokens.dim(0), s = tokens.dim(1), d = cfg.model_dim, h = cfg.heads;
  const std::size_t dh = d / h;
  EncoderOutput out;
  Var x = tokens;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    auto project = [&](const char* name) {
      Var y = std::string_view(name) == "wk" ? matmul(x, g.parameter(params[layer_key(l, name)]))
                                              : linear(g, x, params, layer_key(l, name), layer_key(l, name) + ".b");
      return reshape(y, {n, s, h, dh});
    };
    Var q = transpose(project("wq"), {0, 2, 1, 3});
    Var k = transpose(project("wk"), {0, 2, 3, 1});
    Var v = transpose(project("wv"), {0, 2, 1, 3});
    Var att = softmax(scale(matmul(q, k), 1.0 / std::sqrt(static_cast<double>(dh))));
    out.attention.push_back(att);
    Var ctx = reshape(transpose(matmul(att, v), {0, 2, 1, 3}), {n, s, d});
    Var attended = linear(g, ctx, params, layer_key(l, "wo"), layer_key(l, "wo") + ".b");
    x = layer_norm(g, x + attended, params, layer_key(l, "ln1"));
    Var hidden = relu(linear(g, x, params, layer_key(l, "ffn1"), layer_key(l, "ffn1.b")));
    Var ff = linear(g, hidden, params, layer_key(l, "ffn2"), layer_key(l, "ffn2.b"));
    x = layer_norm(g, x + ff, params, layer_key(l, "ln2"));
  }
  out.output = x;
  return out;
}

void declare_head_parameters(ParameterStore& store, std::size_t model_dim, Rng& rng) {
  // Near-zero output layer: training starts from mu = 0, sigma = 1, rho = 0.
  Tensor w = glorot_uniform({model_dim, 5}, model_dim, 5, rng);
  for (double& v : w.data()) v *= kHeadInitScale;
  store.declare("head.w", std::move(w));
  store.declare("head.b", Tensor({5}, 0.0));
}

void HeadConfig::validate() const {
  if (!(sigma_floor >= 0.0)) throw BadConfig("head.sigma_floor must be non-negative");
  if (!(rho_limit > 0.0 && rho_limit < 1.0)) throw BadConfig("head.rho_limit must lie in (0, 1)");
}

GaussianHead gaussian_head(Var future_repr, const ParameterStore& params, const HeadConfig& cfg) {
  Graph& g = *future_repr.graph;
  if (future_repr.shape().size() != 3) throw ShapeMismatch("Gaussian head expects [N, T, D]");
  Var raw = matmul(future_repr, g.parameter(params["head.w"])) + g.parameter(params["head.b"]);
  Var log_sigma = slice(raw, 2, 2, 4);
  if (cfg.sigma_floor > 0.0) log_sigma = log(add_scalar(exp(log_sigma), cfg.sigma_floor));
  return {slice(raw, 2, 0, 2), log_sigma, scale(tanh(slice(raw, 2, 4, 5)), cfg.rho_limit)};
}

Var bivariate_nll(const GaussianHead& head, const Tensor& targets) {
  Graph& g = *head.mu.graph;
  if (targets.shape() != head.mu.shape()) {
    throw ShapeMismatch("targets " + to_string(targets.shape()) + " do not match predictions " +
                        to_string(head.mu.shape()));
  }
  const std::size_t last = 2;
  Var normalized = (g.constant(targets) - head.mu) * exp(neg(head.log_sigma));
  Var nx = slice(normalized, last, 0, 1);
  Var ny = slice(normalized, last, 1, 2);
  Var one_minus = add_scalar(neg(head.rho * head.rho), 1.0);
  Var quad = nx * nx + ny * ny - scale(head.rho * nx * ny, 2.0);
  Var nll = add_scalar(sum(head.log_sigma, last, true) + scale(log(one_minus), 0.5) +
                           scale(quad / one_minus, 0.5),
                       std::log(2.0 * std::numbers::pi));
  return mean(nll);
}

double bivariate_nll_scalar(double x, double y, double mux, double muy, double sx, double sy, double rho) {
  const double dx = (x - mux) / sx, dy = (y - muy) / sy;
  const double one_minus = 1.0 - rho * rho;
  const double quad = dx * dx + dy * dy - 2.0 * rho * dx * dy;
  return std::log(2.0 * std::numbers::pi) + std::log(sx) + std::log(sy) + 0.5 * std::log(one_minus) +
         0.5 * quad / one_minus;
}

GaussianTrack to_track(const GaussianHead& head) {
  const Tensor& mu = head.mu.value();
  const Tensor& log_sigma = head.log_sigma.value();
  const Tensor& rho = head.rho.value();
  const std::size_t n = mu.dim(0), t = mu.dim(1);
  GaussianTrack track{mu, Tensor(log_sigma.shape()), Tensor({n, t})};
  for (std::size_t i = 0; i < log_sigma.size(); ++i) track.sigma[i] = std::exp(log_sigma[i]);
  for (std::size_t i = 0; i < rho.size(); ++i) track.rho[i] = rho[i];
  return track;
}

Tensor sample_trajectories(const GaussianTrack& track, const Tensor& origin, std::size_t count,
                           std::uint64_t seed) {
  const std::size_t n = track.num_peds(), t = track.steps();
  if (count < 1) throw Error("sample count must be positive");
  Tensor disp({count, n, t, 2});
  for (std::size_t s = 0; s < count; ++s) {
    Rng rng = make_stream(seed, "sample", s);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t k = 0; k < t; ++k) {
        const double z1 = unit(rng), z2 = unit(rng);
        const double sx = track.sigma.at({p, k, 0}), sy = track.sigma.at({p, k, 1});
        const double r = track.rho.at({p, k});
        // Cholesky factor of [[sx^2, r sx sy], [r sx sy, sy^2]].
        disp.at({s, p, k, 0}) = track.mu.at({p, k, 0}) + sx * z1;
        disp.at({s, p, k, 1}) = track.mu.at({p, k, 1}) + sy * (r * z1 + std::sqrt(1.0 - r * r) * z2);
      }
    }
  }
  return integrate_displacements(origin, disp);
}

}  // namespace uniedge
