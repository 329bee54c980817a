#include "uniedge/fixtures.hpp"

#include <cmath>
#include <random>

#include "uniedge/rng.hpp"

namespace uniedge {

ModelConfig tiny_model_config(std::size_t t_obs, std::size_t t_pred) {
  ModelConfig cfg;
  cfg.t_obs = t_obs;
  cfg.t_pred = t_pred;
  cfg.embed_dim = 4;
  cfg.node_dim = 8;
  cfg.encoder.model_dim = 8;
  cfg.encoder.heads = 2;
  cfg.encoder.ffn_dim = 16;
  return cfg;
}

Window two_pedestrian_window(std::size_t t_obs, std::size_t t_pred) {
  Tensor obs({2, t_obs, 2}), fut({2, t_pred, 2});
  auto put = [&](std::size_t p, std::size_t t, double x, double y) {
    Tensor& dst = t < t_obs ? obs : fut;
    const std::size_t slot = t < t_obs ? t : t - t_obs;
    dst.at({p, slot, 0}) = x;
    dst.at({p, slot, 1}) = y;
  };
  for (std::size_t t = 0; t < t_obs + t_pred; ++t) {
    const double s = static_cast<double>(t);
    put(0, t, 0.5 * s, 0.8 * std::sin(0.9 * s));
    put(1, t, 2.0 * std::cos(0.5 * s) + 0.1 * s, 2.0 * std::sin(0.5 * s) * (1.0 + 0.1 * s));
  }
  Window w = make_window({1, 2}, std::move(obs), std::move(fut));
  w.scene = "fixture";
  return w;
}

ParameterStore gradcheck_parameters(const ModelConfig& cfg, std::uint64_t seed) {
  ParameterStore params = init_parameters(cfg, seed);
  Rng rng = make_stream(seed, "gradcheck");
  std::uniform_real_distribution<double> dist(-0.3, 0.3);
  for (Parameter& p : params) {
    if (p.name.ends_with(".b") || p.name.starts_with("head.")) {
      for (double& v : p.value.data()) v = dist(rng);
    }
  }
  return params;
}

}  // namespace uniedge
