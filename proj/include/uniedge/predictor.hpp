#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uniedge/autodiff.hpp"
#include "uniedge/params.hpp"
#include "uniedge/tensor.hpp"

namespace uniedge {

struct EncoderConfig {
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t model_dim = 256;
  std::size_t ffn_dim = 512;

  void validate() const;
};

// Mean over each pedestrian's L node embeddings of every patch.
// patch_embeddings: K tensors of shape [N * L, D] (pedestrian-major).
// Returns [N, K, D].
Var stack_and_pool(std::span<const Var> patch_embeddings, std::size_t num_peds, std::size_t length);

// [H || F] + P. history: [N, K, D]; placeholders: [T_pred, D] shared by all
// pedestrians; positions: [K + T_pred, D]. Returns [N, K + T_pred, D].
Var assemble_tokens(Var history, Var placeholders, Var positions);

void declare_encoder_parameters(ParameterStore& store, const EncoderConfig& cfg, Rng& rng);

struct EncoderOutput {
  Var output;                  // [N, S, D]
  std::vector<Var> attention;  // per layer, [N, heads, S, S]
};

// Post-norm transformer encoder with full temporal attention inside each
// pedestrian's sequence; pedestrians never attend to one another.
EncoderOutput encoder_forward(Var tokens, const EncoderConfig& cfg, const ParameterStore& params);

inline constexpr double kRhoLimit = 0.999;
inline constexpr double kHeadInitScale = 0.01;

void declare_head_parameters(ParameterStore& store, std::size_t model_dim, Rng& rng);

struct HeadConfig {
  // sigma = sigma_floor + exp(raw); zero gives the plain exponential.
  double sigma_floor = 0.0;
  // rho = rho_limit * tanh(raw).
  double rho_limit = kRhoLimit;

  void validate() const;
};

// Bi-variate Gaussian parameters per pedestrian and future step.
struct GaussianHead {
  Var mu;         // [N, T, 2]
  Var log_sigma;  // [N, T, 2]
  Var rho;        // [N, T, 1], |rho| <= rho_limit < 1
};

GaussianHead gaussian_head(Var future_repr, const ParameterStore& params, const HeadConfig& cfg = {});

// Mean over pedestrians and steps of -log N(target | mu, sigma, rho), computed
// in log space. targets: [N, T, 2] per-step displacements.
Var bivariate_nll(const GaussianHead& head, const Tensor& targets);

// Plain-double negative log density of one bi-variate Gaussian observation.
double bivariate_nll_scalar(double x, double y, double mux, double muy, double sx, double sy, double rho);

struct GaussianTrack {
  Tensor mu;     // [N, T, 2]
  Tensor sigma;  // [N, T, 2]
  Tensor rho;    // [N, T]

  std::size_t num_peds() const { return mu.dim(0); }
  std::size_t steps() const { return mu.dim(1); }
};

GaussianTrack to_track(const GaussianHead& head);

// count x [N, T, 2] absolute positions. Each sample draws from its own stream
// derived from (seed, sample index); displacements are integrated from
// `origin` ([N, 2]).
Tensor sample_trajectories(const GaussianTrack& track, const Tensor& origin, std::size_t count,
                           std::uint64_t seed);

}  // namespace uniedge
