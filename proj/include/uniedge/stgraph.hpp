#pragma once

#include <cstddef>
#include <vector>

#include "uniedge/autodiff.hpp"
#include "uniedge/dataio.hpp"
#include "uniedge/linalg.hpp"
#include "uniedge/params.hpp"

namespace uniedge {

struct PatchingConfig {
  std::size_t length = 3;  // L
  std::size_t stride = 1;  // S
};

// K = floor((t_obs - L) / S) + 1. Throws PatchTooLong when L > t_obs.
std::size_t patch_count(std::size_t t_obs, const PatchingConfig& cfg);

struct PatchSpan {
  std::size_t k;      // 1-based patch index
  std::size_t begin;  // first observed slot covered
  std::size_t end;    // one past the last slot
};

std::vector<PatchSpan> patch_spans(std::size_t t_obs, const PatchingConfig& cfg);

enum class AdjacencyMode {
  complete,
  // Pairs closer than a threshold, plus each pedestrian's consecutive slots.
  distance,
};

struct NodeGraphConfig {
  AdjacencyMode mode = AdjacencyMode::complete;
  double distance_threshold = 2.0;
};

// One temporal patch as a unified spatial-temporal graph. Nodes are laid out
// pedestrian-major: node = ped * length + local_time.
struct UnifiedPatch {
  std::size_t k = 1;
  std::size_t begin = 0;
  std::size_t num_peds = 0;
  std::size_t length = 0;
  Var features;      // [N * L, D]
  Matrix adjacency;  // [N * L, N * L], symmetric 0/1, zero diagonal
  Tensor positions;  // [N * L, 2] absolute position of each node

  std::size_t num_nodes() const { return num_peds * length; }
};

// Splits features [N, t_obs, D] of window `w` into K patches.
std::vector<UnifiedPatch> segment_patches(Var features, const Window& w, const PatchingConfig& cfg,
                                          const NodeGraphConfig& graph_cfg = {});

// Complete graph over the N * L nodes of a patch.
Matrix build_node_adjacency(std::size_t num_peds, std::size_t length);
Matrix build_distance_adjacency(const Tensor& positions, std::size_t num_peds, std::size_t length,
                                double threshold);
// Conventional layout for comparison: complete spatial graph inside each time
// slot plus a temporal chain per pedestrian.
Matrix build_st_adjacency(std::size_t num_peds, std::size_t length);

std::size_t edge_count(const Matrix& adjacency);

struct GatWeights {
  Var theta_self;  // [D, D'] transform of the attending node
  Var theta;       // [D, D'] transform of the neighbour, also the message
  Var attention;   // [D']
};

void declare_gat_parameters(ParameterStore& store, std::size_t in_dim, std::size_t out_dim, Rng& rng);
GatWeights gat_weights(Graph& g, const ParameterStore& params);

struct GatOutput {
  Var output;     // [n, D']
  Var attention;  // [n, n]; rows sum to 1 over N(i) and i itself
};

// Single-head graph attention:
//   e_ij  = a . LeakyReLU_0.2(theta_self z_i + theta z_j)
//   alpha = softmax_j over N(i) + {i}
//   out_i = ELU(sum_j alpha_ij theta z_j)
GatOutput gat_layer(Var z, const Matrix& adjacency, const GatWeights& w);

inline constexpr double kGatSlope = 0.2;

Matrix graph_laplacian(const Matrix& adjacency);
// Pseudoinverse by eigendecomposition; eigenvalues with |lambda| below
// 1e-9 * lambda_max are treated as zero.
Matrix laplacian_pseudoinverse(const Matrix& adjacency);
// Component label per node (labels are 0-based, in order of first node).
std::vector<std::size_t> connected_components(const Matrix& adjacency);

// R_ij = (e_i - e_j)^T L^+ (e_i - e_j). Throws Disconnected when i and j lie
// in different components.
double effective_resistance(const Matrix& adjacency, std::size_t i, std::size_t j);
// Same, reusing a precomputed pseudoinverse.
double effective_resistance(const Matrix& pinv, const std::vector<std::size_t>& components,
                            std::size_t i, std::size_t j);

}  // namespace uniedge
