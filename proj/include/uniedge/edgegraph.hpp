#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "uniedge/autodiff.hpp"
#include "uniedge/linalg.hpp"
#include "uniedge/params.hpp"

namespace uniedge {

using Edge = std::pair<std::size_t, std::size_t>;

// Signed node-edge incidence matrix. Edges are oriented low -> high index and
// ordered lexicographically; column e has -1 at edges[e].first and +1 at
// edges[e].second.
struct BoundaryOperator {
  Matrix b1;  // [|V|, |E|]
  std::vector<Edge> edges;

  std::size_t num_nodes() const { return static_cast<std::size_t>(b1.rows()); }
  std::size_t num_edges() const { return edges.size(); }
};

BoundaryOperator boundary_operator(const Matrix& adjacency);

// Line graph: edges e != f are adjacent iff they share exactly one endpoint.
Matrix line_graph(std::span<const Edge> edges);

// L1 = B1^T B1. Higher-order simplices are not modelled, so the B2 term is zero.
Matrix hodge_laplacian(const BoundaryOperator& boundary);

// Largest eigenvalue estimate by power iteration (deterministic start),
// floored at `floor`.
double spectral_radius(const Matrix& op, std::size_t iterations = 50, double floor = 1e-6);

// Laguerre polynomials Gamma_0..Gamma_{J-1} at a scalar via the three-term
// recurrence.
std::vector<double> laguerre_scalar(double lambda, std::size_t order);

// Operator form of the same recurrence applied to X ([|E|, D]):
//   T_0 = X, T_1 = X - L X, T_{j+1} = ((2j + 1) T_j - L T_j - j T_{j-1}) / (j + 1).
std::vector<Var> laguerre_basis(const Matrix& op, Var x, std::size_t order);

struct EdgeGraph {
  BoundaryOperator boundary;
  Matrix adjacency;  // line graph, [|E|, |E|]
  Matrix hodge;      // L1
  Matrix scaled;     // operator fed to the filter (L1 / lambda_max, or L1)
  Tensor distances;  // [|E|, 1] Euclidean length of each edge
};

// Builds the edge graph of a patch whose node positions are `positions`
// ([n, 2]). With `rescale`, the filter operator is L1 divided by its power-
// iteration spectral radius.
EdgeGraph build_edge_graph(const Matrix& node_adjacency, const Tensor& positions, bool rescale = true);

// Euclidean distance between the endpoints of every edge: [|E|, 1].
Tensor edge_distances(const Tensor& positions, std::span<const Edge> edges);

void declare_edge_parameters(ParameterStore& store, std::size_t edge_dim, std::size_t order, Rng& rng);

// Single-layer perceptron 1 -> D_e on the edge distances.
Var edge_features(Graph& g, const Tensor& distances, const ParameterStore& params);

// H_edge = ELU(sum_j Gamma_j(L) E theta_j), one coefficient matrix per order.
Var hll_conv(const Matrix& op, Var edge_feat, std::span<const Var> theta);
std::vector<Var> hll_weights(Graph& g, const ParameterStore& params, std::size_t order);

enum class GateMode { vector, scalar };

void declare_fusion_parameters(ParameterStore& store, std::size_t node_dim, std::size_t edge_dim,
                               GateMode mode, Rng& rng);

// Logistic gate per edge from the edge embedding: [|E|, D] (vector) or [|E|, 1].
Var edge_gates(Var edge_embedding, const ParameterStore& params);

// H_i = ELU(Theta h_i + sum_{j in N(i)} gate_ij * Theta h_j). `gates` holds one
// row per edge of `edges` and broadcasts over channels; when it is absent the
// neighbour sum is dropped.
Var fusion_gcn(Var node_embedding, std::span<const Edge> edges, const Var* gates,
               const ParameterStore& params);

}  // namespace uniedge
