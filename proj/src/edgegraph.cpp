#include "uniedge/edgegraph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uniedge/errors.hpp"

namespace uniedge {

BoundaryOperator boundary_operator(const Matrix& adjacency) {
  if (adjacency.rows() != adjacency.cols()) throw ShapeMismatch("adjacency must be square");
  BoundaryOperator out;
  const Eigen::Index n = adjacency.rows();
  for (Eigen::Index u = 0; u < n; ++u)
    for (Eigen::Index v = u + 1; v < n; ++v)
      if (adjacency(u, v) != 0.0) out.edges.emplace_back(u, v);
  out.b1 = Matrix::Zero(n, static_cast<Eigen::Index>(out.edges.size()));
  for (std::size_t e = 0; e < out.edges.size(); ++e) {
    const auto col = static_cast<Eigen::Index>(e);
    out.b1(static_cast<Eigen::Index>(out.edges[e].first), col) = -1.0;
    out.b1(static_cast<Eigen::Index>(out.edges[e].second), col) = 1.0;
  }
  return out;
}

Matrix line_graph(std::span<const Edge> edges) {
  const auto m = static_cast<Eigen::Index>(edges.size());
  Matrix a = Matrix::Zero(m, m);
  for (Eigen::Index e = 0; e < m; ++e) {
    for (Eigen::Index f = e + 1; f < m; ++f) {
      const Edge& x = edges[static_cast<std::size_t>(e)];
      const Edge& y = edges[static_cast<std::size_t>(f)];
      const int shared = (x.first == y.first) + (x.first == y.second) + (x.second == y.first) +
                         (x.second == y.second);
      if (shared == 1) a(e, f) = a(f, e) = 1.0;
    }
  }
  return a;
}

Matrix hodge_laplacian(const BoundaryOperator& boundary) {
  return boundary.b1.transpose() * boundary.b1;
}

double spectral_radius(const Matrix& op, std::size_t iterations, double floor) {
  if (op.rows() == 0) return floor;
  Vector v(op.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = 1.0 + static_cast<double>(i % 7) * 0.125;
  v.normalize();
  double estimate = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    Vector w = op * v;
    const double norm = w.norm();
    if (norm == 0.0) return floor;
    estimate = v.dot(w);
    v = w / norm;
  }
  return std::max(estimate, floor);
}

std::vector<double> laguerre_scalar(double lambda, std::size_t order) {
  if (order < 1) throw Error("Laguerre order must be at least 1");
  std::vector<double> g(order);
  g[0] = 1.0;
  if (order > 1) g[1] = 1.0 - lambda;
  for (std::size_t j = 1; j + 1 < order; ++j) {
    const double jd = static_cast<double>(j);
    g[j + 1] = ((2.0 * jd + 1.0 - lambda) * g[j] - jd * g[j - 1]) / (jd + 1.0);
  }
  return g;
}

std::vector<Var> laguerre_basis(const Matrix& op, Var x, std::size_t order) {
  if (order < 1) throw Error("Laguerre order must be at least 1");
  if (x.shape().size() != 2 || static_cast<std::size_t>(op.rows()) != x.dim(0)) {
    throw ShapeMismatch("Laguerre operator does not match edge features " + to_string(x.shape()));
  }
  Graph& g = *x.graph;
  std::vector<Var> t{x};
  if (order == 1) return t;
  Var l = g.constant(to_tensor(op));
  t.push_back(x - matmul(l, x));
  for (std::size_t j = 1; j + 1 < order; ++j) {
    const double jd = static_cast<double>(j);
    Var next = scale(t[j], 2.0 * jd + 1.0) - matmul(l, t[j]) - scale(t[j - 1], jd);
    t.push_back(scale(next, 1.0 / (jd + 1.0)));
  }
  return t;
}

Tensor edge_distances(const Tensor& positions, std::span<const Edge> edges) {
  Tensor d({std::max<std::size_t>(edges.size(), 1), 1});
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [u, v] = edges[e];
    d[e] = std::hypot(positions.at({u, 0}) - positions.at({v, 0}),
                      positions.at({u, 1}) - positions.at({v, 1}));
  }
  return d;
}

EdgeGraph build_edge_graph(const Matrix& node_adjacency, const Tensor& positions, bool rescale) {
  EdgeGraph eg;
  eg.boundary = boundary_operator(node_adjacency);
  eg.adjacency = line_graph(eg.boundary.edges);
  eg.hodge = hodge_laplacian(eg.boundary);
  eg.scaled = rescale ? Matrix(eg.hodge / spectral_radius(eg.hodge)) : eg.hodge;
  eg.distances = edge_distances(positions, eg.boundary.edges);
  return eg;
}

void declare_edge_parameters(ParameterStore& store, std::size_t edge_dim, std::size_t order, Rng& rng) {
  store.declare("edge.embed.w", glorot_uniform({1, edge_dim}, 1, edge_dim, rng));
  store.declare("edge.embed.b", Tensor({edge_dim}, 0.0));
  for (std::size_t j = 0; j < order; ++j) {
    store.declare("hll.theta" + std::to_string(j),
                  glorot_uniform({edge_dim, edge_dim}, edge_dim * order, edge_dim, rng));
  }
}

Var edge_features(Graph& g, const Tensor& distances, const ParameterStore& params) {
  Var h = matmul(g.constant(distances), g.parameter(params["edge.embed.w"]));
  return elu(h + g.parameter(params["edge.embed.b"]));
}

std::vector<Var> hll_weights(Graph& g, const ParameterStore& params, std::size_t order) {
  std::vector<Var> theta;
  for (std::size_t j = 0; j < order; ++j) theta.push_back(g.parameter(params["hll.theta" + std::to_string(j)]));
  return theta;
}

Var hll_conv(const Matrix& op, Var edge_feat, std::span<const Var> theta) {
  if (theta.empty()) throw Error("HLL convolution needs at least one coefficient matrix");
  for (const Var& t : theta) {
    if (t.shape().size() != 2 || t.dim(0) != edge_feat.dim(1)) {
      throw ShapeMismatch("HLL coefficient " + to_string(t.shape()) + " does not fit edge features " +
                          to_string(edge_feat.shape()));
    }
  }
  std::vector<Var> basis = laguerre_basis(op, edge_feat, theta.size());
  Var acc = matmul(basis[0], theta[0]);
  for (std::size_t j = 1; j < theta.size(); ++j) acc = acc + matmul(basis[j], theta[j]);
  return elu(acc);
}

void declare_fusion_parameters(ParameterStore& store, std::size_t node_dim, std::size_t edge_dim,
                               GateMode mode, Rng& rng) {
  const std::size_t gate_dim = mode == GateMode::vector ? node_dim : 1;
  store.declare("fusion.theta", glorot_uniform({node_dim, node_dim}, node_dim, node_dim, rng));
  store.declare("fusion.phi.w", glorot_uniform({edge_dim, gate_dim}, edge_dim, gate_dim, rng));
  store.declare("fusion.phi.b", Tensor({gate_dim}, 0.0));
}

Var edge_gates(Var edge_embedding, const ParameterStore& params) {
  Graph& g = *edge_embedding.graph;
  Var logits = matmul(edge_embedding, g.parameter(params["fusion.phi.w"])) +
               g.parameter(params["fusion.phi.b"]);
  return sigmoid(logits);
}

Var fusion_gcn(Var node_embedding, std::span<const Edge> edges, const Var* gates,
               const ParameterStore& params) {
  Graph& g = *node_embedding.graph;
  if (node_embedding.shape().size() != 2) throw ShapeMismatch("fusion_gcn expects [n, D] node embeddings");
  const std::size_t n = node_embedding.dim(0);
  Var theta = g.parameter(params["fusion.theta"]);
  if (theta.dim(0) != node_embedding.dim(1)) {
    throw ShapeMismatch("fusion theta " + to_string(theta.shape()) + " does not fit " +
                        to_string(node_embedding.shape()));
  }
  Var transformed = matmul(node_embedding, theta);
  if (!gates || edges.empty()) return elu(transformed);
  const std::size_t m = edges.size();
  if (gates->shape().size() != 2 || gates->dim(0) != m ||
      (gates->dim(1) != 1 && gates->dim(1) != transformed.dim(1))) {
    throw ShapeMismatch("edge gates " + to_string(gates->shape()) + " do not fit " +
                        std::to_string(m) + " edges");
  }
  // One-hot endpoint selectors: low[e, u] = 1 and high[e, v] = 1 for edge (u, v).
  Tensor low({m, n}, 0.0), high({m, n}, 0.0);
  for (std::size_t e = 0; e < m; ++e) {
    low.at({e, edges[e].first}) = 1.0;
    high.at({e, edges[e].second}) = 1.0;
  }
  Var sel_low = g.constant(low), sel_high = g.constant(high);
  Var to_low = *gates * matmul(sel_high, transformed);   // message v -> u
  Var to_high = *gates * matmul(sel_low, transformed);   // message u -> v
  Var aggregated = matmul(transpose(sel_low), to_low) + matmul(transpose(sel_high), to_high);
  return elu(transformed + aggregated);
}

}  // namespace uniedge
