#include "uniedge/stgraph.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <string>

#include "uniedge/errors.hpp"

namespace uniedge {

std::size_t patch_count(std::size_t t_obs, const PatchingConfig& cfg) {
  if (cfg.length < 1 || cfg.stride < 1) throw Error("patch length and stride must be positive");
  if (cfg.length > t_obs) {
    throw PatchTooLong("patch length " + std::to_string(cfg.length) + " exceeds t_obs " +
                       std::to_string(t_obs));
  }
  return (t_obs - cfg.length) / cfg.stride + 1;
}

std::vector<PatchSpan> patch_spans(std::size_t t_obs, const PatchingConfig& cfg) {
  const std::size_t k = patch_count(t_obs, cfg);
  std::vector<PatchSpan> spans;
  spans.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    spans.push_back({i + 1, i * cfg.stride, i * cfg.stride + cfg.length});
  }
  return spans;
}

Matrix build_node_adjacency(std::size_t num_peds, std::size_t length) {
  const auto n = static_cast<Eigen::Index>(num_peds * length);
  Matrix a = Matrix::Ones(n, n);
  a.diagonal().setZero();
  return a;
}

Matrix build_distance_adjacency(const Tensor& positions, std::size_t num_peds, std::size_t length,
                                double threshold) {
  const std::size_t n = num_peds * length;
  Matrix a = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  auto dist = [&](std::size_t i, std::size_t j) {
    return std::hypot(positions.at({i, 0}) - positions.at({j, 0}),
                      positions.at({i, 1}) - positions.at({j, 1}));
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool temporal = i / length == j / length && j == i + 1;
      if (temporal || dist(i, j) <= threshold) {
        a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
        a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = 1.0;
      }
    }
  }
  // Nodes left isolated attach to their nearest neighbour.
  for (std::size_t i = 0; i < n && n > 1; ++i) {
    if (a.row(static_cast<Eigen::Index>(i)).sum() > 0.0) continue;
    std::size_t best = i == 0 ? 1 : 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && dist(i, j) < dist(i, best)) best = j;
    }
    a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(best)) = 1.0;
    a(static_cast<Eigen::Index>(best), static_cast<Eigen::Index>(i)) = 1.0;
  }
  return a;
}

Matrix build_st_adjacency(std::size_t num_peds, std::size_t length) {
  const auto n = static_cast<Eigen::Index>(num_peds * length);
  Matrix a = Matrix::Zero(n, n);
  auto node = [length](std::size_t p, std::size_t t) { return static_cast<Eigen::Index>(p * length + t); };
  for (std::size_t t = 0; t < length; ++t)
    for (std::size_t p = 0; p < num_peds; ++p)
      for (std::size_t q = p + 1; q < num_peds; ++q) a(node(p, t), node(q, t)) = a(node(q, t), node(p, t)) = 1.0;
  for (std::size_t p = 0; p < num_peds; ++p)
    for (std::size_t t = 0; t + 1 < length; ++t) a(node(p, t), node(p, t + 1)) = a(node(p, t + 1), node(p, t)) = 1.0;
  return a;
}

std::size_t edge_count(const Matrix& adjacency) {
  std::size_t e = 0;
  for (Eigen::Index i = 0; i < adjacency.rows(); ++i)
    for (Eigen::Index j = i + 1; j < adjacency.cols(); ++j) e += adjacency(i, j) != 0.0;
  return e;
}

std::vector<UnifiedPatch> segment_patches(Var features, const Window& w, const PatchingConfig& cfg,
                                          const NodeGraphConfig& graph_cfg) {
  const Shape& s = features.shape();
  if (s.size() != 3 || s[0] != w.num_peds() || s[1] != w.t_obs()) {
    throw ShapeMismatch("patch features must be [N, t_obs, D], got " + to_string(s));
  }
  const std::size_t n = s[0], dim = s[2];
  std::vector<UnifiedPatch> patches;
  for (const PatchSpan& span : patch_spans(s[1], cfg)) {
    UnifiedPatch p;
    p.k = span.k;
    p.begin = span.begin;
    p.num_peds = n;
    p.length = cfg.length;
    p.features = reshape(slice(features, 1, span.begin, span.end), {n * cfg.length, dim});
    p.positions = Tensor({n * cfg.length, 2});
    for (std::size_t ped = 0; ped < n; ++ped) {
      for (std::size_t t = 0; t < cfg.length; ++t) {
        for (std::size_t c = 0; c < 2; ++c) {
          p.positions.at({ped * cfg.length + t, c}) = w.obs.at({ped, span.begin + t, c});
        }
      }
    }
    p.adjacency = graph_cfg.mode == AdjacencyMode::complete
                      ? build_node_adjacency(n, cfg.length)
                      : build_distance_adjacency(p.positions, n, cfg.length, graph_cfg.distance_threshold);
    patches.push_back(std::move(p));
  }
  return patches;
}

void declare_gat_parameters(ParameterStore& store, std::size_t in_dim, std::size_t out_dim, Rng& rng) {
  store.declare("gat.theta_self", glorot_uniform({in_dim, out_dim}, in_dim, out_dim, rng));
  store.declare("gat.theta", glorot_uniform({in_dim, out_dim}, in_dim, out_dim, rng));
  store.declare("gat.attention", glorot_uniform({out_dim}, out_dim, 1, rng));
}

GatWeights gat_weights(Graph& g, const ParameterStore& params) {
  return {g.parameter(params["gat.theta_self"]), g.parameter(params["gat.theta"]),
          g.parameter(params["gat.attention"])};
}

GatOutput gat_layer(Var z, const Matrix& adjacency, const GatWeights& w) {
  Graph& g = *z.graph;
  if (z.shape().size() != 2) throw ShapeMismatch("gat_layer expects node features [n, D]");
  const std::size_t n = z.dim(0);
  if (static_cast<std::size_t>(adjacency.rows()) != n || static_cast<std::size_t>(adjacency.cols()) != n) {
    throw ShapeMismatch("adjacency is " + std::to_string(adjacency.rows()) + "x" +
                        std::to_string(adjacency.cols()) + " for " + std::to_string(n) + " nodes");
  }
  const Shape& ts = w.theta.shape();
  if (w.theta_self.shape() != ts || w.attention.shape() != Shape{ts.at(1)} || ts.at(0) != z.dim(1)) {
    throw ShapeMismatch("GAT weight shapes do not match node features");
  }
  const std::size_t out_dim = ts[1];
  Var target = matmul(z, w.theta_self);
  Var source = matmul(z, w.theta);
  Var pair = reshape(target, {n, 1, out_dim}) + reshape(source, {1, n, out_dim});
  Var scores = reshape(matmul(leaky_relu(pair, kGatSlope), reshape(w.attention, {out_dim, 1})), {n, n});

  bool complete = true;
  Tensor mask({n, n}, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) == 0.0) {
        mask.at({i, j}) = -1e30;
        complete = false;
      }
    }
  }
  if (!complete) scores = scores + g.constant(std::move(mask));
  Var alpha = softmax(scores);
  return {elu(matmul(alpha, source)), alpha};
}

Matrix graph_laplacian(const Matrix& adjacency) {
  Matrix l = -adjacency;
  l.diagonal() = adjacency.rowwise().sum();
  return l;
}

Matrix laplacian_pseudoinverse(const Matrix& adjacency) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(graph_laplacian(adjacency));
  const Vector& lambda = solver.eigenvalues();
  const double lambda_max = lambda.cwiseAbs().maxCoeff();
  Vector inv(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    inv(i) = std::abs(lambda(i)) <= 1e-9 * lambda_max ? 0.0 : 1.0 / lambda(i);
  }
  const Matrix& phi = solver.eigenvectors();
  return phi * inv.asDiagonal() * phi.transpose();
}

std::vector<std::size_t> connected_components(const Matrix& adjacency) {
  const auto n = static_cast<std::size_t>(adjacency.rows());
  constexpr auto unset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> label(n, unset);
  std::size_t next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (label[s] != unset) continue;
    std::vector<std::size_t> stack{s};
    label[s] = next;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < n; ++v) {
        if (label[v] == unset && adjacency(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) != 0.0) {
          label[v] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  return label;
}

double effective_resistance(const Matrix& pinv, const std::vector<std::size_t>& components,
                            std::size_t i, std::size_t j) {
  if (i >= components.size() || j >= components.size()) throw Error("node index out of range");
  if (components[i] != components[j]) {
    throw Disconnected("nodes " + std::to_string(i) + " and " + std::to_string(j) +
                       " lie in different components");
  }
  const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
  return pinv(a, a) + pinv(b, b) - pinv(a, b) - pinv(b, a);
}

double effective_resistance(const Matrix& adjacency, std::size_t i, std::size_t j) {
  const auto comps = connected_components(adjacency);
  if (i >= comps.size() || j >= comps.size()) throw Error("node index out of range");
  if (comps[i] != comps[j]) {
    throw Disconnected("nodes " + std::to_string(i) + " and " + std::to_string(j) +
                       " lie in different components");
  }
  if (i == j) return 0.0;
  return effective_resistance(laplacian_pseudoinverse(adjacency), comps, i, j);
}

}  // namespace uniedge
