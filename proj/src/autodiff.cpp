#include "uniedge/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "uniedge/errors.hpp"

namespace uniedge {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

const Tensor& Var::value() const { return graph->value(id); }
const Shape& Var::shape() const { return graph->value(id).shape(); }

// ---- Graph ---------------------------------------------------------------

Var Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

void Graph::check_owned(Var v) const {
  if (v.graph != this || v.id >= nodes_.size()) {
    throw DisconnectedOutput("value was not produced by this graph");
  }
}

Var Graph::constant(Tensor value) {
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  return push(std::move(n));
}

Var Graph::variable(Tensor value) {
  Node n;
  n.op = "variable";
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Graph::parameter(const Parameter& p) {
  if (auto it = param_leaf_.find(&p); it != param_leaf_.end()) return Var{this, it->second};
  Node n;
  n.op = "parameter";
  n.external = &p.value;
  n.param = &p;
  n.requires_grad = true;
  Var v = push(std::move(n));
  param_leaf_.emplace(&p, v.id);
  return v;
}

Var Graph::record(const char* op, Tensor value, std::vector<std::size_t> inputs,
                  BackwardFn backward) {
  if (!value.all_finite()) throw NonFinite(std::string("non-finite value produced by ") + op);
  Node n;
  n.op = op;
  n.value = std::move(value);
  n.leaf = false;
  for (std::size_t in : inputs) {
    if (in >= nodes_.size()) throw DisconnectedOutput("op input is not on this graph");
    n.requires_grad = n.requires_grad || nodes_[in].requires_grad;
  }
  n.inputs = std::move(inputs);
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

const Tensor& Graph::value(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.external ? *n.external : n.value;
}

const Tensor* Graph::grad(Var v) const {
  check_owned(v);
  const auto& g = nodes_[v.id].grad;
  return g ? &*g : nullptr;
}

Tensor& Graph::grad_slot(std::size_t id) {
  Node& n = nodes_.at(id);
  auto& slot = n.leaf ? n.grad : scratch_.at(id);
  if (!slot) slot.emplace(value(id).shape(), 0.0);
  return *slot;
}

void Graph::backward(Var output) {
  check_owned(output);
  if (value(output.id).size() != 1) {
    throw ShapeMismatch("backward without seed needs a scalar output, got " +
                        to_string(value(output.id).shape()));
  }
  backward(output, Tensor(value(output.id).shape(), 1.0));
}

void Graph::backward(Var output, const Tensor& seed) {
  check_owned(output);
  if (seed.shape() != value(output.id).shape()) {
    throw ShapeMismatch("seed shape " + to_string(seed.shape()) + " does not match output " +
                        to_string(value(output.id).shape()));
  }
  if (!nodes_[output.id].requires_grad) return;
  scratch_.assign(nodes_.size(), std::nullopt);
  grad_slot(output.id).add_in_place(seed);
  for (std::size_t i = output.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.leaf || !n.backward || !scratch_[i]) continue;
    n.backward(*this, *scratch_[i]);
    scratch_[i].reset();
  }
  scratch_.clear();
}

GradientSet Graph::parameter_gradients(const ParameterStore& store) const {
  GradientSet out;
  out.reserve(store.size());
  for (const auto& p : store) {
    auto it = param_leaf_.find(&p);
    if (it != param_leaf_.end() && nodes_[it->second].grad) {
      out.push_back(*nodes_[it->second].grad);
    } else {
      out.emplace_back(p.value.shape(), 0.0);
    }
  }
  return out;
}

void Graph::zero_grad() {
  for (auto& n : nodes_) n.grad.reset();
}

// ---- helpers ---------------------------------------------------------------

namespace {

Graph& graph_of(Var a) {
  if (!a.graph) throw DisconnectedOutput("unbound value");
  return *a.graph;
}

Graph& graph_of(Var a, Var b) {
  if (a.graph != b.graph || !a.graph) throw DisconnectedOutput("operands live on different graphs");
  return *a.graph;
}

std::size_t prod(const Shape& s, std::size_t from, std::size_t to) {
  std::size_t n = 1;
  for (std::size_t i = from; i < to; ++i) n *= s[i];
  return n;
}

// Index of each output element in the (possibly broadcast) operand.
std::vector<std::size_t> broadcast_index(const Shape& out, const Shape& in) {
  const std::size_t rank = out.size();
  const std::size_t offset = rank - in.size();
  std::vector<std::size_t> in_stride(rank, 0);
  std::size_t stride = 1;
  for (std::size_t d = in.size(); d-- > 0;) {
    in_stride[d + offset] = in[d] == 1 ? 0 : stride;
    stride *= in[d];
  }
  const std::size_t total = numel(out);
  std::vector<std::size_t> index(total);
  std::vector<std::size_t> counter(rank, 0);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < total; ++i) {
    index[i] = pos;
    for (std::size_t d = rank; d-- > 0;) {
      ++counter[d];
      pos += in_stride[d];
      if (counter[d] < out[d]) break;
      pos -= in_stride[d] * counter[d];
      counter[d] = 0;
    }
  }
  return index;
}

struct BinaryPlan {
  Shape out;
  // Empty when the operand already has the output shape.
  std::shared_ptr<const std::vector<std::size_t>> ia, ib;
};

BinaryPlan plan_binary(const Shape& a, const Shape& b) {
  BinaryPlan p;
  p.out = broadcast_shape(a, b);
  if (a != p.out) p.ia = std::make_shared<std::vector<std::size_t>>(broadcast_index(p.out, a));
  if (b != p.out) p.ib = std::make_shared<std::vector<std::size_t>>(broadcast_index(p.out, b));
  return p;
}

// f(x, y) -> out; da(x, y, out) and db(x, y, out) give local partials.
template <class F, class DA, class DB>
Var binary(const char* name, Var a, Var b, F f, DA da, DB db) {
  Graph& g = graph_of(a, b);
  const Tensor& va = a.value();
  const Tensor& vb = b.value();
  BinaryPlan plan = plan_binary(va.shape(), vb.shape());
  Tensor out(plan.out);
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = va[plan.ia ? (*plan.ia)[i] : i];
    const double y = vb[plan.ib ? (*plan.ib)[i] : i];
    out[i] = f(x, y);
  }
  const std::size_t self = g.size();
  const std::size_t ida = a.id, idb = b.id;
  return g.record(name, std::move(out), {ida, idb},
                  [plan, self, ida, idb, da, db](Graph& gr, const Tensor& gout) {
                    const Tensor& xa = gr.value(ida);
                    const Tensor& xb = gr.value(idb);
                    const Tensor& vo = gr.value(self);
                    const bool need_a = gr.requires_grad(ida);
                    const bool need_b = gr.requires_grad(idb);
                    Tensor* ga = need_a ? &gr.grad_slot(ida) : nullptr;
                    Tensor* gb = need_b ? &gr.grad_slot(idb) : nullptr;
                    for (std::size_t i = 0; i < gout.size(); ++i) {
                      const std::size_t ja = plan.ia ? (*plan.ia)[i] : i;
                      const std::size_t jb = plan.ib ? (*plan.ib)[i] : i;
                      const double x = xa[ja], y = xb[jb], o = vo[i];
                      if (ga) (*ga)[ja] += gout[i] * da(x, y, o);
                      if (gb) (*gb)[jb] += gout[i] * db(x, y, o);
                    }
                  });
}

// f(x) -> y; d(x, y) gives dy/dx.
template <class F, class D>
Var unary(const char* name, Var a, F f, D d) {
  Graph& g = graph_of(a);
  const Tensor& va = a.value();
  Tensor out(va.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(va[i]);
  const std::size_t self = g.size();
  const std::size_t ida = a.id;
  return g.record(name, std::move(out), {ida}, [self, ida, d](Graph& gr, const Tensor& gout) {
    const Tensor& x = gr.value(ida);
    const Tensor& y = gr.value(self);
    Tensor& ga = gr.grad_slot(ida);
    for (std::size_t i = 0; i < gout.size(); ++i) ga[i] += gout[i] * d(x[i], y[i]);
  });
}

std::size_t check_axis(const Shape& s, std::size_t axis, const char* op) {
  if (axis >= s.size()) {
    throw ShapeMismatch(std::string(op) + ": axis " + std::to_string(axis) + " out of range for " +
                        to_string(s));
  }
  return axis;
}

}  // namespace

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw ShapeMismatch("cannot broadcast " + to_string(a) + " with " + to_string(b));
    }
    out[i] = std::max(da, db);
  }
  return out;
}

// ---- elementwise -----------------------------------------------------------

Var add(Var a, Var b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double, double) { return 1.0; }, [](double, double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double, double) { return 1.0; }, [](double, double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y, double) { return y; }, [](double x, double, double) { return x; });
}

Var div(Var a, Var b) {
  return binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double, double y, double) { return 1.0 / y; },
      [](double, double y, double o) { return -o / y; });
}

Var scale(Var a, double s) {
  return unary(
      "scale", a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_scalar(Var a, double s) {
  return unary(
      "add_scalar", a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var pow_scalar(Var a, double p) {
  return unary(
      "pow", a, [p](double x) { return std::pow(x, p); },
      [p](double x, double) { return p * std::pow(x, p - 1.0); });
}

Var neg(Var a) { return scale(a, -1.0); }

Var exp(Var a) {
  return unary(
      "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(
      "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var tanh(Var a) {
  return unary(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var leaky_relu(Var a, double slope) {
  return unary(
      "leaky_relu", a, [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Var relu(Var a) { return leaky_relu(a, 0.0); }

Var elu(Var a, double alpha) {
  return unary(
      "elu", a, [alpha](double x) { return x > 0.0 ? x : alpha * std::expm1(x); },
      [alpha](double x, double y) { return x > 0.0 ? 1.0 : y + alpha; });
}

Var sigmoid(Var a) { return add_scalar(scale(tanh(scale(a, 0.5)), 0.5), 0.5); }

Var clamp(Var a, double lo, double hi) {
  return unary(
      "clamp", a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

// ---- matmul ----------------------------------------------------------------

Var matmul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() < 2 || sb.size() < 2) throw ShapeMismatch("matmul needs operands of rank >= 2");
  const std::size_t m = sa[sa.size() - 2], k = sa.back();
  const std::size_t kb = sb[sb.size() - 2], n = sb.back();
  if (k != kb) {
    throw ShapeMismatch("matmul inner extents differ: " + to_string(sa) + " x " + to_string(sb));
  }
  const bool shared = sb.size() == 2;
  if (!shared && (sb.size() != sa.size() || !std::equal(sa.begin(), sa.end() - 2, sb.begin()))) {
    throw ShapeMismatch("matmul batch extents differ: " + to_string(sa) + " x " + to_string(sb));
  }
  const std::size_t batch = prod(sa, 0, sa.size() - 2);
  Shape out_shape = sa;
  out_shape.back() = n;
  Tensor out(out_shape);
  const double* pa = a.value().data().data();
  const double* pb = b.value().data().data();
  double* po = out.data().data();
  if (shared) {
    MutMap(po, batch * m, n).noalias() = ConstMap(pa, batch * m, k) * ConstMap(pb, k, n);
  } else {
    for (std::size_t t = 0; t < batch; ++t) {
      MutMap(po + t * m * n, m, n).noalias() =
          ConstMap(pa + t * m * k, m, k) * ConstMap(pb + t * k * n, k, n);
    }
  }
  const std::size_t ida = a.id, idb = b.id;
  return g.record("matmul", std::move(out), {ida, idb},
                  [=](Graph& gr, const Tensor& gout) {
                    const double* xa = gr.value(ida).data().data();
                    const double* xb = gr.value(idb).data().data();
                    const double* go = gout.data().data();
                    if (shared) {
                      ConstMap dC(go, batch * m, n);
                      if (gr.requires_grad(ida)) {
                        MutMap(gr.grad_slot(ida).data().data(), batch * m, k).noalias() +=
                            dC * ConstMap(xb, k, n).transpose();
                      }
                      if (gr.requires_grad(idb)) {
                        MutMap(gr.grad_slot(idb).data().data(), k, n).noalias() +=
                            ConstMap(xa, batch * m, k).transpose() * dC;
                      }
                      return;
                    }
                    double* ga = gr.requires_grad(ida) ? gr.grad_slot(ida).data().data() : nullptr;
                    double* gb = gr.requires_grad(idb) ? gr.grad_slot(idb).data().data() : nullptr;
                    for (std::size_t t = 0; t < batch; ++t) {
                      ConstMap dC(go + t * m * n, m, n);
                      if (ga) {
                        MutMap(ga + t * m * k, m, k).noalias() +=
                            dC * ConstMap(xb + t * k * n, k, n).transpose();
                      }
                      if (gb) {
                        MutMap(gb + t * k * n, k, n).noalias() +=
                            ConstMap(xa + t * m * k, m, k).transpose() * dC;
                      }
                    }
                  });
}

// ---- softmax ---------------------------------------------------------------

Var softmax(Var a) {
  Graph& g = graph_of(a);
  const Tensor& va = a.value();
  const std::size_t cols = va.shape().back();
  const std::size_t rows = va.size() / cols;
  Tensor out(va.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = va.data().data() + r * cols;
    double* y = out.data().data() + r * cols;
    const double mx = *std::max_element(x, x + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      y[c] = std::exp(x[c] - mx);
      total += y[c];
    }
    for (std::size_t c = 0; c < cols; ++c) y[c] /= total;
  }
  const std::size_t self = g.size();
  const std::size_t ida = a.id;
  return g.record("softmax", std::move(out), {ida}, [=](Graph& gr, const Tensor& gout) {
    const Tensor& y = gr.value(self);
    Tensor& ga = gr.grad_slot(ida);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t base = r * cols;
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += gout[base + c] * y[base + c];
      for (std::size_t c = 0; c < cols; ++c) ga[base + c] += y[base + c] * (gout[base + c] - dot);
    }
  });
}

// ---- reductions ------------------------------------------------------------

Var sum(Var a) {
  Graph& g = graph_of(a);
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  const std::size_t ida = a.id;
  return g.record("sum", Tensor::scalar(total), {ida}, [ida](Graph& gr, const Tensor& gout) {
    Tensor& ga = gr.grad_slot(ida);
    const double s = gout[0];
    for (double& v : ga.data()) v += s;
  });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var sum(Var a, std::size_t axis, bool keepdim) {
  Graph& g = graph_of(a);
  const Shape& s = a.shape();
  check_axis(s, axis, "sum");
  const std::size_t outer = prod(s, 0, axis), extent = s[axis], inner = prod(s, axis + 1, s.size());
  Shape out_shape;
  for (std::size_t d = 0; d < s.size(); ++d) {
    if (d != axis) out_shape.push_back(s[d]);
    else if (keepdim) out_shape.push_back(1);
  }
  if (out_shape.empty()) out_shape.push_back(1);
  Tensor out(out_shape, 0.0);
  const Tensor& va = a.value();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t e = 0; e < extent; ++e)
      for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += va[(o * extent + e) * inner + i];
  const std::size_t ida = a.id;
  return g.record("sum_axis", std::move(out), {ida}, [=](Graph& gr, const Tensor& gout) {
    Tensor& ga = gr.grad_slot(ida);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t e = 0; e < extent; ++e)
        for (std::size_t i = 0; i < inner; ++i) ga[(o * extent + e) * inner + i] += gout[o * inner + i];
  });
}

Var mean(Var a, std::size_t axis, bool keepdim) {
  check_axis(a.shape(), axis, "mean");
  return scale(sum(a, axis, keepdim), 1.0 / static_cast<double>(a.shape()[axis]));
}

// ---- shape ops -------------------------------------------------------------

Var reshape(Var a, Shape shape) {
  Graph& g = graph_of(a);
  if (numel(shape) != a.value().size()) {
    throw ShapeMismatch("reshape " + to_string(a.shape()) + " to " + to_string(shape));
  }
  const std::size_t ida = a.id;
  return g.record("reshape", a.value().reshaped(std::move(shape)), {ida},
                  [ida](Graph& gr, const Tensor& gout) {
                    Tensor& ga = gr.grad_slot(ida);
                    for (std::size_t i = 0; i < gout.size(); ++i) ga[i] += gout[i];
                  });
}

Var transpose(Var a, const std::vector<std::size_t>& perm) {
  Graph& g = graph_of(a);
  const Shape& s = a.shape();
  const std::size_t rank = s.size();
  if (perm.size() != rank) throw ShapeMismatch("transpose permutation rank mismatch");
  std::vector<bool> seen(rank, false);
  for (std::size_t p : perm) {
    if (p >= rank || seen[p]) throw ShapeMismatch("transpose needs a permutation of the axes");
    seen[p] = true;
  }
  std::vector<std::size_t> in_stride(rank);
  std::size_t stride = 1;
  for (std::size_t d = rank; d-- > 0;) {
    in_stride[d] = stride;
    stride *= s[d];
  }
  Shape out_shape(rank);
  std::vector<std::size_t> step(rank);
  for (std::size_t d = 0; d < rank; ++d) {
    out_shape[d] = s[perm[d]];
    step[d] = in_stride[perm[d]];
  }
  auto index = std::make_shared<std::vector<std::size_t>>(numel(s));
  std::vector<std::size_t> counter(rank, 0);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < index->size(); ++i) {
    (*index)[i] = pos;
    for (std::size_t d = rank; d-- > 0;) {
      ++counter[d];
      pos += step[d];
      if (counter[d] < out_shape[d]) break;
      pos -= step[d] * counter[d];
      counter[d] = 0;
    }
  }
  Tensor out(out_shape);
  const Tensor& va = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[(*index)[i]];
  const std::size_t ida = a.id;
  return g.record("transpose", std::move(out), {ida}, [index, ida](Graph& gr, const Tensor& gout) {
    Tensor& ga = gr.grad_slot(ida);
    for (std::size_t i = 0; i < gout.size(); ++i) ga[(*index)[i]] += gout[i];
  });
}

Var transpose(Var a) {
  const std::size_t rank = a.shape().size();
  if (rank < 2) throw ShapeMismatch("transpose needs rank >= 2");
  std::vector<std::size_t> perm(rank);
  for (std::size_t d = 0; d < rank; ++d) perm[d] = d;
  std::swap(perm[rank - 1], perm[rank - 2]);
  return transpose(a, perm);
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeMismatch("concat of zero tensors");
  Graph& g = graph_of(parts[0]);
  const Shape& s0 = parts[0].shape();
  check_axis(s0, axis, "concat");
  std::vector<std::size_t> extents;
  std::vector<std::size_t> ids;
  std::size_t total = 0;
  for (const Var& p : parts) {
    graph_of(parts[0], p);
    const Shape& s = p.shape();
    if (s.size() != s0.size()) throw ShapeMismatch("concat rank mismatch");
    for (std::size_t d = 0; d < s.size(); ++d) {
      if (d != axis && s[d] != s0[d]) {
        throw ShapeMismatch("concat extents differ: " + to_string(s0) + " vs " + to_string(s));
      }
    }
    extents.push_back(s[axis]);
    ids.push_back(p.id);
    total += s[axis];
  }
  const std::size_t outer = prod(s0, 0, axis), inner = prod(s0, axis + 1, s0.size());
  Shape out_shape = s0;
  out_shape[axis] = total;
  Tensor out(out_shape);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Tensor& v = parts[p].value();
    const std::size_t block = extents[p] * inner;
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(v.data().data() + o * block, block, out.data().data() + o * total * inner + offset);
    }
    offset += block;
  }
  return g.record("concat", std::move(out), ids, [=](Graph& gr, const Tensor& gout) {
    std::size_t off = 0;
    for (std::size_t p = 0; p < ids.size(); ++p) {
      const std::size_t block = extents[p] * inner;
      if (gr.requires_grad(ids[p])) {
        Tensor& gp = gr.grad_slot(ids[p]);
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t i = 0; i < block; ++i) gp[o * block + i] += gout[o * total * inner + off + i];
      }
      off += block;
    }
  });
}

Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end) {
  Graph& g = graph_of(a);
  const Shape& s = a.shape();
  check_axis(s, axis, "slice");
  if (begin >= end || end > s[axis]) {
    throw ShapeMismatch("slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                        ") out of range for axis extent " + std::to_string(s[axis]));
  }
  const std::size_t outer = prod(s, 0, axis), extent = s[axis], inner = prod(s, axis + 1, s.size());
  const std::size_t width = end - begin;
  Shape out_shape = s;
  out_shape[axis] = width;
  Tensor out(out_shape);
  const Tensor& va = a.value();
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(va.data().data() + (o * extent + begin) * inner, width * inner,
                out.data().data() + o * width * inner);
  }
  const std::size_t ida = a.id;
  return g.record("slice", std::move(out), {ida}, [=](Graph& gr, const Tensor& gout) {
    Tensor& ga = gr.grad_slot(ida);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t i = 0; i < width * inner; ++i)
        ga[(o * extent + begin) * inner + i] += gout[o * width * inner + i];
  });
}

}  // namespace uniedge
