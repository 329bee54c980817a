#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "uniedge/params.hpp"
#include "uniedge/tensor.hpp"

namespace uniedge {

class Graph;

// Handle to one value recorded on a Graph tape.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const;
  std::size_t dim(std::size_t axis) const { return shape().at(axis); }
};

// Reverse-mode tape. Nodes are appended in evaluation order, so the node
// list is a topological order by construction and backward() walks it in
// reverse. A Graph and its values belong to one thread at a time.
class Graph {
 public:
  // Receives the gradient flowing into the node and adds contributions to
  // its inputs through Graph::grad_slot().
  using BackwardFn = std::function<void(Graph&, const Tensor& out_grad)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);
  // Leaf that reads the parameter's storage in place. Repeated calls for the
  // same parameter return the same leaf.
  Var parameter(const Parameter& p);

  // Appends an op node. `op` must outlive the graph (string literal).
  Var record(const char* op, Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);

  // Backpropagates from a scalar output (seed 1) or with an explicit seed of
  // the output's shape. Leaf gradients accumulate across calls.
  void backward(Var output);
  void backward(Var output, const Tensor& seed);

  const Tensor& value(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  // Accumulated gradient of a leaf, or nullptr when none has flowed there.
  const Tensor* grad(Var v) const;
  const char* op_name(std::size_t id) const { return nodes_.at(id).op; }
  std::size_t size() const { return nodes_.size(); }

  // Gradients of every parameter leaf, aligned with `store`; parameters that
  // never entered this graph get zeros.
  GradientSet parameter_gradients(const ParameterStore& store) const;

  // Gradient buffer for node `id` during a backward pass.
  Tensor& grad_slot(std::size_t id);

  void zero_grad();

 private:
  struct Node {
    const char* op = "";
    Tensor value;
    const Tensor* external = nullptr;
    const Parameter* param = nullptr;
    bool requires_grad = false;
    bool leaf = true;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    std::optional<Tensor> grad;
  };

  Var push(Node node);
  void check_owned(Var v) const;

  std::vector<Node> nodes_;
  std::vector<std::optional<Tensor>> scratch_;
  std::unordered_map<const Parameter*, std::size_t> param_leaf_;
};

// ---- primitive ops -------------------------------------------------------
// Elementwise binaries broadcast by trailing-dimension alignment: extents
// must match or one of them must be 1.

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }

Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var pow_scalar(Var a, double p);
Var neg(Var a);

Var exp(Var a);
Var log(Var a);
Var tanh(Var a);
Var leaky_relu(Var a, double slope);
Var relu(Var a);
Var elu(Var a, double alpha = 1.0);
Var sigmoid(Var a);
Var clamp(Var a, double lo, double hi);

// Batched matmul. a: [..., m, k]; b: [k, n] (shared across the batch) or
// [..., k, n] with the same leading extents as a.
Var matmul(Var a, Var b);

// Softmax along the last axis, computed with max subtraction.
Var softmax(Var a);

Var sum(Var a);
Var mean(Var a);
Var sum(Var a, std::size_t axis, bool keepdim = false);
Var mean(Var a, std::size_t axis, bool keepdim = false);

Var reshape(Var a, Shape shape);
Var transpose(Var a, const std::vector<std::size_t>& perm);
Var transpose(Var a);
Var concat(std::span<const Var> parts, std::size_t axis);
Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end);

// Broadcast result shape for two operands; throws ShapeMismatch.
Shape broadcast_shape(const Shape& a, const Shape& b);

}  // namespace uniedge
