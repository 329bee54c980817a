#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "uniedge/rng.hpp"
#include "uniedge/tensor.hpp"

namespace uniedge {

struct Parameter {
  std::string name;
  Tensor value;
};

// Named, ordered collection of trainable arrays. Declaration order is the
// serialization order of checkpoints and the iteration order of optimizers.
class ParameterStore {
 public:
  Parameter& declare(std::string name, Tensor init);

  bool contains(std::string_view name) const;
  Parameter& operator[](std::string_view name);
  const Parameter& operator[](std::string_view name) const;
  std::size_t index_of(std::string_view name) const;

  Parameter& at(std::size_t i) { return params_.at(i); }
  const Parameter& at(std::size_t i) const { return params_.at(i); }
  std::size_t size() const { return params_.size(); }
  std::size_t total_values() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  // Zero-filled tensors shaped like each parameter, in declaration order.
  std::vector<Tensor> zeros_like() const;

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, std::size_t> by_name_;
};

// Per-parameter gradients aligned with a ParameterStore's declaration order.
using GradientSet = std::vector<Tensor>;

void accumulate(GradientSet& into, const GradientSet& from, double scale = 1.0);

// Uniform Glorot initialization for a weight with the given fan-in/fan-out.
Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace uniedge
