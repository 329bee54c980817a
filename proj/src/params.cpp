#include "uniedge/params.hpp"

#include <cmath>

#include "uniedge/errors.hpp"

namespace uniedge {

Parameter& ParameterStore::declare(std::string name, Tensor init) {
  if (by_name_.contains(name)) throw Error("parameter declared twice: " + name);
  by_name_.emplace(name, params_.size());
  params_.push_back({std::move(name), std::move(init)});
  return params_.back();
}

bool ParameterStore::contains(std::string_view name) const {
  return by_name_.contains(std::string(name));
}

std::size_t ParameterStore::index_of(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) throw Error("unknown parameter: " + std::string(name));
  return it->second;
}

Parameter& ParameterStore::operator[](std::string_view name) { return params_[index_of(name)]; }

const Parameter& ParameterStore::operator[](std::string_view name) const {
  return params_[index_of(name)];
}

std::size_t ParameterStore::total_values() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

std::vector<Tensor> ParameterStore::zeros_like() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.emplace_back(p.value.shape(), 0.0);
  return out;
}

void accumulate(GradientSet& into, const GradientSet& from, double scale) {
  if (into.size() != from.size()) throw ShapeMismatch("gradient sets differ in length");
  for (std::size_t i = 0; i < into.size(); ++i) into[i].add_in_place(from[i], scale);
}

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = dist(rng);
  return t;
}

}  // namespace uniedge
