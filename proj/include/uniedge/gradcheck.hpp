#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "uniedge/autodiff.hpp"
#include "uniedge/params.hpp"

namespace uniedge {

// Builds a scalar loss on `graph` from the current parameter values.
using LossBuilder = std::function<Var(Graph& graph, const ParameterStore& params)>;

struct GradcheckReport {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t entries_checked = 0;
};

struct GradcheckOptions {
  double eps = 1e-5;
  // When set, probe at most this many entries per parameter (evenly strided).
  std::optional<std::size_t> max_entries_per_parameter;
};

// Compares backprop gradients with central differences. The relative error of
// one entry is |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
// Parameters are restored on return. Throws NonFinite if probing produces a
// non-finite loss.
GradcheckReport gradcheck(const LossBuilder& loss, ParameterStore& params,
                          const GradcheckOptions& options = {});

}  // namespace uniedge
