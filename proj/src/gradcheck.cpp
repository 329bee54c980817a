#include "uniedge/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "uniedge/errors.hpp"

namespace uniedge {

namespace {
double evaluate(const LossBuilder& loss, const ParameterStore& params) {
  Graph g;
  const double v = loss(g, params).value().item();
  if (!std::isfinite(v)) throw NonFinite("gradcheck probe produced a non-finite loss");
  return v;
}
}  // namespace

GradcheckReport gradcheck(const LossBuilder& loss, ParameterStore& params,
                          const GradcheckOptions& options) {
  if (!(options.eps >= 1e-7 && options.eps <= 1e-3)) {
    throw Error("gradcheck eps must lie in [1e-7, 1e-3]");
  }
  GradientSet analytic;
  {
    Graph g;
    Var out = loss(g, params);
    g.backward(out);
    analytic = g.parameter_gradients(params);
  }

  GradcheckReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Parameter& param = params.at(p);
    const std::size_t n = param.value.size();
    std::size_t stride = 1;
    if (options.max_entries_per_parameter && n > *options.max_entries_per_parameter) {
      stride = (n + *options.max_entries_per_parameter - 1) / *options.max_entries_per_parameter;
    }
    for (std::size_t i = 0; i < n; i += stride) {
      const double saved = param.value[i];
      param.value[i] = saved + options.eps;
      const double up = evaluate(loss, params);
      param.value[i] = saved - options.eps;
      const double down = evaluate(loss, params);
      param.value[i] = saved;

      const double numeric = (up - down) / (2.0 * options.eps);
      const double a = analytic[p][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      ++report.entries_checked;
      if (rel > report.max_rel_error || report.entries_checked == 1) {
        report.max_rel_error = rel;
        report.worst_parameter = param.name;
        report.worst_index = i;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace uniedge
