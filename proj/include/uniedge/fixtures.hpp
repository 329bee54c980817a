#pragma once

#include <cstdint>

#include "uniedge/dataio.hpp"
#include "uniedge/model.hpp"

namespace uniedge {

// Narrow model for exhaustive gradient checks: every width is a handful of
// channels but the structure (patches, edge branch, encoder depth) matches the
// defaults.
ModelConfig tiny_model_config(std::size_t t_obs = 8, std::size_t t_pred = 12);

// Two pedestrians, one weaving and one on a widening loop, t_obs + t_pred
// samples each.
Window two_pedestrian_window(std::size_t t_obs = 8, std::size_t t_pred = 12);

// Initial parameters with biases and the output layer redrawn from U(-0.3, 0.3)
// (stream "gradcheck"). Zero biases put activations exactly on kinks, where
// finite differences are meaningless.
ParameterStore gradcheck_parameters(const ModelConfig& cfg, std::uint64_t seed);

}  // namespace uniedge
