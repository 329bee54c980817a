#pragma once

#include <cstdint>
#include <vector>

#include "uniedge/autodiff.hpp"
#include "uniedge/dataio.hpp"
#include "uniedge/edgegraph.hpp"
#include "uniedge/params.hpp"
#include "uniedge/predictor.hpp"
#include "uniedge/stgraph.hpp"

namespace uniedge {

struct ModelConfig {
  std::size_t t_obs = 8;
  std::size_t t_pred = 12;
  std::size_t embed_dim = 128;  // width of each motion-feature embedding
  std::size_t node_dim = 128;   // node and edge embedding width
  PatchingConfig patching{};
  NodeGraphConfig node_graph{};
  std::size_t hll_order = 3;
  bool hll_rescale = true;
  GateMode gate_mode = GateMode::vector;
  // When false the fusion gates are forced to zero and the edge graph is not
  // built at all.
  bool edge_branch = true;
  // Adds each patch's input node features to its fused output.
  bool graph_residual = true;
  EncoderConfig encoder{};
  HeadConfig head{};
  EndpointMode endpoint_mode = EndpointMode::last_velocity;

  std::size_t num_patches() const { return patch_count(t_obs, patching); }
  void validate() const;
};

// Declares and initializes every trainable array from the "init" stream.
ParameterStore init_parameters(const ModelConfig& cfg, std::uint64_t seed);

struct ForwardPass {
  Var features;                     // [N, t_obs, 3E]
  std::vector<Var> node_attention;  // per patch, [N*L, N*L]
  std::vector<Var> patch_outputs;   // per patch, [N*L, D]
  Var tokens;                       // [N, K + t_pred, encoder.dim]
  EncoderOutput encoder;
  GaussianHead head;
};

ForwardPass forward(Graph& g, const Window& w, const ModelConfig& cfg, const ParameterStore& params);

// Gaussian head on the last t_pred positions of the encoder output.
GaussianHead future_head(Var encoder_output, std::size_t t_pred, const ParameterStore& params,
                         const HeadConfig& head = {});

// Mean bi-variate NLL of the window's future displacements.
Var window_loss(Graph& g, const Window& w, const ModelConfig& cfg, const ParameterStore& params);

GaussianTrack predict_track(const Window& w, const ModelConfig& cfg, const ParameterStore& params);

}  // namespace uniedge
