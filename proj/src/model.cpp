#include "uniedge/model.hpp"

#include "uniedge/errors.hpp"

namespace uniedge {

void ModelConfig::validate() const {
  if (t_obs < 2 || t_pred < 1) throw BadConfig("data.t_obs must be >= 2 and data.t_pred >= 1");
  if (embed_dim < 1 || node_dim < 1) throw BadConfig("embedding widths must be positive");
  if (hll_order < 1) throw BadConfig("hll.order must be at least 1");
  if (patching.length < 1 || patching.stride < 1) throw BadConfig("patch.len and patch.stride must be positive");
  num_patches();
  encoder.validate();
  head.validate();
}

ParameterStore init_parameters(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng = make_stream(seed, "init");
  ParameterStore store;
  const std::size_t feat = 3 * cfg.embed_dim, d = cfg.node_dim, dm = cfg.encoder.model_dim;
  declare_feature_parameters(store, cfg.embed_dim, rng);
  store.declare("proj.w", glorot_uniform({feat, d}, feat, d, rng));
  store.declare("proj.b", Tensor({d}, 0.0));
  declare_gat_parameters(store, d, d, rng);
  declare_edge_parameters(store, d, cfg.hll_order, rng);
  declare_fusion_parameters(store, d, d, cfg.gate_mode, rng);
  store.declare("token.w", glorot_uniform({d, dm}, d, dm, rng));
  store.declare("token.b", Tensor({dm}, 0.0));
  const std::size_t seq = cfg.num_patches() + cfg.t_pred;
  store.declare("placeholders", glorot_uniform({cfg.t_pred, dm}, cfg.t_pred, dm, rng));
  store.declare("positions", glorot_uniform({seq, dm}, seq, dm, rng));
  declare_encoder_parameters(store, cfg.encoder, rng);
  declare_head_parameters(store, dm, rng);
  return store;
}

ForwardPass forward(Graph& g, const Window& w, const ModelConfig& cfg, const ParameterStore& params) {
  if (w.t_obs() != cfg.t_obs || w.t_pred() != cfg.t_pred) {
    throw ShapeMismatch("window horizons (" + std::to_string(w.t_obs()) + ", " + std::to_string(w.t_pred()) +
                        ") differ from the model's (" + std::to_string(cfg.t_obs) + ", " +
                        std::to_string(cfg.t_pred) + ")");
  }
  ForwardPass fp;
  fp.features = init_features(g, w, params, cfg.endpoint_mode);
  Var z = matmul(fp.features, g.parameter(params["proj.w"])) + g.parameter(params["proj.b"]);

  const GatWeights gat = gat_weights(g, params);
  const std::vector<Var> theta = hll_weights(g, params, cfg.hll_order);
  for (const UnifiedPatch& patch : segment_patches(z, w, cfg.patching, cfg.node_graph)) {
    GatOutput node = gat_layer(patch.features, patch.adjacency, gat);
    fp.node_attention.push_back(node.attention);
    Var fused;
    if (cfg.edge_branch && edge_count(patch.adjacency) > 0) {
      EdgeGraph eg = build_edge_graph(patch.adjacency, patch.positions, cfg.hll_rescale);
      Var edge = hll_conv(eg.scaled, edge_features(g, eg.distances, params), theta);
      Var gates = edge_gates(edge, params);
      fused = fusion_gcn(node.output, eg.boundary.edges, &gates, params);
    } else {
      fused = fusion_gcn(node.output, {}, nullptr, params);
    }
    if (cfg.graph_residual) fused = fused + patch.features;
    fp.patch_outputs.push_back(fused);
  }

  Var pooled = stack_and_pool(fp.patch_outputs, w.num_peds(), cfg.patching.length);
  Var history = matmul(pooled, g.parameter(params["token.w"])) + g.parameter(params["token.b"]);
  fp.tokens = assemble_tokens(history, g.parameter(params["placeholders"]), g.parameter(params["positions"]));
  fp.encoder = encoder_forward(fp.tokens, cfg.encoder, params);
  fp.head = future_head(fp.encoder.output, cfg.t_pred, params, cfg.head);
  return fp;
}

GaussianHead future_head(Var encoder_output, std::size_t t_pred, const ParameterStore& params,
                         const HeadConfig& head) {
  const std::size_t s = encoder_output.dim(1);
  if (t_pred > s) throw ShapeMismatch("encoder output shorter than the prediction horizon");
  return gaussian_head(slice(encoder_output, 1, s - t_pred, s), params, head);
}

Var window_loss(Graph& g, const Window& w, const ModelConfig& cfg, const ParameterStore& params) {
  ForwardPass fp = forward(g, w, cfg, params);
  return bivariate_nll(fp.head, future_displacements(w));
}

GaussianTrack predict_track(const Window& w, const ModelConfig& cfg, const ParameterStore& params) {
  Graph g;
  return to_track(forward(g, w, cfg, params).head);
}

}  // namespace uniedge
