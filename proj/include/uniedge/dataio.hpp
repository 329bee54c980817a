#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "uniedge/autodiff.hpp"
#include "uniedge/params.hpp"
#include "uniedge/tensor.hpp"

namespace uniedge {

struct Observation {
  std::int64_t frame = 0;
  std::int64_t ped = 0;
  double x = 0.0;
  double y = 0.0;
};

// Observations of one recording, sorted by (frame, ped).
struct TrajectoryScene {
  std::string name;
  std::vector<Observation> records;
  std::int64_t frame_stride = 1;

  std::vector<std::int64_t> pedestrians() const;
};

// Reads `frame_id ped_id x y` lines. Blank lines and `#` comments are
// skipped; ids may be written as integral decimals ("780.0").
TrajectoryScene parse_trajectory_file(const std::filesystem::path& path);
TrajectoryScene parse_trajectory_text(std::string_view text, std::string name = "inline");

struct WindowSpec {
  std::size_t t_obs = 8;
  std::size_t t_pred = 12;
  std::size_t slide = 1;
};

// N pedestrians observed for t_obs samples and followed for t_pred more.
struct Window {
  std::size_t index = 0;
  std::string scene;
  std::int64_t start_frame = 0;
  std::vector<std::int64_t> ped_ids;
  Tensor obs;     // [N, t_obs, 2] absolute positions
  Tensor fut;     // [N, t_pred, 2] absolute positions
  Tensor origin;  // [N, 2] last observed position

  std::size_t num_peds() const { return ped_ids.size(); }
  std::size_t t_obs() const { return obs.dim(1); }
  std::size_t t_pred() const { return fut.dim(1); }
};

Window make_window(std::vector<std::int64_t> ped_ids, Tensor obs, Tensor fut);

std::vector<Window> build_windows(const TrajectoryScene& scene, const WindowSpec& spec = {});

// Per-step displacements of the future path, the first measured from the
// origin: [N, t_pred, 2].
Tensor future_displacements(const Window& w);
// Inverse of future_displacements: cumulative sum from `origin` ([N, 2]).
// `displacements` is [..., N, T, 2]; the result has the same shape.
Tensor integrate_displacements(const Tensor& origin, const Tensor& displacements);

// Rotates observed and future positions by `angle` about the centroid of all
// observed positions.
Window rotate_window(const Window& w, double angle);

enum class EndpointMode {
  off,
  // Subtract the last observed velocity from every velocity.
  last_velocity,
  // Subtract the ground-truth final future velocity. Needs the future path,
  // so it is only meaningful for training-parity experiments.
  oracle_gt,
};

std::string_view to_string(EndpointMode mode);
EndpointMode parse_endpoint_mode(std::string_view text);

// Speeds at or below this are treated as stationary when taking headings.
inline constexpr double kStationarySpeed = 1e-9;

struct MotionFeatures {
  Tensor velocity;  // [N, T, 2]
  Tensor norm;      // [N, T, 1]
  Tensor angle;     // [N, T, 1]
};

// Velocities (zero at the first step), their norms, and headings; the
// endpoint mode is applied to velocities before norms and angles are taken.
MotionFeatures motion_features(const Window& w, EndpointMode mode);

void declare_feature_parameters(ParameterStore& store, std::size_t embed_dim, Rng& rng);

// Embeds the motion features and concatenates them: [N, t_obs, 3 * embed_dim].
Var init_features(Graph& g, const Window& w, const ParameterStore& params, EndpointMode mode);

// Synthetic scene used by tests and demos: pedestrians on straight lines,
// two of them crossing paths, sampled every 10 frames for `samples` steps.
TrajectoryScene synthetic_scene(std::size_t samples, std::uint64_t seed);
std::string to_text(const TrajectoryScene& scene);

}  // namespace uniedge
