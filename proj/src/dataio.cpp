#include "uniedge/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "uniedge/errors.hpp"

namespace uniedge {

std::vector<std::int64_t> TrajectoryScene::pedestrians() const {
  std::set<std::int64_t> ids;
  for (const auto& r : records) ids.insert(r.ped);
  return {ids.begin(), ids.end()};
}

namespace {

bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size() && std::isfinite(out);
}

bool parse_id(std::string_view tok, std::int64_t& out) {
  double v = 0.0;
  if (!parse_double(tok, v) || v != std::floor(v) || std::abs(v) > 9.0e15) return false;
  out = static_cast<std::int64_t>(v);
  return true;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

TrajectoryScene parse_trajectory_text(std::string_view text, std::string name) {
  TrajectoryScene scene;
  scene.name = std::move(name);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    Observation obs;
    if (tokens.size() != 4 || !parse_id(tokens[0], obs.frame) || !parse_id(tokens[1], obs.ped) ||
        !parse_double(tokens[2], obs.x) || !parse_double(tokens[3], obs.y)) {
      throw MalformedLine(scene.name + ":" + std::to_string(line_no) +
                          ": expected `frame_id ped_id x y`");
    }
    scene.records.push_back(obs);
  }
  if (scene.records.empty()) throw EmptyFile(scene.name + ": no observations");

  std::sort(scene.records.begin(), scene.records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.frame, a.ped) < std::tie(b.frame, b.ped);
  });
  for (std::size_t i = 1; i < scene.records.size(); ++i) {
    const auto& a = scene.records[i - 1];
    const auto& b = scene.records[i];
    if (a.frame == b.frame && a.ped == b.ped) {
      throw DuplicateObservation(scene.name + ": pedestrian " + std::to_string(a.ped) +
                                 " observed twice at frame " + std::to_string(a.frame));
    }
  }

  std::map<std::int64_t, std::int64_t> last_frame;
  std::int64_t stride = 0;
  for (const auto& r : scene.records) {
    if (auto it = last_frame.find(r.ped); it != last_frame.end()) {
      stride = std::gcd(stride, r.frame - it->second);
    }
    last_frame[r.ped] = r.frame;
  }
  scene.frame_stride = stride > 0 ? stride : 1;
  return scene;
}

TrajectoryScene parse_trajectory_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open trajectory file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_trajectory_text(buf.str(), path.string());
}

Window make_window(std::vector<std::int64_t> ped_ids, Tensor obs, Tensor fut) {
  const std::size_t n = ped_ids.size();
  if (obs.rank() != 3 || obs.dim(0) != n || obs.dim(2) != 2 || fut.rank() != 3 ||
      fut.dim(0) != n || fut.dim(2) != 2) {
    throw ShapeMismatch("window tensors must be [N, T, 2] with N = number of pedestrians");
  }
  Window w;
  w.ped_ids = std::move(ped_ids);
  const std::size_t t_obs = obs.dim(1);
  w.origin = Tensor({n, 2});
  for (std::size_t p = 0; p < n; ++p) {
    w.origin.at({p, 0}) = obs.at({p, t_obs - 1, 0});
    w.origin.at({p, 1}) = obs.at({p, t_obs - 1, 1});
  }
  w.obs = std::move(obs);
  w.fut = std::move(fut);
  return w;
}

std::vector<Window> build_windows(const TrajectoryScene& scene, const WindowSpec& spec) {
  if (spec.t_obs < 2 || spec.t_pred < 1 || spec.slide < 1) {
    throw Error("window spec needs t_obs >= 2, t_pred >= 1, slide >= 1");
  }
  const std::size_t span = spec.t_obs + spec.t_pred;
  std::map<std::pair<std::int64_t, std::int64_t>, std::pair<double, double>> at;
  std::set<std::int64_t> frame_set;
  for (const auto& r : scene.records) {
    at[{r.frame, r.ped}] = {r.x, r.y};
    frame_set.insert(r.frame);
  }
  const std::vector<std::int64_t> frames(frame_set.begin(), frame_set.end());
  const auto peds = scene.pedestrians();

  std::vector<Window> out;
  for (std::size_t s = 0; s < frames.size(); s += spec.slide) {
    const std::int64_t start = frames[s];
    std::vector<std::int64_t> present;
    for (std::int64_t ped : peds) {
      bool full = true;
      for (std::size_t t = 0; t < span && full; ++t) {
        full = at.contains({start + static_cast<std::int64_t>(t) * scene.frame_stride, ped});
      }
      if (full) present.push_back(ped);
    }
    if (present.empty()) continue;
    const std::size_t n = present.size();
    Tensor obs({n, spec.t_obs, 2});
    Tensor fut({n, spec.t_pred, 2});
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t t = 0; t < span; ++t) {
        const auto& xy = at.at({start + static_cast<std::int64_t>(t) * scene.frame_stride, present[p]});
        Tensor& dst = t < spec.t_obs ? obs : fut;
        const std::size_t tt = t < spec.t_obs ? t : t - spec.t_obs;
        dst.at({p, tt, 0}) = xy.first;
        dst.at({p, tt, 1}) = xy.second;
      }
    }
    Window w = make_window(std::move(present), std::move(obs), std::move(fut));
    w.index = out.size();
    w.scene = scene.name;
    w.start_frame = start;
    out.push_back(std::move(w));
  }
  return out;
}

Tensor future_displacements(const Window& w) {
  const std::size_t n = w.num_peds(), t_pred = w.t_pred();
  Tensor d({n, t_pred, 2});
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t c = 0; c < 2; ++c) {
      double prev = w.origin.at({p, c});
      for (std::size_t t = 0; t < t_pred; ++t) {
        const double cur = w.fut.at({p, t, c});
        d.at({p, t, c}) = cur - prev;
        prev = cur;
      }
    }
  }
  return d;
}

Tensor integrate_displacements(const Tensor& origin, const Tensor& displacements) {
  const Shape& s = displacements.shape();
  if (s.size() < 3 || s.back() != 2 || origin.rank() != 2 || origin.dim(1) != 2 ||
      s[s.size() - 3] != origin.dim(0)) {
    throw ShapeMismatch("integrate_displacements expects [..., N, T, 2] and origin [N, 2]");
  }
  const std::size_t n = origin.dim(0), steps = s[s.size() - 2];
  const std::size_t outer = displacements.size() / (n * steps * 2);
  Tensor out(s);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t c = 0; c < 2; ++c) {
        double acc = origin.at({p, c});
        for (std::size_t t = 0; t < steps; ++t) {
          const std::size_t idx = ((o * n + p) * steps + t) * 2 + c;
          acc += displacements[idx];
          out[idx] = acc;
        }
      }
    }
  }
  return out;
}

Window rotate_window(const Window& w, double angle) {
  double cx = 0.0, cy = 0.0;
  const std::size_t count = w.obs.size() / 2;
  for (std::size_t i = 0; i < count; ++i) {
    cx += w.obs[2 * i];
    cy += w.obs[2 * i + 1];
  }
  cx /= static_cast<double>(count);
  cy /= static_cast<double>(count);
  const double c = std::cos(angle), s = std::sin(angle);
  auto rotate = [&](Tensor t) {
    for (std::size_t i = 0; i < t.size() / 2; ++i) {
      const double x = t[2 * i] - cx, y = t[2 * i + 1] - cy;
      t[2 * i] = cx + c * x - s * y;
      t[2 * i + 1] = cy + s * x + c * y;
    }
    return t;
  };
  Window r = make_window(w.ped_ids, rotate(w.obs), rotate(w.fut));
  r.index = w.index;
  r.scene = w.scene;
  r.start_frame = w.start_frame;
  return r;
}

std::string_view to_string(EndpointMode mode) {
  switch (mode) {
    case EndpointMode::off: return "off";
    case EndpointMode::last_velocity: return "last_velocity";
    case EndpointMode::oracle_gt: return "oracle_gt";
  }
  return "off";
}

EndpointMode parse_endpoint_mode(std::string_view text) {
  if (text == "off") return EndpointMode::off;
  if (text == "last_velocity") return EndpointMode::last_velocity;
  if (text == "oracle_gt") return EndpointMode::oracle_gt;
  throw BadConfig("unknown endpoint mode: " + std::string(text));
}

MotionFeatures motion_features(const Window& w, EndpointMode mode) {
  const std::size_t n = w.num_peds(), t_obs = w.t_obs(), t_pred = w.t_pred();
  MotionFeatures f{Tensor({n, t_obs, 2}), Tensor({n, t_obs, 1}), Tensor({n, t_obs, 1})};
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t t = 1; t < t_obs; ++t) {
      for (std::size_t c = 0; c < 2; ++c) {
        f.velocity.at({p, t, c}) = w.obs.at({p, t, c}) - w.obs.at({p, t - 1, c});
      }
    }
    double ref[2] = {0.0, 0.0};
    if (mode == EndpointMode::last_velocity) {
      for (std::size_t c = 0; c < 2; ++c) ref[c] = f.velocity.at({p, t_obs - 1, c});
    } else if (mode == EndpointMode::oracle_gt) {
      for (std::size_t c = 0; c < 2; ++c) {
        const double before = t_pred >= 2 ? w.fut.at({p, t_pred - 2, c}) : w.origin.at({p, c});
        ref[c] = w.fut.at({p, t_pred - 1, c}) - before;
      }
    }
    for (std::size_t t = 0; t < t_obs; ++t) {
      const double vx = f.velocity.at({p, t, 0}) - ref[0];
      const double vy = f.velocity.at({p, t, 1}) - ref[1];
      f.velocity.at({p, t, 0}) = vx;
      f.velocity.at({p, t, 1}) = vy;
      const double norm = std::hypot(vx, vy);
      f.norm.at({p, t, 0}) = norm;
      // Heading of a (numerically) zero velocity is pinned to 0; rounding
      // residue would otherwise produce an arbitrary angle.
      f.angle.at({p, t, 0}) = norm <= kStationarySpeed ? 0.0 : std::atan2(vy, vx);
    }
  }
  return f;
}

void declare_feature_parameters(ParameterStore& store, std::size_t embed_dim, Rng& rng) {
  const std::pair<const char*, std::size_t> inputs[] = {
      {"embed.velocity", 2}, {"embed.norm", 1}, {"embed.angle", 1}};
  for (const auto& [name, in] : inputs) {
    store.declare(std::string(name) + ".w", glorot_uniform({in, embed_dim}, in, embed_dim, rng));
    store.declare(std::string(name) + ".b", Tensor({embed_dim}, 0.0));
  }
}

Var init_features(Graph& g, const Window& w, const ParameterStore& params, EndpointMode mode) {
  MotionFeatures f = motion_features(w, mode);
  auto perceptron = [&](Tensor x, const char* name) {
    const std::string base(name);
    Var h = matmul(g.constant(std::move(x)), g.parameter(params[base + ".w"]));
    return elu(h + g.parameter(params[base + ".b"]));
  };
  const Var parts[] = {perceptron(std::move(f.velocity), "embed.velocity"),
                       perceptron(std::move(f.norm), "embed.norm"),
                       perceptron(std::move(f.angle), "embed.angle")};
  return concat(parts, 2);
}

TrajectoryScene synthetic_scene(std::size_t samples, std::uint64_t seed) {
  Rng rng = make_stream(seed, "synthetic");
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  struct Walker {
    double x, y, vx, vy;
  };
  // Two straight walkers and a pair whose paths cross mid-window.
  std::vector<Walker> walkers = {
      {0.0, 0.0, 0.40, 0.00},
      {2.0, 5.0, 0.00, -0.35},
      {-3.0, -3.0, 0.30, 0.30},
      {3.0, -3.0, -0.30, 0.30},
  };
  TrajectoryScene scene;
  scene.name = "synthetic";
  scene.frame_stride = 10;
  for (auto& wk : walkers) {
    wk.x += jitter(rng);
    wk.y += jitter(rng);
    wk.vx += 0.2 * jitter(rng);
    wk.vy += 0.2 * jitter(rng);
  }
  for (std::size_t t = 0; t < samples; ++t) {
    for (std::size_t p = 0; p < walkers.size(); ++p) {
      const auto& wk = walkers[p];
      scene.records.push_back({static_cast<std::int64_t>(t * 10), static_cast<std::int64_t>(p + 1),
                               wk.x + wk.vx * static_cast<double>(t),
                               wk.y + wk.vy * static_cast<double>(t)});
    }
  }
  return scene;
}

std::string to_text(const TrajectoryScene& scene) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& r : scene.records) os << r.frame << ' ' << r.ped << ' ' << r.x << ' ' << r.y << '\n';
  return os.str();
}

}  // namespace uniedge
