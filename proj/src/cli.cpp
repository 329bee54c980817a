#include "uniedge/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "uniedge/checkpoint.hpp"
#include "uniedge/edgegraph.hpp"
#include "uniedge/errors.hpp"
#include "uniedge/fixtures.hpp"
#include "uniedge/gradcheck.hpp"
#include "uniedge/model.hpp"
#include "uniedge/rng.hpp"
#include "uniedge/stgraph.hpp"
#include "uniedge/trainer.hpp"

namespace uniedge {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::vector<TrajectoryScene> load_scenes(const fs::path& path) {
  if (path.empty()) throw BadConfig("config key data.path must name a trajectory file or directory");
  if (!fs::exists(path)) throw BadConfig("config key data.path: no such file or directory: " + path.string());
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::recursive_directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw BadConfig("config key data.path: no *.txt files under " + path.string());
  } else {
    files.push_back(path);
  }
  std::vector<TrajectoryScene> scenes;
  scenes.reserve(files.size());
  for (const auto& f : files) scenes.push_back(parse_trajectory_file(f));
  return scenes;
}

std::vector<Window> windows_of(const std::vector<TrajectoryScene>& scenes, const WindowSpec& spec) {
  std::vector<Window> out;
  for (const auto& scene : scenes) {
    for (auto& w : build_windows(scene, spec)) {
      w.index = out.size();
      out.push_back(std::move(w));
    }
  }
  return out;
}

bool scene_in_subset(const std::string& scene_name, const std::string& subset) {
  const fs::path p(scene_name);
  if (p.stem() == subset) return true;
  for (const auto& part : p) {
    if (part == subset) return true;
  }
  return false;
}

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string leave_out;
};

Config resolve_config(const Common& c) {
  Config cfg = c.config_path.empty() ? Config() : Config::load(c.config_path);
  if (!c.overrides.empty()) {
    for (const auto& kv : c.overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw BadConfig("--set expects key=value, got `" + kv + "`");
      auto trim = [](std::string s) {
        s.erase(0, s.find_first_not_of(" \t"));
        s.erase(s.find_last_not_of(" \t") + 1);
        return s;
      };
      cfg.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
    }
    cfg = Config::parse(cfg.to_text());
  }
  return cfg;
}

std::vector<TrajectoryScene> select(const std::vector<TrajectoryScene>& scenes, const std::string& subset,
                                    bool inside) {
  std::vector<TrajectoryScene> out;
  for (const auto& s : scenes) {
    if (scene_in_subset(s.name, subset) == inside) out.push_back(s);
  }
  return out;
}

// Windows that eval/predict/graph-stats operate on.
std::vector<Window> target_windows(const Config& cfg, const Common& c) {
  const std::string eval_path = cfg.get_string("data.eval_path");
  std::vector<TrajectoryScene> scenes = load_scenes(eval_path.empty() ? cfg.get_string("data.path") : eval_path);
  if (!c.leave_out.empty()) {
    scenes = select(scenes, c.leave_out, true);
    if (scenes.empty()) throw BadConfig("--leave-out " + c.leave_out + " matches no scene");
  }
  return windows_of(scenes, cfg.windows());
}

ParameterStore load_model(const Config& cfg, const std::string& checkpoint) {
  ParameterStore params = init_parameters(cfg.model(), cfg.seed());
  load_checkpoint(checkpoint, params);
  return params;
}

int cmd_train(const Config& cfg, const Common& c, const std::string& checkpoint, const std::string& metrics,
              std::ostream& out) {
  std::vector<TrajectoryScene> scenes = load_scenes(cfg.get_string("data.path"));
  std::vector<TrajectoryScene> eval_scenes;
  if (!c.leave_out.empty()) {
    eval_scenes = select(scenes, c.leave_out, true);
    scenes = select(scenes, c.leave_out, false);
    if (eval_scenes.empty()) throw BadConfig("--leave-out " + c.leave_out + " matches no scene");
    if (scenes.empty()) throw BadConfig("--leave-out " + c.leave_out + " leaves no training scene");
  }
  if (const std::string eval_path = cfg.get_string("data.eval_path"); !eval_path.empty()) {
    eval_scenes = load_scenes(eval_path);
  }
  const WindowSpec spec = cfg.windows();
  const std::vector<Window> train_windows = windows_of(scenes, spec);
  const std::vector<Window> eval_windows = windows_of(eval_scenes, spec);
  if (train_windows.empty()) throw Error("training data yields no complete window");

  const ModelConfig model = cfg.model();
  ParameterStore params = init_parameters(model, cfg.seed());
  std::ofstream log(metrics, std::ios::trunc);
  if (!log) throw Error("cannot write metrics log " + metrics);
  TrainSinks sinks;
  sinks.checkpoint = fs::path(checkpoint);
  sinks.metrics = &log;
  const TrainResult result = train(train_windows, eval_windows, model, cfg.train(), params, sinks);
  out << metrics_json(result.history.back()) << '\n';
  return kExitOk;
}

int cmd_eval(const Config& cfg, const Common& c, const std::string& checkpoint, bool oracle, std::ostream& out) {
  const std::vector<Window> windows = target_windows(cfg, c);
  const std::size_t samples = cfg.get_size("eval.samples");
  EvalResult r;
  if (oracle) {
    std::size_t peds = 0;
    for (const auto& w : windows) {
      const std::size_t n = w.num_peds(), t = w.t_pred();
      Tensor drawn({samples, n, t, 2});
      for (std::size_t s = 0; s < samples; ++s) {
        std::copy(w.fut.data().begin(), w.fut.data().end(), drawn.data().begin() + s * n * t * 2);
      }
      const DisplacementError e = best_of_k_eval(drawn, w.fut);
      r.ade += e.ade * static_cast<double>(n);
      r.fde += e.fde * static_cast<double>(n);
      peds += n;
    }
    if (peds > 0) {
      r.ade /= static_cast<double>(peds);
      r.fde /= static_cast<double>(peds);
    }
    r.n_windows = windows.size();
  } else {
    const ParameterStore params = load_model(cfg, checkpoint);
    r = evaluate(windows, cfg.model(), params, samples, cfg.seed());
  }
  json j;
  j["ade"] = r.ade;
  j["fde"] = r.fde;
  j["n_windows"] = r.n_windows;
  out << j.dump() << '\n';
  return kExitOk;
}

int cmd_predict(const Config& cfg, const Common& c, const std::string& checkpoint, const std::string& output,
                std::ostream& out) {
  const ParameterStore params = load_model(cfg, checkpoint);
  const std::vector<Window> windows = target_windows(cfg, c);
  const ModelConfig model = cfg.model();
  const std::size_t samples = cfg.get_size("eval.samples");
  std::ofstream file;
  if (!output.empty()) {
    file.open(output, std::ios::trunc);
    if (!file) throw Error("cannot write " + output);
  }
  std::ostream& csv = output.empty() ? out : file;
  csv << "window_id,sample_id,ped_id,t,x,y\n" << std::setprecision(10);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const Window& w = windows[i];
    Rng stream = make_stream(cfg.seed(), "eval", i);
    const Tensor drawn = sample_trajectories(predict_track(w, model, params), w.origin, samples, stream());
    const std::size_t n = w.num_peds(), t_pred = w.t_pred();
    for (std::size_t s = 0; s < samples; ++s) {
      for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t t = 0; t < t_pred; ++t) {
          csv << w.index << ',' << s << ',' << w.ped_ids[p] << ',' << t << ',' << drawn.at({s, p, t, 0}) << ','
              << drawn.at({s, p, t, 1}) << '\n';
        }
      }
    }
  }
  return kExitOk;
}

struct NodeRef {
  std::int64_t ped = 0;
  std::size_t t = 0;
};

std::pair<NodeRef, NodeRef> parse_pair(const std::string& text) {
  // "ped:t,ped:t"
  auto node = [&](const std::string& part) {
    const auto colon = part.find(':');
    if (colon == std::string::npos) throw BadConfig("--pair expects ped:t,ped:t, got `" + text + "`");
    try {
      std::size_t used_a = 0, used_b = 0;
      const std::string a = part.substr(0, colon), b = part.substr(colon + 1);
      NodeRef r{std::stoll(a, &used_a), static_cast<std::size_t>(std::stoull(b, &used_b))};
      if (used_a != a.size() || used_b != b.size()) throw std::invalid_argument(part);
      return r;
    } catch (const std::logic_error&) {
      throw BadConfig("--pair expects ped:t,ped:t, got `" + text + "`");
    }
  };
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw BadConfig("--pair expects ped:t,ped:t, got `" + text + "`");
  return {node(text.substr(0, comma)), node(text.substr(comma + 1))};
}

json resistance_or_null(const Matrix& adjacency, std::size_t i, std::size_t j) {
  try {
    return effective_resistance(adjacency, i, j);
  } catch (const Disconnected&) {
    return nullptr;
  }
}

int cmd_graph_stats(const Config& cfg, const Common& c, const std::vector<std::string>& pair_texts,
                    bool edges, std::ostream& out) {
  const ModelConfig model = cfg.model();
  const std::vector<Window> windows = target_windows(cfg, c);
  std::vector<std::pair<NodeRef, NodeRef>> pairs;
  for (const auto& p : pair_texts) pairs.push_back(parse_pair(p));

  json report = json::array();
  for (const Window& w : windows) {
    json jw;
    jw["window"] = w.index;
    jw["scene"] = w.scene;
    jw["start_frame"] = w.start_frame;
    jw["ped_ids"] = w.ped_ids;
    Graph g;
    const Var dummy = g.constant(Tensor({w.num_peds(), w.t_obs(), 1}));
    const auto patches = segment_patches(dummy, w, model.patching, model.node_graph);
    json jp = json::array();
    for (const auto& patch : patches) {
      json e;
      e["k"] = patch.k;
      e["begin"] = patch.begin;
      e["nodes"] = patch.num_nodes();
      e["edges"] = edge_count(patch.adjacency);
      if (edges) {
        const EdgeGraph eg = build_edge_graph(patch.adjacency, patch.positions, model.hll_rescale);
        std::map<std::size_t, std::size_t> histogram;
        for (Eigen::Index r = 0; r < eg.adjacency.rows(); ++r) {
          ++histogram[static_cast<std::size_t>(std::lround(eg.adjacency.row(r).sum()))];
        }
        json h = json::object();
        for (const auto& [deg, count] : histogram) h[std::to_string(deg)] = count;
        e["line_graph_edges"] = edge_count(eg.adjacency);
        e["line_graph_degree_histogram"] = h;
        const Vector spectrum = eg.boundary.num_edges() > 0 ? symmetric_eigenvalues(eg.hodge) : Vector();
        e["l1_spectrum"] = std::vector<double>(spectrum.data(), spectrum.data() + spectrum.size());
      }
      jp.push_back(e);
    }
    jw["patches"] = jp;

    if (!pairs.empty()) {
      const Matrix st_full = build_st_adjacency(w.num_peds(), w.t_obs());
      json jr = json::array();
      for (const auto& [a, b] : pairs) {
        json e;
        e["a"] = {{"ped", a.ped}, {"t", a.t}};
        e["b"] = {{"ped", b.ped}, {"t", b.t}};
        const auto pa = std::find(w.ped_ids.begin(), w.ped_ids.end(), a.ped);
        const auto pb = std::find(w.ped_ids.begin(), w.ped_ids.end(), b.ped);
        if (pa == w.ped_ids.end() || pb == w.ped_ids.end() || a.t >= w.t_obs() || b.t >= w.t_obs()) {
          e["present"] = false;
          jr.push_back(e);
          continue;
        }
        e["present"] = true;
        const std::size_t ia = static_cast<std::size_t>(pa - w.ped_ids.begin());
        const std::size_t ib = static_cast<std::size_t>(pb - w.ped_ids.begin());
        e["unified"] = nullptr;
        e["patch"] = nullptr;
        for (const auto& patch : patches) {
          const std::size_t end = patch.begin + patch.length;
          if (a.t < patch.begin || b.t < patch.begin || a.t >= end || b.t >= end) continue;
          e["patch"] = patch.k;
          e["unified"] = resistance_or_null(patch.adjacency, ia * patch.length + (a.t - patch.begin),
                                            ib * patch.length + (b.t - patch.begin));
          break;
        }
        e["spatio_temporal"] = resistance_or_null(st_full, ia * w.t_obs() + a.t, ib * w.t_obs() + b.t);
        jr.push_back(e);
      }
      jw["pairs"] = jr;
    }
    report.push_back(jw);
  }
  out << report.dump(2) << '\n';
  return kExitOk;
}

int cmd_gradcheck(const Config& cfg, bool full_widths, std::size_t max_entries, double eps, std::ostream& out) {
  ModelConfig model = cfg.model();
  if (!full_widths) {
    const ModelConfig tiny = tiny_model_config(model.t_obs, model.t_pred);
    model.embed_dim = tiny.embed_dim;
    model.node_dim = tiny.node_dim;
    model.encoder.model_dim = tiny.encoder.model_dim;
    model.encoder.heads = tiny.encoder.heads;
    model.encoder.ffn_dim = tiny.encoder.ffn_dim;
  }
  model.validate();
  const Window w = two_pedestrian_window(model.t_obs, model.t_pred);
  ParameterStore params = gradcheck_parameters(model, cfg.seed());
  GradcheckOptions opts;
  opts.eps = eps;
  if (max_entries > 0) opts.max_entries_per_parameter = max_entries;
  const GradcheckReport r = gradcheck(
      [&](Graph& g, const ParameterStore& p) { return window_loss(g, w, model, p); }, params, opts);
  json j;
  j["max_rel_err"] = r.max_rel_error;
  j["worst_parameter"] = r.worst_parameter;
  j["worst_index"] = r.worst_index;
  j["worst_analytic"] = r.worst_analytic;
  j["worst_numeric"] = r.worst_numeric;
  j["entries_checked"] = r.entries_checked;
  out << j.dump() << '\n';
  return r.max_rel_error > 1e-4 ? kExitCheckFailed : kExitOk;
}

std::string keys_footer() {
  std::ostringstream os;
  os << "Config file: one `key = value` per line, `#` starts a comment.\nKeys (default):\n";
  for (const auto& k : config_keys()) {
    os << "  " << std::left << std::setw(26) << k.key << std::setw(16)
       << (k.default_value.empty() ? "\"\"" : k.default_value) << k.help << '\n';
  }
  return os.str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pedestrian trajectory prediction with unified patch graphs and edge-level convolution."};
  app.name("uniedge");
  app.footer(keys_footer());
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub, bool data) {
    sub->add_option("-c,--config", common.config_path, "config file")->check(CLI::ExistingFile);
    sub->add_option("--set", common.overrides, "override a config key (key=value), repeatable");
    if (data) sub->add_option("--leave-out", common.leave_out, "scene subset held out (directory name or file stem)");
  };

  std::string checkpoint = "checkpoint.bin";
  std::string metrics = "metrics.jsonl";
  std::string output;
  bool oracle = false;
  bool edges = false;
  bool full_widths = false;
  std::size_t max_entries = 0;
  double eps = 1e-5;
  std::vector<std::string> pairs;

  auto* train_cmd = app.add_subcommand("train", "train a model, writing a checkpoint and a JSON-lines metrics log");
  add_common(train_cmd, true);
  train_cmd->add_option("--checkpoint", checkpoint, "checkpoint written after every epoch")->capture_default_str();
  train_cmd->add_option("--metrics", metrics, "metrics log, one JSON object per epoch")->capture_default_str();

  auto* eval_cmd = app.add_subcommand("eval", "best-of-K ADE/FDE as JSON");
  add_common(eval_cmd, true);
  eval_cmd->add_option("--checkpoint", checkpoint, "trained parameters")->capture_default_str();
  eval_cmd->add_flag("--oracle-predictor", oracle, "use the ground truth as every sample (no checkpoint needed)");

  auto* predict_cmd = app.add_subcommand("predict", "sampled future positions as CSV");
  add_common(predict_cmd, true);
  predict_cmd->add_option("--checkpoint", checkpoint, "trained parameters")->capture_default_str();
  predict_cmd->add_option("-o,--output", output, "CSV path (default: stdout)");

  auto* stats_cmd = app.add_subcommand("graph-stats", "per-window patch graph report as JSON");
  add_common(stats_cmd, true);
  stats_cmd->add_option("--pair", pairs, "effective resistance between ped:t,ped:t (observation slots), repeatable");
  stats_cmd->add_flag("--edges", edges, "add edge-graph size, line-graph degree histogram and L1 spectrum");

  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of the full model loss");
  add_common(grad_cmd, false);
  grad_cmd->add_flag("--full-widths", full_widths, "use the configured widths instead of the narrow fixture");
  grad_cmd->add_option("--max-entries", max_entries, "probe at most this many entries per parameter (0 = all)");
  grad_cmd->add_option("--eps", eps, "finite-difference step")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitError;
  }

  try {
    const Config cfg = resolve_config(common);
    if (train_cmd->parsed()) return cmd_train(cfg, common, checkpoint, metrics, out);
    if (eval_cmd->parsed()) return cmd_eval(cfg, common, checkpoint, oracle, out);
    if (predict_cmd->parsed()) return cmd_predict(cfg, common, checkpoint, output, out);
    if (stats_cmd->parsed()) return cmd_graph_stats(cfg, common, pairs, edges, out);
    if (grad_cmd->parsed()) return cmd_gradcheck(cfg, full_widths, max_entries, eps, out);
  } catch (const NonFiniteGradient& e) {
    err << "error: non-finite gradient: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("uniedge");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace uniedge
