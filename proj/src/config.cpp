#include "uniedge/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "uniedge/errors.hpp"

namespace uniedge {

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"data.path", "", "trajectory file or directory of *.txt files used for training"},
      {"data.eval_path", "", "file or directory evaluated by train/eval/predict (defaults to data.path)"},
      {"data.t_obs", "8", "observed samples per window"},
      {"data.t_pred", "12", "predicted samples per window"},
      {"data.slide", "1", "start-frame step between consecutive windows"},
      {"patch.len", "3", "patch length L"},
      {"patch.stride", "1", "patch stride S"},
      {"graph.adjacency", "complete", "patch node graph: complete | distance"},
      {"graph.distance_threshold", "2.0", "edge threshold for graph.adjacency = distance"},
      {"model.embed_dim", "128", "width of each motion-feature embedding"},
      {"model.dim", "128", "node and edge embedding width"},
      {"model.edge_branch", "true", "use edge-graph gates in the fusion GCN"},
      {"model.graph_residual", "true", "add each patch's input node features to its graph output"},
      {"model.gate", "vector", "fusion gate shape: vector | scalar"},
      {"hll.order", "3", "number of Laguerre terms J"},
      {"hll.rescale", "true", "divide the Hodge Laplacian by its spectral radius"},
      {"encoder.dim", "256", "transformer width"},
      {"encoder.heads", "4", "attention heads"},
      {"encoder.layers", "2", "encoder blocks"},
      {"encoder.ffn_dim", "512", "feed-forward width"},
      {"head.sigma_floor", "0", "constant added to every predicted sigma"},
      {"head.rho_limit", "0.999", "bound on the predicted correlation magnitude"},
      {"train.epochs", "100", "training epochs"},
      {"train.batch_size", "128", "windows averaged per optimizer step"},
      {"train.base_lr", "0.001", "initial learning rate"},
      {"train.lr_halve_every", "50", "epochs between learning-rate halvings"},
      {"train.weight_decay", "0.0001", "decoupled weight decay"},
      {"train.augment", "false", "random rotation of training windows"},
      {"train.eval_every", "1", "epochs between evaluations (0 disables)"},
      {"eval.samples", "20", "samples drawn per window for best-of-K metrics"},
      {"preprocess.endpoint_mode", "last_velocity", "velocity reference: off | last_velocity | oracle_gt"},
      {"seed", "0", "root of every random stream"},
  };
  return keys;
}

Config::Config() {
  for (const auto& k : config_keys()) values_.emplace(k.key, k.default_value);
}

namespace {
std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}
}  // namespace

Config Config::parse(std::string_view text) {
  Config cfg;
  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw BadConfig("config line " + std::to_string(line_no) + ": expected `key = value`");
    }
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  // Validate every typed key eagerly so errors surface at load time.
  cfg.model();
  cfg.train();
  cfg.windows();
  cfg.seed();
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw BadConfig("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void Config::set(std::string_view key, std::string_view value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw BadConfig("unknown config key: " + std::string(key));
  it->second = std::string(value);
}

const std::string& Config::raw(std::string_view key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw BadConfig("unknown config key: " + std::string(key));
  return it->second;
}

std::string Config::get_string(std::string_view key) const { return raw(key); }

std::int64_t Config::get_int(std::string_view key) const {
  const std::string& v = raw(key);
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw BadConfig("config key " + std::string(key) + " expects an integer, got `" + v + "`");
  }
  return out;
}

std::size_t Config::get_size(std::string_view key) const {
  const std::int64_t v = get_int(key);
  if (v < 1) throw BadConfig("config key " + std::string(key) + " must be positive");
  return static_cast<std::size_t>(v);
}

double Config::get_double(std::string_view key) const {
  const std::string& v = raw(key);
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw BadConfig("config key " + std::string(key) + " expects a number, got `" + v + "`");
  }
  return out;
}

bool Config::get_bool(std::string_view key) const {
  const std::string& v = raw(key);
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw BadConfig("config key " + std::string(key) + " expects true/false, got `" + v + "`");
}

ModelConfig Config::model() const {
  ModelConfig m;
  m.t_obs = get_size("data.t_obs");
  m.t_pred = get_size("data.t_pred");
  m.embed_dim = get_size("model.embed_dim");
  m.node_dim = get_size("model.dim");
  m.patching.length = get_size("patch.len");
  m.patching.stride = get_size("patch.stride");
  const std::string adjacency = get_string("graph.adjacency");
  if (adjacency == "complete") m.node_graph.mode = AdjacencyMode::complete;
  else if (adjacency == "distance") m.node_graph.mode = AdjacencyMode::distance;
  else throw BadConfig("config key graph.adjacency expects complete|distance, got `" + adjacency + "`");
  m.node_graph.distance_threshold = get_double("graph.distance_threshold");
  m.edge_branch = get_bool("model.edge_branch");
  m.graph_residual = get_bool("model.graph_residual");
  const std::string gate = get_string("model.gate");
  if (gate == "vector") m.gate_mode = GateMode::vector;
  else if (gate == "scalar") m.gate_mode = GateMode::scalar;
  else throw BadConfig("config key model.gate expects vector|scalar, got `" + gate + "`");
  m.hll_order = get_size("hll.order");
  m.hll_rescale = get_bool("hll.rescale");
  m.encoder.model_dim = get_size("encoder.dim");
  m.encoder.heads = get_size("encoder.heads");
  m.encoder.layers = get_size("encoder.layers");
  m.encoder.ffn_dim = get_size("encoder.ffn_dim");
  m.head.sigma_floor = get_double("head.sigma_floor");
  m.head.rho_limit = get_double("head.rho_limit");
  try {
    m.endpoint_mode = parse_endpoint_mode(get_string("preprocess.endpoint_mode"));
  } catch (const BadConfig&) {
    throw BadConfig("config key preprocess.endpoint_mode expects off|last_velocity|oracle_gt, got `" +
                    get_string("preprocess.endpoint_mode") + "`");
  }
  try {
    m.validate();
  } catch (const PatchTooLong& e) {
    throw BadConfig(std::string("config key patch.len: ") + e.what());
  }
  return m;
}

TrainConfig Config::train() const {
  TrainConfig t;
  t.epochs = get_size("train.epochs");
  t.batch_size = get_size("train.batch_size");
  t.base_lr = get_double("train.base_lr");
  if (!(t.base_lr > 0.0)) throw BadConfig("config key train.base_lr must be positive");
  t.lr_halve_every = get_size("train.lr_halve_every");
  t.weight_decay = get_double("train.weight_decay");
  if (t.weight_decay < 0.0) throw BadConfig("config key train.weight_decay must be non-negative");
  t.augment = get_bool("train.augment");
  const std::int64_t eval_every = get_int("train.eval_every");
  if (eval_every < 0) throw BadConfig("config key train.eval_every must be non-negative");
  t.eval_every = static_cast<std::size_t>(eval_every);
  t.eval_samples = get_size("eval.samples");
  t.seed = seed();
  return t;
}

WindowSpec Config::windows() const {
  WindowSpec w;
  w.t_obs = get_size("data.t_obs");
  w.t_pred = get_size("data.t_pred");
  w.slide = get_size("data.slide");
  if (w.t_obs < 2) throw BadConfig("config key data.t_obs must be at least 2");
  return w;
}

std::uint64_t Config::seed() const {
  const std::int64_t s = get_int("seed");
  if (s < 0) throw BadConfig("config key seed must be non-negative");
  return static_cast<std::uint64_t>(s);
}

std::string Config::to_text() const {
  std::ostringstream os;
  for (const auto& k : config_keys()) os << k.key << " = " << raw(k.key) << '\n';
  return os.str();
}

}  // namespace uniedge
