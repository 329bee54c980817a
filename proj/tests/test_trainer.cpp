#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "uniedge/checkpoint.hpp"
#include "uniedge/errors.hpp"
#include "uniedge/fixtures.hpp"
#include "uniedge/rng.hpp"
#include "uniedge/trainer.hpp"

using namespace uniedge;
namespace fs = std::filesystem;

namespace {

Tensor uniform(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = d(rng);
  return t;
}

ParameterStore scalar_store(double w) {
  ParameterStore s;
  s.declare("w", Tensor({1}, {w}));
  return s;
}

GradientSet scalar_grad(double g) { return {Tensor({1}, {g})}; }

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("uniedge_test_" + std::to_string(::getpid()) + "_" + name);
}

}  // namespace

TEST_CASE("optimizer limits") {
  SUBCASE("zero gradient without decay leaves the weight alone") {
    ParameterStore p = scalar_store(1.25);
    OptimizerState st = make_optimizer(p, 1e-3, 0.0);
    for (int i = 0; i < 10; ++i) optimizer_step(p, scalar_grad(0.0), st, 1e-3);
    CHECK(p["w"].value[0] == 1.25);
    CHECK(st.step == 10);
  }
  SUBCASE("decay only scales the weight") {
    ParameterStore p = scalar_store(2.0);
    OptimizerState st = make_optimizer(p, 1.0, 0.1);
    optimizer_step(p, scalar_grad(0.0), st, 1.0);
    CHECK(p["w"].value[0] == doctest::Approx(1.8).epsilon(1e-15));
  }
  SUBCASE("constant gradient gives steps of lr times its sign") {
    for (double g : {3.0, -0.02}) {
      ParameterStore p = scalar_store(0.0);
      OptimizerState st = make_optimizer(p, 1e-3, 0.0);
      double before = 0.0;
      for (int i = 0; i < 10000; ++i) {
        before = p["w"].value[0];
        optimizer_step(p, scalar_grad(g), st, 1e-3);
      }
      const double step = p["w"].value[0] - before;
      CHECK(std::abs(step - (-1e-3 * (g > 0 ? 1.0 : -1.0))) < 1e-5);
    }
  }
  SUBCASE("zero learning rate changes nothing") {
    ParameterStore p = scalar_store(0.7);
    OptimizerState st = make_optimizer(p, 0.0, 0.0);
    optimizer_step(p, scalar_grad(5.0), st, 0.0);
    CHECK(p["w"].value[0] == 0.7);
  }
  SUBCASE("non-finite gradients leave parameters and moments untouched") {
    ParameterStore p;
    p.declare("a", Tensor({2}, {1.0, 2.0}));
    p.declare("b", Tensor({1}, {3.0}));
    OptimizerState st = make_optimizer(p, 1e-3);
    optimizer_step(p, {Tensor({2}, {0.1, 0.2}), Tensor({1}, {0.3})}, st, 1e-3);
    const ParameterStore snapshot = p;
    const OptimizerState moments = st;
    CHECK_THROWS_AS(optimizer_step(p, {Tensor({2}, {0.1, 0.2}), Tensor({1}, {NAN})}, st, 1e-3), NonFiniteGradient);
    CHECK_THROWS_AS(optimizer_step(p, {Tensor({2}, {INFINITY, 0.2}), Tensor({1}, {0.0})}, st, 1e-3),
                    NonFiniteGradient);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(p.at(i).value.data()[0] == snapshot.at(i).value.data()[0]);
    CHECK(st.step == moments.step);
    CHECK(st.first_moment[0][0] == moments.first_moment[0][0]);
  }
}

TEST_CASE("learning-rate schedule") {
  TrainConfig cfg;
  CHECK(lr_at(0, cfg) == 0.001);
  CHECK(lr_at(49, cfg) == 0.001);
  CHECK(lr_at(50, cfg) == 0.0005);
  CHECK(lr_at(100, cfg) == doctest::Approx(0.00025).epsilon(1e-15));
}

TEST_CASE("displacement error examples") {
  Rng rng = make_stream(31, "metric");
  const Tensor truth = uniform({3, 4, 2}, rng);
  const DisplacementError same = ade_fde(truth, truth);
  CHECK(same.ade == 0.0);
  CHECK(same.fde == 0.0);

  Tensor shifted = truth;
  for (std::size_t i = 0; i < shifted.size(); i += 2) shifted[i] += 1.0;
  const DisplacementError unit = ade_fde(shifted, truth);
  CHECK(unit.ade == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(unit.fde == doctest::Approx(1.0).epsilon(1e-12));

  const Tensor pred({1, 2, 2}, {3.0, 4.0, 0.0, 0.0});
  const DisplacementError mixed = ade_fde(pred, Tensor({1, 2, 2}, 0.0));
  CHECK(mixed.ade == 2.5);
  CHECK(mixed.fde == 0.0);
  CHECK_THROWS_AS(ade_fde(pred, truth), ShapeMismatch);
}

TEST_CASE("best-of-K examples") {
  Rng rng = make_stream(32, "metric");
  const Tensor truth = uniform({2, 3, 2}, rng);
  const Tensor one = uniform({1, 2, 3, 2}, rng);
  const DisplacementError single = best_of_k_eval(one, truth);
  const DisplacementError direct = ade_fde(Tensor({2, 3, 2}, std::vector<double>(one.data().begin(), one.data().end())), truth);
  CHECK(single.ade == direct.ade);
  CHECK(single.fde == direct.fde);

  Tensor many = uniform({20, 2, 3, 2}, rng, -5.0, 5.0);
  for (std::size_t i = 0; i < truth.size(); ++i) many[7 * truth.size() + i] = truth[i];
  const DisplacementError exact = best_of_k_eval(many, truth);
  CHECK(exact.ade == 0.0);
  CHECK(exact.fde == 0.0);

  // Sole pedestrian with constant offsets 1.0 and 0.4.
  Tensor two({2, 1, 2, 2}, 0.0);
  two.at({0, 0, 0, 0}) = two.at({0, 0, 1, 0}) = 1.0;
  two.at({1, 0, 0, 1}) = two.at({1, 0, 1, 1}) = 0.4;
  CHECK(best_of_k_eval(two, Tensor({1, 2, 2}, 0.0)).ade == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("best-of-K never worsens with more samples") {
  Rng rng = make_stream(33, "metric");
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor truth = uniform({3, 4, 2}, rng);
    const Tensor samples = uniform({12, 3, 4, 2}, rng, -2.0, 2.0);
    double previous = INFINITY;
    for (std::size_t k = 1; k <= 12; ++k) {
      Tensor prefix({k, 3, 4, 2}, std::vector<double>(samples.data().begin(), samples.data().begin() + k * 24));
      const double ade = best_of_k_eval(prefix, truth).ade;
      CHECK(ade <= previous);
      previous = ade;
    }
  }
}

TEST_CASE("errors are translation invariant and scale with the data") {
  Rng rng = make_stream(34, "metric");
  const Tensor truth = uniform({2, 5, 2}, rng);
  const Tensor samples = uniform({6, 2, 5, 2}, rng);
  const DisplacementError base = best_of_k_eval(samples, truth);
  const auto choice = best_of_k_choice(samples, truth);

  Tensor t_truth = truth, t_samples = samples;
  for (std::size_t i = 0; i < t_truth.size(); ++i) t_truth[i] += i % 2 ? -7.5 : 3.25;
  for (std::size_t i = 0; i < t_samples.size(); ++i) t_samples[i] += i % 2 ? -7.5 : 3.25;
  const DisplacementError moved = best_of_k_eval(t_samples, t_truth);
  CHECK(moved.ade == doctest::Approx(base.ade).epsilon(1e-12));
  CHECK(moved.fde == doctest::Approx(base.fde).epsilon(1e-12));

  Tensor s_truth = truth, s_samples = samples;
  for (double& v : s_truth.data()) v *= 3.0;
  for (double& v : s_samples.data()) v *= 3.0;
  const DisplacementError scaled = best_of_k_eval(s_samples, s_truth);
  CHECK(scaled.ade == doctest::Approx(3.0 * base.ade).epsilon(1e-12));
  CHECK(scaled.fde == doctest::Approx(3.0 * base.fde).epsilon(1e-12));
  CHECK(best_of_k_choice(s_samples, s_truth) == choice);
}

TEST_CASE("checkpoint round trip") {
  const ModelConfig cfg = tiny_model_config();
  const ParameterStore params = init_parameters(cfg, 5);
  std::stringstream buf;
  write_checkpoint(buf, params);
  const ParameterStore back = read_checkpoint(buf);
  REQUIRE(back.size() == params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    CHECK(back.at(i).name == params.at(i).name);
    CHECK(back.at(i).value.shape() == params.at(i).value.shape());
    CHECK(std::equal(back.at(i).value.data().begin(), back.at(i).value.data().end(),
                     params.at(i).value.data().begin()));
  }

  const fs::path path = temp_path("ckpt.bin");
  save_checkpoint(path, params);
  ParameterStore loaded = init_parameters(cfg, 6);
  load_checkpoint(path, loaded);
  for (std::size_t i = 0; i < params.size(); ++i)
    CHECK(std::equal(loaded.at(i).value.data().begin(), loaded.at(i).value.data().end(),
                     params.at(i).value.data().begin()));

  ModelConfig wider = cfg;
  wider.node_dim = 6;
  ParameterStore mismatched = init_parameters(wider, 0);
  CHECK_THROWS_AS(load_checkpoint(path, mismatched), BadCheckpoint);
  fs::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path, loaded), MissingCheckpoint);

  std::stringstream garbage("not a checkpoint at all");
  CHECK_THROWS_AS(read_checkpoint(garbage), BadCheckpoint);
  std::string truncated = buf.str().substr(0, 40);
  std::stringstream cut(truncated);
  CHECK_THROWS_AS(read_checkpoint(cut), BadCheckpoint);
}

TEST_CASE("training is deterministic and logs one JSON object per epoch") {
  const ModelConfig model = tiny_model_config();
  const auto windows = build_windows(synthetic_scene(22, 0));
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 2;
  cfg.eval_samples = 5;
  std::string logs[2];
  for (std::string& log : logs) {
    ParameterStore params = init_parameters(model, cfg.seed);
    std::ostringstream out;
    TrainSinks sinks;
    sinks.metrics = &out;
    train(windows, windows, model, cfg, params, sinks);
    log = out.str();
  }
  CHECK(logs[0] == logs[1]);
  std::istringstream lines(logs[0]);
  std::string line;
  std::size_t count = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("epoch").get<std::size_t>() == count);
    CHECK(j.contains("train_loss"));
    CHECK(j.contains("lr"));
    CHECK(j.contains("eval_ade"));
    CHECK(j.contains("eval_fde"));
    ++count;
  }
  CHECK(count == 3);
}

TEST_CASE("training lowers the loss on a single linear window") {
  const ModelConfig model = tiny_model_config();
  Tensor obs({1, 8, 2}), fut({1, 12, 2});
  for (std::size_t t = 0; t < 8; ++t) obs.at({0, t, 0}) = 0.4 * static_cast<double>(t);
  for (std::size_t t = 0; t < 12; ++t) fut.at({0, t, 0}) = 0.4 * static_cast<double>(t + 8);
  const Window w = make_window({1}, obs, fut);
  TrainConfig cfg;
  cfg.epochs = 300;
  cfg.batch_size = 1;
  cfg.eval_every = 0;
  ParameterStore params = init_parameters(model, 0);
  const TrainResult r = train({w}, {}, model, cfg, params);
  REQUIRE(r.history.size() == 300);
  CHECK(r.history.back().train_loss < r.history.front().train_loss);
}

TEST_CASE("training writes a checkpoint every epoch") {
  const ModelConfig model = tiny_model_config();
  const auto windows = build_windows(synthetic_scene(20, 1));
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.eval_every = 0;
  const fs::path path = temp_path("train.bin");
  ParameterStore params = init_parameters(model, 0);
  TrainSinks sinks;
  sinks.checkpoint = path;
  train(windows, {}, model, cfg, params, sinks);
  ParameterStore loaded = init_parameters(model, 9);
  load_checkpoint(path, loaded);
  for (std::size_t i = 0; i < params.size(); ++i)
    CHECK(std::equal(loaded.at(i).value.data().begin(), loaded.at(i).value.data().end(),
                     params.at(i).value.data().begin()));
  fs::remove(path);
}
