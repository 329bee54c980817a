#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "uniedge/errors.hpp"
#include "uniedge/fixtures.hpp"
#include "uniedge/model.hpp"
#include "uniedge/predictor.hpp"
#include "uniedge/rng.hpp"

using namespace uniedge;

namespace {

Tensor uniform(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = d(rng);
  return t;
}

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

// One-step, one-pedestrian head with the given parameters.
GaussianHead head_of(Graph& g, double mux, double muy, double sx, double sy, double rho) {
  return {g.variable(Tensor({1, 1, 2}, {mux, muy})),
          g.variable(Tensor({1, 1, 2}, {std::log(sx), std::log(sy)})),
          g.variable(Tensor({1, 1, 1}, {rho}))};
}

EncoderConfig small_encoder() {
  EncoderConfig cfg;
  cfg.model_dim = 8;
  cfg.heads = 2;
  cfg.ffn_dim = 16;
  return cfg;
}

}  // namespace

TEST_CASE("bivariate NLL closed forms") {
  SUBCASE("target at the mean with unit scales") {
    Graph g;
    const Var nll = bivariate_nll(head_of(g, 0.3, -0.2, 1.0, 1.0, 0.0), Tensor({1, 1, 2}, {0.3, -0.2}));
    CHECK(std::abs(nll.value().item() - kLog2Pi) < 1e-10);
  }
  SUBCASE("unit offset on both axes") {
    Graph g;
    const Var nll = bivariate_nll(head_of(g, 0.0, 0.0, 1.0, 1.0, 0.0), Tensor({1, 1, 2}, {1.0, 1.0}));
    CHECK(std::abs(nll.value().item() - (kLog2Pi + 1.0)) < 1e-10);
  }
  SUBCASE("zero correlation splits into univariate terms") {
    Rng rng = make_stream(21, "nll");
    std::uniform_real_distribution<double> d(-2.0, 2.0), s(0.2, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
      const double x = d(rng), y = d(rng), mx = d(rng), my = d(rng), sx = s(rng), sy = s(rng);
      Graph g;
      const double got = bivariate_nll(head_of(g, mx, my, sx, sy, 0.0), Tensor({1, 1, 2}, {x, y})).value().item();
      auto uni = [](double v, double m, double sd) {
        return 0.5 * std::log(2.0 * std::numbers::pi) + std::log(sd) + 0.5 * (v - m) * (v - m) / (sd * sd);
      };
      CHECK(std::abs(got - (uni(x, mx, sx) + uni(y, my, sy))) < 1e-10);
    }
  }
  SUBCASE("tape and scalar forms agree with correlation") {
    Rng rng = make_stream(22, "nll");
    std::uniform_real_distribution<double> d(-2.0, 2.0), s(0.2, 3.0), r(-0.95, 0.95);
    for (int trial = 0; trial < 50; ++trial) {
      const double x = d(rng), y = d(rng), mx = d(rng), my = d(rng), sx = s(rng), sy = s(rng), rho = r(rng);
      Graph g;
      const double got = bivariate_nll(head_of(g, mx, my, sx, sy, rho), Tensor({1, 1, 2}, {x, y})).value().item();
      CHECK(std::abs(got - bivariate_nll_scalar(x, y, mx, my, sx, sy, rho)) < 1e-10);
    }
  }
  Graph g;
  CHECK_THROWS_AS(bivariate_nll(head_of(g, 0, 0, 1, 1, 0), Tensor({1, 2, 2})), ShapeMismatch);
}

TEST_CASE("NLL gradient with respect to the mean vanishes at the target") {
  Graph g;
  const GaussianHead head = head_of(g, 0.4, -1.1, 0.7, 1.9, 0.6);
  g.backward(bivariate_nll(head, Tensor({1, 1, 2}, {0.4, -1.1})));
  const Tensor* grad = g.grad(head.mu);
  REQUIRE(grad != nullptr);
  CHECK(std::abs((*grad)[0]) < 1e-15);
  CHECK(std::abs((*grad)[1]) < 1e-15);
}

TEST_CASE("sampling reproduces the requested covariance") {
  const std::size_t draws = 100000;
  for (double rho : {0.0, 0.8}) {
    GaussianTrack track{Tensor({1, 1, 2}, {0.5, -0.25}), Tensor({1, 1, 2}, {1.5, 0.5}), Tensor({1, 1}, {rho})};
    const Tensor samples = sample_trajectories(track, Tensor({1, 2}, 0.0), draws, 3);
    double mx = 0, my = 0;
    for (std::size_t s = 0; s < draws; ++s) mx += samples[2 * s], my += samples[2 * s + 1];
    mx /= draws;
    my /= draws;
    double vx = 0, vy = 0, cxy = 0;
    for (std::size_t s = 0; s < draws; ++s) {
      const double dx = samples[2 * s] - mx, dy = samples[2 * s + 1] - my;
      vx += dx * dx, vy += dy * dy, cxy += dx * dy;
    }
    vx /= draws - 1;
    vy /= draws - 1;
    cxy /= draws - 1;
    CHECK(std::abs(mx - 0.5) < 0.05);
    CHECK(std::abs(my + 0.25) < 0.05);
    CHECK(std::abs(vx - 2.25) < 0.05);
    CHECK(std::abs(vy - 0.25) < 0.05);
    CHECK(std::abs(cxy - rho * 1.5 * 0.5) < 0.05);
    CHECK(std::abs(cxy / std::sqrt(vx * vy) - rho) < 0.05);
  }
}

TEST_CASE("samples integrate displacements from the origin") {
  GaussianTrack track{Tensor({1, 3, 2}, {1, 0, 1, 0, 0, 2}), Tensor({1, 3, 2}, 1e-12), Tensor({1, 3}, 0.0)};
  const Tensor s = sample_trajectories(track, Tensor({1, 2}, {10.0, 20.0}), 2, 0);
  CHECK(s.shape() == Shape{2, 1, 3, 2});
  CHECK(std::abs(s.at({1, 0, 2, 0}) - 12.0) < 1e-9);
  CHECK(std::abs(s.at({1, 0, 2, 1}) - 22.0) < 1e-9);
  CHECK_THROWS(sample_trajectories(track, Tensor({1, 2}), 0, 0));
}

TEST_CASE("pooling and token assembly") {
  Rng rng = make_stream(23, "tokens");
  Graph g;
  SUBCASE("length one pooling is a reshape") {
    const Tensor a = uniform({3, 4}, rng), b = uniform({3, 4}, rng);
    const Var parts[] = {g.constant(a), g.constant(b)};
    const Var pooled = stack_and_pool(parts, 3, 1);
    CHECK(pooled.shape() == Shape{3, 2, 4});
    CHECK(pooled.value().at({2, 1, 3}) == b.at({2, 3}));
    CHECK(pooled.value().at({1, 0, 0}) == a.at({1, 0}));
  }
  SUBCASE("equal embeddings pool to themselves") {
    Tensor h({6, 2});
    for (std::size_t i = 0; i < 6; ++i) h.at({i, 0}) = 0.25 * static_cast<double>(i / 3), h.at({i, 1}) = -1.5;
    const Var parts[] = {g.constant(h)};
    const Var pooled = stack_and_pool(parts, 2, 3);
    CHECK(pooled.value().at({0, 0, 0}) == 0.0);
    CHECK(pooled.value().at({1, 0, 0}) == 0.25);
    CHECK(pooled.value().at({1, 0, 1}) == -1.5);
  }
  SUBCASE("tokens are history then placeholders plus positions") {
    const Tensor hist = uniform({2, 3, 4}, rng), ph = uniform({5, 4}, rng), pos = uniform({8, 4}, rng);
    const Var tokens = assemble_tokens(g.constant(hist), g.constant(ph), g.constant(pos));
    CHECK(tokens.shape() == Shape{2, 8, 4});
    CHECK(tokens.value().at({1, 2, 3}) == hist.at({1, 2, 3}) + pos.at({2, 3}));
    CHECK(tokens.value().at({1, 6, 0}) == ph.at({3, 0}) + pos.at({6, 0}));
    CHECK(tokens.value().at({0, 6, 0}) == tokens.value().at({1, 6, 0}));
    CHECK_THROWS_AS(assemble_tokens(g.constant(hist), g.constant(ph), g.constant(uniform({7, 4}, rng))),
                    ShapeMismatch);
  }
  const Var bad[] = {g.constant(Tensor({5, 2}))};
  CHECK_THROWS_AS(stack_and_pool(bad, 2, 3), ShapeMismatch);
}

TEST_CASE("encoder attention rows sum to one") {
  Rng rng = make_stream(24, "encoder");
  const EncoderConfig cfg = small_encoder();
  ParameterStore params;
  declare_encoder_parameters(params, cfg, rng);
  SUBCASE("random tokens") {
    Graph g;
    const EncoderOutput out = encoder_forward(g.constant(uniform({3, 7, 8}, rng)), cfg, params);
    REQUIRE(out.attention.size() == 2);
    for (const Var& att : out.attention) {
      const Tensor& a = att.value();
      CHECK(a.shape() == Shape{3, 2, 7, 7});
      for (std::size_t row = 0; row < a.size() / 7; ++row) {
        double s = 0;
        for (std::size_t j = 0; j < 7; ++j) s += a[row * 7 + j];
        CHECK(std::abs(s - 1.0) < 1e-12);
      }
    }
  }
  SUBCASE("a single token attends to itself") {
    Graph g;
    const EncoderOutput out = encoder_forward(g.constant(uniform({2, 1, 8}, rng)), cfg, params);
    for (const Var& att : out.attention)
      for (double v : att.value().data()) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("identical tokens give uniform attention") {
    const Tensor row = uniform({8}, rng);
    Tensor tokens({1, 5, 8});
    for (std::size_t t = 0; t < 5; ++t)
      for (std::size_t c = 0; c < 8; ++c) tokens.at({0, t, c}) = row[c];
    Graph g;
    const EncoderOutput out = encoder_forward(g.constant(tokens), cfg, params);
    for (double v : out.attention[0].value().data()) CHECK(std::abs(v - 0.2) < 1e-12);
  }
}

TEST_CASE("encoder treats pedestrians independently") {
  Rng rng = make_stream(25, "encoder");
  const EncoderConfig cfg = small_encoder();
  ParameterStore params;
  declare_encoder_parameters(params, cfg, rng);
  const std::size_t n = 5, s = 6, d = 8;
  const Tensor tokens = uniform({n, s, d}, rng);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Tensor permuted({n, s, d});
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t i = 0; i < s * d; ++i) permuted[p * s * d + i] = tokens[perm[p] * s * d + i];
  Graph g;
  const Tensor a = encoder_forward(g.constant(tokens), cfg, params).output.value();
  const Tensor b = encoder_forward(g.constant(permuted), cfg, params).output.value();
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t i = 0; i < s * d; ++i) CHECK(b[p * s * d + i] == a[perm[p] * s * d + i]);

  // Changing one pedestrian's tokens leaves the others untouched.
  Tensor edited = tokens;
  for (std::size_t i = 0; i < s * d; ++i) edited[i] += 1.0;
  const Tensor c = encoder_forward(g.constant(edited), cfg, params).output.value();
  for (std::size_t i = s * d; i < c.size(); ++i) CHECK(c[i] == a[i]);
}

TEST_CASE("encoder configuration checks") {
  EncoderConfig cfg = small_encoder();
  cfg.heads = 3;
  CHECK_THROWS_AS(cfg.validate(), BadConfig);
  cfg.heads = 0;
  CHECK_THROWS_AS(cfg.validate(), BadConfig);
  Rng rng = make_stream(26, "encoder");
  ParameterStore params;
  declare_encoder_parameters(params, small_encoder(), rng);
  Graph g;
  CHECK_THROWS_AS(encoder_forward(g.constant(Tensor({2, 3, 4})), small_encoder(), params), ShapeMismatch);
}

TEST_CASE("only the future positions reach the loss") {
  Rng rng = make_stream(27, "head");
  ParameterStore params;
  declare_head_parameters(params, 8, rng);
  const std::size_t n = 3, k = 4, t_pred = 5;
  Graph g;
  const Var encoded = g.variable(uniform({n, k + t_pred, 8}, rng));
  const GaussianHead head = future_head(encoded, t_pred, params);
  CHECK(head.mu.shape() == Shape{n, t_pred, 2});
  g.backward(bivariate_nll(head, uniform({n, t_pred, 2}, rng)));
  const Tensor* grad = g.grad(encoded);
  REQUIRE(grad != nullptr);
  double history = 0.0, future = 0.0;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t t = 0; t < k + t_pred; ++t)
      for (std::size_t c = 0; c < 8; ++c) (t < k ? history : future) += std::abs(grad->at({p, t, c}));
  CHECK(history == 0.0);
  CHECK(future > 0.0);
  CHECK_THROWS_AS(future_head(g.variable(Tensor({1, 3, 8})), 4, params), ShapeMismatch);
}

TEST_CASE("rho stays strictly inside the unit interval") {
  Rng rng = make_stream(28, "head");
  ParameterStore params;
  declare_head_parameters(params, 4, rng);
  for (double& v : params["head.b"].value.data()) v = 1e3;
  Graph g;
  const GaussianHead head = gaussian_head(g.constant(uniform({2, 3, 4}, rng)), params);
  for (double v : head.rho.value().data()) CHECK(std::abs(v) < 1.0);
}

TEST_CASE("sigma floor and rho limit bound the head") {
  Rng rng = make_stream(29, "head");
  ParameterStore params;
  declare_head_parameters(params, 4, rng);
  for (double& v : params["head.b"].value.data()) v = -50.0;
  Graph g;
  const Var repr = g.constant(uniform({2, 3, 4}, rng));
  const HeadConfig bounded{0.02, 0.9};
  const GaussianHead head = gaussian_head(repr, params, bounded);
  for (double v : head.log_sigma.value().data()) CHECK(std::exp(v) == doctest::Approx(0.02).epsilon(1e-12));
  for (double v : head.rho.value().data()) CHECK(v == doctest::Approx(-0.9).epsilon(1e-12));
  // A zero floor reproduces the plain exponential.
  const GaussianHead plain = gaussian_head(repr, params);
  const GaussianHead zero = gaussian_head(repr, params, HeadConfig{0.0, kRhoLimit});
  CHECK(std::ranges::equal(plain.log_sigma.value().data(), zero.log_sigma.value().data()));
  CHECK_THROWS_AS((HeadConfig{-1.0, 0.5}.validate()), BadConfig);
  CHECK_THROWS_AS((HeadConfig{0.0, 1.0}.validate()), BadConfig);
}

TEST_CASE("model token count follows the patch count") {
  ModelConfig cfg = tiny_model_config();
  const Window w = two_pedestrian_window();
  for (std::size_t len : {1, 3, 8}) {
    cfg.patching.length = len;
    const ParameterStore params = init_parameters(cfg, 0);
    Graph g;
    const ForwardPass fp = forward(g, w, cfg, params);
    CHECK(fp.tokens.shape() == Shape{2, 8 - len + 1 + 12, cfg.encoder.model_dim});
    CHECK(fp.head.mu.shape() == Shape{2, 12, 2});
  }
  cfg.patching.length = 9;
  CHECK_THROWS_AS(init_parameters(cfg, 0), PatchTooLong);
}
