#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <array>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "uniedge/dataio.hpp"
#include "uniedge/errors.hpp"
#include "uniedge/rng.hpp"

using namespace uniedge;

namespace {

// `samples` frames (stride 10) for each pedestrian, moving by (vx, vy) per step.
std::string straight_lines(std::size_t samples, std::vector<std::pair<double, double>> velocities) {
  std::ostringstream os;
  for (std::size_t t = 0; t < samples; ++t) {
    for (std::size_t p = 0; p < velocities.size(); ++p) {
      os << t * 10 << ' ' << p + 1 << ' ' << velocities[p].first * static_cast<double>(t) << ' '
         << 1.0 + velocities[p].second * static_cast<double>(t) << '\n';
    }
  }
  return os.str();
}

Window single_track(std::vector<std::pair<double, double>> path, std::size_t t_obs) {
  const std::size_t t_pred = path.size() - t_obs;
  Tensor obs({1, t_obs, 2}), fut({1, t_pred, 2});
  for (std::size_t t = 0; t < path.size(); ++t) {
    Tensor& dst = t < t_obs ? obs : fut;
    const std::size_t s = t < t_obs ? t : t - t_obs;
    dst.at({0, s, 0}) = path[t].first;
    dst.at({0, s, 1}) = path[t].second;
  }
  return make_window({1}, std::move(obs), std::move(fut));
}

}  // namespace

TEST_CASE("minimal file infers the frame stride") {
  const auto scene = parse_trajectory_text("0 1 0.0 0.0\n10 1 1.0 0.0\n");
  CHECK(scene.pedestrians().size() == 1);
  CHECK(scene.frame_stride == 10);
  CHECK(scene.records.size() == 2);
}

TEST_CASE("stride is the gcd of per-pedestrian gaps") {
  const auto scene = parse_trajectory_text("0 1 0 0\n12 1 1 0\n18 1 2 0\n6 2 0 0\n30 2 0 1\n");
  CHECK(scene.frame_stride == 6);
}

TEST_CASE("records are sorted and integral decimals accepted") {
  const auto scene = parse_trajectory_text("# header\n\n10 2.0 1.5 2.5  # trailing\n10 1 0 0\n0\t1\t-1e-1\t3\n");
  REQUIRE(scene.records.size() == 3);
  CHECK(scene.records[0].frame == 0);
  CHECK(scene.records[0].x == -0.1);
  CHECK(scene.records[1].ped == 1);
  CHECK(scene.records[2].ped == 2);
  CHECK(scene.records[2].y == 2.5);
}

TEST_CASE("parser errors") {
  CHECK_THROWS_AS(parse_trajectory_text("0 1 0 0\n0 1 0 0\n"), DuplicateObservation);
  CHECK_THROWS_AS(parse_trajectory_text(""), EmptyFile);
  CHECK_THROWS_AS(parse_trajectory_text("# only a comment\n\n"), EmptyFile);
  CHECK_THROWS_AS(parse_trajectory_text("0 1.5 0 0\n"), MalformedLine);
  CHECK_THROWS_AS(parse_trajectory_text("0 1 0 nan\n"), MalformedLine);
  try {
    parse_trajectory_text("0 1 0 0\n10 1 0\n", "scene");
    FAIL("expected MalformedLine");
  } catch (const MalformedLine& e) {
    CHECK(std::string(e.what()).find("scene:2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_trajectory_text("0 1 0 0 extra\n"), MalformedLine);
}

TEST_CASE("generated two-pedestrian file parses back") {
  const auto scene = parse_trajectory_text(straight_lines(20, {{0.5, 0.0}, {0.0, -0.3}}));
  CHECK(scene.pedestrians().size() == 2);
  CHECK(scene.records.size() == 40);
  const auto path = std::filesystem::temp_directory_path() / "uniedge_dataio_roundtrip.txt";
  {
    std::ofstream out(path);
    out << to_text(scene);
  }
  const auto again = parse_trajectory_file(path);
  std::filesystem::remove(path);
  REQUIRE(again.records.size() == scene.records.size());
  for (std::size_t i = 0; i < scene.records.size(); ++i) {
    CHECK(again.records[i].frame == scene.records[i].frame);
    CHECK(again.records[i].x == scene.records[i].x);
    CHECK(again.records[i].y == scene.records[i].y);
  }
}

TEST_CASE("window counts") {
  const auto exact = build_windows(parse_trajectory_text(straight_lines(20, {{1, 0}, {0, 1}})));
  REQUIRE(exact.size() == 1);
  CHECK(exact[0].num_peds() == 2);
  CHECK(exact[0].obs.shape() == Shape{2, 8, 2});
  CHECK(exact[0].fut.shape() == Shape{2, 12, 2});

  CHECK(build_windows(parse_trajectory_text(straight_lines(21, {{1, 0}}))).size() == 2);
  CHECK(build_windows(parse_trajectory_text(straight_lines(19, {{1, 0}}))).empty());
  CHECK(build_windows(parse_trajectory_text(straight_lines(23, {{1, 0}})), {8, 12, 2}).size() == 2);
}

TEST_CASE("a pedestrian missing part of the window is excluded") {
  std::string text = straight_lines(20, {{1, 0}});
  for (int t = 0; t < 10; ++t) text += std::to_string(t * 10) + " 7 5 5\n";
  const auto windows = build_windows(parse_trajectory_text(text));
  REQUIRE(windows.size() == 1);
  CHECK(windows[0].ped_ids == std::vector<std::int64_t>{1});
}

TEST_CASE("window origin is the last observed position") {
  const auto w = build_windows(parse_trajectory_text(straight_lines(20, {{1, 0}})))[0];
  CHECK(w.origin.at({0, 0}) == 7.0);
  CHECK(w.origin.at({0, 1}) == 1.0);
  CHECK(w.start_frame == 0);
}

TEST_CASE("build_windows matches brute-force enumeration") {
  Rng rng = make_stream(11, "windows");
  std::uniform_int_distribution<int> len(5, 30), first(0, 25), stride_pick(0, 2);
  for (int trial = 0; trial < 40; ++trial) {
    const std::int64_t stride = std::array<std::int64_t, 3>{1, 6, 10}[static_cast<std::size_t>(stride_pick(rng))];
    std::ostringstream os;
    std::map<std::pair<std::int64_t, std::int64_t>, bool> present;
    for (int p = 1; p <= 4; ++p) {
      const int start = first(rng), n = len(rng);
      for (int t = start; t < start + n; ++t) {
        // Occasional holes.
        if ((t * 7 + p * 3 + trial) % 23 == 0) continue;
        os << t * stride << ' ' << p << ' ' << t << ' ' << p << '\n';
        present[{t * stride, p}] = true;
      }
    }
    const auto scene = parse_trajectory_text(os.str());
    const WindowSpec spec{4, 6, 1};
    const auto windows = build_windows(scene, spec);

    std::set<std::int64_t> frames;
    for (const auto& r : scene.records) frames.insert(r.frame);
    std::vector<std::pair<std::int64_t, std::vector<std::int64_t>>> expected;
    for (std::int64_t f : frames) {
      std::vector<std::int64_t> peds;
      for (int p = 1; p <= 4; ++p) {
        bool all = true;
        for (std::int64_t t = 0; t < 10; ++t) all = all && present.contains({f + t * scene.frame_stride, p});
        if (all) peds.push_back(p);
      }
      if (!peds.empty()) expected.emplace_back(f, peds);
    }
    REQUIRE(windows.size() == expected.size());
    for (std::size_t i = 0; i < windows.size(); ++i) {
      CHECK(windows[i].start_frame == expected[i].first);
      CHECK(windows[i].ped_ids == expected[i].second);
      CHECK(windows[i].index == i);
    }
  }
}

TEST_CASE("motion features of simple tracks") {
  SUBCASE("stationary") {
    const auto f = motion_features(single_track(std::vector<std::pair<double, double>>(10, {2.0, 3.0}), 8),
                                   EndpointMode::off);
    for (double v : f.velocity.data()) CHECK(v == 0.0);
    for (double v : f.norm.data()) CHECK(v == 0.0);
    for (double v : f.angle.data()) CHECK(v == 0.0);
  }
  SUBCASE("unit steps along x") {
    std::vector<std::pair<double, double>> path;
    for (int t = 0; t < 10; ++t) path.emplace_back(t, 0.0);
    const auto f = motion_features(single_track(path, 8), EndpointMode::off);
    CHECK(f.norm.at({0, 0, 0}) == 0.0);
    for (std::size_t t = 1; t < 8; ++t) {
      CHECK(f.norm.at({0, t, 0}) == 1.0);
      CHECK(f.angle.at({0, t, 0}) == 0.0);
    }
  }
  SUBCASE("diagonal steps") {
    std::vector<std::pair<double, double>> path;
    for (int t = 0; t < 10; ++t) path.emplace_back(t, t);
    const auto f = motion_features(single_track(path, 8), EndpointMode::off);
    for (std::size_t t = 1; t < 8; ++t) {
      CHECK(f.norm.at({0, t, 0}) == doctest::Approx(1.41421356237).epsilon(1e-10));
      CHECK(f.angle.at({0, t, 0}) == doctest::Approx(std::numbers::pi / 4).epsilon(1e-14));
    }
  }
}

TEST_CASE("endpoint modes subtract the chosen reference velocity") {
  std::vector<std::pair<double, double>> path;
  for (int t = 0; t < 10; ++t) path.emplace_back(0.1 * t * t, 0.0);  // accelerating
  const Window w = single_track(path, 8);
  const auto off = motion_features(w, EndpointMode::off);
  const auto last = motion_features(w, EndpointMode::last_velocity);
  const auto oracle = motion_features(w, EndpointMode::oracle_gt);
  const double v_last = off.velocity.at({0, 7, 0});
  const double v_end = path[9].first - path[8].first;
  for (std::size_t t = 0; t < 8; ++t) {
    CHECK(last.velocity.at({0, t, 0}) == doctest::Approx(off.velocity.at({0, t, 0}) - v_last));
    CHECK(oracle.velocity.at({0, t, 0}) == doctest::Approx(off.velocity.at({0, t, 0}) - v_end));
  }
  CHECK(last.norm.at({0, 7, 0}) == 0.0);
  CHECK(parse_endpoint_mode("oracle_gt") == EndpointMode::oracle_gt);
  CHECK(to_string(EndpointMode::last_velocity) == "last_velocity");
  CHECK_THROWS_AS(parse_endpoint_mode("endpoint"), BadConfig);
}

TEST_CASE("velocities integrate back to the observed path") {
  const auto windows = build_windows(synthetic_scene(24, 3));
  for (const auto& w : windows) {
    const auto f = motion_features(w, EndpointMode::off);
    for (std::size_t p = 0; p < w.num_peds(); ++p) {
      for (std::size_t c = 0; c < 2; ++c) {
        double pos = w.origin.at({p, c});
        for (std::size_t t = w.t_obs(); t-- > 0;) {
          CHECK(std::abs(pos - w.obs.at({p, t, c})) < 1e-12);
          pos -= f.velocity.at({p, t, c});
        }
      }
    }
  }
}

TEST_CASE("future displacements and integration are inverse") {
  const auto w = build_windows(synthetic_scene(20, 1))[0];
  const Tensor d = future_displacements(w);
  const Tensor back = integrate_displacements(w.origin, d);
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(std::abs(back[i] - w.fut[i]) < 1e-12);
}

TEST_CASE("features are translation invariant and 3E wide") {
  const auto w = build_windows(synthetic_scene(20, 2))[0];
  Tensor obs = w.obs, fut = w.fut;
  for (std::size_t i = 0; i < obs.size(); i += 2) obs[i] += 12.5, obs[i + 1] -= 40.0;
  for (std::size_t i = 0; i < fut.size(); i += 2) fut[i] += 12.5, fut[i + 1] -= 40.0;
  const Window shifted = make_window(w.ped_ids, obs, fut);

  ParameterStore params;
  Rng rng = make_stream(0, "init");
  declare_feature_parameters(params, 6, rng);
  for (EndpointMode mode : {EndpointMode::off, EndpointMode::last_velocity, EndpointMode::oracle_gt}) {
    Graph g;
    const Var a = init_features(g, w, params, mode);
    const Var b = init_features(g, shifted, params, mode);
    CHECK(a.shape() == Shape{w.num_peds(), 8, 18});
    for (std::size_t i = 0; i < a.value().size(); ++i) {
      CHECK(a.value()[i] == doctest::Approx(b.value()[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("rotation keeps the observed centroid and pairwise distances") {
  const auto w = build_windows(synthetic_scene(20, 4))[0];
  const Window r = rotate_window(w, 1.1);
  auto centroid = [](const Tensor& t) {
    double x = 0, y = 0;
    for (std::size_t i = 0; i < t.size(); i += 2) x += t[i], y += t[i + 1];
    return std::make_pair(x, y);
  };
  CHECK(centroid(r.obs).first == doctest::Approx(centroid(w.obs).first));
  CHECK(centroid(r.obs).second == doctest::Approx(centroid(w.obs).second));
  const auto d0 = std::hypot(w.fut[0] - w.obs[0], w.fut[1] - w.obs[1]);
  const auto d1 = std::hypot(r.fut[0] - r.obs[0], r.fut[1] - r.obs[1]);
  CHECK(d0 == doctest::Approx(d1));
}

TEST_CASE("synthetic scene is reproducible") {
  CHECK(to_text(synthetic_scene(24, 5)) == to_text(synthetic_scene(24, 5)));
  CHECK(to_text(synthetic_scene(24, 5)) != to_text(synthetic_scene(24, 6)));
  const auto windows = build_windows(synthetic_scene(24, 0));
  CHECK(windows.size() == 5);
  CHECK(windows[0].num_peds() == 4);
}
