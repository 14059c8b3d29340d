#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

#include "losstopo/sampler.hpp"
#include "support/test_helpers.hpp"

using namespace losstopo;

namespace {

DirectionPair axis_pair(std::size_t dim, std::size_t a, std::size_t b) {
  DirectionPair d;
  d.delta1.assign(dim, 0.0);
  d.delta2.assign(dim, 0.0);
  d.delta1[a] = 1.0;
  d.delta2[b] = 1.0;
  return d;
}

LandscapeGrid synthetic(std::vector<double> values, std::size_t rows, std::size_t cols) {
  LandscapeGrid g;
  g.alphas1 = linspace(-1, 1, rows);
  g.alphas2 = linspace(-1, 1, cols);
  g.losses = std::move(values);
  return g;
}

}  // namespace

TEST_CASE("centre cell is exactly the unperturbed loss") {
  MlpSpec spec;
  Mlp mlp(spec);
  const auto theta = mlp.network().init(7).theta;
  const auto dirs = random_pair(theta.size(), 3);
  const auto g = sample_landscape([&](auto t) { return mlp.loss(t); }, theta, dirs, {-0.5, 0.5}, {-0.5, 0.5}, 21, 21);
  CHECK(g.alphas1[10] == 0.0);
  CHECK(g.alphas2[10] == 0.0);
  CHECK(g.at(10, 10) == mlp.loss(theta));
  CHECK(g.center_loss == mlp.loss(theta));
  CHECK(g.nonfinite_cells == 0);
}

TEST_CASE("quadratic along eigen-directions gives the closed form") {
  const auto obj = testing::diagonal_quadratic({4.0, 1.5, 0.3, 2.0});
  const std::vector<double> theta(4, 0.0);
  const auto g = sample_landscape(obj.loss, theta, axis_pair(4, 0, 1), {-1, 1}, {-1, 1}, 41, 41);
  for (std::size_t i = 0; i < 41; ++i)
    for (std::size_t j = 0; j < 41; ++j) {
      const double a = g.alphas1[i], b = g.alphas2[j];
      CHECK(std::abs(g.at(i, j) - 0.5 * (4.0 * a * a + 1.5 * b * b)) < 1e-10);
    }
}

TEST_CASE("default grid shape and symmetric coordinates") {
  const auto obj = testing::diagonal_quadratic({1.0, 1.0});
  const auto g = sample_landscape(obj.loss, std::vector<double>{0.0, 0.0}, axis_pair(2, 0, 1), {}, {}, 41, 41);
  CHECK(g.losses.size() == 1681);
  CHECK(g.alphas1.front() == -1.0);
  CHECK(g.alphas1.back() == 1.0);
  for (std::size_t i = 0; i < 41; ++i) {
    CHECK(g.alphas1[i] == -g.alphas1[40 - i]);
    CHECK(g.alphas2[i] == -g.alphas2[40 - i]);
  }
  CHECK(std::is_sorted(g.alphas1.begin(), g.alphas1.end()));
  CHECK(to_field(g, {}).size() == 1681);
}

TEST_CASE("reflecting delta1 reverses the first axis") {
  MlpSpec spec;
  spec.n_points = 50;
  Mlp mlp(spec);
  const auto theta = mlp.network().init(1).theta;
  auto dirs = random_pair(theta.size(), 5);
  const LossFunction f = [&](auto t) { return mlp.loss(t); };
  const auto g = sample_landscape(f, theta, dirs, {-1, 1}, {-1, 1}, 11, 9);
  for (double& x : dirs.delta1) x = -x;
  const auto r = sample_landscape(f, theta, dirs, {-1, 1}, {-1, 1}, 11, 9);
  for (std::size_t i = 0; i < 11; ++i)
    for (std::size_t j = 0; j < 9; ++j) CHECK(r.at(i, j) == g.at(10 - i, j));
}

TEST_CASE("coarse grid values all appear in the fine grid") {
  MlpSpec spec;
  spec.n_points = 50;
  Mlp mlp(spec);
  const auto theta = mlp.network().init(2).theta;
  const auto dirs = random_pair(theta.size(), 9);
  const LossFunction f = [&](auto t) { return mlp.loss(t); };
  const auto coarse = sample_landscape(f, theta, dirs, {-0.5, 0.5}, {-0.5, 0.5}, 21, 21);
  const auto fine = sample_landscape(f, theta, dirs, {-0.5, 0.5}, {-0.5, 0.5}, 41, 41);
  const std::set<double> fine_values(fine.losses.begin(), fine.losses.end());
  for (std::size_t i = 0; i < 21; ++i)
    for (std::size_t j = 0; j < 21; ++j) {
      CHECK(coarse.at(i, j) == fine.at(2 * i, 2 * j));
      CHECK(fine_values.count(coarse.at(i, j)) == 1);
    }
}

TEST_CASE("results do not depend on scheduling") {
  MlpSpec spec;
  Mlp mlp(spec);
  const auto theta = mlp.network().init(3).theta;
  const auto dirs = random_pair(theta.size(), 1);
  const LossFunction f = [&](auto t) { return mlp.loss(t); };
  ::setenv("LOSSSCAPE_THREADS", "0", 1);
  const auto seq = sample_landscape(f, theta, dirs, {-1, 1}, {-1, 1}, 15, 15);
  ::setenv("LOSSSCAPE_THREADS", "4", 1);
  const auto par = sample_landscape(f, theta, dirs, {-1, 1}, {-1, 1}, 15, 15);
  ::unsetenv("LOSSSCAPE_THREADS");
  CHECK(seq.losses == par.losses);
}

TEST_CASE("non-finite cells take the largest finite value") {
  const LossFunction f = [](std::span<const double> t) { return t[0] > 0.5 ? INFINITY : t[0] + t[1]; };
  const auto g = sample_landscape(f, std::vector<double>{0.0, 0.0}, axis_pair(2, 0, 1), {-1, 1}, {-1, 1}, 5, 5);
  CHECK(g.nonfinite_cells == 5);
  double max_finite = -INFINITY;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 5; ++j) max_finite = std::max(max_finite, g.at(i, j));
  for (std::size_t j = 0; j < 5; ++j) CHECK(g.at(4, j) == max_finite);

  const LossFunction nan = [](std::span<const double>) { return NAN; };
  CHECK_THROWS_AS(sample_landscape(nan, std::vector<double>{0.0, 0.0}, axis_pair(2, 0, 1), {}, {}, 3, 3), NumericError);
}

TEST_CASE("sampling preconditions") {
  const auto obj = testing::diagonal_quadratic({1.0, 1.0});
  const std::vector<double> theta{0.0, 0.0};
  CHECK_THROWS_AS(sample_landscape(obj.loss, theta, axis_pair(2, 0, 1), {}, {}, 1, 5), ConfigError);
  CHECK_THROWS_AS(sample_landscape(obj.loss, theta, axis_pair(2, 0, 1), {1, -1}, {}, 5, 5), ConfigError);
  CHECK_THROWS_AS(sample_landscape(obj.loss, theta, axis_pair(2, 0, 1), {0, INFINITY}, {}, 5, 5), ConfigError);
  CHECK_THROWS_AS(sample_landscape(obj.loss, theta, axis_pair(3, 0, 1), {}, {}, 5, 5), ConfigError);
}

TEST_CASE("clipping") {
  SUBCASE("q = 1 is the identity") {
    std::vector<double> v(20);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(double(i)) * 5;
    const auto g = synthetic(v, 4, 5);
    const auto c = clip_outliers(g, 1.0);
    CHECK(c.losses == g.losses);
    CHECK(c.clipped_cells == 0);
  }
  SUBCASE("constant field is untouched") {
    const auto g = synthetic(std::vector<double>(12, 3.0), 3, 4);
    for (double q : {0.51, 0.75, 0.9, 1.0}) CHECK(clip_outliers(g, q).losses == g.losses);
  }
  SUBCASE("1..100 at q = 0.9 clips exactly ten cells") {
    for (auto [r, c] : {std::pair<std::size_t, std::size_t>{10, 10}, {4, 25}, {2, 50}}) {
      std::vector<double> v(100);
      for (std::size_t i = 0; i < 100; ++i) v[i] = double((i * 37) % 100 + 1);  // shuffled 1..100
      const auto g = clip_outliers(synthetic(v, r, c), 0.9);
      CHECK(g.clipped_cells == 10);
      CHECK(*std::max_element(g.losses.begin(), g.losses.end()) == 90.0);
      CHECK(std::count(g.losses.begin(), g.losses.end(), 90.0) == 11);
      CHECK(g.clip_quantile == 0.9);
    }
  }
  SUBCASE("nearest rank") {
    const std::vector<double> v{5, 1, 4, 2, 3};
    CHECK(nearest_rank_quantile(v, 1.0) == 5.0);
    CHECK(nearest_rank_quantile(v, 0.6) == 3.0);
    CHECK(nearest_rank_quantile(v, 0.61) == 4.0);
  }
  SUBCASE("quantile must exceed one half") {
    const auto g = synthetic(std::vector<double>(4, 1.0), 2, 2);
    CHECK_THROWS_AS(clip_outliers(g, 0.5), ConfigError);
    CHECK_THROWS_AS(clip_outliers(g, 1.01), ConfigError);
  }
}

TEST_CASE("representations") {
  const auto obj = testing::diagonal_quadratic({1.0, 2.0});
  const auto g = sample_landscape(obj.loss, std::vector<double>{0.0, 0.0}, axis_pair(2, 0, 1), {}, {}, 9, 9);
  const auto img = to_field(g, {});
  CHECK(img.size() == 81);
  CHECK(img.edges().size() == 4 * 81 - 3 * 9 - 3 * 9 + 2);
  CHECK(img.coords()[9 * 3 + 4].x == g.alphas1[3]);
  CHECK(img.coords()[9 * 3 + 4].y == g.alphas2[4]);

  Representation knn{Representation::Kind::knn, 8};
  const auto kf = to_field(g, knn);
  CHECK(kf.size() == 81);
  CHECK(std::ranges::equal(kf.values(), img.values()));
  // Interior vertices share the 8-neighbourhood; boundary vertices reach two
  // steps in, so interior means three away from the edge.
  for (std::size_t r = 3; r < 6; ++r)
    for (std::size_t c = 3; c < 6; ++c) {
      const auto a = img.neighbors(r * 9 + c);
      const auto b = kf.neighbors(r * 9 + c);
      std::set<std::size_t> sa(a.begin(), a.end()), sb(b.begin(), b.end());
      CHECK(sa == sb);
    }
  CHECK(Representation{}.k == 8);
  CHECK(layout_for(g, knn).builder == FieldLayout::Builder::knn);
}
