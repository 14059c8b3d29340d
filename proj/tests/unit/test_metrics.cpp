#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>

#include "losstopo/metrics.hpp"
#include "losstopo/oracle/flood_fill.hpp"
#include "support/test_helpers.hpp"

using namespace losstopo;

namespace {

TopoMetrics metrics_of(const ScalarField& f, bool include_essential = true) {
  const auto t = compute_topology(f);
  return topo_metrics(t.tree, t.diagram, include_essential);
}

Mlp small_mlp() {
  MlpSpec spec;
  spec.layer_widths = {2, 8, 1};
  spec.n_points = 100;
  return Mlp(spec);
}

}  // namespace

TEST_CASE("path [2,1,3,0,4] persistence averages") {
  const auto f = testing::path_field({2, 1, 3, 0, 4});
  const auto with = metrics_of(f, true);
  CHECK(with.n_minima == 2);
  CHECK(with.n_saddles == 1);
  CHECK(with.avg_persistence == 3.0);
  CHECK(with.include_essential);
  const auto without = metrics_of(f, false);
  CHECK(without.avg_persistence == 2.0);
  CHECK(without.avg_persistence_with_essential == 3.0);
  CHECK(without.avg_persistence_finite_only == 2.0);
}

TEST_CASE("constant field metrics") {
  const auto m = metrics_of(build_image_grid(GridValues{5, 5, std::vector<double>(25, -1.0)}));
  CHECK(m.n_minima == 1);
  CHECK(m.n_saddles == 0);
  CHECK(m.avg_persistence == 0.0);
  CHECK(m.avg_persistence_finite_only == 0.0);
}

TEST_CASE("empty diagram is rejected") {
  CHECK_THROWS_AS(topo_metrics(MergeTree{}, PersistenceDiagram{}, true), ConfigError);
}

TEST_CASE("saddles = minima - components, shift invariance and scaling") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    auto g = oracle::random_distinct_grid(7, 6, rng);
    const auto m = metrics_of(build_image_grid(g));
    CHECK(m.n_saddles == m.n_minima - m.n_components);
    CHECK(m.avg_persistence >= 0.0);

    auto shifted = g;
    for (double& v : shifted.data) v -= 3.0;
    CHECK(metrics_of(build_image_grid(shifted)).avg_persistence == doctest::Approx(m.avg_persistence).epsilon(1e-12));
    auto scaled = g;
    for (double& v : scaled.data) v *= 8.0;  // power of two: exact
    CHECK(metrics_of(build_image_grid(scaled)).avg_persistence == 8.0 * m.avg_persistence);
  }
}

TEST_CASE("top eigenvalues") {
  PowerOptions opts;
  opts.tol = 1e-10;
  const auto e = top_eigenvalues(testing::diagonal_quadratic(testing::iota_diag(10)), std::vector<double>(10, 0.2), opts);
  CHECK(std::abs(e.lambda1 - 10.0) < 1e-5);
  CHECK(std::abs(e.lambda2 - 9.0) < 1e-5);
  const auto iso = top_eigenvalues(testing::diagonal_quadratic(std::vector<double>(6, 10.0)), std::vector<double>(6, 0.0), {});
  CHECK(iso.lambda1 == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(iso.lambda2 == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("rademacher probes") {
  const auto v = rademacher(1000, 0, 3);
  for (double x : v) CHECK((x == 1.0 || x == -1.0));
  CHECK(v == rademacher(1000, 0, 3));
  CHECK(v != rademacher(1000, 0, 4));
  CHECK(v != rademacher(1000, 1, 3));
}

TEST_CASE("Hutchinson trace") {
  SUBCASE("diag(1..10) within 5% at 1000 probes") {
    const double t = hessian_trace(testing::diagonal_quadratic(testing::iota_diag(10)), std::vector<double>(10, 0.0), 1000, 0);
    CHECK(std::abs(t - 55.0) < 0.05 * 55.0);
  }
  SUBCASE("identity gives the dimension with zero variance") {
    for (std::size_t probes : {1u, 7u}) {
      const double t = hessian_trace(testing::diagonal_quadratic(std::vector<double>(13, 1.0)),
                                     std::vector<double>(13, 0.5), probes, 42);
      CHECK(t == doctest::Approx(13.0).epsilon(1e-9));
    }
  }
  SUBCASE("linear in the loss") {
    auto mlp = small_mlp();
    const auto obj = mlp.objective();
    Objective twice = obj;
    twice.loss = [obj](auto t) { return 2.0 * obj.loss(t); };
    twice.value_and_grad = [obj](auto t, std::span<double> g) {
      const double v = obj.value_and_grad(t, g);
      for (double& x : g) x *= 2.0;
      return 2.0 * v;
    };
    const auto theta = mlp.network().init(0).theta;
    const double a = hessian_trace(obj, theta, 20, 5);
    const double b = hessian_trace(twice, theta, 20, 5);
    CHECK(b == doctest::Approx(2.0 * a).epsilon(1e-9));
  }
  SUBCASE("deterministic under seed") {
    auto mlp = small_mlp();
    const auto theta = mlp.network().init(1).theta;
    CHECK(hessian_trace(mlp.objective(), theta, 10, 3) == hessian_trace(mlp.objective(), theta, 10, 3));
  }
  SUBCASE("needs a probe") {
    CHECK_THROWS_AS(hessian_trace(testing::diagonal_quadratic({1.0}), std::vector<double>{0.0}, 0, 0), ConfigError);
  }
}

TEST_CASE("SLQ on diag(1..10) recovers the spectrum") {
  EsdOptions opts;
  opts.lanczos_order = 10;
  opts.n_probes = 4;
  const auto esd = hessian_esd(testing::diagonal_quadratic(testing::iota_diag(10)), std::vector<double>(10, 0.0), opts);
  REQUIRE(esd.nodes.size() == 40);
  for (std::size_t p = 0; p < 4; ++p) {
    std::vector<double> ritz(esd.nodes.begin() + static_cast<long>(10 * p), esd.nodes.begin() + static_cast<long>(10 * p + 10));
    std::sort(ritz.begin(), ritz.end());
    for (std::size_t i = 0; i < 10; ++i) CHECK(std::abs(ritz[i] - double(i + 1)) < 1e-6);
  }
  CHECK(std::accumulate(esd.weights.begin(), esd.weights.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::accumulate(esd.histogram.begin(), esd.histogram.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(esd.edges.size() == 101);
  for (int ev = 1; ev <= 10; ++ev) {
    double mass = 0.0;
    for (std::size_t b = 0; b < esd.histogram.size(); ++b)
      if (esd.edges[b] <= ev && ev < esd.edges[b + 1]) mass += esd.histogram[b];
    CHECK(mass == doctest::Approx(0.1).epsilon(1e-6));
  }
  CHECK(esd.first_moment() == doctest::Approx(5.5).epsilon(1e-6));
}

TEST_CASE("SLQ on the identity is a single atom") {
  const auto esd = hessian_esd(testing::diagonal_quadratic(std::vector<double>(9, 1.0)), std::vector<double>(9, 0.0), EsdOptions{});
  for (double x : esd.nodes) CHECK(x == doctest::Approx(1.0).epsilon(1e-9));
  for (std::size_t s : esd.probe_steps) CHECK(s == 1);
  CHECK(*std::max_element(esd.histogram.begin(), esd.histogram.end()) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("SLQ first moment tracks the Hutchinson trace on an MLP") {
  auto mlp = small_mlp();
  AdamOptions adam;
  adam.lr = 0.01;
  adam.steps = 500;
  const auto theta = train(mlp.objective(), mlp.network().init(0).theta, adam).theta;
  const double dim = static_cast<double>(theta.size());

  // Same probes: the quadrature first moment is the Hutchinson estimate.
  const auto esd10 = hessian_esd(mlp.objective(), theta, EsdOptions{});
  CHECK(esd10.first_moment() == doctest::Approx(hessian_trace(mlp.objective(), theta, 10, 0) / dim).epsilon(1e-8));

  // Independent probes: 10 probes are too noisy here, 100 are not.
  EsdOptions opts;
  opts.n_probes = 100;
  opts.seed = 1;
  const auto esd = hessian_esd(mlp.objective(), theta, opts);
  const double per_dim = hessian_trace(mlp.objective(), theta, 10000, 0) / dim;
  CHECK(std::abs(esd.first_moment() - per_dim) <= 0.1 * std::abs(per_dim));
}

TEST_CASE("SLQ preconditions") {
  const auto obj = testing::diagonal_quadratic({1.0, 2.0});
  EsdOptions opts;
  opts.lanczos_order = 1;
  CHECK_THROWS_AS(hessian_esd(obj, std::vector<double>{0, 0}, opts), ConfigError);
  opts.lanczos_order = 5;
  opts.n_probes = 0;
  CHECK_THROWS_AS(hessian_esd(obj, std::vector<double>{0, 0}, opts), ConfigError);
}

TEST_CASE("metrics JSON") {
  const auto m = metrics_of(testing::path_field({2, 1, 3, 0, 4}));
  const auto bare = nlohmann::json::parse(metrics_json(m, std::nullopt));
  CHECK(bare["n_saddles"] == 1);
  CHECK(bare["avg_persistence"] == 3.0);
  CHECK(bare["avg_persistence_finite_only"] == 2.0);
  CHECK(bare["lambda1"].is_null());
  CHECK(bare["esd"].is_null());

  HessianSummary h{10.0, 9.0, 55.0, 100, std::nullopt};
  const auto full = nlohmann::json::parse(metrics_json(m, h));
  CHECK(full["lambda1"] == 10.0);
  CHECK(full["trace"] == 55.0);
  CHECK(full["trace_probes"] == 100);
}
