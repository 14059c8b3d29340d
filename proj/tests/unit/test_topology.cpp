#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "losstopo/oracle/flood_fill.hpp"
#include "losstopo/topology.hpp"
#include "support/test_helpers.hpp"

using namespace losstopo;

namespace {

std::vector<oracle::Pair> as_pairs(const PersistenceDiagram& d) {
  std::vector<oracle::Pair> out;
  for (const auto& p : d.pairs) out.push_back({p.birth, p.death, p.essential});
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> node_values(const MergeTree& t, NodeKind kind) {
  std::vector<double> v;
  for (const auto& n : t.nodes)
    if (n.kind == kind) v.push_back(n.value);
  std::sort(v.begin(), v.end());
  return v;
}

ScalarField random_grid_field(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  return build_image_grid(oracle::random_distinct_grid(rows, cols, rng));
}

// Same graph and values under a vertex relabelling new = perm[old].
ScalarField relabel(const ScalarField& f, const std::vector<std::size_t>& perm) {
  std::vector<double> values(f.size());
  std::vector<Point2> coords(f.size());
  for (std::size_t v = 0; v < f.size(); ++v) {
    values[perm[v]] = f.value(v);
    coords[perm[v]] = f.coords()[v];
  }
  std::vector<Edge> edges;
  for (auto [a, b] : f.edges()) edges.emplace_back(perm[a], perm[b]);
  return {std::move(values), std::move(coords), std::move(edges)};
}

void check_structure(const ScalarField& f, const Topology& t) {
  const auto deg = t.tree.degrees();
  for (const auto& n : t.tree.nodes) {
    switch (n.kind) {
      case NodeKind::minimum: CHECK(deg[n.id] == 1); break;
      case NodeKind::saddle: CHECK(deg[n.id] == 3); break;
      case NodeKind::root: CHECK(deg[n.id] == 1); break;
    }
  }
  for (auto [c, p] : t.tree.edges) CHECK(t.tree.nodes[c].value <= t.tree.nodes[p].value);
  CHECK(t.tree.minima() == oracle::count_local_minima(f));
  CHECK(t.diagram.finite_count() == t.tree.minima() - t.tree.components);
  CHECK(t.diagram.essential_count() == t.tree.components);
  CHECK(t.tree.count(NodeKind::root) == t.tree.components);
  CHECK(t.diagram.pairs.size() == t.tree.minima());
  for (const auto& p : t.diagram.pairs) CHECK(p.death >= p.birth);
}

}  // namespace

TEST_CASE("increasing path has one basin") {
  const auto t = compute_topology(testing::path_field({0, 1, 2, 3}));
  CHECK(t.tree.minima() == 1);
  CHECK(t.tree.saddles() == 0);
  CHECK(node_values(t.tree, NodeKind::minimum) == std::vector<double>{0});
  CHECK(node_values(t.tree, NodeKind::root) == std::vector<double>{3});
  REQUIRE(t.diagram.pairs.size() == 1);
  CHECK(t.diagram.pairs[0].essential);
}

TEST_CASE("path [2,1,3,0,4]") {
  const auto f = testing::path_field({2, 1, 3, 0, 4});
  const auto t = compute_topology(f);
  CHECK(node_values(t.tree, NodeKind::minimum) == std::vector<double>{0, 1});
  CHECK(node_values(t.tree, NodeKind::saddle) == std::vector<double>{3});
  CHECK(node_values(t.tree, NodeKind::root) == std::vector<double>{4});
  const std::vector<oracle::Pair> expected{{0, 4, true}, {1, 3, false}};
  CHECK(as_pairs(t.diagram) == expected);
  CHECK(oracle::brute_force_pairs(f) == expected);
  REQUIRE(t.tree.merges.size() == 1);
  CHECK(t.tree.merges[0].survivor == 3);  // the minimum at vertex 3 (value 0) is elder
  check_structure(f, t);
}

TEST_CASE("3x3 grid with a four-way merge") {
  const auto f = build_image_grid(GridValues{3, 3, {1, 9, 2, 9, 9, 9, 3, 9, 0}});
  const auto t = compute_topology(f);
  CHECK(node_values(t.tree, NodeKind::minimum) == std::vector<double>{0, 1, 2, 3});
  CHECK(node_values(t.tree, NodeKind::saddle) == std::vector<double>{9, 9, 9});
  CHECK(t.tree.count(NodeKind::root) == 1);
  const std::vector<oracle::Pair> expected{{0, 9, true}, {1, 9, false}, {2, 9, false}, {3, 9, false}};
  CHECK(as_pairs(t.diagram) == expected);
  check_structure(f, t);
}

TEST_CASE("constant field") {
  const auto f = build_image_grid(GridValues{4, 5, std::vector<double>(20, 2.5)});
  const auto t = compute_topology(f);
  CHECK(t.tree.minima() == 1);
  CHECK(t.tree.saddles() == 0);
  REQUIRE(t.diagram.pairs.size() == 1);
  CHECK(t.diagram.pairs[0].birth == 2.5);
  CHECK(t.diagram.pairs[0].death == 2.5);
  CHECK(t.diagram.pairs[0].essential);
}

TEST_CASE("disconnected field has one essential pair per component") {
  const ScalarField f({3, 1, 2, 5, 0, 4}, {{0, 0}, {1, 0}, {2, 0}, {10, 0}, {11, 0}, {12, 0}}, {{0, 1}, {1, 2}, {3, 4}, {4, 5}});
  const auto t = compute_topology(f);
  CHECK(t.tree.components == 2);
  const std::vector<oracle::Pair> expected{{0, 5, true}, {1, 3, true}};
  CHECK(as_pairs(t.diagram) == expected);
  check_structure(f, t);
}

TEST_CASE("ties follow vertex index") {
  // Two equal minima on a path: the lower index is elder.
  const auto t = compute_topology(testing::path_field({1, 5, 1}));
  CHECK(t.tree.minima() == 2);
  REQUIRE(t.tree.merges.size() == 1);
  CHECK(t.tree.merges[0].survivor == 0);
  for (const auto& p : t.diagram.pairs)
    if (!p.essential) CHECK(p.birth_vertex == 2);
  CHECK(sweep_order(testing::path_field({1, 5, 1})) == std::vector<std::size_t>{0, 2, 1});
}

TEST_CASE("shifting values shifts the diagram") {
  std::mt19937_64 rng(3);
  const auto g = oracle::random_distinct_grid(6, 7, rng);
  auto shifted = g;
  for (double& v : shifted.data) v += 10.0;
  const auto a = persistence_diagram(build_image_grid(g));
  const auto b = persistence_diagram(build_image_grid(shifted));
  REQUIRE(a.pairs.size() == b.pairs.size());
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    CHECK(b.pairs[i].birth == a.pairs[i].birth + 10.0);
    CHECK(b.pairs[i].death == a.pairs[i].death + 10.0);
    CHECK(b.pairs[i].persistence() == doctest::Approx(a.pairs[i].persistence()).epsilon(1e-12));
  }
}

TEST_CASE("positive scaling multiplies persistences") {
  std::mt19937_64 rng(4);
  for (double c : {0.5, 4.0, 1024.0}) {
    const auto g = oracle::random_distinct_grid(6, 6, rng);
    auto scaled = g;
    for (double& v : scaled.data) v *= c;
    const auto a = persistence_diagram(build_image_grid(g));
    const auto b = persistence_diagram(build_image_grid(scaled));
    REQUIRE(a.pairs.size() == b.pairs.size());
    std::vector<std::size_t> ia(a.pairs.size()), ib(b.pairs.size());
    std::iota(ia.begin(), ia.end(), 0);
    std::iota(ib.begin(), ib.end(), 0);
    auto by_pers = [](const PersistenceDiagram& d) {
      return [&d](std::size_t x, std::size_t y) { return d.pairs[x].persistence() < d.pairs[y].persistence(); };
    };
    std::stable_sort(ia.begin(), ia.end(), by_pers(a));
    std::stable_sort(ib.begin(), ib.end(), by_pers(b));
    CHECK(ia == ib);
    for (std::size_t i = 0; i < a.pairs.size(); ++i)
      CHECK(b.pairs[i].persistence() == doctest::Approx(c * a.pairs[i].persistence()).epsilon(1e-12));
  }
}

TEST_CASE("sweep matches the flood-fill oracle on random 6x6 grids") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const auto f = random_grid_field(6, 6, rng);
    const auto t = compute_topology(f);
    CHECK(as_pairs(t.diagram) == oracle::brute_force_pairs(f));
    check_structure(f, t);
  }
  const auto report = oracle::run_equivalence_check(200, 7, 6, 6, nullptr);
  CHECK(report.fields == 200);
  CHECK(report.mismatches == 0);
}

TEST_CASE("sweep matches the oracle on random kNN point clouds") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Point2> pts(40);
    std::vector<double> vals(40);
    for (std::size_t i = 0; i < 40; ++i) {
      pts[i] = {u(rng), u(rng)};
      vals[i] = u(rng);
    }
    const auto f = build_knn_graph(pts, vals, 3);
    const auto t = compute_topology(f);
    CHECK(as_pairs(t.diagram) == oracle::brute_force_pairs(f));
    check_structure(f, t);
  }
}

TEST_CASE("alive count identity") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const auto f = random_grid_field(5, 7, rng);
    const auto d = persistence_diagram(f);
    for (const double v : f.values()) {
      std::size_t alive = 0;
      for (const auto& p : d.pairs)
        if (p.birth <= v && (p.essential || p.death > v)) ++alive;
      CHECK(alive == oracle::count_sublevel_components(f, v));
    }
  }
}

TEST_CASE("relabelling vertices leaves the topology unchanged") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto f = random_grid_field(5, 6, rng);
    std::vector<std::size_t> perm(f.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto a = compute_topology(f);
    const auto b = compute_topology(relabel(f, perm));
    CHECK(as_pairs(a.diagram) == as_pairs(b.diagram));
    for (auto k : {NodeKind::minimum, NodeKind::saddle, NodeKind::root})
      CHECK(node_values(a.tree, k) == node_values(b.tree, k));
    auto da = a.tree.degrees(), db = b.tree.degrees();
    std::sort(da.begin(), da.end());
    std::sort(db.begin(), db.end());
    CHECK(da == db);
  }
}

TEST_CASE("exports") {
  const auto t = compute_topology(testing::path_field({2, 1, 3, 0, 4}));
  CHECK(diagram_csv(t.diagram).rfind("birth,death,essential\n", 0) == 0);
  const auto json = merge_tree_json(t.tree);
  CHECK(json.find("\"kind\":\"saddle\"") != std::string::npos);
  CHECK(json.find("\"edges\"") != std::string::npos);
  CHECK(merge_tree_dot(t.tree).rfind("graph merge_tree", 0) == 0);
  CHECK(to_string(NodeKind::minimum) == "min");
}
