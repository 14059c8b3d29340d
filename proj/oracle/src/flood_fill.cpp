#include "losstopo/oracle/flood_fill.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <map>
#include <ostream>
#include <set>

#include "losstopo/topology.hpp"

namespace losstopo::oracle {

std::vector<long> label_sublevel(const ScalarField& field, double threshold) {
  const std::size_t n = field.size();
  std::vector<long> label(n, -1);
  long next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (label[s] != -1 || field.value(s) > threshold) continue;
    std::deque<std::size_t> queue{s};
    label[s] = next;
    while (!queue.empty()) {
      const std::size_t v = queue.front();
      queue.pop_front();
      for (std::size_t u : field.neighbors(v))
        if (label[u] == -1 && field.value(u) <= threshold) {
          label[u] = next;
          queue.push_back(u);
        }
    }
    ++next;
  }
  return label;
}

std::size_t count_sublevel_components(const ScalarField& field, double threshold) {
  const auto label = label_sublevel(field, threshold);
  long top = -1;
  for (long l : label) top = std::max(top, l);
  return static_cast<std::size_t>(top + 1);
}

std::vector<Pair> brute_force_pairs(const ScalarField& field) {
  std::vector<double> thresholds(field.values().begin(), field.values().end());
  std::sort(thresholds.begin(), thresholds.end());

  // Components alive at the previous threshold, keyed by their lowest vertex.
  std::set<std::size_t> alive;
  std::vector<Pair> pairs;
  std::vector<long> label;
  for (double t : thresholds) {
    label = label_sublevel(field, t);
    std::map<long, std::size_t> lowest;
    for (std::size_t v = 0; v < field.size(); ++v) {
      if (label[v] < 0) continue;
      auto it = lowest.find(label[v]);
      if (it == lowest.end() || field.value(v) < field.value(it->second)) lowest[label[v]] = v;
    }
    std::set<std::size_t> now;
    for (const auto& [l, v] : lowest) now.insert(v);
    for (std::size_t m : alive)
      if (!now.count(m)) pairs.push_back({field.value(m), t, false});
    alive = std::move(now);
  }

  std::map<long, double> highest;
  for (std::size_t v = 0; v < field.size(); ++v) {
    auto it = highest.find(label[v]);
    if (it == highest.end() || field.value(v) > it->second) highest[label[v]] = field.value(v);
  }
  for (std::size_t m : alive) pairs.push_back({field.value(m), highest[label[m]], true});
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

std::size_t count_local_minima(const ScalarField& field) {
  std::size_t count = 0;
  for (std::size_t v = 0; v < field.size(); ++v) {
    bool lowest = true;
    for (std::size_t u : field.neighbors(v)) {
      const double a = field.value(u), b = field.value(v);
      if (a < b || (a == b && u < v)) lowest = false;
    }
    count += lowest;
  }
  return count;
}

std::vector<std::size_t> grid_local_minima(const GridValues& g) {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < g.rows; ++r)
    for (std::size_t c = 0; c < g.cols; ++c) {
      const std::size_t self = r * g.cols + c;
      bool lowest = true;
      for (int dr = -1; dr <= 1 && lowest; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const long rr = static_cast<long>(r) + dr, cc = static_cast<long>(c) + dc;
          if (rr < 0 || cc < 0 || rr >= static_cast<long>(g.rows) || cc >= static_cast<long>(g.cols))
            continue;
          const std::size_t other = static_cast<std::size_t>(rr) * g.cols + static_cast<std::size_t>(cc);
          const double a = g.data[other], b = g.data[self];
          if (a < b || (a == b && other < self)) {
            lowest = false;
            break;
          }
        }
      if (lowest) out.push_back(self);
    }
  return out;
}

std::size_t count_grid_local_minima(const GridValues& grid) { return grid_local_minima(grid).size(); }

GridValues random_distinct_grid(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  GridValues g{rows, cols, std::vector<double>(rows * cols)};
  for (;;) {
    for (double& v : g.data) v = dist(rng);
    auto sorted = g.data;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end()) return g;
  }
}

CheckReport run_equivalence_check(std::size_t n_fields, std::uint64_t seed, std::size_t rows,
                                  std::size_t cols, std::ostream* log) {
  std::mt19937_64 rng(seed);
  CheckReport report;
  for (std::size_t i = 0; i < n_fields; ++i) {
    const auto field = build_image_grid(random_distinct_grid(rows, cols, rng));
    const auto topo = compute_topology(field);
    std::vector<Pair> got;
    for (const auto& p : topo.diagram.pairs) got.push_back({p.birth, p.death, p.essential});
    std::sort(got.begin(), got.end());
    const auto want = brute_force_pairs(field);

    const std::size_t births = want.size();
    const std::size_t want_saddles = want.size() - 1;  // grid fields are connected
    const bool ok = got == want && topo.tree.minima() == births &&
                    topo.tree.saddles() == want_saddles &&
                    topo.tree.minima() == count_local_minima(field);
    ++report.fields;
    if (!ok) {
      ++report.mismatches;
      if (log) *log << "mismatch on field " << i << "\n";
    }
  }
  return report;
}

}  // namespace losstopo::oracle
