#pragma once

// Brute-force reference computations for sub-level-set topology. Every
// threshold is handled by a fresh flood fill; nothing is shared with the
// union-find sweep in the main library.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "losstopo/field.hpp"

namespace losstopo::oracle {

struct Pair {
  double birth = 0.0;
  double death = 0.0;
  bool essential = false;

  friend bool operator<(const Pair& a, const Pair& b) {
    if (a.birth != b.birth) return a.birth < b.birth;
    if (a.death != b.death) return a.death < b.death;
    return a.essential < b.essential;
  }
  friend bool operator==(const Pair&, const Pair&) = default;
};

// Component label per vertex for {x : value(x) <= threshold}; -1 outside.
std::vector<long> label_sublevel(const ScalarField& field, double threshold);
std::size_t count_sublevel_components(const ScalarField& field, double threshold);

// Pairs reconstructed from how components appear and vanish across the
// sorted thresholds. Values must be pairwise distinct.
std::vector<Pair> brute_force_pairs(const ScalarField& field);

// Vertices strictly below every neighbour, ties broken by index.
std::size_t count_local_minima(const ScalarField& field);

// 8-neighbourhood local-minimum scan directly on a matrix (no graph).
std::size_t count_grid_local_minima(const GridValues& grid);
std::vector<std::size_t> grid_local_minima(const GridValues& grid);

// R x C grid of i.i.d. uniform values, made distinct.
GridValues random_distinct_grid(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

struct CheckReport {
  std::size_t fields = 0;
  std::size_t mismatches = 0;
};

// Compares the sweep against the flood-fill oracle on random grid fields.
CheckReport run_equivalence_check(std::size_t n_fields, std::uint64_t seed, std::size_t rows,
                                  std::size_t cols, std::ostream* log);

}  // namespace losstopo::oracle
