#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "losstopo/directions.hpp"
#include "losstopo/field.hpp"

namespace losstopo {

using LossFunction = std::function<double(std::span<const double>)>;

struct SampleRange {
  double min = -1.0;
  double max = 1.0;
};

struct LandscapeGrid {
  std::vector<double> alphas1;  // rows
  std::vector<double> alphas2;  // cols
  std::vector<double> losses;   // row-major; losses[i*C + j] at (alphas1[i], alphas2[j])
  double center_loss = 0.0;
  std::size_t nonfinite_cells = 0;
  std::size_t clipped_cells = 0;
  double clip_quantile = 1.0;
  std::string provenance_json;  // direction provenance or analytic surface description

  std::size_t rows() const noexcept { return alphas1.size(); }
  std::size_t cols() const noexcept { return alphas2.size(); }
  double at(std::size_t i, std::size_t j) const { return losses[i * cols() + j]; }
  GridValues values() const { return {rows(), cols(), losses}; }

  std::string metadata_json() const;
};

// f(a1, a2) = loss(theta + a1*delta1 + a2*delta2) on a rows x cols grid.
// Cells are evaluated concurrently; non-finite cells take the largest finite
// value and are counted. All cells non-finite is an error.
LandscapeGrid sample_landscape(const LossFunction& loss, std::span<const double> theta,
                               const DirectionPair& dirs, SampleRange range1, SampleRange range2,
                               std::size_t rows, std::size_t cols);

struct Representation {
  enum class Kind { image8, knn };
  Kind kind = Kind::image8;
  std::size_t k = kDefaultNeighbors;
};

ScalarField to_field(const LandscapeGrid& grid, const Representation& rep);
FieldLayout layout_for(const LandscapeGrid& grid, const Representation& rep);

// Values above the nearest-rank q-quantile are replaced by it.
LandscapeGrid clip_outliers(const LandscapeGrid& grid, double q);

// Nearest-rank quantile: the ceil(q*n)-th smallest value.
double nearest_rank_quantile(std::span<const double> values, double q);

}  // namespace losstopo
