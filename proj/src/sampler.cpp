#include "losstopo/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "losstopo/error.hpp"
#include "losstopo/models.hpp"
#include "losstopo/parallel.hpp"

namespace losstopo {

std::string LandscapeGrid::metadata_json() const {
  nlohmann::ordered_json j;
  j["resolution"] = {rows(), cols()};
  j["range1"] = {alphas1.front(), alphas1.back()};
  j["range2"] = {alphas2.front(), alphas2.back()};
  j["center_loss"] = center_loss;
  j["nonfinite_cells"] = nonfinite_cells;
  j["clip_quantile"] = clip_quantile;
  j["clipped_cells"] = clipped_cells;
  j["provenance"] = provenance_json.empty() ? nlohmann::ordered_json::object()
                                            : nlohmann::ordered_json::parse(provenance_json);
  return j.dump();
}

LandscapeGrid sample_landscape(const LossFunction& loss, std::span<const double> theta,
                               const DirectionPair& dirs, SampleRange range1, SampleRange range2,
                               std::size_t rows, std::size_t cols) {
  if (rows < 2 || cols < 2) throw ConfigError("landscape resolution must be at least 2x2");
  for (const auto& r : {range1, range2})
    if (!std::isfinite(r.min) || !std::isfinite(r.max) || !(r.min < r.max))
      throw ConfigError("landscape range must be finite with min < max");
  if (dirs.dim() != theta.size() || dirs.delta2.size() != theta.size())
    throw ConfigError("direction dimension does not match theta");

  LandscapeGrid g;
  g.alphas1 = linspace(range1.min, range1.max, rows);
  g.alphas2 = linspace(range2.min, range2.max, cols);
  g.losses.assign(rows * cols, 0.0);
  g.provenance_json = provenance_json(dirs);

  parallel_for(rows * cols, [&](std::size_t cell) {
    const double a1 = g.alphas1[cell / cols];
    const double a2 = g.alphas2[cell % cols];
    std::vector<double> p(theta.size());
    for (std::size_t k = 0; k < p.size(); ++k)
      p[k] = theta[k] + a1 * dirs.delta1[k] + a2 * dirs.delta2[k];
    g.losses[cell] = loss(p);
  });
  g.center_loss = loss(theta);

  double max_finite = -std::numeric_limits<double>::infinity();
  for (double v : g.losses)
    if (std::isfinite(v)) max_finite = std::max(max_finite, v);
  if (!std::isfinite(max_finite)) throw NumericError("every landscape cell is non-finite");
  for (double& v : g.losses)
    if (!std::isfinite(v)) {
      v = max_finite;
      ++g.nonfinite_cells;
    }
  return g;
}

FieldLayout layout_for(const LandscapeGrid& grid, const Representation& rep) {
  FieldLayout l;
  l.builder = rep.kind == Representation::Kind::image8 ? FieldLayout::Builder::grid
                                                       : FieldLayout::Builder::knn;
  l.rows = grid.rows();
  l.cols = grid.cols();
  l.k = rep.k;
  return l;
}

ScalarField to_field(const LandscapeGrid& grid, const Representation& rep) {
  if (rep.kind == Representation::Kind::image8)
    return build_image_grid(grid.values(), grid.alphas1, grid.alphas2);
  std::vector<Point2> pts;
  pts.reserve(grid.losses.size());
  for (double a1 : grid.alphas1)
    for (double a2 : grid.alphas2) pts.push_back({a1, a2});
  return build_knn_graph(pts, grid.losses, rep.k);
}

double nearest_rank_quantile(std::span<const double> values, double q) {
  if (values.empty()) throw ConfigError("quantile of an empty set");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = sorted.size();
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return sorted[rank - 1];
}

LandscapeGrid clip_outliers(const LandscapeGrid& grid, double q) {
  if (!(q > 0.5 && q <= 1.0)) throw ConfigError("clip quantile must lie in (0.5, 1]");
  LandscapeGrid out = grid;
  out.clip_quantile = q;
  const double cap = nearest_rank_quantile(grid.losses, q);
  std::size_t clipped = 0;
  for (double& v : out.losses)
    if (v > cap) {
      v = cap;
      ++clipped;
    }
  out.clipped_cells = grid.clipped_cells + clipped;
  return out;
}

}  // namespace losstopo
