#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace losstopo {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

using Edge = std::pair<std::size_t, std::size_t>;

// Row-major R x C block of values.
struct GridValues {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Vertex-weighted undirected graph. Edges are stored once with a < b,
/// sorted and unique; adjacency is available per vertex in ascending order.
/// Immutable after construction.
class ScalarField {
 public:
  ScalarField(std::vector<double> values, std::vector<Point2> coords, std::vector<Edge> edges);

  std::size_t size() const noexcept { return values_.size(); }
  double value(std::size_t v) const { return values_[v]; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const Point2> coords() const noexcept { return coords_; }
  std::span<const Edge> edges() const noexcept { return edges_; }
  std::span<const std::size_t> neighbors(std::size_t v) const {
    return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
  }

  friend bool operator==(const ScalarField& a, const ScalarField& b) {
    return a.values_ == b.values_ && a.coords_ == b.coords_ && a.edges_ == b.edges_;
  }

 private:
  std::vector<double> values_;
  std::vector<Point2> coords_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> adjacency_;
};

// 8-connectivity over an R x C image; vertex index r*C + c. Coordinates
// default to (r, c); explicit axes give (axis_rows[r], axis_cols[c]).
ScalarField build_image_grid(const GridValues& values);
ScalarField build_image_grid(const GridValues& values, std::span<const double> axis_rows,
                             std::span<const double> axis_cols);
// Explicit per-vertex coordinates (used when reloading a saved grid).
ScalarField build_image_grid(const GridValues& values, std::vector<Point2> coords);

inline constexpr std::size_t kDefaultNeighbors = 8;

// Exact k-nearest-neighbour graph under Euclidean distance; ties go to the
// lower vertex index. The directed relation is symmetrized by union.
ScalarField build_knn_graph(std::span<const Point2> points, std::span<const double> values,
                            std::size_t k);

// Directed k-NN lists (before symmetrization), exposed for inspection.
std::vector<std::vector<std::size_t>> knn_lists(std::span<const Point2> points, std::size_t k);

struct FieldLayout {
  enum class Builder { grid, knn };
  Builder builder = Builder::grid;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t k = kDefaultNeighbors;
};

std::string to_string(FieldLayout::Builder b);

// Sidecar path for a field CSV: "name.csv" -> "name.meta.json".
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

// Writes `alpha1,alpha2,loss` rows. Edges are not stored; the layout goes
// to the sidecar JSON together with any extra metadata keys (a JSON object
// serialized as text, may be empty).
void save_field(const std::filesystem::path& path, const ScalarField& field,
                const FieldLayout& layout, const std::string& extra_meta_json = {});

// Reads the CSV and rebuilds connectivity from the sidecar layout.
ScalarField load_field(const std::filesystem::path& path);
ScalarField load_field(const std::filesystem::path& path, const FieldLayout& layout);

FieldLayout load_layout(const std::filesystem::path& sidecar);

struct FieldRows {
  std::vector<Point2> coords;
  std::vector<double> values;
};
FieldRows parse_field_csv(const std::string& text);

ScalarField rebuild_field(FieldRows rows, const FieldLayout& layout);

}  // namespace losstopo
