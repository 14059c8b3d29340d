#include "losstopo/field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "losstopo/error.hpp"
#include "losstopo/io.hpp"
#include "losstopo/parallel.hpp"

namespace losstopo {

ScalarField::ScalarField(std::vector<double> values, std::vector<Point2> coords,
                         std::vector<Edge> edges)
    : values_(std::move(values)), coords_(std::move(coords)) {
  const std::size_t n = values_.size();
  if (coords_.size() != n)
    throw ConfigError("field has " + std::to_string(n) + " values but " +
                      std::to_string(coords_.size()) + " coordinates");
  for (std::size_t v = 0; v < n; ++v)
    if (!std::isfinite(values_[v]))
      throw NumericError("non-finite field value at vertex " + std::to_string(v));

  for (auto& [a, b] : edges) {
    if (a >= n || b >= n)
      throw ConfigError("edge endpoint out of range: (" + std::to_string(a) + "," +
                        std::to_string(b) + ")");
    if (a == b) throw ConfigError("self-loop at vertex " + std::to_string(a));
    if (a > b) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges_ = std::move(edges);

  offsets_.assign(n + 1, 0);
  for (const auto& [a, b] : edges_) {
    ++offsets_[a + 1];
    ++offsets_[b + 1];
  }
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  adjacency_.resize(offsets_[n]);
  auto fill = std::vector<std::size_t>(offsets_.begin(), offsets_.end() - 1);
  for (const auto& [a, b] : edges_) {
    adjacency_[fill[a]++] = b;
    adjacency_[fill[b]++] = a;
  }
  for (std::size_t v = 0; v < n; ++v)
    std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[v]),
              adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[v + 1]));
}

namespace {

void check_grid(const GridValues& g) {
  if (g.rows == 0 || g.cols == 0) throw ConfigError("image grid needs at least one row and column");
  if (g.data.size() != g.rows * g.cols)
    throw ConfigError("grid data has " + std::to_string(g.data.size()) + " entries, expected " +
                      std::to_string(g.rows * g.cols));
  for (std::size_t i = 0; i < g.data.size(); ++i)
    if (!std::isfinite(g.data[i]))
      throw NumericError("non-finite grid value at cell (" + std::to_string(i / g.cols) + "," +
                         std::to_string(i % g.cols) + ")");
}

std::vector<Edge> grid_edges(std::size_t rows, std::size_t cols) {
  std::vector<Edge> edges;
  edges.reserve(4 * rows * cols);
  auto id = [cols](std::size_t r, std::size_t c) { return r * cols + c; };
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c + 1 < cols) edges.emplace_back(id(r, c), id(r, c + 1));
      if (r + 1 < rows) {
        edges.emplace_back(id(r, c), id(r + 1, c));
        if (c + 1 < cols) edges.emplace_back(id(r, c), id(r + 1, c + 1));
        if (c > 0) edges.emplace_back(id(r, c), id(r + 1, c - 1));
      }
    }
  }
  return edges;
}

}  // namespace

ScalarField build_image_grid(const GridValues& values) {
  check_grid(values);
  std::vector<Point2> coords(values.data.size());
  for (std::size_t r = 0; r < values.rows; ++r)
    for (std::size_t c = 0; c < values.cols; ++c)
      coords[r * values.cols + c] = {static_cast<double>(r), static_cast<double>(c)};
  return {values.data, std::move(coords), grid_edges(values.rows, values.cols)};
}

ScalarField build_image_grid(const GridValues& values, std::span<const double> axis_rows,
                             std::span<const double> axis_cols) {
  check_grid(values);
  if (axis_rows.size() != values.rows || axis_cols.size() != values.cols)
    throw ConfigError("axis lengths do not match grid shape");
  std::vector<Point2> coords(values.data.size());
  for (std::size_t r = 0; r < values.rows; ++r)
    for (std::size_t c = 0; c < values.cols; ++c)
      coords[r * values.cols + c] = {axis_rows[r], axis_cols[c]};
  return {values.data, std::move(coords), grid_edges(values.rows, values.cols)};
}

ScalarField build_image_grid(const GridValues& values, std::vector<Point2> coords) {
  check_grid(values);
  return {values.data, std::move(coords), grid_edges(values.rows, values.cols)};
}

std::vector<std::vector<std::size_t>> knn_lists(std::span<const Point2> points, std::size_t k) {
  const std::size_t n = points.size();
  if (k == 0) throw ConfigError("k must be positive");
  if (k >= n)
    throw ConfigError("k = " + std::to_string(k) + " needs more than " + std::to_string(n) +
                      " points");

  std::vector<std::vector<std::size_t>> lists(n);
  parallel_for(n, [&](std::size_t i) {
    std::vector<std::pair<double, std::size_t>> cand;
    cand.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = points[i].x - points[j].x;
      const double dy = points[i].y - points[j].y;
      cand.emplace_back(dx * dx + dy * dy, j);
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    auto& out = lists[i];
    out.reserve(k);
    for (std::size_t m = 0; m < k; ++m) out.push_back(cand[m].second);
  });
  return lists;
}

ScalarField build_knn_graph(std::span<const Point2> points, std::span<const double> values,
                            std::size_t k) {
  if (points.size() != values.size())
    throw ConfigError("point and value counts differ");
  const auto lists = knn_lists(points, k);
  std::vector<Edge> edges;
  edges.reserve(points.size() * k);
  for (std::size_t i = 0; i < lists.size(); ++i)
    for (std::size_t j : lists[i]) edges.emplace_back(i, j);
  return {std::vector<double>(values.begin(), values.end()),
          std::vector<Point2>(points.begin(), points.end()), std::move(edges)};
}

std::string to_string(FieldLayout::Builder b) {
  return b == FieldLayout::Builder::grid ? "grid" : "knn";
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".meta.json");
  return p;
}

void save_field(const std::filesystem::path& path, const ScalarField& field,
                const FieldLayout& layout, const std::string& extra_meta_json) {
  std::string csv = "alpha1,alpha2,loss\n";
  for (std::size_t v = 0; v < field.size(); ++v) {
    const auto& p = field.coords()[v];
    csv += io::format_double(p.x);
    csv += ',';
    csv += io::format_double(p.y);
    csv += ',';
    csv += io::format_double(field.value(v));
    csv += '\n';
  }

  nlohmann::ordered_json meta;
  meta["builder"] = to_string(layout.builder);
  meta["rows"] = layout.rows;
  meta["cols"] = layout.cols;
  meta["k"] = layout.k;
  if (!extra_meta_json.empty()) {
    const auto extra = nlohmann::ordered_json::parse(extra_meta_json);
    for (const auto& [key, value] : extra.items()) meta[key] = value;
  }
  io::write_atomic(path, csv);
  io::write_atomic(sidecar_path(path), meta.dump(2) + "\n");
}

FieldRows parse_field_csv(const std::string& text) {
  FieldRows rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "alpha1,alpha2,loss")
        throw ParseError("expected header 'alpha1,alpha2,loss'", line_no);
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> cols;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      cols.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cols.size() != 3)
      throw ParseError("expected 3 columns, found " + std::to_string(cols.size()), line_no);
    const double a1 = io::parse_double(cols[0], line_no);
    const double a2 = io::parse_double(cols[1], line_no);
    const double loss = io::parse_double(cols[2], line_no);
    if (!std::isfinite(a1) || !std::isfinite(a2) || !std::isfinite(loss))
      throw ParseError("non-finite value", line_no);
    rows.coords.push_back({a1, a2});
    rows.values.push_back(loss);
  }
  if (rows.values.empty()) throw ParseError("no vertices", 0);
  return rows;
}

ScalarField rebuild_field(FieldRows rows, const FieldLayout& layout) {
  if (layout.builder == FieldLayout::Builder::knn)
    return build_knn_graph(rows.coords, rows.values, layout.k);
  if (layout.rows * layout.cols != rows.values.size())
    throw ConfigError("grid layout " + std::to_string(layout.rows) + "x" +
                      std::to_string(layout.cols) + " does not match " +
                      std::to_string(rows.values.size()) + " vertices");
  GridValues g{layout.rows, layout.cols, std::move(rows.values)};
  return build_image_grid(g, std::move(rows.coords));
}

FieldLayout load_layout(const std::filesystem::path& sidecar) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(io::read_file(sidecar));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(sidecar.string() + ": " + e.what(), 0);
  }
  FieldLayout layout;
  try {
    const auto builder = meta.at("builder").get<std::string>();
    if (builder == "grid")
      layout.builder = FieldLayout::Builder::grid;
    else if (builder == "knn")
      layout.builder = FieldLayout::Builder::knn;
    else
      throw ParseError("unknown builder '" + builder + "'", 0);
    layout.rows = meta.value("rows", std::size_t{0});
    layout.cols = meta.value("cols", std::size_t{0});
    layout.k = meta.value("k", kDefaultNeighbors);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(sidecar.string() + ": " + e.what(), 0);
  }
  return layout;
}

ScalarField load_field(const std::filesystem::path& path) {
  return load_field(path, load_layout(sidecar_path(path)));
}

ScalarField load_field(const std::filesystem::path& path, const FieldLayout& layout) {
  return rebuild_field(parse_field_csv(io::read_file(path)), layout);
}

}  // namespace losstopo
