#include "losstopo/params_io.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "losstopo/error.hpp"
#include "losstopo/io.hpp"

namespace losstopo {

void save_params(const std::string& path, const ParameterVector& params,
                 const std::string& meta_json) {
  if (layout_size(params.layout) != params.size())
    throw ConfigError("layout does not match parameter count");
  nlohmann::ordered_json header;
  header["layout"] = nlohmann::ordered_json::array();
  for (const auto& s : params.layout)
    header["layout"].push_back({{"name", s.name}, {"rows", s.rows}, {"cols", s.cols}});
  header["size"] = params.size();
  header["meta"] = meta_json.empty() ? nlohmann::ordered_json::object()
                                     : nlohmann::ordered_json::parse(meta_json);
  std::string text = header.dump() + "\n";
  for (double v : params.theta) {
    text += io::format_double(v);
    text += '\n';
  }
  io::write_atomic(path, text);
}

ParameterVector load_params(const std::string& path, std::string* meta_json) {
  std::istringstream in(io::read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty parameter file", 1);
  ParameterVector pv;
  std::size_t size = 0;
  try {
    const auto header = nlohmann::json::parse(line);
    for (const auto& s : header.at("layout"))
      pv.layout.push_back({s.at("name").get<std::string>(), s.at("rows").get<std::size_t>(),
                           s.at("cols").get<std::size_t>()});
    size = header.at("size").get<std::size_t>();
    if (meta_json) *meta_json = header.value("meta", nlohmann::json::object()).dump();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": bad header: " + e.what(), 1);
  }
  if (layout_size(pv.layout) != size) throw ParseError(path + ": layout/size mismatch", 1);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const double v = io::parse_double(line, line_no);
    if (!std::isfinite(v)) throw ParseError("non-finite parameter", line_no);
    pv.theta.push_back(v);
  }
  if (pv.theta.size() != size)
    throw ParseError(path + ": expected " + std::to_string(size) + " values, found " +
                         std::to_string(pv.theta.size()),
                     line_no);
  return pv;
}

}  // namespace losstopo
