#include "losstopo/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdio>
#include <sstream>

#include "losstopo/error.hpp"
#include "losstopo/io.hpp"

namespace losstopo {

SampleRange PipelineConfig::effective_range() const {
  if (range) return *range;
  if (model == ModelKind::analytic) return {-6.0, 6.0};
  return directions == DirectionKind::hessian ? SampleRange{-1.0, 1.0} : SampleRange{-0.5, 0.5};
}

const KeyValues& default_keys() {
  static const KeyValues keys = {
      {"model.kind", "analytic"},
      {"model.analytic", "himmelblau"},
      {"model.analytic_components", "5"},
      {"model.analytic_seed", "1"},
      {"model.analytic_constant", "0"},
      {"model.mlp_widths", "2,16,1"},
      {"model.mlp_loss", "mse"},
      {"model.mlp_points", "200"},
      {"model.mlp_data_seed", "0"},
      {"model.pinn_beta", "1"},
      {"model.pinn_widths", "2,16,16,1"},
      {"model.pinn_n_u", "50"},
      {"model.pinn_n_f", "400"},
      {"model.pinn_n_b", "50"},
      {"model.pinn_point_seed", "0"},
      {"model.init_seed", "0"},
      {"theta.source", "train"},
      {"theta.steps", "2000"},
      {"theta.lr", "0.01"},
      {"theta.path", ""},
      {"directions.kind", "hessian"},
      {"directions.seed", "0"},
      {"directions.tol", "1e-6"},
      {"directions.max_iter", "1000"},
      {"directions.fd_step", "1e-4"},
      {"directions.filter_normalize", "false"},
      {"sampling.range", "auto"},
      {"sampling.resolution", "41"},
      {"sampling.clip_quantile", "1"},
      {"representation.kind", "image8"},
      {"representation.k", "8"},
      {"metrics.include_essential", "true"},
      {"metrics.trace_probes", "100"},
      {"metrics.trace_seed", "0"},
      {"metrics.esd", "false"},
      {"metrics.lanczos_order", "30"},
      {"metrics.esd_probes", "10"},
      {"metrics.esd_bins", "100"},
      {"output.dir", "out"},
  };
  return keys;
}

KeyValues read_config_file(const std::string& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    if (e.line() == 0) throw IoError("cannot read config " + path + ": " + e.message());
    throw ParseError(path + ": " + e.message(), e.line());
  }
  KeyValues out;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config key '" + section + "' is outside any section");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      if (!default_keys().count(full)) throw ConfigError("unknown config key '" + full + "'");
      out[full] = value.get_value<std::string>();
    }
  }
  return out;
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\"");
  const auto e = s.find_last_not_of(" \t\"");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

double parse_real(const std::string& text, const std::string& key) {
  try {
    return io::parse_double(trim(text), 0);
  } catch (const ParseError&) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
}

std::uint64_t parse_uint(const std::string& text, const std::string& key) {
  const auto t = trim(text);
  try {
    std::size_t used = 0;
    if (!t.empty() && t.front() == '-') throw std::invalid_argument("negative");
    const auto v = std::stoull(t, &used);
    if (used != t.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
  }
}

bool parse_bool(const std::string& text, const std::string& key) {
  const auto t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key + ": expected true/false, got '" + text + "'");
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  for (char c : text) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!item.empty()) out.push_back(item);
      item.clear();
    } else if (c != '[' && c != ']' && c != '"') {
      item += c;
    }
  }
  if (!item.empty()) out.push_back(item);
  return out;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

}  // namespace

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& key) {
  std::vector<std::size_t> out;
  for (const auto& item : split(text)) out.push_back(parse_uint(item, key));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  for (const auto& item : split(text)) out.push_back(parse_real(item, key));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

PipelineConfig config_from_keys(const KeyValues& overrides) {
  KeyValues kv = default_keys();
  for (const auto& [k, v] : overrides) {
    if (!kv.count(k)) throw ConfigError("unknown config key '" + k + "'");
    kv[k] = v;
  }
  auto get = [&](const std::string& k) { return trim(kv.at(k)); };

  PipelineConfig c;
  const auto kind = get("model.kind");
  if (kind == "mlp")
    c.model = PipelineConfig::ModelKind::mlp;
  else if (kind == "pinn")
    c.model = PipelineConfig::ModelKind::pinn;
  else if (kind == "analytic")
    c.model = PipelineConfig::ModelKind::analytic;
  else
    throw ConfigError("model.kind must be mlp, pinn or analytic");

  c.analytic_name = get("model.analytic");
  c.analytic = parse_analytic(c.analytic_name);
  c.analytic.components = parse_uint(get("model.analytic_components"), "model.analytic_components");
  c.analytic.seed = parse_uint(get("model.analytic_seed"), "model.analytic_seed");
  c.analytic.constant = parse_real(get("model.analytic_constant"), "model.analytic_constant");

  c.mlp.layer_widths = parse_size_list(get("model.mlp_widths"), "model.mlp_widths");
  if (c.mlp.layer_widths.size() < 3)
    throw ConfigError("model.mlp_widths needs at least one hidden layer");
  const auto mlp_loss = get("model.mlp_loss");
  if (mlp_loss == "mse")
    c.mlp.loss = MlpLossKind::mse;
  else if (mlp_loss == "cross_entropy" || mlp_loss == "ce")
    c.mlp.loss = MlpLossKind::cross_entropy;
  else
    throw ConfigError("model.mlp_loss must be mse or cross_entropy");
  c.mlp.n_points = parse_uint(get("model.mlp_points"), "model.mlp_points");
  c.mlp.data_seed = parse_uint(get("model.mlp_data_seed"), "model.mlp_data_seed");

  c.pinn.beta = parse_real(get("model.pinn_beta"), "model.pinn_beta");
  c.pinn.net_widths = parse_size_list(get("model.pinn_widths"), "model.pinn_widths");
  c.pinn.n_u = parse_uint(get("model.pinn_n_u"), "model.pinn_n_u");
  c.pinn.n_f = parse_uint(get("model.pinn_n_f"), "model.pinn_n_f");
  c.pinn.n_b = parse_uint(get("model.pinn_n_b"), "model.pinn_n_b");
  c.pinn.point_seed = parse_uint(get("model.pinn_point_seed"), "model.pinn_point_seed");
  if (c.model == PipelineConfig::ModelKind::pinn) validate(c.pinn);
  c.init_seed = parse_uint(get("model.init_seed"), "model.init_seed");

  const auto source = get("theta.source");
  if (source == "train")
    c.theta_source = PipelineConfig::ThetaSource::train;
  else if (source == "load")
    c.theta_source = PipelineConfig::ThetaSource::load;
  else
    throw ConfigError("theta.source must be train or load");
  c.adam.steps = parse_uint(get("theta.steps"), "theta.steps");
  c.adam.lr = parse_real(get("theta.lr"), "theta.lr");
  c.theta_path = get("theta.path");
  if (c.theta_source == PipelineConfig::ThetaSource::train && c.adam.steps == 0)
    throw ConfigError("theta.steps must be at least 1");
  if (c.theta_source == PipelineConfig::ThetaSource::load && c.theta_path.empty())
    throw ConfigError("theta.path is required when theta.source = load");

  const auto dirs = get("directions.kind");
  if (dirs == "random")
    c.directions = PipelineConfig::DirectionKind::random;
  else if (dirs == "hessian")
    c.directions = PipelineConfig::DirectionKind::hessian;
  else
    throw ConfigError("directions.kind must be random or hessian");
  c.power.seed = parse_uint(get("directions.seed"), "directions.seed");
  c.power.tol = parse_real(get("directions.tol"), "directions.tol");
  c.power.max_iter = parse_uint(get("directions.max_iter"), "directions.max_iter");
  c.power.fd_step = parse_real(get("directions.fd_step"), "directions.fd_step");
  c.filter_normalize = parse_bool(get("directions.filter_normalize"), "directions.filter_normalize");
  if (c.power.max_iter == 0) throw ConfigError("directions.max_iter must be at least 1");
  if (!(c.power.tol > 0.0) || !(c.power.fd_step > 0.0))
    throw ConfigError("directions.tol and directions.fd_step must be positive");

  const auto range = get("sampling.range");
  if (range != "auto") {
    const auto r = parse_double_list(range, "sampling.range");
    if (r.size() != 2 || !(r[0] < r[1]))
      throw ConfigError("sampling.range must be 'auto' or 'min,max' with min < max");
    c.range = SampleRange{r[0], r[1]};
  }
  const auto res = parse_size_list(get("sampling.resolution"), "sampling.resolution");
  if (res.size() > 2) throw ConfigError("sampling.resolution must be N or R,C");
  c.rows = res.front();
  c.cols = res.back();
  if (c.rows < 2 || c.cols < 2) throw ConfigError("sampling.resolution must be at least 2");
  c.clip_quantile = parse_real(get("sampling.clip_quantile"), "sampling.clip_quantile");
  if (!(c.clip_quantile > 0.5 && c.clip_quantile <= 1.0))
    throw ConfigError("sampling.clip_quantile must lie in (0.5, 1]");

  const auto rep = get("representation.kind");
  if (rep == "image8")
    c.representation.kind = Representation::Kind::image8;
  else if (rep == "knn")
    c.representation.kind = Representation::Kind::knn;
  else
    throw ConfigError("representation.kind must be image8 or knn");
  c.representation.k = parse_uint(get("representation.k"), "representation.k");
  if (c.representation.k == 0) throw ConfigError("representation.k must be positive");

  c.include_essential = parse_bool(get("metrics.include_essential"), "metrics.include_essential");
  c.trace_probes = parse_uint(get("metrics.trace_probes"), "metrics.trace_probes");
  c.trace_seed = parse_uint(get("metrics.trace_seed"), "metrics.trace_seed");
  c.esd = parse_bool(get("metrics.esd"), "metrics.esd");
  c.esd_options.lanczos_order = parse_uint(get("metrics.lanczos_order"), "metrics.lanczos_order");
  c.esd_options.n_probes = parse_uint(get("metrics.esd_probes"), "metrics.esd_probes");
  c.esd_options.bins = parse_uint(get("metrics.esd_bins"), "metrics.esd_bins");
  c.esd_options.seed = c.trace_seed;
  c.esd_options.fd_step = c.power.fd_step;
  if (c.trace_probes == 0) throw ConfigError("metrics.trace_probes must be at least 1");
  if (c.esd && (c.esd_options.lanczos_order < 2 || c.esd_options.n_probes == 0 ||
                c.esd_options.bins == 0))
    throw ConfigError("metrics: lanczos_order >= 2, esd_probes >= 1 and esd_bins >= 1 required");

  c.output_dir = get("output.dir");
  if (c.output_dir.empty()) throw ConfigError("output.dir must not be empty");
  return c;
}

KeyValues config_to_keys(const PipelineConfig& c) {
  auto real = [](double v) { return io::format_double(v); };
  KeyValues kv;
  kv["model.kind"] = c.model == PipelineConfig::ModelKind::mlp    ? "mlp"
                     : c.model == PipelineConfig::ModelKind::pinn ? "pinn"
                                                                  : "analytic";
  kv["model.analytic"] = c.analytic_name;
  kv["model.analytic_components"] = std::to_string(c.analytic.components);
  kv["model.analytic_seed"] = std::to_string(c.analytic.seed);
  kv["model.analytic_constant"] = real(c.analytic.constant);
  kv["model.mlp_widths"] = join(c.mlp.layer_widths);
  kv["model.mlp_loss"] = c.mlp.loss == MlpLossKind::mse ? "mse" : "cross_entropy";
  kv["model.mlp_points"] = std::to_string(c.mlp.n_points);
  kv["model.mlp_data_seed"] = std::to_string(c.mlp.data_seed);
  kv["model.pinn_beta"] = real(c.pinn.beta);
  kv["model.pinn_widths"] = join(c.pinn.net_widths);
  kv["model.pinn_n_u"] = std::to_string(c.pinn.n_u);
  kv["model.pinn_n_f"] = std::to_string(c.pinn.n_f);
  kv["model.pinn_n_b"] = std::to_string(c.pinn.n_b);
  kv["model.pinn_point_seed"] = std::to_string(c.pinn.point_seed);
  kv["model.init_seed"] = std::to_string(c.init_seed);
  kv["theta.source"] = c.theta_source == PipelineConfig::ThetaSource::train ? "train" : "load";
  kv["theta.steps"] = std::to_string(c.adam.steps);
  kv["theta.lr"] = real(c.adam.lr);
  kv["theta.path"] = c.theta_path;
  kv["directions.kind"] = c.directions == PipelineConfig::DirectionKind::hessian ? "hessian" : "random";
  kv["directions.seed"] = std::to_string(c.power.seed);
  kv["directions.tol"] = real(c.power.tol);
  kv["directions.max_iter"] = std::to_string(c.power.max_iter);
  kv["directions.fd_step"] = real(c.power.fd_step);
  kv["directions.filter_normalize"] = c.filter_normalize ? "true" : "false";
  kv["sampling.range"] = c.range ? real(c.range->min) + "," + real(c.range->max) : "auto";
  kv["sampling.resolution"] = std::to_string(c.rows) + "," + std::to_string(c.cols);
  kv["sampling.clip_quantile"] = real(c.clip_quantile);
  kv["representation.kind"] = c.representation.kind == Representation::Kind::image8 ? "image8" : "knn";
  kv["representation.k"] = std::to_string(c.representation.k);
  kv["metrics.include_essential"] = c.include_essential ? "true" : "false";
  kv["metrics.trace_probes"] = std::to_string(c.trace_probes);
  kv["metrics.trace_seed"] = std::to_string(c.trace_seed);
  kv["metrics.esd"] = c.esd ? "true" : "false";
  kv["metrics.lanczos_order"] = std::to_string(c.esd_options.lanczos_order);
  kv["metrics.esd_probes"] = std::to_string(c.esd_options.n_probes);
  kv["metrics.esd_bins"] = std::to_string(c.esd_options.bins);
  kv["output.dir"] = c.output_dir;
  return kv;
}

std::string canonical_text(const PipelineConfig& config) {
  std::string s;
  for (const auto& [k, v] : config_to_keys(config)) s += k + "=" + v + "\n";
  return s;
}

std::string config_hash(const PipelineConfig& config) {
  // FNV-1a, 64 bit.
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canonical_text(config)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace losstopo
