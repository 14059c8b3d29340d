#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "losstopo/directions.hpp"
#include "losstopo/metrics.hpp"
#include "losstopo/models.hpp"
#include "losstopo/sampler.hpp"

namespace losstopo {

struct PipelineConfig {
  enum class ModelKind { mlp, pinn, analytic };
  enum class ThetaSource { train, load };
  enum class DirectionKind { random, hessian };

  ModelKind model = ModelKind::analytic;
  std::string analytic_name = "himmelblau";
  AnalyticSpec analytic;
  MlpSpec mlp;
  ConvectionPinnSpec pinn;
  std::uint64_t init_seed = 0;

  ThetaSource theta_source = ThetaSource::train;
  AdamOptions adam;
  std::string theta_path;

  DirectionKind directions = DirectionKind::hessian;
  PowerOptions power;
  bool filter_normalize = false;

  std::optional<SampleRange> range;  // unset: chosen per direction kind
  std::size_t rows = 41;
  std::size_t cols = 41;
  double clip_quantile = 1.0;

  Representation representation;

  bool include_essential = true;
  std::size_t trace_probes = 100;
  std::uint64_t trace_seed = 0;
  bool esd = false;
  EsdOptions esd_options;

  std::string output_dir = "out";

  SampleRange effective_range() const;
};

using KeyValues = std::map<std::string, std::string>;

// Every recognised "section.key" with its default text.
const KeyValues& default_keys();

// Reads an INI-style file ([section] / key = value) into "section.key"
// entries. Unknown keys are a ConfigError.
KeyValues read_config_file(const std::string& path);

// Defaults overlaid with `overrides`, then parsed and validated.
PipelineConfig config_from_keys(const KeyValues& overrides);
KeyValues config_to_keys(const PipelineConfig& config);

// "key=value" lines in key order; input to the config hash.
std::string canonical_text(const PipelineConfig& config);
std::string config_hash(const PipelineConfig& config);

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& key);
std::vector<double> parse_double_list(const std::string& text, const std::string& key);

}  // namespace losstopo
