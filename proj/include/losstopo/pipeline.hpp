#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "losstopo/config.hpp"
#include "losstopo/metrics.hpp"
#include "losstopo/topology.hpp"

namespace losstopo {

inline constexpr const char* kToolVersion = "0.1.0";

struct StageRecord {
  std::string name;
  double seconds = 0.0;
  bool ok = true;
};

struct RunManifest {
  std::string config_hash;
  std::string tool_version = kToolVersion;
  std::vector<StageRecord> stages;
  std::vector<std::string> outputs;  // file names relative to the output dir
  std::optional<std::string> failed_stage;
  std::string error;

  std::string to_json() const;
};

struct PipelineResult {
  RunManifest manifest;
  TopoMetrics topo;
  std::optional<HessianSummary> hessian;
  double final_loss = 0.0;  // NaN for analytic surfaces
  double abs_error = 0.0;   // PINN only, NaN otherwise
  double accuracy = 0.0;    // MLP only, NaN otherwise
};

// Stages: model, subspace, loss_computation, representation, topology,
// quantification, properties. Writes landscape.csv (+ .meta.json),
// merge_tree.json, merge_tree.dot, diagram.csv, metrics.json and
// manifest.json to config.output_dir. On failure the manifest names the
// failed stage, earlier outputs stay, and the exception propagates.
// Scope `sample` stops after the representation stage.
enum class PipelineScope { full, sample };
PipelineResult run_pipeline(const PipelineConfig& config, PipelineScope scope = PipelineScope::full);

struct AnalyzeResult {
  Topology topology;
  TopoMetrics metrics;
  std::vector<std::string> outputs;
};

// Field file -> merge_tree.json, merge_tree.dot, diagram.csv, metrics.json.
AnalyzeResult run_analyze(const std::filesystem::path& field_csv,
                          const std::optional<FieldLayout>& layout,
                          const std::filesystem::path& output_dir, bool include_essential = true);

struct SweepRow {
  double beta = 0.0;
  std::size_t n_saddles = 0;
  std::size_t n_minima = 0;
  double avg_persistence = 0.0;
  double lambda1 = 0.0;
  double trace = 0.0;
  double final_loss = 0.0;
  double abs_error = 0.0;
  std::string status = "ok";
};

// One PINN pipeline per beta under output_dir/beta_<beta>/, then sweep.csv:
// beta,n_saddles,n_minima,avg_persistence,lambda1,trace,final_loss,abs_error,status
std::vector<SweepRow> run_beta_sweep(const PipelineConfig& base, std::span<const double> betas);
std::string sweep_csv(std::span<const SweepRow> rows);

struct DemoRow {
  std::string variant;
  std::uint64_t seed = 0;
  std::size_t n_saddles = 0;
  std::size_t n_minima = 0;
  double avg_persistence = 0.0;
  double lambda1 = 0.0;
  double trace = 0.0;
  double final_loss = 0.0;
  double accuracy = 0.0;
  std::string status = "ok";
};

// Every (hidden-layer variant, seed) pair trained and analysed under
// output_dir/<variant>_seed<seed>/, then mlp_demo.csv. Seeds drive both the
// weight initialization and the data draw.
std::vector<DemoRow> run_mlp_demo(const PipelineConfig& base,
                                  const std::vector<std::vector<std::size_t>>& variants,
                                  std::span<const std::uint64_t> seeds);
std::string demo_csv(std::span<const DemoRow> rows);

// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace losstopo
