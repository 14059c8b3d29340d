// losstopo command-line front end.
//
// Exit status: 0 ok, 2 bad configuration, 3 numeric failure, 4 I/O failure.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "losstopo/config.hpp"
#include "losstopo/error.hpp"
#include "losstopo/io.hpp"
#include "losstopo/oracle/flood_fill.hpp"
#include "losstopo/pipeline.hpp"

namespace lt = losstopo;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

// --config FILE plus one --section.key flag per config key. Flags win.
struct ConfigOptions {
  std::string file;
  std::map<std::string, std::string> flags;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", file, "INI config file ([section] key = value)");
    for (const auto& [key, def] : lt::default_keys())
      app->add_option("--" + key, flags[key], "default: " + (def.empty() ? std::string("''") : def))
          ->group("Config keys");
  }

  lt::PipelineConfig resolve(const CLI::App* app) const {
    lt::KeyValues kv;
    if (!file.empty()) kv = lt::read_config_file(file);
    for (const auto& [key, value] : flags)
      if (app->count("--" + key) > 0) kv[key] = value;
    return lt::config_from_keys(kv);
  }
};

nlohmann::ordered_json summary(const lt::PipelineResult& r, const std::string& dir) {
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(lt::metrics_json(r.topo, r.hessian));
  auto put = [&](const char* key, double v) {
    j[key] = std::isnan(v) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(v);
  };
  put("final_loss", r.final_loss);
  put("abs_error", r.abs_error);
  put("accuracy", r.accuracy);
  j.erase("esd");
  j["output_dir"] = dir;
  j["config_hash"] = r.manifest.config_hash;
  return j;
}

std::vector<std::vector<std::size_t>> parse_variants(const std::string& text) {
  std::vector<std::vector<std::size_t>> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find(';', start);
    const auto piece = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
    out.push_back(lt::parse_size_list(piece, "variants"));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"Sub-level-set topology of 2D loss landscapes"};
  app.set_version_flag("--version", lt::kToolVersion);
  app.require_subcommand(1);

  // sample / pipeline
  ConfigOptions sample_cfg, pipeline_cfg;
  auto* sample = app.add_subcommand("sample", "Train/load the model, sample the landscape, write landscape.csv");
  sample_cfg.attach(sample);
  auto* pipeline = app.add_subcommand("pipeline", "Full pipeline: landscape, merge tree, diagram, metrics");
  pipeline_cfg.attach(pipeline);

  // analyze
  std::string field_csv, analyze_out = "analyze_out", builder;
  std::size_t grid_rows = 0, grid_cols = 0, knn_k = lt::kDefaultNeighbors;
  std::string include_essential = "true";
  auto* analyze = app.add_subcommand("analyze", "Topology and metrics of an existing field CSV");
  analyze->add_option("field", field_csv, "alpha1,alpha2,loss CSV")->required();
  analyze->add_option("-o,--out", analyze_out, "output directory");
  analyze->add_option("--builder", builder, "grid|knn; overrides the .meta.json sidecar")
      ->check(CLI::IsMember({"grid", "knn"}));
  analyze->add_option("--rows", grid_rows, "grid rows (with --builder grid)");
  analyze->add_option("--cols", grid_cols, "grid cols (with --builder grid)");
  analyze->add_option("--k", knn_k, "neighbours (with --builder knn)");
  analyze->add_option("--include-essential", include_essential, "true|false")
      ->check(CLI::IsMember({"true", "false"}));

  // beta-sweep
  ConfigOptions sweep_cfg;
  std::string betas_text = "1,2,3,4,5,6,7,8,9,10";
  auto* sweep = app.add_subcommand("beta-sweep", "PINN convection sweep over beta");
  sweep_cfg.attach(sweep);
  sweep->add_option("--betas", betas_text, "comma-separated beta values");

  // mlp-demo
  ConfigOptions demo_cfg;
  std::string variants_text = "16;16,16,16", seeds_text = "0,123,123456,2023";
  auto* demo = app.add_subcommand("mlp-demo", "Compare MLP depth variants across seeds");
  demo_cfg.attach(demo);
  demo->add_option("--variants", variants_text, "hidden widths per variant, ';'-separated");
  demo->add_option("--seeds", seeds_text, "comma-separated seeds");

  // oracle-check
  std::size_t n_fields = 1000, o_rows = 6, o_cols = 6;
  std::uint64_t o_seed = 0;
  bool verbose = false;
  auto* check = app.add_subcommand("oracle-check", "Compare the sweep against brute-force flood fill");
  check->add_option("--fields", n_fields, "number of random fields");
  check->add_option("--seed", o_seed, "RNG seed");
  check->add_option("--rows", o_rows, "grid rows");
  check->add_option("--cols", o_cols, "grid cols");
  check->add_flag("-v,--verbose", verbose, "log every mismatch");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (sample->parsed() || pipeline->parsed()) {
    const bool full = pipeline->parsed();
    const auto cfg = full ? pipeline_cfg.resolve(pipeline) : sample_cfg.resolve(sample);
    const auto r = lt::run_pipeline(cfg, full ? lt::PipelineScope::full : lt::PipelineScope::sample);
    if (full)
      std::cout << summary(r, cfg.output_dir).dump(2) << "\n";
    else
      std::cout << "wrote " << (std::filesystem::path(cfg.output_dir) / "landscape.csv").string() << "\n";
    return 0;
  }

  if (analyze->parsed()) {
    std::optional<lt::FieldLayout> layout;
    if (!builder.empty()) {
      lt::FieldLayout l;
      l.builder = builder == "knn" ? lt::FieldLayout::Builder::knn : lt::FieldLayout::Builder::grid;
      l.rows = grid_rows;
      l.cols = grid_cols;
      l.k = knn_k;
      layout = l;
    }
    const auto r = lt::run_analyze(field_csv, layout, analyze_out, include_essential == "true");
    std::cout << lt::metrics_json(r.metrics, std::nullopt);
    return 0;
  }

  if (sweep->parsed()) {
    auto cfg = sweep_cfg.resolve(sweep);
    cfg.model = lt::PipelineConfig::ModelKind::pinn;
    const auto betas = lt::parse_double_list(betas_text, "betas");
    const auto rows = lt::run_beta_sweep(cfg, betas);
    std::cout << lt::sweep_csv(rows);
    std::vector<double> b, s, p;
    for (const auto& r : rows)
      if (r.status == "ok") {
        b.push_back(r.beta);
        s.push_back(static_cast<double>(r.n_saddles));
        p.push_back(r.avg_persistence);
      }
    if (b.size() >= 2)
      std::cout << "spearman(beta, n_saddles) = " << lt::spearman(b, s)
                << "\nspearman(beta, avg_persistence) = " << lt::spearman(b, p) << "\n";
    return 0;
  }

  if (demo->parsed()) {
    auto cfg = demo_cfg.resolve(demo);
    cfg.model = lt::PipelineConfig::ModelKind::mlp;
    const auto seeds_d = lt::parse_size_list(seeds_text, "seeds");
    const std::vector<std::uint64_t> seeds(seeds_d.begin(), seeds_d.end());
    const auto rows = lt::run_mlp_demo(cfg, parse_variants(variants_text), seeds);
    std::cout << lt::demo_csv(rows);
    return 0;
  }

  if (check->parsed()) {
    const auto report = lt::oracle::run_equivalence_check(n_fields, o_seed, o_rows, o_cols,
                                                          verbose ? &std::cerr : nullptr);
    std::cout << "fields " << report.fields << " mismatches " << report.mismatches << "\n";
    return report.mismatches == 0 ? 0 : kExitNumeric;
  }
  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const lt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const lt::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const lt::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "i/o error: malformed JSON: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
