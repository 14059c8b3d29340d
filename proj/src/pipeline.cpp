#include "losstopo/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include <nlohmann/json.hpp>

#include "losstopo/error.hpp"
#include "losstopo/io.hpp"
#include "losstopo/parallel.hpp"
#include "losstopo/params_io.hpp"

namespace losstopo {

namespace fs = std::filesystem;

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["config_hash"] = config_hash;
  j["tool_version"] = tool_version;
  j["stages"] = nlohmann::ordered_json::array();
  for (const auto& s : stages)
    j["stages"].push_back({{"name", s.name}, {"seconds", s.seconds}, {"ok", s.ok}});
  j["outputs"] = outputs;
  j["failed_stage"] = failed_stage ? nlohmann::ordered_json(*failed_stage) : nlohmann::ordered_json(nullptr);
  if (!error.empty()) j["error"] = error;
  return j.dump(2) + "\n";
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class StageRunner {
 public:
  StageRunner(RunManifest& manifest, fs::path dir) : manifest_(manifest), dir_(std::move(dir)) {}

  template <class F>
  void run(const std::string& name, F&& body) {
    const auto start = std::chrono::steady_clock::now();
    try {
      body();
    } catch (const std::exception& e) {
      record(name, start, false);
      manifest_.failed_stage = name;
      manifest_.error = e.what();
      write_manifest();
      throw;
    }
    record(name, start, true);
  }

  void write(const std::string& file, const std::string& contents) {
    io::write_atomic(dir_ / file, contents);
    add_output(file);
  }

  void add_output(const std::string& file) {
    if (std::find(manifest_.outputs.begin(), manifest_.outputs.end(), file) == manifest_.outputs.end())
      manifest_.outputs.push_back(file);
  }

  void write_manifest() {
    add_output("manifest.json");
    io::write_atomic(dir_ / "manifest.json", manifest_.to_json());
  }

 private:
  void record(const std::string& name, std::chrono::steady_clock::time_point start, bool ok) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    manifest_.stages.push_back({name, secs, ok});
  }

  RunManifest& manifest_;
  fs::path dir_;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

// Owns whichever model the config names and exposes it as an Objective.
struct ModelHandle {
  std::unique_ptr<Mlp> mlp;
  std::unique_ptr<ConvectionPinn> pinn;

  const TanhNetwork& network() const { return mlp ? mlp->network() : pinn->network(); }
  Objective objective() const { return mlp ? mlp->objective() : pinn->objective(); }
};

DirectionPair hessian_directions(const Objective& objective, std::span<const double> theta,
                                 const PowerOptions& opts) {
  try {
    return top2_eigenvectors(objective, theta, opts);
  } catch (const NoConvergence& e) {
    return e.best();  // provenance keeps converged = false
  }
}

void write_topology(StageRunner& stages, const Topology& topo) {
  stages.write("merge_tree.json", merge_tree_json(topo.tree));
  stages.write("merge_tree.dot", merge_tree_dot(topo.tree));
  stages.write("diagram.csv", diagram_csv(topo.diagram));
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config, PipelineScope scope) {
  const fs::path dir = config.output_dir;
  ensure_dir(dir);

  PipelineResult result;
  result.manifest.config_hash = config_hash(config);
  result.final_loss = kNaN;
  result.abs_error = kNaN;
  result.accuracy = kNaN;
  StageRunner stages(result.manifest, dir);
  const SampleRange range = config.effective_range();

  ModelHandle model;
  std::vector<double> theta;
  DirectionPair dirs;
  LandscapeGrid grid;
  std::optional<ScalarField> field;
  Topology topo;

  const bool analytic = config.model == PipelineConfig::ModelKind::analytic;
  if (!analytic) {
    stages.run("model", [&] {
      if (config.model == PipelineConfig::ModelKind::mlp)
        model.mlp = std::make_unique<Mlp>(config.mlp);
      else
        model.pinn = std::make_unique<ConvectionPinn>(config.pinn);
      const auto& net = model.network();
      if (config.theta_source == PipelineConfig::ThetaSource::load) {
        auto pv = load_params(config.theta_path);
        if (pv.layout != net.layout()) throw ConfigError("loaded parameters do not match the model layout");
        theta = std::move(pv.theta);
      } else {
        theta = train(model.objective(), net.init(config.init_seed).theta, config.adam).theta;
      }
      result.final_loss = model.objective().loss(theta);
      if (model.pinn) result.abs_error = model.pinn->abs_error(theta);
      if (model.mlp) result.accuracy = model.mlp->accuracy(theta);
      save_params((dir / "theta.params").string(), {theta, net.layout()});
      stages.add_output("theta.params");
    });

    stages.run("subspace", [&] {
      if (config.directions == PipelineConfig::DirectionKind::hessian)
        dirs = hessian_directions(model.objective(), theta, config.power);
      else
        dirs = random_pair(theta.size(), config.power.seed);
      if (config.filter_normalize) filter_normalize(dirs, theta, model.network().layout());
      save_directions((dir / "directions.params").string(), dirs);
      stages.add_output("directions.params");
    });
  }

  stages.run("loss_computation", [&] {
    if (analytic) {
      const auto surface = make_surface(config.analytic, range.min, range.max);
      grid.alphas1 = linspace(range.min, range.max, config.rows);
      grid.alphas2 = linspace(range.min, range.max, config.cols);
      grid.losses = analytic_grid(config.analytic, config.rows, config.cols, range.min, range.max).data;
      grid.center_loss = surface(0.5 * (range.min + range.max), 0.5 * (range.min + range.max));
      nlohmann::ordered_json prov{{"source", "analytic"}, {"name", config.analytic_name}};
      grid.provenance_json = prov.dump();
    } else {
      const Objective objective = model.objective();
      grid = sample_landscape(objective.loss, theta, dirs, range, range, config.rows, config.cols);
    }
    if (config.clip_quantile < 1.0) grid = clip_outliers(grid, config.clip_quantile);
  });

  stages.run("representation", [&] {
    field.emplace(to_field(grid, config.representation));
    save_field(dir / "landscape.csv", *field, layout_for(grid, config.representation),
               grid.metadata_json());
    stages.add_output("landscape.csv");
    stages.add_output("landscape.meta.json");
  });
  if (scope == PipelineScope::sample) {
    stages.write_manifest();
    return result;
  }

  stages.run("topology", [&] {
    topo = compute_topology(*field);
    write_topology(stages, topo);
  });

  stages.run("quantification",
             [&] { result.topo = topo_metrics(topo.tree, topo.diagram, config.include_essential); });

  stages.run("properties", [&] {
    if (!analytic) {
      const Objective objective = model.objective();
      HessianSummary h;
      if (dirs.source == DirectionPair::Source::hessian && !config.filter_normalize) {
        h.lambda1 = dirs.lambda1;
        h.lambda2 = dirs.lambda2;
      } else {
        const auto top = hessian_directions(objective, theta, config.power);
        h.lambda1 = top.lambda1;
        h.lambda2 = top.lambda2;
      }
      h.trace_probes = config.trace_probes;
      h.trace_estimate =
          hessian_trace(objective, theta, config.trace_probes, config.trace_seed, config.power.fd_step);
      if (config.esd) h.esd = hessian_esd(objective, theta, config.esd_options);
      result.hessian = h;
    }
    stages.write("metrics.json", metrics_json(result.topo, result.hessian));
  });

  stages.write_manifest();
  return result;
}

AnalyzeResult run_analyze(const fs::path& field_csv, const std::optional<FieldLayout>& layout,
                          const fs::path& output_dir, bool include_essential) {
  const ScalarField field = layout ? load_field(field_csv, *layout) : load_field(field_csv);
  ensure_dir(output_dir);
  AnalyzeResult r;
  r.topology = compute_topology(field);
  r.metrics = topo_metrics(r.topology.tree, r.topology.diagram, include_essential);
  io::write_atomic(output_dir / "merge_tree.json", merge_tree_json(r.topology.tree));
  io::write_atomic(output_dir / "merge_tree.dot", merge_tree_dot(r.topology.tree));
  io::write_atomic(output_dir / "diagram.csv", diagram_csv(r.topology.diagram));
  io::write_atomic(output_dir / "metrics.json", metrics_json(r.metrics, std::nullopt));
  r.outputs = {"merge_tree.json", "merge_tree.dot", "diagram.csv", "metrics.json"};
  return r;
}

// ---------------------------------------------------------------------------

std::string sweep_csv(std::span<const SweepRow> rows) {
  auto f = [](double v) { return io::format_double(v); };
  std::string s = "beta,n_saddles,n_minima,avg_persistence,lambda1,trace,final_loss,abs_error,status\n";
  for (const auto& r : rows)
    s += f(r.beta) + "," + std::to_string(r.n_saddles) + "," + std::to_string(r.n_minima) + "," +
         f(r.avg_persistence) + "," + f(r.lambda1) + "," + f(r.trace) + "," + f(r.final_loss) + "," +
         f(r.abs_error) + "," + r.status + "\n";
  return s;
}

namespace {

std::string status_of(const std::exception& e) {
  if (dynamic_cast<const TrainingDiverged*>(&e)) return "diverged";
  if (dynamic_cast<const NumericError*>(&e)) return "numeric_failure";
  return "failed";
}

}  // namespace

std::vector<SweepRow> run_beta_sweep(const PipelineConfig& base, std::span<const double> betas) {
  if (betas.empty()) throw ConfigError("beta sweep needs at least one beta");
  if (base.model != PipelineConfig::ModelKind::pinn) throw ConfigError("beta sweep needs model.kind = pinn");
  for (double b : betas)
    if (!(b > 0.0)) throw ConfigError("beta values must be positive");
  ensure_dir(base.output_dir);

  std::vector<SweepRow> rows(betas.size());
  parallel_for(betas.size(), [&](std::size_t i) {
    PipelineConfig cfg = base;
    cfg.pinn.beta = betas[i];
    cfg.output_dir = (fs::path(base.output_dir) / ("beta_" + io::format_double(betas[i]))).string();
    SweepRow& row = rows[i];
    row.beta = betas[i];
    try {
      const auto r = run_pipeline(cfg);
      row.n_saddles = r.topo.n_saddles;
      row.n_minima = r.topo.n_minima;
      row.avg_persistence = r.topo.avg_persistence;
      row.lambda1 = r.hessian ? r.hessian->lambda1 : kNaN;
      row.trace = r.hessian ? r.hessian->trace_estimate : kNaN;
      row.final_loss = r.final_loss;
      row.abs_error = r.abs_error;
    } catch (const IoError&) {
      throw;
    } catch (const std::exception& e) {
      row.status = status_of(e);
      row.avg_persistence = row.lambda1 = row.trace = row.final_loss = row.abs_error = kNaN;
    }
  });
  io::write_atomic(fs::path(base.output_dir) / "sweep.csv", sweep_csv(rows));
  return rows;
}

std::string demo_csv(std::span<const DemoRow> rows) {
  auto f = [](double v) { return io::format_double(v); };
  std::string s =
      "variant,seed,n_saddles,n_minima,avg_persistence,lambda1,trace,final_loss,accuracy,status\n";
  for (const auto& r : rows)
    s += r.variant + "," + std::to_string(r.seed) + "," + std::to_string(r.n_saddles) + "," +
         std::to_string(r.n_minima) + "," + f(r.avg_persistence) + "," + f(r.lambda1) + "," +
         f(r.trace) + "," + f(r.final_loss) + "," + f(r.accuracy) + "," + r.status + "\n";
  return s;
}

std::vector<DemoRow> run_mlp_demo(const PipelineConfig& base,
                                  const std::vector<std::vector<std::size_t>>& variants,
                                  std::span<const std::uint64_t> seeds) {
  if (variants.size() < 2 || seeds.size() < 2)
    throw ConfigError("mlp demo needs at least two variants and two seeds");
  ensure_dir(base.output_dir);

  std::vector<DemoRow> rows(variants.size() * seeds.size());
  parallel_for(rows.size(), [&](std::size_t idx) {
    std::vector<std::size_t> widths{base.mlp.layer_widths.front()};
    for (std::size_t w : variants[idx / seeds.size()]) widths.push_back(w);
    widths.push_back(base.mlp.layer_widths.back());
    const std::uint64_t seed = seeds[idx % seeds.size()];
    std::string name = "w";
    for (std::size_t i = 0; i < widths.size(); ++i) name += (i ? "-" : "") + std::to_string(widths[i]);

    PipelineConfig cfg = base;
    cfg.model = PipelineConfig::ModelKind::mlp;
    cfg.mlp.layer_widths = widths;
    cfg.mlp.data_seed = seed;
    cfg.init_seed = seed;
    cfg.output_dir = (fs::path(base.output_dir) / (name + "_seed" + std::to_string(seed))).string();

    DemoRow& row = rows[idx];
    row.variant = name;
    row.seed = seed;
    try {
      const auto r = run_pipeline(cfg);
      row.n_saddles = r.topo.n_saddles;
      row.n_minima = r.topo.n_minima;
      row.avg_persistence = r.topo.avg_persistence;
      row.lambda1 = r.hessian ? r.hessian->lambda1 : kNaN;
      row.trace = r.hessian ? r.hessian->trace_estimate : kNaN;
      row.final_loss = r.final_loss;
      row.accuracy = r.accuracy;
    } catch (const IoError&) {
      throw;
    } catch (const std::exception& e) {
      row.status = status_of(e);
      row.avg_persistence = row.lambda1 = row.trace = row.final_loss = row.accuracy = kNaN;
    }
  });
  io::write_atomic(fs::path(base.output_dir) / "mlp_demo.csv", demo_csv(rows));
  return rows;
}

namespace {

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("spearman needs two equal-length samples");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace losstopo
