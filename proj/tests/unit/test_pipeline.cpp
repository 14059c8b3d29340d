#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <nlohmann/json.hpp>

#include "losstopo/io.hpp"
#include "losstopo/pipeline.hpp"

using namespace losstopo;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("losstopo_pipeline_" + name);
  fs::remove_all(p);
  return p;
}

PipelineConfig with(KeyValues kv, const fs::path& out) {
  kv["output.dir"] = out.string();
  return config_from_keys(kv);
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(io::read_file(p.string())); }

}  // namespace

TEST_CASE("himmelblau pipeline finds four minima") {
  const auto out = scratch("himmelblau");
  const auto r = run_pipeline(with({{"sampling.resolution", "201"}}, out));
  CHECK(r.topo.n_minima == 4);
  CHECK(r.topo.n_saddles == 3);
  CHECK(read_json(out / "metrics.json")["n_minima"] == 4);
  CHECK(std::isnan(r.final_loss));
  fs::remove_all(out);
}

TEST_CASE("constant surface is a single basin") {
  const auto out = scratch("constant");
  const auto r = run_pipeline(with({{"model.analytic", "constant"}, {"model.analytic_constant", "3"}}, out));
  CHECK(r.topo.n_minima == 1);
  CHECK(r.topo.n_saddles == 0);
  CHECK(r.topo.avg_persistence == 0.0);
  fs::remove_all(out);
}

TEST_CASE("reruns are byte-identical and the manifest is complete") {
  const auto a = scratch("det_a"), b = scratch("det_b");
  const KeyValues kv{{"model.kind", "mlp"}, {"model.mlp_widths", "2,4,1"}, {"model.mlp_points", "60"},
                     {"theta.steps", "200"}, {"sampling.resolution", "15"}, {"metrics.trace_probes", "10"},
                     {"metrics.esd", "true"}, {"metrics.esd_probes", "2"}, {"metrics.lanczos_order", "8"}};
  const auto ra = run_pipeline(with(kv, a));
  run_pipeline(with(kv, b));
  for (const char* f : {"metrics.json", "merge_tree.json", "diagram.csv", "landscape.csv", "landscape.meta.json"})
    CHECK(io::read_file((a / f).string()) == io::read_file((b / f).string()));

  const auto manifest = read_json(a / "manifest.json");
  CHECK(manifest["config_hash"] == ra.manifest.config_hash);
  CHECK(manifest["tool_version"] == kToolVersion);
  CHECK(manifest["stages"].size() == 7);
  for (const auto& f : manifest["outputs"]) {
    const auto p = a / f.get<std::string>();
    CHECK(fs::exists(p));
    CHECK(fs::file_size(p) > 0);
  }
  CHECK(ra.hessian.has_value());
  CHECK(std::abs(ra.hessian->lambda1) >= std::abs(ra.hessian->lambda2));
  CHECK(ra.accuracy >= 0.0);
  CHECK(read_json(a / "metrics.json")["esd"]["weights"].size() == 100);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("analyze reproduces the pipeline topology files") {
  const auto out = scratch("roundtrip"), again = scratch("roundtrip_analyze");
  run_pipeline(with({{"model.analytic", "gaussian_mixture"}, {"sampling.resolution", "51"}}, out));
  run_analyze(out / "landscape.csv", std::nullopt, again);
  CHECK(io::read_file((out / "merge_tree.json").string()) == io::read_file((again / "merge_tree.json").string()));
  CHECK(io::read_file((out / "diagram.csv").string()) == io::read_file((again / "diagram.csv").string()));
  CHECK(io::read_file((out / "merge_tree.dot").string()) == io::read_file((again / "merge_tree.dot").string()));
  fs::remove_all(out);
  fs::remove_all(again);
}

TEST_CASE("knn representation round trips too") {
  const auto out = scratch("knn"), again = scratch("knn_analyze");
  run_pipeline(with({{"representation.kind", "knn"}, {"sampling.resolution", "25"}}, out));
  run_analyze(out / "landscape.csv", std::nullopt, again);
  CHECK(io::read_file((out / "diagram.csv").string()) == io::read_file((again / "diagram.csv").string()));
  fs::remove_all(out);
  fs::remove_all(again);
}

TEST_CASE("saved parameters can be reloaded") {
  const auto out = scratch("train"), reuse = scratch("load");
  const KeyValues kv{{"model.kind", "mlp"}, {"model.mlp_widths", "2,4,1"}, {"model.mlp_points", "60"},
                     {"theta.steps", "100"}, {"sampling.resolution", "9"}, {"metrics.trace_probes", "5"}};
  run_pipeline(with(kv, out));
  auto load = kv;
  load["theta.source"] = "load";
  load["theta.path"] = (out / "theta.params").string();
  run_pipeline(with(load, reuse));
  CHECK(io::read_file((out / "landscape.csv").string()) == io::read_file((reuse / "landscape.csv").string()));
  fs::remove_all(out);
  fs::remove_all(reuse);
}

TEST_CASE("a failing stage is recorded in the manifest") {
  const auto out = scratch("fail");
  const auto cfg = with({{"model.kind", "mlp"}, {"theta.source", "load"}, {"theta.path", "/nonexistent/theta.params"}}, out);
  CHECK_THROWS_AS(run_pipeline(cfg), IoError);
  const auto manifest = read_json(out / "manifest.json");
  CHECK(manifest["failed_stage"] == "model");
  CHECK_FALSE(manifest["error"].get<std::string>().empty());
  fs::remove_all(out);
}

TEST_CASE("small pinn pipeline") {
  const auto out = scratch("pinn");
  const auto r = run_pipeline(with({{"model.kind", "pinn"}, {"model.pinn_beta", "3"}, {"model.pinn_widths", "2,8,1"},
                                    {"model.pinn_n_f", "100"}, {"theta.steps", "100"}, {"sampling.resolution", "9"},
                                    {"metrics.trace_probes", "5"}},
                                   out));
  CHECK(std::isfinite(r.abs_error));
  CHECK(std::isfinite(r.final_loss));
  CHECK(r.topo.n_minima >= 1);
  fs::remove_all(out);
}

TEST_CASE("beta sweep and mlp demo bookkeeping") {
  const auto out = scratch("sweep");
  auto base = with({{"model.kind", "pinn"}, {"model.pinn_widths", "2,6,1"}, {"model.pinn_n_f", "60"},
                    {"theta.steps", "50"}, {"sampling.resolution", "7"}, {"metrics.trace_probes", "3"}},
                   out);
  const std::vector<double> betas{1.0, 4.0};
  const auto rows = run_beta_sweep(base, betas);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].beta == 4.0);
  for (const auto& r : rows) CHECK(r.status == "ok");
  const auto csv = io::read_file((out / "sweep.csv").string());
  CHECK(csv.rfind("beta,n_saddles,n_minima,avg_persistence,lambda1,trace,final_loss,abs_error", 0) == 0);
  CHECK(fs::exists(out / "beta_4" / "metrics.json"));

  const auto demo_out = scratch("demo");
  auto demo = with({{"model.kind", "mlp"}, {"model.mlp_points", "40"}, {"theta.steps", "50"},
                    {"sampling.resolution", "7"}, {"metrics.trace_probes", "3"}},
                   demo_out);
  const std::vector<std::uint64_t> seeds{0, 123};
  const auto demo_rows = run_mlp_demo(demo, {{4}, {4, 4}}, seeds);
  CHECK(demo_rows.size() == 4);
  for (const auto& r : demo_rows) {
    CAPTURE(r.status);
    CHECK(r.status == "ok");
    CHECK(r.n_minima >= 1);
    CHECK(std::isfinite(r.avg_persistence));
    CHECK(std::isfinite(r.trace));
  }
  CHECK(run_mlp_demo(demo, {{4}, {4, 4}}, seeds)[3].avg_persistence == demo_rows[3].avg_persistence);
  CHECK(fs::exists(demo_out / "mlp_demo.csv"));
  fs::remove_all(out);
  fs::remove_all(demo_out);
}

TEST_CASE("spearman") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  CHECK(spearman(x, std::vector<double>{2, 4, 6, 8, 10}) == doctest::Approx(1.0));
  CHECK(spearman(x, std::vector<double>{5, 4, 3, 2, 1}) == doctest::Approx(-1.0));
  // Ties take average ranks: ranks of y are 1.5,1.5,3,4,5.
  // Pearson on ranks: 9.5 / sqrt(10 * 9.5).
  CHECK(spearman(x, std::vector<double>{1, 1, 2, 3, 4}) == doctest::Approx(std::sqrt(0.95)).epsilon(1e-12));
  CHECK_THROWS_AS(spearman(x, std::vector<double>{1, 2}), ConfigError);
}
