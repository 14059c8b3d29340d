#include "losstopo/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "losstopo/error.hpp"
#include "losstopo/parallel.hpp"

namespace losstopo {

TopoMetrics topo_metrics(const MergeTree& tree, const PersistenceDiagram& diagram,
                         bool include_essential) {
  if (diagram.pairs.empty()) throw ConfigError("empty persistence diagram");
  TopoMetrics m;
  m.include_essential = include_essential;
  m.n_saddles = tree.saddles();
  m.n_minima = tree.minima();
  m.n_components = tree.components;

  double all = 0.0, finite = 0.0;
  std::size_t n_finite = 0;
  for (const auto& p : diagram.pairs) {
    all += p.persistence();
    if (!p.essential) {
      finite += p.persistence();
      ++n_finite;
    }
  }
  m.avg_persistence_with_essential = all / static_cast<double>(diagram.pairs.size());
  m.avg_persistence_finite_only = n_finite ? finite / static_cast<double>(n_finite) : 0.0;
  m.avg_persistence = include_essential ? m.avg_persistence_with_essential
                                        : m.avg_persistence_finite_only;
  return m;
}

EigenPair2 top_eigenvalues(const Objective& objective, std::span<const double> theta,
                           const PowerOptions& opts) {
  const auto d = top2_eigenvectors(objective, theta, opts);
  return {d.lambda1, d.lambda2};
}

std::vector<double> rademacher(std::size_t dim, std::uint64_t seed, std::size_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::mt19937_64 rng(seq);
  std::vector<double> v(dim);
  for (double& x : v) x = (rng() >> 63) ? 1.0 : -1.0;
  return v;
}

double hessian_trace(const Objective& objective, std::span<const double> theta,
                     std::size_t n_probes, std::uint64_t seed, double fd_step) {
  if (n_probes == 0) throw ConfigError("trace estimate needs at least one probe");
  std::vector<double> contributions(n_probes);
  parallel_for(n_probes, [&](std::size_t i) {
    const auto v = rademacher(theta.size(), seed, i);
    contributions[i] = dot(v, hvp(objective, theta, v, fd_step));
  });
  double sum = 0.0;
  for (double c : contributions) sum += c;
  const double estimate = sum / static_cast<double>(n_probes);
  if (!std::isfinite(estimate)) throw NumericError("non-finite trace estimate");
  return estimate;
}

double SpectralDensity::first_moment() const {
  double m = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) m += nodes[i] * weights[i];
  return m;
}

namespace {

struct ProbeQuadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t steps = 0;
};

ProbeQuadrature lanczos_probe(const Objective& objective, std::span<const double> theta,
                              std::vector<double> v, std::size_t order, double fd_step) {
  const std::size_t dim = v.size();
  const double vn = norm(v);
  for (double& x : v) x /= vn;

  std::vector<std::vector<double>> basis{v};
  std::vector<double> alpha, beta;
  const std::size_t steps_max = std::min(order, dim);
  for (std::size_t j = 0; j < steps_max; ++j) {
    auto w = hvp(objective, theta, basis[j], fd_step);
    const double a = dot(w, basis[j]);
    alpha.push_back(a);
    if (j + 1 == steps_max) break;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis) {
        const double c = dot(w, q);
        for (std::size_t i = 0; i < dim; ++i) w[i] -= c * q[i];
      }
    const double b = norm(w);
    double scale = 1.0;
    for (double x : alpha) scale = std::max(scale, std::abs(x));
    if (b < 1e-12 * scale) break;
    beta.push_back(b);
    for (double& x : w) x /= b;
    basis.push_back(std::move(w));
  }

  const auto m = static_cast<Eigen::Index>(alpha.size());
  Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), m);
  Eigen::VectorXd sub(std::max<Eigen::Index>(m - 1, 0));
  for (Eigen::Index i = 0; i + 1 < m; ++i) sub(i) = beta[static_cast<std::size_t>(i)];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw NumericError("tridiagonal eigensolve failed");

  ProbeQuadrature q;
  q.steps = alpha.size();
  for (Eigen::Index i = 0; i < m; ++i) {
    q.nodes.push_back(solver.eigenvalues()(i));
    const double e = solver.eigenvectors()(0, i);
    q.weights.push_back(e * e);
  }
  return q;
}

}  // namespace

SpectralDensity hessian_esd(const Objective& objective, std::span<const double> theta,
                            const EsdOptions& opts) {
  if (opts.lanczos_order < 2) throw ConfigError("Lanczos order must be at least 2");
  if (opts.n_probes == 0) throw ConfigError("spectral density needs at least one probe");
  if (opts.bins == 0) throw ConfigError("histogram needs at least one bin");

  std::vector<ProbeQuadrature> probes(opts.n_probes);
  parallel_for(opts.n_probes, [&](std::size_t i) {
    probes[i] = lanczos_probe(objective, theta, rademacher(theta.size(), opts.seed, i),
                              opts.lanczos_order, opts.fd_step);
  });

  SpectralDensity esd;
  const double share = 1.0 / static_cast<double>(opts.n_probes);
  for (const auto& p : probes) {
    esd.probe_steps.push_back(p.steps);
    for (std::size_t i = 0; i < p.nodes.size(); ++i) {
      esd.nodes.push_back(p.nodes[i]);
      esd.weights.push_back(p.weights[i] * share);
    }
  }

  const auto [lo_it, hi_it] = std::minmax_element(esd.nodes.begin(), esd.nodes.end());
  const double spread = *hi_it - *lo_it;
  const double margin =
      spread > 0.0 ? 0.01 * spread : 0.01 * std::max(1.0, std::abs(*hi_it));
  const double lo = *lo_it - margin, hi = *hi_it + margin;
  const double width = (hi - lo) / static_cast<double>(opts.bins);
  for (std::size_t b = 0; b <= opts.bins; ++b)
    esd.edges.push_back(b == opts.bins ? hi : lo + width * static_cast<double>(b));
  esd.histogram.assign(opts.bins, 0.0);
  for (std::size_t i = 0; i < esd.nodes.size(); ++i) {
    auto bin = static_cast<std::size_t>((esd.nodes[i] - lo) / width);
    bin = std::min(bin, opts.bins - 1);
    esd.histogram[bin] += esd.weights[i];
  }
  return esd;
}

std::string metrics_json(const TopoMetrics& topo, const std::optional<HessianSummary>& hessian) {
  nlohmann::ordered_json j;
  j["n_saddles"] = topo.n_saddles;
  j["n_minima"] = topo.n_minima;
  j["n_components"] = topo.n_components;
  j["include_essential"] = topo.include_essential;
  j["avg_persistence"] = topo.avg_persistence;
  j["avg_persistence_finite_only"] = topo.avg_persistence_finite_only;
  j["avg_persistence_with_essential"] = topo.avg_persistence_with_essential;
  if (hessian) {
    j["lambda1"] = hessian->lambda1;
    j["lambda2"] = hessian->lambda2;
    j["trace"] = hessian->trace_estimate;
    j["trace_probes"] = hessian->trace_probes;
    if (hessian->esd)
      j["esd"] = {{"edges", hessian->esd->edges}, {"weights", hessian->esd->histogram}};
    else
      j["esd"] = nullptr;
  } else {
    j["lambda1"] = nullptr;
    j["lambda2"] = nullptr;
    j["trace"] = nullptr;
    j["trace_probes"] = nullptr;
    j["esd"] = nullptr;
  }
  return j.dump(2) + "\n";
}

}  // namespace losstopo
