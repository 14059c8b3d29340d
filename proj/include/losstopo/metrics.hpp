#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "losstopo/directions.hpp"
#include "losstopo/topology.hpp"

namespace losstopo {

struct TopoMetrics {
  std::size_t n_saddles = 0;
  std::size_t n_minima = 0;
  std::size_t n_components = 0;
  double avg_persistence = 0.0;              // per include_essential
  double avg_persistence_finite_only = 0.0;  // 0 when there are no finite pairs
  double avg_persistence_with_essential = 0.0;
  bool include_essential = true;
};

// Persistence is death - birth; essential pairs use their recorded finite
// death (the component maximum).
TopoMetrics topo_metrics(const MergeTree& tree, const PersistenceDiagram& diagram,
                         bool include_essential = true);

struct EigenPair2 {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

EigenPair2 top_eigenvalues(const Objective& objective, std::span<const double> theta,
                           const PowerOptions& opts);

// Hutchinson estimator with Rademacher probes. Probe i draws from a generator
// seeded by (seed, i), so the estimate does not depend on scheduling.
double hessian_trace(const Objective& objective, std::span<const double> theta,
                     std::size_t n_probes, std::uint64_t seed, double fd_step = kDefaultHvpStep);

std::vector<double> rademacher(std::size_t dim, std::uint64_t seed, std::size_t stream);

struct SpectralDensity {
  std::vector<double> nodes;    // Ritz values from every probe
  std::vector<double> weights;  // quadrature weights / n_probes; sums to 1
  std::vector<std::size_t> probe_steps;  // Lanczos steps kept per probe
  std::vector<double> edges;    // bins + 1
  std::vector<double> histogram;  // bins, sums to 1

  double first_moment() const;
};

struct EsdOptions {
  std::size_t lanczos_order = 30;
  std::size_t n_probes = 10;
  std::size_t bins = 100;
  std::uint64_t seed = 0;
  double fd_step = kDefaultHvpStep;
};

// Stochastic Lanczos quadrature with full reorthogonalization. A probe whose
// Krylov space closes (beta_j below 1e-12 relative to the spectrum scale) is
// truncated at j steps.
SpectralDensity hessian_esd(const Objective& objective, std::span<const double> theta,
                            const EsdOptions& opts);

struct HessianSummary {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double trace_estimate = 0.0;
  std::size_t trace_probes = 0;
  std::optional<SpectralDensity> esd;
};

// Metrics JSON. Hessian fields are null when absent.
std::string metrics_json(const TopoMetrics& topo, const std::optional<HessianSummary>& hessian);

}  // namespace losstopo
