#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "losstopo/error.hpp"
#include "losstopo/models.hpp"

namespace losstopo {

struct DirectionPair {
  enum class Source { random, hessian };

  std::vector<double> delta1;
  std::vector<double> delta2;
  Source source = Source::random;
  std::uint64_t seed = 0;
  // Hessian provenance; unused for random pairs.
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::size_t iterations1 = 0;
  std::size_t iterations2 = 0;
  double residual1 = 0.0;
  double residual2 = 0.0;
  bool converged = true;
  bool filter_normalized = false;

  std::size_t dim() const noexcept { return delta1.size(); }
};

std::string provenance_json(const DirectionPair& dirs);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

// Standard-normal draws followed by explicit Gram-Schmidt.
DirectionPair random_pair(std::size_t dim, std::uint64_t seed);

// Raw standard-normal pair before orthonormalization.
std::pair<std::vector<double>, std::vector<double>> raw_gaussian_pair(std::size_t dim,
                                                                     std::uint64_t seed);

inline constexpr double kDefaultHvpStep = 1e-4;

// Central difference of the gradient along v/|v| with eps = step*(1+|theta|),
// scaled back by |v|.
std::vector<double> hvp(const Objective& objective, std::span<const double> theta,
                        std::span<const double> v, double step = kDefaultHvpStep);

struct PowerOptions {
  double tol = 1e-6;  // relative change of successive Rayleigh quotients
  std::size_t max_iter = 1000;
  std::uint64_t seed = 0;
  double fd_step = kDefaultHvpStep;
};

// Raised when power iteration exhausts max_iter; carries the best iterate.
class NoConvergence : public NumericError {
 public:
  NoConvergence(const std::string& what, DirectionPair best)
      : NumericError(what), best_(std::move(best)) {}
  const DirectionPair& best() const noexcept { return best_; }

 private:
  DirectionPair best_;
};

struct PowerTrace {
  std::vector<double> rayleigh1;
  std::vector<double> rayleigh2;
};

// Largest-magnitude Hessian eigenpair, then the next one by power iteration
// deflated against delta1 at every step. |lambda1| >= |lambda2|.
DirectionPair top2_eigenvectors(const Objective& objective, std::span<const double> theta,
                                const PowerOptions& opts, PowerTrace* trace = nullptr);

// Rescales each segment of d to the norm of the matching segment of theta,
// then renormalizes and re-orthogonalizes the pair.
void filter_normalize(DirectionPair& dirs, std::span<const double> theta,
                      std::span<const Segment> layout);

void save_directions(const std::string& path, const DirectionPair& dirs);
DirectionPair load_directions(const std::string& path);

}  // namespace losstopo
