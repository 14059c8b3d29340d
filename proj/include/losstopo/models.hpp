#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "losstopo/field.hpp"

namespace losstopo {

struct Segment {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const noexcept { return rows * cols; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

struct ParameterVector {
  std::vector<double> theta;
  std::vector<Segment> layout;

  std::size_t size() const noexcept { return theta.size(); }
};

std::size_t layout_size(std::span<const Segment> layout);

// Differentiable scalar objective over a flat parameter vector. value_and_grad
// writes the gradient into its second argument and returns the loss.
struct Objective {
  std::size_t dim = 0;
  std::function<double(std::span<const double>)> loss;
  std::function<double(std::span<const double>, std::span<double>)> value_and_grad;

  std::vector<double> grad(std::span<const double> theta) const;
};

// Fully connected tanh network with a linear output layer. Parameters are
// laid out per layer as W (out x in, row-major) then b (out).
class TanhNetwork {
 public:
  explicit TanhNetwork(std::vector<std::size_t> widths);

  const std::vector<std::size_t>& widths() const noexcept { return widths_; }
  std::size_t parameter_count() const noexcept { return count_; }
  std::vector<Segment> layout() const;

  // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
  ParameterVector init(std::uint64_t seed) const;

  void check(std::span<const double> theta) const;

 private:
  std::vector<std::size_t> widths_;
  std::size_t count_ = 0;
};

// ---------------------------------------------------------------------------
// MLP classifier on two Gaussian blobs.

enum class MlpLossKind { mse, cross_entropy };

struct Dataset {
  std::size_t input_dim = 2;
  std::vector<double> inputs;   // n x input_dim, row-major
  std::vector<double> targets;  // +-1

  std::size_t size() const noexcept { return targets.size(); }
};

// Half the points at (+1,+1), half at (-1,-1), isotropic sigma 0.7.
Dataset make_blobs(std::size_t n, std::uint64_t seed);

struct MlpSpec {
  std::vector<std::size_t> layer_widths{2, 16, 1};
  MlpLossKind loss = MlpLossKind::mse;
  std::size_t n_points = 200;
  std::uint64_t data_seed = 0;
};

class Mlp {
 public:
  explicit Mlp(const MlpSpec& spec);
  Mlp(std::vector<std::size_t> widths, MlpLossKind loss, Dataset data);

  const TanhNetwork& network() const noexcept { return net_; }
  const Dataset& data() const noexcept { return data_; }

  double loss(std::span<const double> theta) const;
  double value_and_grad(std::span<const double> theta, std::span<double> grad) const;
  double accuracy(std::span<const double> theta) const;
  std::vector<double> outputs(std::span<const double> theta) const;

  Objective objective() const;

 private:
  TanhNetwork net_;
  MlpLossKind kind_;
  Dataset data_;
};

double mlp_loss(const MlpSpec& spec, std::span<const double> theta);
std::vector<double> mlp_grad(const MlpSpec& spec, std::span<const double> theta);

// ---------------------------------------------------------------------------
// Physics-informed network for u_t + beta u_x = 0 on [0, 2pi] x [0, T],
// u(x, 0) = sin(x), periodic boundary.

struct ConvectionPinnSpec {
  double beta = 1.0;
  std::vector<std::size_t> net_widths{2, 16, 16, 1};
  std::size_t n_u = 50;
  std::size_t n_f = 400;
  std::size_t n_b = 50;
  double x_min = 0.0;
  double x_max = 2.0 * std::numbers::pi;
  double t_max = 1.0;
  std::vector<double> residual_weights;  // empty: all ones
  std::uint64_t point_seed = 0;
};

void validate(const ConvectionPinnSpec& spec);

// u and its exact input derivatives at one point.
struct Jet {
  double u = 0.0;
  double u_x = 0.0;
  double u_t = 0.0;
};

struct PinnPoints {
  std::vector<double> ic_x;                // t = 0
  std::vector<double> colloc_x, colloc_t;  // residual points
  std::vector<double> boundary_t;          // paired x_min / x_max
};

// Initial points on the periodic grid x_i = x_min + (x_max - x_min) i / n_u;
// collocation points uniform under point_seed; boundary times at cell midpoints.
PinnPoints make_pinn_points(const ConvectionPinnSpec& spec);

struct PinnTerms {
  double initial = 0.0;
  double residual = 0.0;
  double boundary = 0.0;

  double total() const noexcept { return initial + residual + boundary; }
};

using FieldEvaluator = std::function<Jet(double x, double t)>;

// Assembles the three loss terms from an arbitrary differentiable field.
PinnTerms pinn_loss_terms(const ConvectionPinnSpec& spec, const FieldEvaluator& field);

class ConvectionPinn {
 public:
  explicit ConvectionPinn(ConvectionPinnSpec spec);

  const ConvectionPinnSpec& spec() const noexcept { return spec_; }
  const TanhNetwork& network() const noexcept { return net_; }
  const PinnPoints& points() const noexcept { return points_; }

  PinnTerms terms(std::span<const double> theta) const;
  double loss(std::span<const double> theta) const { return terms(theta).total(); }
  // Exact parameter gradient: reverse pass through the forward-mode jets.
  double value_and_grad(std::span<const double> theta, std::span<double> grad) const;
  // Central differences with step 1e-4 * (1 + |theta_i|) (or the given step).
  std::vector<double> grad_fd(std::span<const double> theta, double rel_step = 1e-4) const;

  Jet evaluate(std::span<const double> theta, double x, double t) const;

  // Mean |u - sin(x - beta t)| over an n x n grid covering the domain.
  double abs_error(std::span<const double> theta, std::size_t n = 64) const;

  Objective objective() const;

 private:
  ConvectionPinnSpec spec_;
  TanhNetwork net_;
  PinnPoints points_;
  std::vector<double> weights_;
};

double pinn_loss(const ConvectionPinnSpec& spec, std::span<const double> theta);
std::vector<double> pinn_grad(const ConvectionPinnSpec& spec, std::span<const double> theta);
std::vector<double> pinn_grad_fd(const ConvectionPinnSpec& spec, std::span<const double> theta,
                                 double rel_step = 1e-4);

// ---------------------------------------------------------------------------
// Adam.

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t steps = 1000;
};

struct TrainResult {
  std::vector<double> theta;
  std::vector<double> loss_trace;  // loss before each update
  double final_loss = 0.0;         // loss at the returned theta
};

// Full-batch, so the run is a pure function of (objective, init, options).
// Throws TrainingDiverged carrying the last finite iterate.
TrainResult train(const Objective& objective, std::vector<double> init, const AdamOptions& opts);

// ---------------------------------------------------------------------------
// Closed-form 2D test surfaces.

struct AnalyticSpec {
  enum class Kind { himmelblau, gaussian_mixture, constant };
  Kind kind = Kind::himmelblau;
  std::size_t components = 5;  // gaussian_mixture
  std::uint64_t seed = 1;      // gaussian_mixture
  double constant = 0.0;
};

AnalyticSpec parse_analytic(const std::string& name);

struct AnalyticSurface {
  AnalyticSpec spec;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> cx, cy, sigma, amplitude;

  double operator()(double x, double y) const;
};

AnalyticSurface make_surface(const AnalyticSpec& spec, double lo, double hi);

// Grid-aligned axis: ((n-1-i) * lo + i * hi) / (n-1). Mirror-symmetric for
// lo = -hi, and exact zero at the centre of odd resolutions.
std::vector<double> linspace(double lo, double hi, std::size_t n);

GridValues analytic_grid(const AnalyticSpec& spec, std::size_t rows, std::size_t cols, double lo,
                         double hi);
ScalarField analytic_field(const AnalyticSpec& spec, std::size_t rows, std::size_t cols, double lo,
                           double hi);

}  // namespace losstopo
