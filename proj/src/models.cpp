#include "losstopo/models.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "losstopo/error.hpp"

namespace losstopo {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMatrix>;
using Weights = Eigen::Map<RowMatrix>;
using ConstBias = Eigen::Map<const Eigen::VectorXd>;
using Bias = Eigen::Map<Eigen::VectorXd>;

std::size_t layout_size(std::span<const Segment> layout) {
  std::size_t n = 0;
  for (const auto& s : layout) n += s.size();
  return n;
}

std::vector<double> Objective::grad(std::span<const double> theta) const {
  std::vector<double> g(theta.size());
  value_and_grad(theta, g);
  return g;
}

// ---------------------------------------------------------------------------

TanhNetwork::TanhNetwork(std::vector<std::size_t> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw ConfigError("network needs input and output widths");
  for (auto w : widths_)
    if (w == 0) throw ConfigError("layer widths must be positive");
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) count_ += widths_[l + 1] * (widths_[l] + 1);
}

std::vector<Segment> TanhNetwork::layout() const {
  std::vector<Segment> out;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    out.push_back({"W" + std::to_string(l), widths_[l + 1], widths_[l]});
    out.push_back({"b" + std::to_string(l), widths_[l + 1], 1});
  }
  return out;
}

ParameterVector TanhNetwork::init(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  ParameterVector p{{}, layout()};
  p.theta.reserve(count_);
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths_[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = 0; i < widths_[l + 1] * (widths_[l] + 1); ++i) p.theta.push_back(dist(rng));
  }
  return p;
}

void TanhNetwork::check(std::span<const double> theta) const {
  if (theta.size() != count_)
    throw ConfigError("parameter vector has length " + std::to_string(theta.size()) +
                      ", network expects " + std::to_string(count_));
}

namespace {

struct LayerView {
  ConstWeights w;
  ConstBias b;
};

std::vector<LayerView> layer_views(const TanhNetwork& net, std::span<const double> theta) {
  std::vector<LayerView> out;
  const auto& widths = net.widths();
  const double* p = theta.data();
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const auto rows = static_cast<Eigen::Index>(widths[l + 1]);
    const auto cols = static_cast<Eigen::Index>(widths[l]);
    ConstWeights w(p, rows, cols);
    p += rows * cols;
    ConstBias b(p, rows);
    p += rows;
    out.push_back({w, b});
  }
  return out;
}

struct GradView {
  Weights w;
  Bias b;
};

std::vector<GradView> grad_views(const TanhNetwork& net, std::span<double> grad) {
  std::vector<GradView> out;
  const auto& widths = net.widths();
  double* p = grad.data();
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const auto rows = static_cast<Eigen::Index>(widths[l + 1]);
    const auto cols = static_cast<Eigen::Index>(widths[l]);
    Weights w(p, rows, cols);
    p += rows * cols;
    Bias b(p, rows);
    p += rows;
    out.push_back({w, b});
  }
  return out;
}

double softplus(double a) { return std::max(a, 0.0) + std::log1p(std::exp(-std::abs(a))); }

}  // namespace

// ---------------------------------------------------------------------------

Dataset make_blobs(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw ConfigError("blob dataset needs at least 2 points");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.7);
  Dataset d;
  d.input_dim = 2;
  d.inputs.reserve(2 * n);
  d.targets.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double label = i < n / 2 ? 1.0 : -1.0;
    d.inputs.push_back(label + noise(rng));
    d.inputs.push_back(label + noise(rng));
    d.targets.push_back(label);
  }
  return d;
}

Mlp::Mlp(const MlpSpec& spec)
    : Mlp(spec.layer_widths, spec.loss, make_blobs(spec.n_points, spec.data_seed)) {}

Mlp::Mlp(std::vector<std::size_t> widths, MlpLossKind loss, Dataset data)
    : net_(std::move(widths)), kind_(loss), data_(std::move(data)) {
  if (net_.widths().back() != 1) throw ConfigError("classifier output width must be 1");
  if (net_.widths().front() != data_.input_dim)
    throw ConfigError("input width does not match dataset dimension");
  if (data_.size() == 0 || data_.inputs.size() != data_.size() * data_.input_dim)
    throw ConfigError("malformed dataset");
}

std::vector<double> Mlp::outputs(std::span<const double> theta) const {
  net_.check(theta);
  const auto layers = layer_views(net_, theta);
  const auto n = static_cast<Eigen::Index>(data_.size());
  Eigen::MatrixXd a =
      ConstWeights(data_.inputs.data(), n, static_cast<Eigen::Index>(data_.input_dim)).transpose();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::MatrixXd z = layers[l].w * a;
    z.colwise() += layers[l].b;
    a = l + 1 < layers.size() ? Eigen::MatrixXd(z.array().tanh()) : z;
  }
  return {a.data(), a.data() + a.size()};
}

double Mlp::loss(std::span<const double> theta) const {
  const auto z = outputs(theta);
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double y = data_.targets[i];
    total += kind_ == MlpLossKind::mse ? (z[i] - y) * (z[i] - y) : softplus(-y * z[i]);
  }
  return total / static_cast<double>(z.size());
}

double Mlp::value_and_grad(std::span<const double> theta, std::span<double> grad) const {
  net_.check(theta);
  if (grad.size() != theta.size()) throw ConfigError("gradient buffer has wrong length");
  const auto layers = layer_views(net_, theta);
  const auto n = static_cast<Eigen::Index>(data_.size());

  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(layers.size() + 1);
  acts.emplace_back(
      ConstWeights(data_.inputs.data(), n, static_cast<Eigen::Index>(data_.input_dim)).transpose());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::MatrixXd z = layers[l].w * acts.back();
    z.colwise() += layers[l].b;
    acts.emplace_back(l + 1 < layers.size() ? Eigen::MatrixXd(z.array().tanh()) : z);
  }

  const Eigen::MatrixXd& out = acts.back();
  Eigen::MatrixXd delta(1, n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = data_.targets[static_cast<std::size_t>(i)];
    const double z = out(0, i);
    if (kind_ == MlpLossKind::mse) {
      total += (z - y) * (z - y);
      delta(0, i) = 2.0 * (z - y) / static_cast<double>(n);
    } else {
      total += softplus(-y * z);
      const double s = 1.0 / (1.0 + std::exp(y * z));
      delta(0, i) = -y * s / static_cast<double>(n);
    }
  }

  auto grads = grad_views(net_, grad);
  for (std::size_t l = layers.size(); l-- > 0;) {
    grads[l].w.noalias() = delta * acts[l].transpose();
    grads[l].b = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd back = layers[l].w.transpose() * delta;
    delta = back.array() * (1.0 - acts[l].array().square());
  }
  return total / static_cast<double>(n);
}

double Mlp::accuracy(std::span<const double> theta) const {
  const auto z = outputs(theta);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < z.size(); ++i)
    if ((z[i] >= 0.0) == (data_.targets[i] > 0.0)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(z.size());
}

Objective Mlp::objective() const {
  return {net_.parameter_count(), [this](std::span<const double> t) { return loss(t); },
          [this](std::span<const double> t, std::span<double> g) { return value_and_grad(t, g); }};
}

double mlp_loss(const MlpSpec& spec, std::span<const double> theta) {
  return Mlp(spec).loss(theta);
}

std::vector<double> mlp_grad(const MlpSpec& spec, std::span<const double> theta) {
  return Mlp(spec).objective().grad(theta);
}

// ---------------------------------------------------------------------------

void validate(const ConvectionPinnSpec& spec) {
  if (!(spec.beta > 0.0) || !std::isfinite(spec.beta)) throw ConfigError("beta must be positive");
  if (spec.n_u == 0 || spec.n_f == 0 || spec.n_b == 0)
    throw ConfigError("n_u, n_f and n_b must be at least 1");
  if (!(spec.x_max > spec.x_min) || !(spec.t_max > 0.0)) throw ConfigError("empty PINN domain");
  if (spec.net_widths.size() < 2 || spec.net_widths.front() != 2 || spec.net_widths.back() != 1)
    throw ConfigError("PINN network must map (x, t) to a scalar");
  if (!spec.residual_weights.empty()) {
    if (spec.residual_weights.size() != spec.n_f)
      throw ConfigError("residual_weights must have n_f entries");
    for (double w : spec.residual_weights)
      if (!(w > 0.0)) throw ConfigError("residual weights must be positive");
  }
}

PinnPoints make_pinn_points(const ConvectionPinnSpec& spec) {
  validate(spec);
  PinnPoints p;
  const double width = spec.x_max - spec.x_min;
  for (std::size_t i = 0; i < spec.n_u; ++i)
    p.ic_x.push_back(spec.x_min + width * static_cast<double>(i) / static_cast<double>(spec.n_u));
  std::mt19937_64 rng(spec.point_seed);
  std::uniform_real_distribution<double> ux(spec.x_min, spec.x_max);
  std::uniform_real_distribution<double> ut(0.0, spec.t_max);
  for (std::size_t i = 0; i < spec.n_f; ++i) {
    p.colloc_x.push_back(ux(rng));
    p.colloc_t.push_back(ut(rng));
  }
  for (std::size_t i = 0; i < spec.n_b; ++i)
    p.boundary_t.push_back(spec.t_max * (static_cast<double>(i) + 0.5) /
                           static_cast<double>(spec.n_b));
  return p;
}

namespace {

double initial_condition(double x) { return std::sin(x); }

void require_finite(double v, const char* term) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + term + " term");
}

PinnTerms assemble(const ConvectionPinnSpec& spec, const PinnPoints& pts,
                   std::span<const double> weights, std::span<const double> ic_u,
                   std::span<const double> f_ux, std::span<const double> f_ut,
                   std::span<const double> b_lo, std::span<const double> b_hi) {
  PinnTerms t;
  for (std::size_t i = 0; i < ic_u.size(); ++i) {
    const double d = ic_u[i] - initial_condition(pts.ic_x[i]);
    t.initial += d * d;
  }
  t.initial /= static_cast<double>(ic_u.size());
  require_finite(t.initial, "initial-condition");

  for (std::size_t i = 0; i < f_ux.size(); ++i) {
    const double r = f_ut[i] + spec.beta * f_ux[i];
    t.residual += weights[i] * r * r;
  }
  t.residual /= static_cast<double>(f_ux.size());
  require_finite(t.residual, "residual");

  for (std::size_t i = 0; i < b_lo.size(); ++i) {
    const double d = b_lo[i] - b_hi[i];
    t.boundary += d * d;
  }
  t.boundary /= static_cast<double>(b_lo.size());
  require_finite(t.boundary, "boundary");
  return t;
}

std::vector<double> residual_weights(const ConvectionPinnSpec& spec) {
  return spec.residual_weights.empty() ? std::vector<double>(spec.n_f, 1.0)
                                       : spec.residual_weights;
}

}  // namespace

PinnTerms pinn_loss_terms(const ConvectionPinnSpec& spec, const FieldEvaluator& field) {
  const auto pts = make_pinn_points(spec);
  const auto w = residual_weights(spec);
  std::vector<double> ic_u, f_ux, f_ut, b_lo, b_hi;
  for (double x : pts.ic_x) ic_u.push_back(field(x, 0.0).u);
  for (std::size_t i = 0; i < spec.n_f; ++i) {
    const Jet j = field(pts.colloc_x[i], pts.colloc_t[i]);
    f_ux.push_back(j.u_x);
    f_ut.push_back(j.u_t);
  }
  for (double t : pts.boundary_t) {
    b_lo.push_back(field(spec.x_min, t).u);
    b_hi.push_back(field(spec.x_max, t).u);
  }
  return assemble(spec, pts, w, ic_u, f_ux, f_ut, b_lo, b_hi);
}

namespace {

// Forward pass carrying d/dx and d/dt of every activation. The cache keeps
// what the reverse pass needs.
struct JetPass {
  std::vector<Eigen::MatrixXd> a, ax, at;  // per layer input, index 0 = network input
  std::vector<Eigen::MatrixXd> zx, zt;     // hidden pre-activation tangents
  Eigen::RowVectorXd u, ux, ut;
};

JetPass forward_jets(const std::vector<LayerView>& layers, std::span<const double> xs,
                     std::span<const double> ts) {
  const auto n = static_cast<Eigen::Index>(xs.size());
  JetPass pass;
  Eigen::MatrixXd a(2, n), ax = Eigen::MatrixXd::Zero(2, n), at = Eigen::MatrixXd::Zero(2, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(0, i) = xs[static_cast<std::size_t>(i)];
    a(1, i) = ts[static_cast<std::size_t>(i)];
  }
  ax.row(0).setOnes();
  at.row(1).setOnes();
  pass.a.push_back(std::move(a));
  pass.ax.push_back(std::move(ax));
  pass.at.push_back(std::move(at));

  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::MatrixXd z = layers[l].w * pass.a.back();
    z.colwise() += layers[l].b;
    Eigen::MatrixXd zx = layers[l].w * pass.ax.back();
    Eigen::MatrixXd zt = layers[l].w * pass.at.back();
    if (l + 1 == layers.size()) {
      pass.u = z.row(0);
      pass.ux = zx.row(0);
      pass.ut = zt.row(0);
      break;
    }
    Eigen::MatrixXd h = z.array().tanh();
    Eigen::ArrayXXd s = 1.0 - h.array().square();
    pass.ax.emplace_back(s * zx.array());
    pass.at.emplace_back(s * zt.array());
    pass.a.push_back(std::move(h));
    pass.zx.push_back(std::move(zx));
    pass.zt.push_back(std::move(zt));
  }
  return pass;
}

}  // namespace

ConvectionPinn::ConvectionPinn(ConvectionPinnSpec spec)
    : spec_(std::move(spec)),
      net_(spec_.net_widths),
      points_(make_pinn_points(spec_)),
      weights_(residual_weights(spec_)) {}

namespace {

void batch_inputs(const ConvectionPinnSpec& spec, const PinnPoints& p, std::vector<double>& xs,
                  std::vector<double>& ts) {
  xs = p.ic_x;
  ts.assign(p.ic_x.size(), 0.0);
  xs.insert(xs.end(), p.colloc_x.begin(), p.colloc_x.end());
  ts.insert(ts.end(), p.colloc_t.begin(), p.colloc_t.end());
  for (double t : p.boundary_t) {
    xs.push_back(spec.x_min);
    ts.push_back(t);
  }
  for (double t : p.boundary_t) {
    xs.push_back(spec.x_max);
    ts.push_back(t);
  }
}

}  // namespace

PinnTerms ConvectionPinn::terms(std::span<const double> theta) const {
  net_.check(theta);
  std::vector<double> xs, ts;
  batch_inputs(spec_, points_, xs, ts);
  const auto pass = forward_jets(layer_views(net_, theta), xs, ts);
  const std::size_t nu = spec_.n_u, nf = spec_.n_f, nb = spec_.n_b;
  auto row = [](const Eigen::RowVectorXd& r, std::size_t off, std::size_t len) {
    return std::span<const double>(r.data() + off, len);
  };
  return assemble(spec_, points_, weights_, row(pass.u, 0, nu), row(pass.ux, nu, nf),
                  row(pass.ut, nu, nf), row(pass.u, nu + nf, nb), row(pass.u, nu + nf + nb, nb));
}

double ConvectionPinn::value_and_grad(std::span<const double> theta, std::span<double> grad) const {
  net_.check(theta);
  if (grad.size() != theta.size()) throw ConfigError("gradient buffer has wrong length");
  std::vector<double> xs, ts;
  batch_inputs(spec_, points_, xs, ts);
  const auto layers = layer_views(net_, theta);
  const auto pass = forward_jets(layers, xs, ts);
  const std::size_t nu = spec_.n_u, nf = spec_.n_f, nb = spec_.n_b;
  const auto n = static_cast<Eigen::Index>(xs.size());

  auto row = [](const Eigen::RowVectorXd& r, std::size_t off, std::size_t len) {
    return std::span<const double>(r.data() + off, len);
  };
  const PinnTerms t =
      assemble(spec_, points_, weights_, row(pass.u, 0, nu), row(pass.ux, nu, nf),
               row(pass.ut, nu, nf), row(pass.u, nu + nf, nb), row(pass.u, nu + nf + nb, nb));

  // Seeds for the output value and its two input derivatives.
  Eigen::MatrixXd gu = Eigen::MatrixXd::Zero(1, n);
  Eigen::MatrixXd gux = Eigen::MatrixXd::Zero(1, n);
  Eigen::MatrixXd gut = Eigen::MatrixXd::Zero(1, n);
  for (std::size_t i = 0; i < nu; ++i)
    gu(0, static_cast<Eigen::Index>(i)) =
        2.0 * (pass.u(static_cast<Eigen::Index>(i)) - initial_condition(points_.ic_x[i])) /
        static_cast<double>(nu);
  for (std::size_t i = 0; i < nf; ++i) {
    const auto c = static_cast<Eigen::Index>(nu + i);
    const double r = pass.ut(c) + spec_.beta * pass.ux(c);
    gut(0, c) = 2.0 * weights_[i] * r / static_cast<double>(nf);
    gux(0, c) = spec_.beta * gut(0, c);
  }
  for (std::size_t i = 0; i < nb; ++i) {
    const auto lo = static_cast<Eigen::Index>(nu + nf + i);
    const auto hi = static_cast<Eigen::Index>(nu + nf + nb + i);
    const double d = 2.0 * (pass.u(lo) - pass.u(hi)) / static_cast<double>(nb);
    gu(0, lo) = d;
    gu(0, hi) = -d;
  }

  auto grads = grad_views(net_, grad);
  Eigen::MatrixXd ga = gu, gax = gux, gat = gut;  // w.r.t. current layer output
  for (std::size_t l = layers.size(); l-- > 0;) {
    Eigen::MatrixXd gz, gzx, gzt;
    if (l + 1 == layers.size()) {
      gz = ga;
      gzx = gax;
      gzt = gat;
    } else {
      const Eigen::ArrayXXd h = pass.a[l + 1].array();
      const Eigen::ArrayXXd s = 1.0 - h.square();
      const Eigen::ArrayXXd ds = -2.0 * h * s;  // d(1 - tanh^2)/dz
      gz = ga.array() * s + (gax.array() * pass.zx[l].array() + gat.array() * pass.zt[l].array()) * ds;
      gzx = gax.array() * s;
      gzt = gat.array() * s;
    }
    grads[l].w.noalias() = gz * pass.a[l].transpose();
    grads[l].w.noalias() += gzx * pass.ax[l].transpose();
    grads[l].w.noalias() += gzt * pass.at[l].transpose();
    grads[l].b = gz.rowwise().sum();
    if (l == 0) break;
    ga.noalias() = layers[l].w.transpose() * gz;
    gax.noalias() = layers[l].w.transpose() * gzx;
    gat.noalias() = layers[l].w.transpose() * gzt;
  }
  return t.total();
}

std::vector<double> ConvectionPinn::grad_fd(std::span<const double> theta, double rel_step) const {
  std::vector<double> probe(theta.begin(), theta.end());
  std::vector<double> g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double h = rel_step * (1.0 + std::abs(theta[i]));
    probe[i] = theta[i] + h;
    const double up = loss(probe);
    const double hi = probe[i];
    probe[i] = theta[i] - h;
    const double down = loss(probe);
    const double lo = probe[i];
    probe[i] = theta[i];
    g[i] = (up - down) / (hi - lo);
  }
  return g;
}

Jet ConvectionPinn::evaluate(std::span<const double> theta, double x, double t) const {
  net_.check(theta);
  const double xs[1] = {x};
  const double ts[1] = {t};
  const auto pass = forward_jets(layer_views(net_, theta), xs, ts);
  return {pass.u(0), pass.ux(0), pass.ut(0)};
}

double ConvectionPinn::abs_error(std::span<const double> theta, std::size_t n) const {
  net_.check(theta);
  const auto gx = linspace(spec_.x_min, spec_.x_max, n);
  const auto gt = linspace(0.0, spec_.t_max, n);
  std::vector<double> xs, ts;
  for (double t : gt)
    for (double x : gx) {
      xs.push_back(x);
      ts.push_back(t);
    }
  const auto pass = forward_jets(layer_views(net_, theta), xs, ts);
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    total += std::abs(pass.u(static_cast<Eigen::Index>(i)) - std::sin(xs[i] - spec_.beta * ts[i]));
  return total / static_cast<double>(xs.size());
}

Objective ConvectionPinn::objective() const {
  return {net_.parameter_count(), [this](std::span<const double> t) { return loss(t); },
          [this](std::span<const double> t, std::span<double> g) { return value_and_grad(t, g); }};
}

double pinn_loss(const ConvectionPinnSpec& spec, std::span<const double> theta) {
  return ConvectionPinn(spec).loss(theta);
}

std::vector<double> pinn_grad(const ConvectionPinnSpec& spec, std::span<const double> theta) {
  return ConvectionPinn(spec).objective().grad(theta);
}

std::vector<double> pinn_grad_fd(const ConvectionPinnSpec& spec, std::span<const double> theta,
                                 double rel_step) {
  return ConvectionPinn(spec).grad_fd(theta, rel_step);
}

// ---------------------------------------------------------------------------

TrainResult train(const Objective& objective, std::vector<double> theta, const AdamOptions& opts) {
  if (opts.steps == 0) throw ConfigError("training needs at least one step");
  if (theta.size() != objective.dim) throw ConfigError("initial theta has wrong length");
  const std::size_t n = theta.size();
  std::vector<double> m(n, 0.0), v(n, 0.0), g(n);
  TrainResult out;
  out.loss_trace.reserve(opts.steps);
  double b1t = 1.0, b2t = 1.0;
  std::vector<double> good = theta;  // last iterate with a finite loss
  for (std::size_t step = 0; step < opts.steps; ++step) {
    const double loss = objective.value_and_grad(theta, g);
    if (!std::isfinite(loss)) throw TrainingDiverged(good, step);
    good = theta;
    if (!std::all_of(g.begin(), g.end(), [](double x) { return std::isfinite(x); }))
      throw TrainingDiverged(good, step);
    out.loss_trace.push_back(loss);
    b1t *= opts.beta1;
    b2t *= opts.beta2;
    std::vector<double> next = theta;
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = opts.beta1 * m[i] + (1.0 - opts.beta1) * g[i];
      v[i] = opts.beta2 * v[i] + (1.0 - opts.beta2) * g[i] * g[i];
      const double mhat = m[i] / (1.0 - b1t);
      const double vhat = v[i] / (1.0 - b2t);
      next[i] -= opts.lr * mhat / (std::sqrt(vhat) + opts.eps);
    }
    if (!std::all_of(next.begin(), next.end(), [](double x) { return std::isfinite(x); }))
      throw TrainingDiverged(theta, step);
    theta = std::move(next);
  }
  out.final_loss = objective.loss(theta);
  if (!std::isfinite(out.final_loss)) throw TrainingDiverged(good, opts.steps);
  out.theta = std::move(theta);
  return out;
}

// ---------------------------------------------------------------------------

AnalyticSpec parse_analytic(const std::string& name) {
  AnalyticSpec s;
  if (name == "himmelblau")
    s.kind = AnalyticSpec::Kind::himmelblau;
  else if (name == "gaussian_mixture")
    s.kind = AnalyticSpec::Kind::gaussian_mixture;
  else if (name == "constant")
    s.kind = AnalyticSpec::Kind::constant;
  else
    throw ConfigError("unknown analytic field '" + name + "'");
  return s;
}

double AnalyticSurface::operator()(double x, double y) const {
  switch (spec.kind) {
    case AnalyticSpec::Kind::himmelblau: {
      const double a = x * x + y - 11.0;
      const double b = x + y * y - 7.0;
      return a * a + b * b;
    }
    case AnalyticSpec::Kind::constant:
      return spec.constant;
    case AnalyticSpec::Kind::gaussian_mixture: {
      const double mid = 0.5 * (lo + hi);
      const double half = 0.5 * (hi - lo);
      const double dx = (x - mid) / half, dy = (y - mid) / half;
      double f = 0.25 * (dx * dx + dy * dy);
      for (std::size_t k = 0; k < cx.size(); ++k) {
        const double ex = x - cx[k], ey = y - cy[k];
        f -= amplitude[k] * std::exp(-(ex * ex + ey * ey) / (2.0 * sigma[k] * sigma[k]));
      }
      return f;
    }
  }
  return 0.0;
}

AnalyticSurface make_surface(const AnalyticSpec& spec, double lo, double hi) {
  if (!(hi > lo)) throw ConfigError("analytic range must satisfy lo < hi");
  AnalyticSurface s{spec, lo, hi, {}, {}, {}, {}};
  if (spec.kind == AnalyticSpec::Kind::gaussian_mixture) {
    if (spec.components == 0) throw ConfigError("gaussian_mixture needs at least one component");
    std::mt19937_64 rng(spec.seed);
    const double width = hi - lo;
    std::uniform_real_distribution<double> pos(lo + 0.1 * width, hi - 0.1 * width);
    std::uniform_real_distribution<double> sig(0.05 * width, 0.12 * width);
    std::uniform_real_distribution<double> amp(0.5, 1.5);
    for (std::size_t k = 0; k < spec.components; ++k) {
      s.cx.push_back(pos(rng));
      s.cy.push_back(pos(rng));
      s.sigma.push_back(sig(rng));
      s.amplitude.push_back(amp(rng));
    }
  }
  return s;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n < 2) throw ConfigError("axis needs at least 2 samples");
  std::vector<double> out(n);
  const double span = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = (static_cast<double>(n - 1 - i) * lo + static_cast<double>(i) * hi) / span;
  return out;
}

GridValues analytic_grid(const AnalyticSpec& spec, std::size_t rows, std::size_t cols, double lo,
                         double hi) {
  const auto surface = make_surface(spec, lo, hi);
  const auto ax = linspace(lo, hi, rows);
  const auto ay = linspace(lo, hi, cols);
  GridValues g{rows, cols, std::vector<double>(rows * cols)};
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) g.data[r * cols + c] = surface(ax[r], ay[c]);
  return g;
}

ScalarField analytic_field(const AnalyticSpec& spec, std::size_t rows, std::size_t cols, double lo,
                           double hi) {
  const auto g = analytic_grid(spec, rows, cols, lo, hi);
  const auto ax = linspace(lo, hi, rows);
  const auto ay = linspace(lo, hi, cols);
  return build_image_grid(g, ax, ay);
}

}  // namespace losstopo
