#include "losstopo/directions.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "losstopo/params_io.hpp"

namespace losstopo {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

namespace {

void scale(std::span<double> v, double s) {
  for (double& x : v) x *= s;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

void normalize(std::span<double> v) {
  const double n = norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericError("cannot normalize a zero or non-finite vector");
  scale(v, 1.0 / n);
}

// Orthonormalizes b against unit a; two passes for stability.
void orthonormalize_against(std::span<const double> a, std::span<double> b) {
  for (int pass = 0; pass < 2; ++pass) axpy(-dot(a, b), a, b);
  normalize(b);
}

std::vector<double> gaussian(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(dim);
  for (double& x : v) x = dist(rng);
  return v;
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> raw_gaussian_pair(std::size_t dim,
                                                                     std::uint64_t seed) {
  if (dim < 2) throw ConfigError("directions need dim >= 2");
  std::mt19937_64 rng(seed);
  auto a = gaussian(dim, rng);
  auto b = gaussian(dim, rng);
  return {std::move(a), std::move(b)};
}

DirectionPair random_pair(std::size_t dim, std::uint64_t seed) {
  auto [a, b] = raw_gaussian_pair(dim, seed);
  normalize(a);
  orthonormalize_against(a, b);
  DirectionPair d;
  d.delta1 = std::move(a);
  d.delta2 = std::move(b);
  d.source = DirectionPair::Source::random;
  d.seed = seed;
  return d;
}

std::vector<double> hvp(const Objective& objective, std::span<const double> theta,
                        std::span<const double> v, double step) {
  const double vn = norm(v);
  if (!(vn > 0.0)) throw ConfigError("hvp direction must be nonzero");
  const double eps = step * (1.0 + norm(theta));
  std::vector<double> plus(theta.begin(), theta.end()), minus = plus;
  for (std::size_t i = 0; i < plus.size(); ++i) {
    plus[i] += eps * v[i] / vn;
    minus[i] -= eps * v[i] / vn;
  }
  auto gp = objective.grad(plus);
  const auto gm = objective.grad(minus);
  const double s = vn / (2.0 * eps);
  for (std::size_t i = 0; i < gp.size(); ++i) {
    gp[i] = (gp[i] - gm[i]) * s;
    if (!std::isfinite(gp[i])) throw NumericError("non-finite gradient in Hessian-vector product");
  }
  return gp;
}

namespace {

struct PowerResult {
  std::vector<double> vec;
  double lambda = 0.0;
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

PowerResult power_iteration(const Objective& objective, std::span<const double> theta,
                            std::vector<double> v, const std::vector<double>* deflate,
                            const PowerOptions& opts, std::vector<double>* rq_trace) {
  auto project = [&](std::span<double> x) {
    if (deflate)
      for (int pass = 0; pass < 2; ++pass) axpy(-dot(*deflate, x), *deflate, x);
  };
  project(v);
  normalize(v);

  PowerResult r;
  double previous = 0.0;
  for (std::size_t it = 1; it <= opts.max_iter; ++it) {
    auto w = hvp(objective, theta, v, opts.fd_step);
    project(w);
    const double rq = dot(v, w);
    std::vector<double> res = w;
    axpy(-rq, v, res);
    r.vec = v;
    r.lambda = rq;
    r.residual = norm(res);
    r.iterations = it;
    if (rq_trace) rq_trace->push_back(rq);
    if (it > 1 && std::abs(rq - previous) <= opts.tol * std::abs(rq)) {
      r.converged = true;
      return r;
    }
    previous = rq;
    const double wn = norm(w);
    if (wn == 0.0) {  // v lies in the null space: eigenvalue 0, already exact
      r.converged = true;
      return r;
    }
    scale(w, 1.0 / wn);
    v = std::move(w);
  }
  return r;
}

}  // namespace

DirectionPair top2_eigenvectors(const Objective& objective, std::span<const double> theta,
                                const PowerOptions& opts, PowerTrace* trace) {
  if (opts.max_iter < 1) throw ConfigError("max_iter must be at least 1");
  if (theta.size() < 2) throw ConfigError("directions need dim >= 2");
  auto [start1, start2] = raw_gaussian_pair(theta.size(), opts.seed);

  auto first = power_iteration(objective, theta, std::move(start1), nullptr, opts,
                               trace ? &trace->rayleigh1 : nullptr);
  auto second = power_iteration(objective, theta, std::move(start2), &first.vec, opts,
                                trace ? &trace->rayleigh2 : nullptr);

  DirectionPair d;
  d.source = DirectionPair::Source::hessian;
  d.seed = opts.seed;
  d.delta1 = std::move(first.vec);
  d.delta2 = std::move(second.vec);
  d.lambda1 = first.lambda;
  d.lambda2 = second.lambda;
  d.iterations1 = first.iterations;
  d.iterations2 = second.iterations;
  d.residual1 = first.residual;
  d.residual2 = second.residual;
  // Deflation only removes delta1, so a larger |lambda| can still surface
  // second when the first run stopped early. Keep the magnitude order.
  if (std::abs(d.lambda2) > std::abs(d.lambda1)) {
    std::swap(d.delta1, d.delta2);
    std::swap(d.lambda1, d.lambda2);
    std::swap(d.iterations1, d.iterations2);
    std::swap(d.residual1, d.residual2);
  }
  normalize(d.delta1);
  orthonormalize_against(d.delta1, d.delta2);
  d.converged = first.converged && second.converged;
  if (!d.converged)
    throw NoConvergence("power iteration did not converge in " + std::to_string(opts.max_iter) +
                            " iterations (residuals " + std::to_string(d.residual1) + ", " +
                            std::to_string(d.residual2) + ")",
                        d);
  return d;
}

void filter_normalize(DirectionPair& dirs, std::span<const double> theta,
                      std::span<const Segment> layout) {
  if (layout_size(layout) != theta.size() || dirs.dim() != theta.size())
    throw ConfigError("layout does not cover the parameter vector");
  for (auto* d : {&dirs.delta1, &dirs.delta2}) {
    std::size_t off = 0;
    for (const auto& seg : layout) {
      std::span<double> part(d->data() + off, seg.size());
      const double dn = norm(part);
      const double tn = norm(theta.subspan(off, seg.size()));
      if (dn > 0.0) scale(part, tn / dn);
      off += seg.size();
    }
  }
  normalize(dirs.delta1);
  orthonormalize_against(dirs.delta1, dirs.delta2);
  dirs.filter_normalized = true;
}

std::string provenance_json(const DirectionPair& dirs) {
  nlohmann::ordered_json j;
  j["source"] = dirs.source == DirectionPair::Source::random ? "random" : "hessian";
  j["seed"] = dirs.seed;
  j["orthonormalized"] = "gram-schmidt";
  j["filter_normalized"] = dirs.filter_normalized;
  if (dirs.source == DirectionPair::Source::hessian) {
    j["lambda1"] = dirs.lambda1;
    j["lambda2"] = dirs.lambda2;
    j["iterations"] = {dirs.iterations1, dirs.iterations2};
    j["residuals"] = {dirs.residual1, dirs.residual2};
    j["converged"] = dirs.converged;
  }
  return j.dump();
}

void save_directions(const std::string& path, const DirectionPair& dirs) {
  std::vector<double> flat = dirs.delta1;
  flat.insert(flat.end(), dirs.delta2.begin(), dirs.delta2.end());
  ParameterVector pv{std::move(flat), {{"delta1", dirs.dim(), 1}, {"delta2", dirs.dim(), 1}}};
  save_params(path, pv, provenance_json(dirs));
}

DirectionPair load_directions(const std::string& path) {
  std::string meta;
  auto pv = load_params(path, &meta);
  if (pv.layout.size() != 2 || pv.layout[0].size() != pv.layout[1].size())
    throw ParseError(path + ": not a direction pair", 0);
  const std::size_t n = pv.layout[0].size();
  DirectionPair d;
  d.delta1.assign(pv.theta.begin(), pv.theta.begin() + static_cast<std::ptrdiff_t>(n));
  d.delta2.assign(pv.theta.begin() + static_cast<std::ptrdiff_t>(n), pv.theta.end());
  const auto j = nlohmann::json::parse(meta.empty() ? "{}" : meta);
  d.source = j.value("source", "random") == "hessian" ? DirectionPair::Source::hessian
                                                      : DirectionPair::Source::random;
  d.seed = j.value("seed", std::uint64_t{0});
  d.filter_normalized = j.value("filter_normalized", false);
  d.lambda1 = j.value("lambda1", 0.0);
  d.lambda2 = j.value("lambda2", 0.0);
  d.converged = j.value("converged", true);
  if (j.contains("residuals")) {
    d.residual1 = j["residuals"][0];
    d.residual2 = j["residuals"][1];
  }
  if (j.contains("iterations")) {
    d.iterations1 = j["iterations"][0];
    d.iterations2 = j["iterations"][1];
  }
  return d;
}

}  // namespace losstopo
