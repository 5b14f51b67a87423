#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <gsl/gsl_multimin.h>
#include <gsl/gsl_vector.h>

#include "sciagent/errors.hpp"
#include "sciagent/workbench.hpp"

namespace sciagent {

namespace {

// log-space search box
constexpr double kLogLenLo = -4.6;   // ~0.01
constexpr double kLogLenHi = 3.0;    // ~20
constexpr double kLogSigLo = -6.9;   // ~1e-3
constexpr double kLogSigHi = 6.9;
constexpr double kLogNoiseLo = -16.1;  // ~1e-7
constexpr double kLogNoiseHi = 0.0;

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& x, const GpHyper& h) {
  const auto n = x.rows();
  Eigen::RowVectorXd inv_l(x.cols());
  for (Eigen::Index d = 0; d < x.cols(); ++d) inv_l(d) = 1.0 / h.lengthscales[static_cast<std::size_t>(d)];
  Eigen::MatrixXd xs = x.array().rowwise() * inv_l.array();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = h.signal_variance;
    for (Eigen::Index j = 0; j < i; ++j) {
      double r2 = (xs.row(i) - xs.row(j)).squaredNorm();
      k(i, j) = k(j, i) = h.signal_variance * std::exp(-0.5 * r2);
    }
  }
  return k;
}

struct Factor {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
  bool ok = false;
};

Factor factorize(Eigen::MatrixXd k, double noise) {
  Factor f;
  k.diagonal().array() += noise;
  double jitter = 0.0;
  for (int attempt = 0; attempt < 12; ++attempt) {
    Eigen::MatrixXd kj = k;
    if (jitter > 0) kj.diagonal().array() += jitter;
    f.llt.compute(kj);
    if (f.llt.info() == Eigen::Success) {
      f.jitter = jitter;
      f.ok = true;
      return f;
    }
    jitter = jitter == 0.0 ? 1e-10 : jitter * 10.0;
  }
  return f;
}

double lml(const Factor& f, const Eigen::VectorXd& y, Eigen::VectorXd* alpha_out = nullptr) {
  Eigen::VectorXd alpha = f.llt.solve(y);
  double logdet = 0.0;
  const Eigen::MatrixXd& l = f.llt.matrixLLT();
  for (Eigen::Index i = 0; i < l.rows(); ++i) logdet += std::log(l(i, i));
  if (alpha_out) *alpha_out = alpha;
  return -0.5 * y.dot(alpha) - logdet - 0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);
}

struct Problem {
  const Eigen::MatrixXd* x;
  const Eigen::VectorXd* y;
  std::size_t dim;
  std::optional<double> fixed_noise;
  int evals = 0;
};

GpHyper decode(const gsl_vector* v, const Problem& p) {
  GpHyper h;
  for (std::size_t d = 0; d < p.dim; ++d) h.lengthscales.push_back(std::exp(std::clamp(gsl_vector_get(v, d), kLogLenLo, kLogLenHi)));
  h.signal_variance = std::exp(std::clamp(gsl_vector_get(v, p.dim), kLogSigLo, kLogSigHi));
  h.noise_variance = p.fixed_noise ? *p.fixed_noise
                                   : std::exp(std::clamp(gsl_vector_get(v, p.dim + 1), kLogNoiseLo, kLogNoiseHi));
  return h;
}

double neg_lml(const gsl_vector* v, void* params) {
  auto& p = *static_cast<Problem*>(params);
  ++p.evals;
  auto h = decode(v, p);
  auto f = factorize(kernel_matrix(*p.x, h), h.noise_variance);
  if (!f.ok) return 1e300;
  double value = -lml(f, *p.y);
  return std::isfinite(value) ? value : 1e300;
}

void encode(const GpHyper& h, const Problem& p, gsl_vector* v) {
  for (std::size_t d = 0; d < p.dim; ++d) gsl_vector_set(v, d, std::log(h.lengthscales[d]));
  gsl_vector_set(v, p.dim, std::log(h.signal_variance));
  if (!p.fixed_noise) gsl_vector_set(v, p.dim + 1, std::log(std::max(h.noise_variance, 1e-300)));
}

// One Nelder-Mead run from `start`; returns the best point found.
std::pair<double, GpHyper> nelder_mead(Problem& p, const GpHyper& start, int budget) {
  const std::size_t n = p.dim + (p.fixed_noise ? 1 : 2);
  gsl_multimin_function fn{&neg_lml, n, &p};
  gsl_vector* x0 = gsl_vector_alloc(n);
  gsl_vector* step = gsl_vector_alloc(n);
  encode(start, p, x0);
  gsl_vector_set_all(step, 0.7);
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
  p.evals = 0;
  gsl_multimin_fminimizer_set(s, &fn, x0, step);
  while (p.evals < budget) {
    if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
    if (gsl_multimin_fminimizer_size(s) < 1e-5) break;
  }
  std::pair<double, GpHyper> out{s->fval, decode(s->x, p)};
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(step);
  gsl_vector_free(x0);
  return out;
}

void check_inputs(const std::vector<Vec>& x, const Vec& y, const Box& box) {
  if (x.size() < 2) throw PreconditionError("gp_fit needs at least 2 points");
  if (x.size() != y.size()) throw PreconditionError("gp_fit: inputs and outputs differ in length");
  if (box.dim() == 0 || box.lo.size() != box.hi.size()) throw PreconditionError("gp_fit: bad box");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != box.dim()) throw PreconditionError("gp_fit: input dimension mismatch");
    if (!std::isfinite(y[i])) throw PreconditionError("gp_fit: non-finite output");
  }
}

}  // namespace

GpHyper default_hyper(std::size_t dim) {
  GpHyper h;
  h.lengthscales.assign(dim, 0.5);
  h.signal_variance = 1.0;
  h.noise_variance = 1e-6;
  return h;
}

GPModel gp_with_hyper(const std::vector<Vec>& x, const Vec& y, const Box& box, const GpHyper& hyper) {
  check_inputs(x, y, box);
  if (hyper.lengthscales.size() != box.dim()) throw PreconditionError("gp: lengthscale count mismatch");
  GPModel m;
  m.box_ = box;
  const auto n = static_cast<Eigen::Index>(x.size());
  m.x_.resize(n, static_cast<Eigen::Index>(box.dim()));
  for (Eigen::Index i = 0; i < n; ++i) {
    auto u = box.to_unit(x[static_cast<std::size_t>(i)]);
    for (std::size_t d = 0; d < u.size(); ++d) m.x_(i, static_cast<Eigen::Index>(d)) = u[d];
  }
  Eigen::VectorXd ys = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
  m.y_mean_ = ys.mean();
  double sd = std::sqrt((ys.array() - m.y_mean_).square().sum() / static_cast<double>(n));
  m.hyper_ = hyper;
  if (sd <= 1e-12 * std::max(1.0, std::abs(m.y_mean_))) {
    m.degenerate_ = true;
    m.y_scale_ = 1.0;
    m.hyper_.signal_variance = 0.0;
  } else {
    m.y_scale_ = sd;
  }
  Eigen::VectorXd ystd = (ys.array() - m.y_mean_) / m.y_scale_;
  auto f = factorize(kernel_matrix(m.x_, m.hyper_), m.hyper_.noise_variance);
  if (!f.ok) throw PreconditionError("gp: covariance not positive definite even with jitter");
  m.chol_ = f.llt;
  m.jitter_ = f.jitter;
  m.lml_ = lml(f, ystd, &m.alpha_);
  return m;
}

GPModel gp_fit(const std::vector<Vec>& x, const Vec& y, const Box& box, const GpFitOptions& options) {
  check_inputs(x, y, box);
  if (options.starts < 1 || options.evals_per_start < 1) throw PreconditionError("gp_fit: empty search budget");
  auto base = default_hyper(box.dim());
  if (options.fixed_noise) base.noise_variance = *options.fixed_noise;
  auto model = gp_with_hyper(x, y, box, base);
  if (model.degenerate()) return model;

  Eigen::VectorXd ystd = (Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())).array() -
                          model.y_mean_) / model.y_scale_;
  Problem p{&model.x_, &ystd, box.dim(), options.fixed_noise};

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> ul(kLogLenLo + 1.0, kLogLenHi - 1.0);
  std::uniform_real_distribution<double> us(-1.5, 1.5);
  std::uniform_real_distribution<double> un(kLogNoiseLo, -4.0);

  std::vector<GpHyper> starts{base};
  if (options.warm_start) starts.push_back(*options.warm_start);
  while (static_cast<int>(starts.size()) < options.starts + (options.warm_start ? 1 : 0)) {
    GpHyper h;
    for (std::size_t d = 0; d < box.dim(); ++d) h.lengthscales.push_back(std::exp(ul(rng)));
    h.signal_variance = std::exp(us(rng));
    h.noise_variance = options.fixed_noise ? *options.fixed_noise : std::exp(un(rng));
    starts.push_back(std::move(h));
  }

  double best = -model.lml_;
  GpHyper best_h = base;
  for (const auto& s : starts) {
    auto [value, h] = nelder_mead(p, s, options.evals_per_start);
    if (value < best) {
      best = value;
      best_h = h;
    }
  }
  return gp_with_hyper(x, y, box, best_h);
}

GPModel::Prediction GPModel::predict(const Vec& x) const {
  if (x.size() != box_.dim()) throw PreconditionError("predict: dimension mismatch");
  auto u = box_.to_unit(x);
  const auto n = x_.rows();
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double r2 = 0.0;
    for (std::size_t d = 0; d < u.size(); ++d) {
      double t = (u[d] - x_(i, static_cast<Eigen::Index>(d))) / hyper_.lengthscales[d];
      r2 += t * t;
    }
    k(i) = hyper_.signal_variance * std::exp(-0.5 * r2);
  }
  double mean = y_mean_ + y_scale_ * k.dot(alpha_);
  Eigen::VectorXd v = chol_.matrixL().solve(k);
  double var = std::max(0.0, hyper_.signal_variance - v.squaredNorm());
  if (degenerate_) var = hyper_.noise_variance;
  return {mean, var * y_scale_ * y_scale_};
}

double expected_improvement(double mean, double sigma, double best) {
  double gain = best - mean;
  if (!(sigma > 0.0)) return std::max(gain, 0.0);
  double z = gain / sigma;
  double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(0.0, gain * cdf + sigma * pdf);
}

double expected_improvement(const GPModel& model, const Vec& x, double best) {
  auto p = model.predict(x);
  return expected_improvement(p.mean, std::sqrt(p.variance), best);
}

}  // namespace sciagent
