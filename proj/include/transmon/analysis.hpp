#pragma once

// Weighted nonlinear least squares (Levenberg-Marquardt with central
// difference Jacobians) and the five fit families used by the experiments.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "transmon/constants.hpp"
#include "transmon/errors.hpp"

namespace transmon::analysis {

using Eigen::MatrixXd;
using Eigen::VectorXd;

using ResidualFunction = std::function<VectorXd(const VectorXd&)>;

struct NllsOptions {
  int max_iterations = 200;
  double relative_cost_tolerance = 1e-12;
  double gradient_tolerance = 1e-10;
  double initial_lambda = 1e-3;
  double jacobian_step = 1e-6; // relative
};

struct NllsResult {
  VectorXd params;
  MatrixXd covariance;  // scaled by residual variance; +inf on the diagonal if singular
  MatrixXd jacobian;    // at the optimum
  double cost = 0.0;    // 0.5 * sum r^2
  int n_residuals = 0;
  int iterations = 0;   // accepted steps
  bool converged = false;
  bool singular = false;
};

inline double clamp_to(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

/// Central-difference Jacobian of the residual vector; steps are mirrored
/// to one-sided differences at active bounds.
inline MatrixXd numeric_jacobian(const ResidualFunction& f, const VectorXd& p, const VectorXd& lower,
                                 const VectorXd& upper, double rel_step = 1e-6) {
  const VectorXd r0 = f(p);
  MatrixXd j(r0.size(), p.size());
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const double h = rel_step * std::max(std::abs(p(k)), 1e-6);
    VectorXd hi = p, lo = p;
    hi(k) = std::min(p(k) + h, upper(k));
    lo(k) = std::max(p(k) - h, lower(k));
    const double span = hi(k) - lo(k);
    if (span <= 0.0) {
      j.col(k).setZero();
      continue;
    }
    j.col(k) = (f(hi) - f(lo)) / span;
  }
  return j;
}

inline MatrixXd numeric_jacobian(const ResidualFunction& f, const VectorXd& p, double rel_step = 1e-6) {
  const double inf = std::numeric_limits<double>::infinity();
  return numeric_jacobian(f, p, VectorXd::Constant(p.size(), -inf), VectorXd::Constant(p.size(), inf),
                          rel_step);
}

namespace detail {

/// (J^T J)^-1 with a conditioning check on the unit-diagonal form.
inline std::optional<MatrixXd> normal_inverse(const MatrixXd& j) {
  const MatrixXd a = j.transpose() * j;
  const VectorXd d = a.diagonal();
  if ((d.array() <= 0.0).any()) return std::nullopt;
  const VectorXd s = d.array().rsqrt();
  const MatrixXd scaled = s.asDiagonal() * a * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(scaled);
  const double emax = es.eigenvalues().maxCoeff();
  const double emin = es.eigenvalues().minCoeff();
  if (!(emin > 1e-13 * emax)) return std::nullopt;
  const MatrixXd inv_scaled =
      es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  return s.asDiagonal() * inv_scaled * s.asDiagonal();
}

} // namespace detail

/// Damped Gauss-Newton with Marquardt diagonal scaling and box bounds.
inline NllsResult nlls_minimize(const ResidualFunction& f, VectorXd p0, const VectorXd& lower,
                                const VectorXd& upper, const NllsOptions& opt = {}) {
  const Eigen::Index n = p0.size();
  for (Eigen::Index k = 0; k < n; ++k) p0(k) = clamp_to(p0(k), lower(k), upper(k));

  NllsResult res;
  VectorXd p = p0;
  VectorXd r = f(p);
  res.n_residuals = static_cast<int>(r.size());
  if (!r.allFinite()) {
    res.params = p;
    res.cost = std::numeric_limits<double>::infinity();
    res.covariance = MatrixXd::Constant(n, n, std::numeric_limits<double>::infinity());
    res.singular = true;
    return res;
  }
  double cost = 0.5 * r.squaredNorm();
  double lambda = opt.initial_lambda;
  MatrixXd j;

  for (int outer = 0; outer < opt.max_iterations * 4 && res.iterations < opt.max_iterations; ++outer) {
    j = numeric_jacobian(f, p, lower, upper, opt.jacobian_step);
    const VectorXd g = j.transpose() * r;
    if (cost == 0.0 || g.lpNorm<Eigen::Infinity>() < opt.gradient_tolerance) {
      res.converged = true;
      break;
    }
    const MatrixXd a = j.transpose() * j;
    VectorXd diag = a.diagonal();
    const double floor = 1e-12 * std::max(diag.maxCoeff(), 1e-300);
    for (Eigen::Index k = 0; k < n; ++k) diag(k) = std::max(diag(k), floor);

    bool accepted = false;
    while (lambda < 1e16) {
      MatrixXd damped = a;
      damped.diagonal() += lambda * diag;
      const VectorXd step = damped.ldlt().solve(-g);
      VectorXd trial = p + step;
      for (Eigen::Index k = 0; k < n; ++k) trial(k) = clamp_to(trial(k), lower(k), upper(k));
      const VectorXd rt = f(trial);
      const double ct = rt.allFinite() ? 0.5 * rt.squaredNorm() : std::numeric_limits<double>::infinity();
      if (ct < cost) {
        const double rel = (cost - ct) / cost;
        p = trial;
        r = rt;
        cost = ct;
        ++res.iterations;
        accepted = true;
        // Tiny decreases under heavy damping are not convergence.
        if (rel < opt.relative_cost_tolerance && lambda <= 1.0) res.converged = true;
        lambda = std::max(lambda / 10.0, 1e-15);
        break;
      }
      if ((trial - p).norm() <= 1e-15 * (p.norm() + 1e-15)) break;
      lambda *= 10.0;
    }
    if (res.converged) {
      j = numeric_jacobian(f, p, lower, upper, opt.jacobian_step);
      break;
    }
    if (!accepted) {
      // No downhill step exists at any damping: a stationary point to
      // working precision.
      // Judged by the decrease a full Gauss-Newton step would predict,
      // which is invariant to parameter scaling.
      j = numeric_jacobian(f, p, lower, upper, opt.jacobian_step);
      const VectorXd gg = j.transpose() * r;
      MatrixXd aa = j.transpose() * j;
      aa.diagonal() += 1e-12 * aa.diagonal().cwiseAbs().maxCoeff() * VectorXd::Ones(n);
      const double predicted = 0.5 * gg.dot(aa.ldlt().solve(gg));
      res.converged = std::isfinite(predicted) && predicted <= 1e-9 * std::max(cost, 1e-300);
      break;
    }
  }

  res.params = p;
  res.cost = cost;
  res.jacobian = j;
  const auto inv = detail::normal_inverse(j);
  const int dof = res.n_residuals - static_cast<int>(n);
  const double s2 = dof > 0 ? 2.0 * cost / dof : 1.0;
  if (inv) {
    res.covariance = *inv * s2;
  } else {
    res.singular = true;
    res.covariance = MatrixXd::Constant(n, n, std::numeric_limits<double>::infinity());
  }
  return res;
}

inline NllsResult nlls_minimize(const ResidualFunction& f, const VectorXd& p0, const NllsOptions& opt = {}) {
  const double inf = std::numeric_limits<double>::infinity();
  return nlls_minimize(f, p0, VectorXd::Constant(p0.size(), -inf), VectorXd::Constant(p0.size(), inf), opt);
}

/// Scalar curve model y = model(x, params).
using CurveModel = std::function<double(double, const VectorXd&)>;

/// Weighted curve fit: residuals (model - y) * weight.
inline NllsResult nlls_minimize(const CurveModel& model, const VectorXd& p0, std::span<const double> x,
                                std::span<const double> y, std::span<const double> weights,
                                const VectorXd& lower, const VectorXd& upper, const NllsOptions& opt = {}) {
  if (x.size() != y.size() || x.size() != weights.size()) {
    throw UsageError("nlls_minimize: x, y and weights must have equal length");
  }
  auto f = [&](const VectorXd& p) {
    VectorXd r(static_cast<Eigen::Index>(x.size()));
    for (std::size_t k = 0; k < x.size(); ++k) {
      r(static_cast<Eigen::Index>(k)) = (model(x[k], p) - y[k]) * weights[k];
    }
    return r;
  };
  return nlls_minimize(f, p0, lower, upper, opt);
}

// ---------------------------------------------------------------------------
// Fit results
// ---------------------------------------------------------------------------

struct FitResult {
  std::string model;
  std::vector<std::string> names;
  VectorXd values;
  VectorXd sigmas;
  MatrixXd covariance;
  double rss = 0.0;        // weighted residual sum of squares
  int dof = 0;
  double max_abs_residual = 0.0; // weighted
  bool converged = false;
  int iterations = 0;
  std::vector<std::string> flags;

  bool reportable() const { return converged && flags.empty(); }
  double reduced_chi2() const { return dof > 0 ? rss / dof : 0.0; }

  std::size_t index(const std::string& name) const {
    for (std::size_t k = 0; k < names.size(); ++k) {
      if (names[k] == name) return k;
    }
    throw UsageError("FitResult: no parameter '" + name + "' in " + model);
  }
  double value(const std::string& name) const { return values(static_cast<Eigen::Index>(index(name))); }
  double sigma(const std::string& name) const { return sigmas(static_cast<Eigen::Index>(index(name))); }
};

namespace detail {

inline FitResult make_result(std::string model, std::vector<std::string> names, const NllsResult& r) {
  FitResult fr;
  fr.model = std::move(model);
  fr.names = std::move(names);
  fr.values = r.params;
  fr.covariance = r.covariance;
  fr.sigmas = r.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  fr.rss = 2.0 * r.cost;
  fr.dof = r.n_residuals - static_cast<int>(r.params.size());
  fr.converged = r.converged;
  fr.iterations = r.iterations;
  if (!r.converged) fr.flags.push_back("not_converged");
  if (r.singular) fr.flags.push_back("singular_covariance");
  return fr;
}

inline void check_lengths(std::span<const double> x, std::span<const double> y, std::span<const double> se,
                          std::size_t min_points, const char* who) {
  if (x.size() != y.size() || x.size() != se.size()) {
    throw UsageError(std::string(who) + ": x, y and se must have equal length");
  }
  if (x.size() < min_points) {
    throw UsageError(std::string(who) + ": needs at least " + std::to_string(min_points) + " points");
  }
  for (double s : se) {
    if (!(s > 0.0)) throw UsageError(std::string(who) + ": standard errors must be positive");
  }
}

inline std::vector<double> inverse(std::span<const double> se) {
  std::vector<double> w(se.size());
  for (std::size_t k = 0; k < se.size(); ++k) w[k] = 1.0 / se[k];
  return w;
}

inline void finish(FitResult& fr, const CurveModel& model, std::span<const double> x,
                   std::span<const double> y, std::span<const double> w) {
  double mx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx = std::max(mx, std::abs((model(x[k], fr.values) - y[k]) * w[k]));
  }
  fr.max_abs_residual = mx;
}

inline void flag_if_insignificant(FitResult& fr, const std::string& amplitude, const std::string& target) {
  const double a = std::abs(fr.value(amplitude));
  const double s = fr.sigma(amplitude);
  if (!std::isfinite(s) || a < 2.0 * s || !std::isfinite(fr.sigma(target))) {
    fr.flags.push_back("unidentifiable:" + target);
  }
}

} // namespace detail

/// Floors standard errors at 1/(2n) so points at p = 0 or 1 keep finite weight.
inline std::vector<double> apply_se_floor(std::span<const double> se, std::span<const double> shots) {
  std::vector<double> out(se.size());
  for (std::size_t k = 0; k < se.size(); ++k) {
    out[k] = std::max(se[k], 1.0 / (2.0 * shots[k]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model families. Each exposes the value and its analytic gradient.
// ---------------------------------------------------------------------------

namespace models {

/// A exp(-x/T) + offset; params (A, T, offset).
inline double exponential(double x, const VectorXd& p) { return p(0) * std::exp(-x / p(1)) + p(2); }
inline VectorXd exponential_gradient(double x, const VectorXd& p) {
  const double e = std::exp(-x / p(1));
  VectorXd g(3);
  g << e, p(0) * e * x / (p(1) * p(1)), 1.0;
  return g;
}

/// A exp(-x/T) cos(2 pi f x + phase) + offset; params (A, T, f, phase, offset).
inline double ramsey(double x, const VectorXd& p) {
  return p(0) * std::exp(-x / p(1)) * std::cos(constants::two_pi * p(2) * x + p(3)) + p(4);
}
inline VectorXd ramsey_gradient(double x, const VectorXd& p) {
  const double e = std::exp(-x / p(1));
  const double arg = constants::two_pi * p(2) * x + p(3);
  const double c = std::cos(arg), s = std::sin(arg);
  VectorXd g(5);
  g << e * c, p(0) * e * c * x / (p(1) * p(1)), -p(0) * e * s * constants::two_pi * x, -p(0) * e * s, 1.0;
  return g;
}

/// c1 + c2 p^N; params (c1, c2, p).
inline double rb(double n, const VectorXd& p) { return p(0) + p(1) * std::pow(p(2), n); }
inline VectorXd rb_gradient(double n, const VectorXd& p) {
  VectorXd g(3);
  g << 1.0, std::pow(p(2), n), n == 0.0 ? 0.0 : p(1) * n * std::pow(p(2), n - 1.0);
  return g;
}

/// Hanger S21; params (f_r, Q_i, Q_e).
inline std::complex<double> hanger(double f, const VectorXd& p) {
  const double q = 1.0 / (1.0 / p(1) + 1.0 / p(2));
  return 1.0 - (q / p(2)) / std::complex<double>(1.0, 2.0 * q * (f - p(0)) / p(0));
}
inline Eigen::VectorXcd hanger_gradient(double f, const VectorXd& p) {
  const double fr = p(0), qi = p(1), qe = p(2);
  const double q = 1.0 / (1.0 / qi + 1.0 / qe);
  const std::complex<double> i(0.0, 1.0);
  const double x = (f - fr) / fr;
  const std::complex<double> den = 1.0 + 2.0 * i * q * x;
  // S = 1 - (q/qe) / den
  const double dq_dqi = q * q / (qi * qi);
  const double dq_dqe = q * q / (qe * qe);
  const std::complex<double> ds_dq = -(1.0 / qe) / den + (q / qe) * (2.0 * i * x) / (den * den);
  const std::complex<double> ds_dx = (q / qe) * (2.0 * i * q) / (den * den);
  const double dx_dfr = -f / (fr * fr);
  Eigen::VectorXcd g(3);
  g(0) = ds_dx * dx_dfr;
  g(1) = ds_dq * dq_dqi;
  g(2) = ds_dq * dq_dqe + (q / (qe * qe)) / den;
  return g;
}

} // namespace models

// ---------------------------------------------------------------------------
// Fits
// ---------------------------------------------------------------------------

/// Weighted fit of A exp(-x/T1) + offset. Initial T1 from log-linear
/// regression on baseline-subtracted data.
inline FitResult fit_exponential(std::span<const double> x, std::span<const double> y,
                                 std::span<const double> se) {
  detail::check_lengths(x, y, se, 4, "fit_exponential");
  const std::size_t n = x.size();
  const auto last = static_cast<std::size_t>(std::max_element(x.begin(), x.end()) - x.begin());
  const auto first = static_cast<std::size_t>(std::min_element(x.begin(), x.end()) - x.begin());
  const double span = x[last] - x[first];

  double offset0 = y[last];
  const double sign = y[first] >= offset0 ? 1.0 : -1.0;
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  double zmax = 0.0;
  for (std::size_t k = 0; k < n; ++k) zmax = std::max(zmax, sign * (y[k] - offset0));
  for (std::size_t k = 0; k < n; ++k) {
    const double z = sign * (y[k] - offset0);
    if (z <= 0.2 * zmax || z <= 2.0 * se[k]) continue;
    const double w = z * z / (se[k] * se[k]);
    const double lz = std::log(z);
    sw += w; sx += w * x[k]; sy += w * lz; sxx += w * x[k] * x[k]; sxy += w * x[k] * lz;
  }
  double t0 = span / 3.0, a0 = 0.0;
  const double det = sw * sxx - sx * sx;
  if (sw > 0.0 && det > 0.0) {
    const double slope = (sw * sxy - sx * sy) / det;
    const double icpt = (sy - slope * sx) / sw;
    if (slope < 0.0) t0 = -1.0 / slope;
    a0 = sign * std::exp(icpt);
  }
  if (span > 0.0) t0 = std::clamp(t0, span * 1e-3, span * 1e3);

  VectorXd p0(3);
  p0 << a0, t0, offset0;
  const double inf = std::numeric_limits<double>::infinity();
  VectorXd lo(3), hi(3);
  lo << -inf, 1e-12 * std::max(span, 1e-300), -inf;
  hi << inf, inf, inf;
  const auto w = detail::inverse(se);
  const auto r = nlls_minimize(models::exponential, p0, x, y, w, lo, hi);
  FitResult fr = detail::make_result("exponential", {"A", "T1", "offset"}, r);
  detail::finish(fr, models::exponential, x, y, w);
  detail::flag_if_insignificant(fr, "A", "T1");
  return fr;
}

struct LogView {
  double lifetime = std::numeric_limits<double>::quiet_NaN();
  double sigma = std::numeric_limits<double>::quiet_NaN();
  std::size_t points = 0;
};

/// Weighted straight-line fit of ln(y - offset) against x, using points
/// that sit at least two standard errors above the offset.
inline LogView log_space_lifetime(std::span<const double> x, std::span<const double> y,
                                  std::span<const double> se, double offset) {
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  LogView out;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double z = y[k] - offset;
    if (!(se[k] > 0.0) || z <= 2.0 * se[k]) continue;
    const double w = z * z / (se[k] * se[k]); // var(ln z) ~ (se/z)^2
    const double lz = std::log(z);
    sw += w; sx += w * x[k]; sy += w * lz; sxx += w * x[k] * x[k]; sxy += w * x[k] * lz;
    ++out.points;
  }
  const double det = sw * sxx - sx * sx;
  if (out.points < 2 || !(det > 0.0)) return out;
  const double slope = (sw * sxy - sx * sy) / det;
  const double slope_sigma = std::sqrt(sw / det);
  if (slope < 0.0) {
    out.lifetime = -1.0 / slope;
    out.sigma = slope_sigma / (slope * slope);
  }
  return out;
}

/// Discrete periodogram argmax over [0, Nyquist] on a grid 8x finer than
/// the natural resolution 1/span.
inline double periodogram_peak(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  const double span = *std::max_element(x.begin(), x.end()) - *std::min_element(x.begin(), x.end());
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> gaps;
  for (std::size_t k = 1; k < n; ++k) gaps.push_back(sorted[k] - sorted[k - 1]);
  std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2), gaps.end());
  const double nyquist = 0.5 / gaps[gaps.size() / 2];
  const double df = 1.0 / (8.0 * span);
  double best_f = 0.0, best_power = -1.0;
  for (double f = 0.0; f <= nyquist; f += df) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t k = 0; k < n; ++k) {
      acc += (y[k] - mean) * std::polar(1.0, -constants::two_pi * f * x[k]);
    }
    const double power = std::norm(acc);
    if (power > best_power) {
      best_power = power;
      best_f = f;
    }
  }
  return best_f;
}

/// Weighted fit of A exp(-x/T2) cos(2 pi f x + phase) + offset.
inline FitResult fit_ramsey(std::span<const double> x, std::span<const double> y,
                            std::span<const double> se) {
  detail::check_lengths(x, y, se, 6, "fit_ramsey");
  const std::size_t n = x.size();
  const double xmin = *std::min_element(x.begin(), x.end());
  const double xmax = *std::max_element(x.begin(), x.end());
  const double span = xmax - xmin;
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  const double f0 = periodogram_peak(x, y);
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t k = 0; k < n; ++k) {
    acc += (y[k] - mean) * std::polar(1.0, -constants::two_pi * f0 * x[k]);
  }
  const double phase0 = std::arg(acc);
  double early = 0.0, late = 0.0;
  std::size_t ne = 0, nl = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (x[k] < xmin + span / 2) { early += std::abs(y[k] - mean); ++ne; }
    else { late += std::abs(y[k] - mean); ++nl; }
  }
  early /= std::max<std::size_t>(ne, 1);
  late /= std::max<std::size_t>(nl, 1);
  double t0 = span;
  if (late > 0.0 && early > late) t0 = 0.5 * span / std::log(early / late);
  t0 = std::clamp(t0, span / 20.0, 20.0 * span);
  double a0 = 0.0;
  for (std::size_t k = 0; k < n; ++k) a0 = std::max(a0, std::abs(y[k] - mean));

  VectorXd p0(5);
  p0 << a0, t0, f0, phase0, mean;
  const double inf = std::numeric_limits<double>::infinity();
  VectorXd lo(5), hi(5);
  lo << 0.0, 1e-12 * span, 0.0, -inf, -inf;
  hi << inf, inf, inf, inf, inf;
  const auto w = detail::inverse(se);
  const auto r = nlls_minimize(models::ramsey, p0, x, y, w, lo, hi);
  FitResult fr = detail::make_result("ramsey", {"A", "T2", "detuning", "phase", "offset"}, r);
  detail::finish(fr, models::ramsey, x, y, w);
  detail::flag_if_insignificant(fr, "A", "T2");
  const double f = fr.value("detuning");
  if (f * span < 1.0 || !std::isfinite(fr.sigma("detuning")) || fr.sigma("detuning") >= f) {
    fr.flags.push_back("frequency_unresolved");
  }
  return fr;
}

/// Weighted fit of c1 + c2 p^N with p in (0, 1].
inline FitResult fit_rb(std::span<const double> lengths, std::span<const double> y,
                        std::span<const double> se) {
  detail::check_lengths(lengths, y, se, 4, "fit_rb");
  std::vector<double> distinct(lengths.begin(), lengths.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 4) throw UsageError("fit_rb: needs at least 4 distinct sequence lengths");

  // Two-point ratio about the unbiased asymptote 1/2.
  std::vector<std::size_t> order(lengths.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return lengths[a] < lengths[b]; });
  const double c1_0 = 0.5;
  const std::size_t i = order.front();
  const double di = y[i] - c1_0;
  std::size_t j = order[1];
  for (auto k : order) {
    if (k != i && lengths[k] > lengths[i] && (y[k] - c1_0) > 0.3 * di) j = k;
  }
  double p_init = 0.95;
  const double dj = y[j] - c1_0;
  if (di > 0.0 && dj > 0.0 && lengths[j] > lengths[i]) {
    p_init = std::pow(dj / di, 1.0 / (lengths[j] - lengths[i]));
  }
  p_init = std::clamp(p_init, 0.5, 0.99999);
  const double c2_0 = di / std::pow(p_init, lengths[i]);

  VectorXd p0(3);
  p0 << c1_0, c2_0, p_init;
  const double inf = std::numeric_limits<double>::infinity();
  VectorXd lo(3), hi(3);
  lo << -inf, -inf, 1e-12;
  hi << inf, inf, 1.0;
  const auto w = detail::inverse(se);
  const auto r = nlls_minimize(models::rb, p0, lengths, y, w, lo, hi);
  FitResult fr = detail::make_result("rb", {"c1", "c2", "p"}, r);
  detail::finish(fr, models::rb, lengths, y, w);
  detail::flag_if_insignificant(fr, "c2", "p");
  return fr;
}

/// Complex least squares on the hanger transmission. noise_sigma, if
/// positive, is the per-quadrature noise level used for weighting and for
/// deciding whether a dip is present at all.
inline FitResult fit_hanger(std::span<const double> f, std::span<const std::complex<double>> s21,
                            double noise_sigma = 0.0) {
  if (f.size() != s21.size()) throw UsageError("fit_hanger: length mismatch");
  if (f.size() < 5) throw UsageError("fit_hanger: needs at least 5 points");
  const std::size_t n = f.size();

  std::size_t kmin = 0;
  for (std::size_t k = 1; k < n; ++k) {
    if (std::abs(s21[k]) < std::abs(s21[kmin])) kmin = k;
  }
  const double fr0 = f[kmin];
  // Off-resonant baseline from the grid edges.
  const double baseline = 0.5 * (std::abs(s21.front()) + std::abs(s21.back()));
  const double depth = std::abs(1.0 - s21[kmin]);

  FitResult flagged;
  flagged.model = "hanger";
  flagged.names = {"f_r", "Q_i", "Q_e"};
  flagged.values = VectorXd::Constant(3, std::numeric_limits<double>::quiet_NaN());
  flagged.sigmas = VectorXd::Constant(3, std::numeric_limits<double>::infinity());
  if (depth < std::max(1e-6, 5.0 * noise_sigma) || std::abs(baseline - std::abs(s21[kmin])) < 1e-9) {
    flagged.flags.push_back("no_resonance");
    return flagged;
  }

  // Half-maximum width of |1 - S21|^2 gives f_r / Q.
  const double half = 0.5 * depth * depth;
  std::size_t lo_k = kmin, hi_k = kmin;
  while (lo_k > 0 && std::norm(1.0 - s21[lo_k]) > half) --lo_k;
  while (hi_k + 1 < n && std::norm(1.0 - s21[hi_k]) > half) ++hi_k;
  double fwhm = f[hi_k] - f[lo_k];
  if (!(fwhm > 0.0)) fwhm = (f.back() - f.front()) / static_cast<double>(n);
  const double q0 = fr0 / fwhm;
  const double span = f.back() - f.front();
  if (span < 5.0 * fwhm) throw UsageError("fit_hanger: frequency grid spans fewer than 5 linewidths");
  const double d0 = std::clamp(depth, 1e-6, 0.999);
  const double qe0 = q0 / d0;
  const double qi0 = 1.0 / std::max(1.0 / q0 - 1.0 / qe0, 1e-12 / q0);

  const double scale = noise_sigma > 0.0 ? noise_sigma : 1.0;
  auto residuals = [&](const VectorXd& p) {
    VectorXd r(static_cast<Eigen::Index>(2 * n));
    for (std::size_t k = 0; k < n; ++k) {
      const std::complex<double> d = (models::hanger(f[k], p) - s21[k]) / scale;
      r(static_cast<Eigen::Index>(2 * k)) = d.real();
      r(static_cast<Eigen::Index>(2 * k + 1)) = d.imag();
    }
    return r;
  };
  VectorXd p0(3);
  p0 << fr0, qi0, qe0;
  VectorXd lo(3), hi(3);
  const double inf = std::numeric_limits<double>::infinity();
  lo << f.front(), 1.0, 1.0;
  hi << f.back(), inf, inf;
  NllsOptions opt;
  opt.jacobian_step = 1e-7;
  const auto r = nlls_minimize(residuals, p0, lo, hi, opt);
  FitResult fr = detail::make_result("hanger", {"f_r", "Q_i", "Q_e"}, r);
  fr.max_abs_residual = r.params.size() ? residuals(r.params).cwiseAbs().maxCoeff() : 0.0;
  for (Eigen::Index k = 0; k < 3; ++k) {
    if (!std::isfinite(fr.sigmas(k)) || fr.sigmas(k) > std::abs(fr.values(k))) {
      fr.flags.push_back("unidentifiable:" + fr.names[static_cast<std::size_t>(k)]);
    }
  }
  return fr;
}

// ---------------------------------------------------------------------------
// Randomized-benchmarking fidelities
// ---------------------------------------------------------------------------

struct RbFidelities {
  double p_ref = 0.0, p_ref_sigma = 0.0;
  double p_int = 0.0, p_int_sigma = 0.0;
  double f_clifford = 0.0, f_clifford_sigma = 0.0;
  double f_gate = 0.0, f_gate_sigma = 0.0;
  bool nonphysical_gain = false; // p_int exceeds p_ref by more than 1 sigma
};

/// Average Clifford fidelity 1 - (1 - p_ref)/2.
inline double clifford_fidelity(double p_ref) { return 1.0 - (1.0 - p_ref) / 2.0; }

/// Interleaved gate fidelity 1 - (1 - p_int/p_ref)/2.
inline double gate_fidelity(double p_ref, double p_int) { return 1.0 - (1.0 - p_int / p_ref) / 2.0; }

/// Depolarizing parameter that yields the given Clifford fidelity.
inline double depolarizing_from_fidelity(double f) { return 1.0 - 2.0 * (1.0 - f); }

inline RbFidelities rb_fidelities(double p_ref, double p_ref_sigma, double p_int, double p_int_sigma) {
  RbFidelities r;
  r.p_ref = p_ref;
  r.p_ref_sigma = p_ref_sigma;
  r.p_int = p_int;
  r.p_int_sigma = p_int_sigma;
  r.f_clifford = clifford_fidelity(p_ref);
  r.f_clifford_sigma = 0.5 * p_ref_sigma;
  r.f_gate = gate_fidelity(p_ref, p_int);
  const double d_int = 0.5 / p_ref;
  const double d_ref = -0.5 * p_int / (p_ref * p_ref);
  r.f_gate_sigma = std::sqrt(d_int * d_int * p_int_sigma * p_int_sigma + d_ref * d_ref * p_ref_sigma * p_ref_sigma);
  r.nonphysical_gain = p_int - p_ref > std::hypot(p_ref_sigma, p_int_sigma);
  return r;
}

inline RbFidelities rb_fidelities(const FitResult& reference, const FitResult& interleaved) {
  if (!reference.reportable() || !interleaved.reportable()) {
    throw UsageError("rb_fidelities: both RB fits must have converged");
  }
  return rb_fidelities(reference.value("p"), reference.sigma("p"), interleaved.value("p"),
                       interleaved.sigma("p"));
}

} // namespace transmon::analysis
