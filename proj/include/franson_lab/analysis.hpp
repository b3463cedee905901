#pragma once

// Fits used to turn histograms into physics: Gaussian peaks, sinusoidal
// fringes, and the two-heater calibration map with frame rotation.

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "franson_lab/common.hpp"
#include "franson_lab/lm.hpp"

namespace franson_lab {

/// Poisson weight floor: bins with fewer counts are weighted as one count.
inline double poisson_sigma(double counts) { return std::sqrt(std::max(counts, 1.0)); }

// ---------------------------------------------------------------------------
// Gaussian peak

struct Sample {
  double x = 0.0;
  double y = 0.0;
};

struct GaussianFit {
  double amplitude = 0.0;
  double mean = 0.0;
  double sigma = 0.0;
  double integral_5sigma = 0.0;
  double integral_error = 0.0;
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();  // (A, mu, sigma)
  double objective = 0.0;
  int iterations = 0;

  double amplitude_error() const { return std::sqrt(covariance(0, 0)); }
  double mean_error() const { return std::sqrt(covariance(1, 1)); }
  double sigma_error() const { return std::sqrt(covariance(2, 2)); }
};

inline const double erf_5_over_sqrt2 = std::erf(5.0 / std::sqrt(2.0));

/// Weighted residuals (A g(x) - y)/sqrt(max(y, 1)) and their Jacobian with
/// respect to (A, mu, sigma).
struct GaussianModel {
  const std::vector<Sample>* samples;

  void operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& j) const {
    const auto& s = *samples;
    const Eigen::Index n = static_cast<Eigen::Index>(s.size());
    r.resize(n);
    j.resize(n, 3);
    const double a = p(0), mu = p(1), sg = p(2);
    for (Eigen::Index k = 0; k < n; ++k) {
      double w = 1.0 / poisson_sigma(s[k].y);
      double d = s[k].x - mu;
      double g = std::exp(-0.5 * d * d / (sg * sg));
      r(k) = (a * g - s[k].y) * w;
      j(k, 0) = g * w;
      j(k, 1) = a * g * d / (sg * sg) * w;
      j(k, 2) = a * g * d * d / (sg * sg * sg) * w;
    }
  }

  double objective(const Eigen::VectorXd& p) const {
    Eigen::VectorXd r;
    Eigen::MatrixXd j;
    (*this)(p, r, j);
    return r.squaredNorm();
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& p) const {
    Eigen::VectorXd r;
    Eigen::MatrixXd j;
    (*this)(p, r, j);
    return 2.0 * j.transpose() * r;
  }
};

inline GaussianFit fit_gaussian_peak(const std::vector<Sample>& samples,
                                     const LmOptions& opt = {}) {
  if (samples.size() < 5) throw FitError("Gaussian fit needs at least 5 samples");
  double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  double xmin = ymin, xmax = -ymin;
  for (const auto& s : samples) {
    if (!std::isfinite(s.x) || !std::isfinite(s.y) || s.y < 0.0)
      throw FitError("samples must be finite with non-negative counts");
    ymin = std::min(ymin, s.y);
    ymax = std::max(ymax, s.y);
    xmin = std::min(xmin, s.x);
    xmax = std::max(xmax, s.x);
  }
  if (!(xmax > xmin)) throw FitError("samples do not span a range");
  if (ymax - ymin <= 3.0 * poisson_sigma(ymin)) throw FitError("no peak above the noise floor");

  // moments of the baseline-subtracted samples as the starting point
  double w_sum = 0.0, m1 = 0.0;
  for (const auto& s : samples) {
    double w = s.y - ymin;
    w_sum += w;
    m1 += w * s.x;
  }
  double mu0 = m1 / w_sum, m2 = 0.0;
  for (const auto& s : samples) m2 += (s.y - ymin) * (s.x - mu0) * (s.x - mu0);
  double sigma0 = std::sqrt(m2 / w_sum);
  if (!(sigma0 > 0.0)) sigma0 = 0.1 * (xmax - xmin);

  Eigen::VectorXd p0(3);
  p0 << ymax, mu0, sigma0;
  GaussianModel model{&samples};
  LmResult res = levenberg_marquardt(model, p0, opt);

  GaussianFit f;
  f.amplitude = res.params(0);
  f.mean = res.params(1);
  f.sigma = std::abs(res.params(2));
  f.covariance = res.covariance;
  f.objective = res.objective;
  f.iterations = res.iterations;
  if (!res.converged) throw FitError("Gaussian fit did not converge");
  if (!(f.sigma > 0.0) || !std::isfinite(f.sigma) || f.amplitude <= 0.0 ||
      f.mean < xmin || f.mean > xmax || f.sigma > (xmax - xmin))
    throw FitError("Gaussian fit is degenerate");

  const double c = std::sqrt(two_pi) * erf_5_over_sqrt2;
  f.integral_5sigma = f.amplitude * f.sigma * c;
  Eigen::Vector3d grad(f.sigma * c, 0.0, f.amplitude * c);
  f.integral_error = std::sqrt(std::max(0.0, grad.dot(f.covariance * grad)));
  return f;
}

// ---------------------------------------------------------------------------
// Fringe C (1 + V cos(phi + phi0))

struct FringePoint {
  double phase = 0.0;
  double counts = 0.0;
};

struct FringeFit {
  double offset = 0.0;     // C
  double amplitude = 0.0;  // C V
  double phase = 0.0;      // phi0 in (-pi, pi]
  double visibility = 0.0;
  double offset_error = 0.0;
  double visibility_error = 0.0;
  double phase_error = 0.0;
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();  // (a, b, c) of a + b cos + c sin
  double objective = 0.0;

  double model(double phi) const {
    return offset + amplitude * std::cos(phi + phase);
  }
};

/// Largest arc of the circle covered by the sample phases.
inline double phase_coverage(std::vector<double> phases) {
  if (phases.empty()) return 0.0;
  for (double& p : phases) p = wrap_phase(p);
  std::sort(phases.begin(), phases.end());
  double gap = phases.front() + two_pi - phases.back();
  for (std::size_t k = 1; k < phases.size(); ++k) gap = std::max(gap, phases[k] - phases[k - 1]);
  return two_pi - gap;
}

/// Weighted linear model a + b cos(phi) + c sin(phi).
struct FringeLinearModel {
  const std::vector<FringePoint>* points;

  void operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& j) const {
    const auto& pts = *points;
    const Eigen::Index n = static_cast<Eigen::Index>(pts.size());
    r.resize(n);
    j.resize(n, 3);
    for (Eigen::Index k = 0; k < n; ++k) {
      double w = 1.0 / poisson_sigma(pts[k].counts);
      double c = std::cos(pts[k].phase), s = std::sin(pts[k].phase);
      r(k) = (p(0) + p(1) * c + p(2) * s - pts[k].counts) * w;
      j(k, 0) = w;
      j(k, 1) = c * w;
      j(k, 2) = s * w;
    }
  }

  double objective(const Eigen::VectorXd& p) const {
    Eigen::VectorXd r;
    Eigen::MatrixXd j;
    (*this)(p, r, j);
    return r.squaredNorm();
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& p) const {
    Eigen::VectorXd r;
    Eigen::MatrixXd j;
    (*this)(p, r, j);
    return 2.0 * j.transpose() * r;
  }
};

inline FringeFit fit_fringe(const std::vector<FringePoint>& points) {
  if (points.size() < 4) throw FitError("fringe fit needs at least 4 points");
  std::vector<double> phases;
  for (const auto& p : points) {
    if (!std::isfinite(p.phase) || !std::isfinite(p.counts) || p.counts < 0.0)
      throw FitError("fringe points must be finite with non-negative counts");
    phases.push_back(p.phase);
  }
  if (phase_coverage(phases) < pi - 1e-9) throw FitError("fringe phases cover less than pi");

  FringeLinearModel model{&points};
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(3), r;
  Eigen::MatrixXd j;
  model(zero, r, j);
  Eigen::Matrix3d jtj = j.transpose() * j;
  Eigen::FullPivLU<Eigen::Matrix3d> lu(jtj);
  if (lu.rank() < 3) throw FitError("fringe phases do not determine a sinusoid");
  Eigen::Vector3d x = lu.solve(-(j.transpose() * r));
  Eigen::Matrix3d cov = lu.inverse();

  FringeFit f;
  f.covariance = cov;
  f.objective = model.objective(x);
  const double a = x(0), b = x(1), c = x(2);
  if (!(a > 0.0)) throw FitError("fringe offset is not positive");
  const double amp = std::hypot(b, c);
  f.offset = a;
  f.amplitude = amp;
  f.visibility = amp / a;
  f.phase = amp > 0.0 ? std::atan2(-c, b) : 0.0;

  // first-order propagation from (a, b, c)
  f.offset_error = std::sqrt(cov(0, 0));
  if (amp > 0.0) {
    Eigen::Vector3d gv(-amp / (a * a), b / (amp * a), c / (amp * a));
    Eigen::Vector3d gp(0.0, c / (amp * amp), -b / (amp * amp));
    f.visibility_error = std::sqrt(std::max(0.0, gv.dot(cov * gv)));
    f.phase_error = std::sqrt(std::max(0.0, gp.dot(cov * gp)));
  } else {
    f.visibility_error = std::sqrt(std::max(cov(1, 1), cov(2, 2))) / a;
    f.phase_error = pi;
  }
  return f;
}

// ---------------------------------------------------------------------------
// Calibration map C (1 + V cos(kappa_s P_s + kappa_i P_i - phi_p))

struct MapPoint {
  double power_s = 0.0;  // mW
  double power_i = 0.0;  // mW
  double counts = 0.0;
};

struct CalibrationFit {
  double kappa_s = 0.0;  // rad / mW
  double kappa_i = 0.0;
  double phi0_s = 0.0;   // gauge: fixed at 0
  double phi0_i = 0.0;   // gauge: fixed at 0
  double phi_p = 0.0;    // [0, 2 pi)
  double offset = 0.0;   // C
  double visibility = 0.0;
  /// Parameter order (C, V, kappa_s, kappa_i, phi_p).
  Eigen::Matrix<double, 5, 5> covariance = Eigen::Matrix<double, 5, 5>::Zero();
  double objective = 0.0;
  double residual_norm = 0.0;
  int iterations = 0;
  std::size_t points = 0;

  double phi_p_error() const { return std::sqrt(covariance(4, 4)); }
  double kappa_s_error() const { return std::sqrt(covariance(2, 2)); }
  double kappa_i_error() const { return std::sqrt(covariance(3, 3)); }
  double visibility_error() const { return std::sqrt(covariance(1, 1)); }

  double model(double ps, double pi_) const {
    return offset * (1.0 + visibility * std::cos(kappa_s * ps + phi0_s + kappa_i * pi_ +
                                                 phi0_i - phi_p));
  }
};

struct CalibrationOptions {
  double kappa_min = 0.02;  // rad / mW, grid search range
  double kappa_max = 2.0;
  /// Phase error across the sampled span allowed between grid nodes.
  double grid_phase_step = pi / 8.0;
  /// Accept maps where one heater is held fixed; its kappa is then reported
  /// as 0 and absorbed into phi_p.
  bool allow_fixed_axis = false;
  LmOptions lm{};
};

/// Weighted residuals of the map model, parameters (C, V, kappa_s, kappa_i, phi_p).
struct CalibrationModel {
  const std::vector<MapPoint>* points;
  bool fit_kappa_i = true;

  void operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& j) const {
    const auto& pts = *points;
    const Eigen::Index n = static_cast<Eigen::Index>(pts.size());
    r.resize(n);
    j.resize(n, 5);
    const double c0 = p(0), v = p(1), ks = p(2), ki = fit_kappa_i ? p(3) : 0.0, ph = p(4);
    for (Eigen::Index k = 0; k < n; ++k) {
      double w = 1.0 / poisson_sigma(pts[k].counts);
      double arg = ks * pts[k].power_s + ki * pts[k].power_i - ph;
      double cs = std::cos(arg), sn = std::sin(arg);
      r(k) = (c0 * (1.0 + v * cs) - pts[k].counts) * w;
      j(k, 0) = (1.0 + v * cs) * w;
      j(k, 1) = c0 * cs * w;
      j(k, 2) = -c0 * v * sn * pts[k].power_s * w;
      j(k, 3) = fit_kappa_i ? -c0 * v * sn * pts[k].power_i * w : 0.0;
      j(k, 4) = c0 * v * sn * w;
    }
  }

  double objective(const Eigen::VectorXd& p) const {
    Eigen::VectorXd r;
    Eigen::MatrixXd j;
    (*this)(p, r, j);
    return r.squaredNorm();
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& p) const {
    Eigen::VectorXd r;
    Eigen::MatrixXd j;
    (*this)(p, r, j);
    return 2.0 * j.transpose() * r;
  }
};

namespace detail {

struct Projection {
  double cost = std::numeric_limits<double>::infinity();
  double a = 0.0, b = 0.0, c = 0.0;
};

/// Best linear (a, b, c) for fixed kappas; the nonlinear part is profiled out.
inline Projection project_map(const std::vector<MapPoint>& pts, double ks, double ki) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  double yy = 0.0;
  for (const auto& p : pts) {
    double w = 1.0 / std::max(p.counts, 1.0);
    double arg = ks * p.power_s + ki * p.power_i;
    Eigen::Vector3d row(1.0, std::cos(arg), std::sin(arg));
    m.noalias() += w * row * row.transpose();
    v += w * p.counts * row;
    yy += w * p.counts * p.counts;
  }
  Projection out;
  Eigen::LDLT<Eigen::Matrix3d> ldlt(m);
  if (ldlt.info() != Eigen::Success) return out;
  Eigen::Vector3d x = ldlt.solve(v);
  if (!x.allFinite()) return out;
  out.cost = yy - 2.0 * x.dot(v) + x.dot(m * x);
  out.a = x(0);
  out.b = x(1);
  out.c = x(2);
  return out;
}

inline std::vector<double> kappa_grid(double lo, double hi, double step) {
  std::vector<double> g;
  int n = std::max(2, static_cast<int>(std::ceil((hi - lo) / step)) + 1);
  n = std::min(n, 4000);
  for (int k = 0; k < n; ++k) g.push_back(lo + (hi - lo) * k / (n - 1));
  return g;
}

/// pi / step when the distinct powers of one axis are evenly spaced, since
/// larger kappas alias onto smaller ones at the sample points; else infinity.
inline double nyquist_kappa(std::vector<double> powers) {
  std::sort(powers.begin(), powers.end());
  powers.erase(std::unique(powers.begin(), powers.end()), powers.end());
  if (powers.size() < 2) return std::numeric_limits<double>::infinity();
  const double step = (powers.back() - powers.front()) / static_cast<double>(powers.size() - 1);
  for (std::size_t k = 1; k < powers.size(); ++k)
    if (std::abs(powers[k] - powers[k - 1] - step) > 1e-6 * step)
      return std::numeric_limits<double>::infinity();
  return pi / step;
}

}  // namespace detail

inline CalibrationFit fit_calibration_map(const std::vector<MapPoint>& points,
                                          const CalibrationOptions& opt = {}) {
  if (points.size() < 6) throw FitError("calibration map needs at least 6 points");
  double smin = std::numeric_limits<double>::infinity(), smax = -smin, imin = smin, imax = -smin;
  for (const auto& p : points) {
    if (!std::isfinite(p.power_s) || !std::isfinite(p.power_i) || !std::isfinite(p.counts) ||
        p.counts < 0.0 || p.power_s < 0.0 || p.power_i < 0.0)
      throw FitError("map points must be finite with non-negative powers and counts");
    smin = std::min(smin, p.power_s);
    smax = std::max(smax, p.power_s);
    imin = std::min(imin, p.power_i);
    imax = std::max(imax, p.power_i);
  }
  const double span_s = smax - smin, span_i = imax - imin;
  const bool fixed_i = span_i == 0.0;
  if (span_s == 0.0) throw FitError("insufficient span: signal heater is never swept");
  if (fixed_i && !opt.allow_fixed_axis)
    throw FitError("insufficient span: idler heater is never swept");
  require(opt.kappa_min > 0.0 && opt.kappa_max > opt.kappa_min, "invalid kappa search range");

  std::vector<double> ps, pis;
  for (const auto& p : points) {
    ps.push_back(p.power_s);
    pis.push_back(p.power_i);
  }
  const double max_s = std::min(opt.kappa_max, detail::nyquist_kappa(ps));
  const double max_i = std::min(opt.kappa_max, detail::nyquist_kappa(pis));
  if (max_s <= opt.kappa_min || (!fixed_i && max_i <= opt.kappa_min))
    throw FitError("heater steps too coarse for the kappa search range");

  auto grid_s = detail::kappa_grid(opt.kappa_min, max_s, opt.grid_phase_step / span_s);
  std::vector<double> grid_i{0.0};
  if (!fixed_i) grid_i = detail::kappa_grid(opt.kappa_min, max_i, opt.grid_phase_step / span_i);

  detail::Projection best;
  double best_ks = 0.0, best_ki = 0.0;
  for (double ks : grid_s)
    for (double ki : grid_i) {
      auto pr = detail::project_map(points, ks, ki);
      if (pr.cost < best.cost) {
        best = pr;
        best_ks = ks;
        best_ki = ki;
      }
    }
  if (!std::isfinite(best.cost) || !(best.a > 0.0)) throw FitError("calibration map has no fringe");

  Eigen::VectorXd p0(5);
  double amp = std::hypot(best.b, best.c);
  p0 << best.a, amp / best.a, best_ks, best_ki, std::atan2(best.c, best.b);
  CalibrationModel model{&points, !fixed_i};
  LmResult res;
  if (fixed_i) {
    // drop the kappa_i column so the normal matrix stays regular
    auto reduced = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r, Eigen::MatrixXd& j) {
      Eigen::VectorXd full(5);
      full << q(0), q(1), q(2), 0.0, q(3);
      Eigen::MatrixXd jf;
      model(full, r, jf);
      j.resize(jf.rows(), 4);
      j << jf.col(0), jf.col(1), jf.col(2), jf.col(4);
    };
    Eigen::VectorXd q0(4);
    q0 << p0(0), p0(1), p0(2), p0(4);
    LmResult rr = levenberg_marquardt(reduced, q0, opt.lm);
    res = rr;
    res.params.resize(5);
    res.params << rr.params(0), rr.params(1), rr.params(2), 0.0, rr.params(3);
    res.covariance = Eigen::MatrixXd::Zero(5, 5);
    const int map[4] = {0, 1, 2, 4};
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) res.covariance(map[a], map[b]) = rr.covariance(a, b);
  } else {
    res = levenberg_marquardt(model, p0, opt.lm);
  }
  if (!res.converged) throw FitError("calibration fit did not converge");

  CalibrationFit f;
  f.offset = res.params(0);
  f.visibility = res.params(1);
  f.kappa_s = res.params(2);
  f.kappa_i = res.params(3);
  f.phi_p = res.params(4);
  f.covariance = res.covariance;
  if (f.visibility < 0.0) {
    f.visibility = -f.visibility;
    f.phi_p += pi;
  }
  f.phi_p = wrap_phase(f.phi_p);
  f.objective = res.objective;
  f.residual_norm = std::sqrt(res.objective);
  f.iterations = res.iterations;
  f.points = points.size();
  if (!(f.offset > 0.0)) throw FitError("calibration offset is not positive");
  if (std::abs(f.kappa_s) * span_s < two_pi * (1.0 - 1e-9) ||
      (!fixed_i && std::abs(f.kappa_i) * span_i < two_pi * (1.0 - 1e-9)))
    throw FitError("insufficient span: map covers less than 2 pi of heater phase");
  return f;
}

/// Heater settings for target frame phases (phi~_s, phi~_i). The physical
/// phases are phi~ + phi_p/2; the powers are the smallest non-negative ones.
struct ProjectorPowers {
  double power_s = 0.0;
  double power_i = 0.0;
};

inline double power_for_phase(double target, double phi0, double kappa) {
  require(std::isfinite(kappa) && kappa != 0.0, "kappa must be finite and nonzero");
  double delta = wrap_phase((target - phi0) * (kappa > 0.0 ? 1.0 : -1.0));
  return delta / std::abs(kappa);
}

inline ProjectorPowers projector_powers(const CalibrationFit& fit, double frame_phase_s,
                                        double frame_phase_i,
                                        double max_power = std::numeric_limits<double>::infinity()) {
  ProjectorPowers p;
  p.power_s = power_for_phase(frame_phase_s + fit.phi_p / 2.0, fit.phi0_s, fit.kappa_s);
  p.power_i = power_for_phase(frame_phase_i + fit.phi_p / 2.0, fit.phi0_i, fit.kappa_i);
  if (p.power_s > max_power || p.power_i > max_power)
    throw InvalidArgument("requested phase is not reachable within the power limit");
  return p;
}

}  // namespace franson_lab
