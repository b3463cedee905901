#pragma once

// Maximum-likelihood two-qubit state tomography from region counts at a set
// of analysis-phase settings, with Poisson Monte-Carlo uncertainties.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "franson_lab/common.hpp"
#include "franson_lab/parallel.hpp"
#include "franson_lab/qstate.hpp"
#include "franson_lab/rng.hpp"

namespace franson_lab {

struct MeasurementRecord {
  double phi_s = 0.0;  // analysis phases in the pump-referenced frame
  double phi_i = 0.0;
  std::array<double, 9> counts{};  // region order EE, ET, EL, TE, TT, TL, LE, LT, LL
  double acquisition_s = 0.0;

  double informative_total() const {
    double n = 0.0;
    for (int k : regions::informative) n += counts[k];
    return n;
  }
  double corner_total() const { return counts[regions::EL] + counts[regions::LE]; }
};

/// The four projector settings (0,0), (pi/2,0), (pi/2,pi/2), (0,pi/2).
inline std::vector<AnalysisPhases> standard_settings() {
  return {{0.0, 0.0}, {pi / 2, 0.0}, {pi / 2, pi / 2}, {0.0, pi / 2}};
}

struct MleConfig {
  double tolerance = 1e-10;  // relative change of the log-likelihood
  int max_iterations = 2000;
  int restarts = 8;
  int mc_restarts = 2;
  double region_acceptance = 1.0;
  /// Weight of a Poisson term for corner regions observed empty, the
  /// single-pair prediction. 1 counts them like measured regions; the
  /// recorded corner counts themselves are not used.
  double corner_weight = 1.0;
  /// Fit the observed corner counts as data instead of the empty-corner term.
  bool use_corner_regions = false;
  ArmModel arms = ArmModel::ideal();
  std::uint64_t seed = 1;
  std::size_t workers = 0;

  void validate() const {
    if (!(tolerance > 0.0)) throw ConfigError("MLE tolerance must be > 0");
    if (max_iterations < 1) throw ConfigError("MLE max_iterations must be >= 1");
    if (restarts < 1 || mc_restarts < 1) throw ConfigError("MLE restart counts must be >= 1");
    if (!(region_acceptance > 0.0 && region_acceptance <= 1.0))
      throw ConfigError("region_acceptance must lie in (0, 1]");
    if (!(corner_weight >= 0.0)) throw ConfigError("corner_weight must be >= 0");
  }
};

/// Region operators per setting, scaled by the region acceptance.
inline std::vector<std::array<Matrix4c, 9>> measurement_operators(
    const std::vector<AnalysisPhases>& settings, const ArmModel& arms = ArmModel::ideal(),
    double acceptance = 1.0) {
  std::vector<std::array<Matrix4c, 9>> out;
  out.reserve(settings.size());
  for (const auto& s : settings) {
    require(std::isfinite(s.phi_s) && std::isfinite(s.phi_i), "setting phases must be finite");
    auto ops = region_operators(s, arms);
    for (auto& m : ops) m *= acceptance;
    out.push_back(ops);
  }
  return out;
}

inline std::vector<AnalysisPhases> settings_of(const std::vector<MeasurementRecord>& records) {
  std::vector<AnalysisPhases> s;
  for (const auto& r : records) s.push_back({r.phi_s, r.phi_i});
  return s;
}

namespace detail {

/// Real coordinates of a Hermitian 4x4 matrix (16 numbers).
inline Eigen::Matrix<double, 16, 1> hermitian_coords(const Matrix4c& m) {
  Eigen::Matrix<double, 16, 1> v;
  int k = 0;
  for (int r = 0; r < 4; ++r) v(k++) = m(r, r).real();
  for (int r = 0; r < 4; ++r)
    for (int c = r + 1; c < 4; ++c) {
      v(k++) = std::sqrt(2.0) * m(r, c).real();
      v(k++) = std::sqrt(2.0) * m(r, c).imag();
    }
  return v;
}

inline Matrix4c hermitian_from_coords(const Eigen::Matrix<double, 16, 1>& v) {
  Matrix4c m = Matrix4c::Zero();
  int k = 0;
  for (int r = 0; r < 4; ++r) m(r, r) = v(k++);
  for (int r = 0; r < 4; ++r)
    for (int c = r + 1; c < 4; ++c) {
      double re = v(k++) / std::sqrt(2.0), im = v(k++) / std::sqrt(2.0);
      m(r, c) = cplx(re, im);
      m(c, r) = cplx(re, -im);
    }
  return m;
}

inline Eigen::MatrixXd measurement_map(const std::vector<std::array<Matrix4c, 9>>& ops,
                                       bool corners = false) {
  const Eigen::Index per = corners ? 9 : static_cast<Eigen::Index>(regions::informative.size());
  Eigen::MatrixXd a(static_cast<Eigen::Index>(ops.size()) * per, 16);
  Eigen::Index row = 0;
  for (const auto& set : ops)
    for (int k = 0; k < 9; ++k)
      if (corners || !regions::is_corner(k)) a.row(row++) = hermitian_coords(set[k]).transpose();
  return a;
}

}  // namespace detail

/// Dimension of the Hermitian subspace the informative regions resolve.
inline int informational_rank(const std::vector<std::array<Matrix4c, 9>>& ops,
                              bool corners = false) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(detail::measurement_map(ops, corners));
  const auto& s = svd.singularValues();
  int r = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s(k) > 1e-10 * s(0)) ++r;
  return r;
}

/// Largest trace distance between rho and another state that predicts the
/// same counts up to the overall rate, scanned over directions in the
/// unobservable subspace. Zero when the data determine the state.
inline double reconstruction_ambiguity(const DensityMatrix4& rho,
                                       const std::vector<std::array<Matrix4c, 9>>& ops,
                                       bool corners = false) {
  Eigen::MatrixXd a = detail::measurement_map(ops, corners);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  std::vector<Eigen::Matrix<double, 16, 1>> null;
  for (Eigen::Index k = 0; k < 16; ++k)
    if (k >= s.size() || s(k) <= 1e-10 * s(0)) null.push_back(svd.matrixV().col(k));
  if (null.empty()) return 0.0;

  std::vector<Eigen::Matrix<double, 16, 1>> dirs;
  if (null.size() == 1) {
    dirs.push_back(null[0]);
  } else if (null.size() == 2) {
    for (int k = 0; k < 360; ++k) {
      double th = pi * k / 360.0;
      dirs.push_back(std::cos(th) * null[0] + std::sin(th) * null[1]);
    }
  } else {
    RandomEngine rng = make_engine(0, 0, 7);
    std::normal_distribution<double> nd;
    for (int k = 0; k < 2000; ++k) {
      Eigen::Matrix<double, 16, 1> d = Eigen::Matrix<double, 16, 1>::Zero();
      for (const auto& n : null) d += nd(rng) * n;
      dirs.push_back(d.normalized());
    }
  }

  double worst = 0.0;
  for (const auto& d : dirs) {
    Matrix4c dm = detail::hermitian_from_coords(d);
    const double tr_d = dm.trace().real();
    auto feasible = [&](double t) {
      double tr = 1.0 + t * tr_d;
      if (!(tr > 1e-9)) return false;
      Eigen::SelfAdjointEigenSolver<Matrix4c> es(rho.matrix() + t * dm);
      return es.eigenvalues().minCoeff() >= -1e-9 * tr;
    };
    for (double sign : {1.0, -1.0}) {
      double lo = 0.0, hi = 1e3;
      if (feasible(sign * hi)) {
        lo = hi;
      } else {
        for (int it = 0; it < 60; ++it) {
          double mid = 0.5 * (lo + hi);
          (feasible(sign * mid) ? lo : hi) = mid;
        }
      }
      double t = sign * lo;
      Matrix4c other = (rho.matrix() + t * dm) / (1.0 + t * tr_d);
      Eigen::SelfAdjointEigenSolver<Matrix4c> es(other - rho.matrix());
      worst = std::max(worst, 0.5 * es.eigenvalues().cwiseAbs().sum());
    }
  }
  return worst;
}

/// Expected counts of a state at the given settings: counts = scale * tr(M rho).
inline std::vector<MeasurementRecord> expected_counts(const DensityMatrix4& rho,
                                                      const std::vector<AnalysisPhases>& settings,
                                                      double scale,
                                                      const ArmModel& arms = ArmModel::ideal()) {
  require(scale >= 0.0, "scale must be >= 0");
  auto ops = measurement_operators(settings, arms);
  std::vector<MeasurementRecord> out;
  for (std::size_t j = 0; j < settings.size(); ++j) {
    MeasurementRecord r;
    r.phi_s = settings[j].phi_s;
    r.phi_i = settings[j].phi_i;
    for (int k = 0; k < 9; ++k)
      r.counts[k] = scale * std::max(0.0, (ops[j][k] * rho.matrix()).trace().real());
    out.push_back(r);
  }
  return out;
}

struct StateMetrics {
  double fidelity = 0.0;  // to phi+
  double concurrence = 0.0;
  double entropy = 0.0;  // von Neumann, bits
  double reduced_entropy = 0.0;
  double chsh = 0.0;
  double purity = 0.0;
  bool chsh_violation = false;
  /// Concurrence above the value a Werner state has at the CHSH threshold.
  bool concurrence_above_chsh_threshold = false;
};

inline StateMetrics report_metrics(const DensityMatrix4& rho) {
  StateMetrics m;
  m.fidelity = fidelity(rho, phi_plus());
  m.concurrence = concurrence(rho);
  m.entropy = von_neumann_entropy(rho);
  m.reduced_entropy = reduced_entropy(rho);
  m.chsh = chsh_max(rho);
  m.purity = purity(rho);
  m.chsh_violation = m.chsh > 2.0;
  m.concurrence_above_chsh_threshold = m.concurrence > (3.0 / std::sqrt(2.0) - 1.0) / 2.0;
  return m;
}

struct MleFit {
  DensityMatrix4 rho;
  double log_likelihood = 0.0;  // sum N log mu - mu over informative regions
  double rate = 0.0;             // fitted counts per unit of tr(M rho)
  int iterations = 0;
  int start = 0;  // index of the winning start
  int converged_starts = 0;
  std::vector<double> ll_trace;  // penalised log-likelihood per accepted iteration
};

namespace detail {

/// Extended Poisson likelihood in the unnormalised Cholesky factor T:
/// mu_k = scale * tr(M_k T T^dagger).
class Likelihood {
 public:
  Likelihood(const std::vector<MeasurementRecord>& records,
             const std::vector<std::array<Matrix4c, 9>>& ops, double corner_weight,
             bool use_corners)
      : corner_(Matrix4c::Zero()) {
    double n = 0.0, p = 0.0;
    for (std::size_t j = 0; j < records.size(); ++j) {
      if (!use_corners) corner_ += ops[j][regions::EL] + ops[j][regions::LE];
      for (int k = 0; k < 9; ++k) {
        if (!use_corners && regions::is_corner(k)) continue;
        ops_.push_back(ops[j][k]);
        counts_.push_back(records[j].counts[k]);
        n += records[j].counts[k];
        p += ops[j][k].trace().real() / 4.0;
      }
    }
    if (!(n > 0.0)) throw MleError("all informative counts are zero");
    if (!(p > 0.0)) throw MleError("measurement operators are empty");
    scale_ = n / p;
    corner_ *= corner_weight;
  }

  static Matrix4c factor(const Eigen::VectorXd& x) {
    Matrix4c t = Matrix4c::Zero();
    int k = 0;
    for (int r = 0; r < 4; ++r) t(r, r) = x(k++);
    for (int r = 1; r < 4; ++r)
      for (int c = 0; c < r; ++c) {
        t(r, c) = cplx(x(k), x(k + 1));
        k += 2;
      }
    return t;
  }

  static Eigen::VectorXd params(const Matrix4c& t) {
    Eigen::VectorXd x(16);
    int k = 0;
    for (int r = 0; r < 4; ++r) x(k++) = t(r, r).real();
    for (int r = 1; r < 4; ++r)
      for (int c = 0; c < r; ++c) {
        x(k++) = t(r, c).real();
        x(k++) = t(r, c).imag();
      }
    return x;
  }

  /// Parameters of the lower Cholesky factor of a state, scaled to the data.
  Eigen::VectorXd params_for(const Matrix4c& rho) const {
    Matrix4c r = rho + 1e-6 * Matrix4c::Identity();
    Eigen::LLT<Matrix4c> llt(r / r.trace().real());
    Matrix4c t = llt.matrixL();
    // fix the phase so the diagonal is real
    for (int c = 0; c < 4; ++c) {
      cplx d = t(c, c);
      if (std::abs(d) > 0.0) t.col(c) *= std::conj(d) / std::abs(d);
    }
    return params(t);
  }

  /// Negative log-likelihood plus the corner term, with gradient; +inf
  /// where a count meets mu = 0.
  double operator()(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
    Matrix4c t = factor(x);
    Matrix4c rho = t * t.adjoint();
    Matrix4c g = scale_ * corner_;
    double f = scale_ * (corner_ * rho).trace().real();
    for (std::size_t k = 0; k < ops_.size(); ++k) {
      double mu = scale_ * (ops_[k] * rho).trace().real();
      double n = counts_[k];
      if (n > 0.0) {
        if (!(mu > 0.0)) return std::numeric_limits<double>::infinity();
        f += mu - n * std::log(mu);
        if (grad) g += (1.0 - n / mu) * scale_ * ops_[k];
      } else {
        f += mu;
        if (grad) g += scale_ * ops_[k];
      }
    }
    if (grad) {
      Matrix4c d = 2.0 * g * t;  // d f / d conj(T), doubled
      grad->resize(16);
      int k = 0;
      for (int r = 0; r < 4; ++r) (*grad)(k++) = d(r, r).real();
      for (int r = 1; r < 4; ++r)
        for (int c = 0; c < r; ++c) {
          (*grad)(k++) = d(r, c).real();
          (*grad)(k++) = d(r, c).imag();
        }
    }
    return f;
  }

  double log_likelihood(const Eigen::VectorXd& x) const {
    Matrix4c t = factor(x);
    Matrix4c rho = t * t.adjoint();
    double ll = 0.0;
    for (std::size_t k = 0; k < ops_.size(); ++k) {
      double mu = scale_ * (ops_[k] * rho).trace().real();
      ll += (counts_[k] > 0.0 ? counts_[k] * std::log(mu) : 0.0) - mu;
    }
    return ll;
  }

  double rate(const Eigen::VectorXd& x) const {
    Matrix4c t = factor(x);
    return scale_ * (t * t.adjoint()).trace().real();
  }

  DensityMatrix4 state(const Eigen::VectorXd& x) const {
    Matrix4c t = factor(x);
    Matrix4c rho = t * t.adjoint();
    double tr = rho.trace().real();
    if (!(tr > 0.0)) throw MleError("reconstructed factor vanished");
    rho /= tr;
    rho = 0.5 * (rho + rho.adjoint()).eval();
    return DensityMatrix4::from_matrix(rho);
  }

  double count_total() const {
    double n = 0.0;
    for (double c : counts_) n += c;
    return n;
  }

 private:
  std::vector<Matrix4c> ops_;
  std::vector<double> counts_;
  Matrix4c corner_;
  double scale_ = 1.0;
};

struct BfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // objective after each accepted step
};

/// Quasi-Newton descent with Armijo backtracking; every accepted step
/// lowers the objective.
template <class F>
BfgsResult bfgs(const F& fn, Eigen::VectorXd x, double rel_tol, int max_iter, double scale_ref) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd g, g_new;
  double f = fn(x, &g);
  if (!std::isfinite(f)) throw MleError("likelihood is not finite at the starting point");
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;
  BfgsResult out;
  out.trace.push_back(f);
  int quiet = 0;
  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it + 1;
    Eigen::VectorXd p = -h * g;
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      h.setIdentity();
      p = -g;
      slope = -g.squaredNorm();
    }
    if (slope == 0.0) {
      out.converged = true;
      break;
    }
    double step = 1.0, f_new = f;
    Eigen::VectorXd x_new;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * p;
      f_new = fn(x_new, &g_new);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // no further decrease resolvable at double precision
      out.converged = true;
      break;
    }
    Eigen::VectorXd s = x_new - x, y = g_new - g;
    double sy = s.dot(y);
    if (sy > 1e-14 * s.norm() * y.norm()) {
      if (!scaled) {
        h *= sy / y.squaredNorm();
        scaled = true;
      }
      double rho = 1.0 / sy;
      Eigen::MatrixXd i = Eigen::MatrixXd::Identity(n, n);
      h = (i - rho * s * y.transpose()) * h * (i - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    double change = f - f_new;
    x = x_new;
    g = g_new;
    f = f_new;
    out.trace.push_back(f);
    // both the realised decrease and the quasi-Newton estimate of what remains
    const double limit = rel_tol * std::max(std::abs(scale_ref), 1.0);
    double remaining = -0.5 * g.dot(h * -g);
    quiet = change <= limit && std::abs(remaining) <= limit ? quiet + 1 : 0;
    if (quiet >= 2) {
      out.converged = true;
      break;
    }
  }
  out.x = x;
  out.f = f;
  return out;
}

}  // namespace detail

/// Fits rho by maximising sum_k N_k log mu_k - mu_k over the seven
/// informative regions of every record. Start 0 is the maximally mixed state
/// (or `warm` when given); further starts are seeded random factors.
inline MleFit mle_fit(const std::vector<MeasurementRecord>& records, const MleConfig& cfg,
                      int restarts, const Matrix4c* warm = nullptr,
                      std::uint64_t stream = 0) {
  cfg.validate();
  if (records.empty()) throw MleError("no measurement records");
  for (const auto& r : records)
    for (double c : r.counts)
      if (!(c >= 0.0) || !std::isfinite(c)) throw MleError("counts must be finite and >= 0");
  auto ops = measurement_operators(settings_of(records), cfg.arms, cfg.region_acceptance);
  detail::Likelihood lik(records, ops, cfg.corner_weight, cfg.use_corner_regions);
  const double ref = lik.count_total() * (1.0 + std::log(std::max(lik.count_total(), 1.0)));

  MleFit best;
  bool have = false;
  double best_f = std::numeric_limits<double>::infinity();
  detail::BfgsResult best_run;
  for (int start = 0; start < restarts; ++start) {
    Eigen::VectorXd x0;
    if (start == 0) {
      x0 = lik.params_for(warm ? *warm : Matrix4c::Identity() / 4.0);
    } else {
      RandomEngine rng = make_engine(cfg.seed, stream * 1000 + start, 5);
      std::normal_distribution<double> nd;
      x0.resize(16);
      for (int k = 0; k < 16; ++k) x0(k) = nd(rng);
      x0 /= x0.norm();
    }
    detail::BfgsResult run;
    try {
      run = detail::bfgs(lik, x0, cfg.tolerance, cfg.max_iterations, ref);
    } catch (const MleError&) {
      continue;
    }
    if (run.converged) ++best.converged_starts;
    if (run.converged && run.f < best_f) {
      best_f = run.f;
      best_run = run;
      best.start = start;
      have = true;
    }
  }
  if (!have) throw MleError("likelihood maximisation did not converge after restarts");
  best.rho = lik.state(best_run.x);
  best.rate = lik.rate(best_run.x);
  best.iterations = best_run.iterations;
  best.log_likelihood = lik.log_likelihood(best_run.x);
  for (double f : best_run.trace) best.ll_trace.push_back(-f);
  return best;
}

struct MetricDistribution {
  std::vector<double> samples;
  double mean = 0.0;
  double std = 0.0;

  void finalize() {
    if (samples.empty()) return;
    double s = 0.0;
    for (double v : samples) s += v;
    mean = s / static_cast<double>(samples.size());
    double q = 0.0;
    for (double v : samples) q += (v - mean) * (v - mean);
    std = samples.size() > 1 ? std::sqrt(q / static_cast<double>(samples.size() - 1)) : 0.0;
  }
};

struct MonteCarloSummary {
  int trials = 0;
  int failures = 0;
  MetricDistribution fidelity, concurrence, entropy, purity, chsh;
};

/// Trial 0 is the point estimate of the observed counts; trial t > 0 draws every count from a
/// Poisson law with the observed value as mean. Failed fits are counted.
inline MonteCarloSummary monte_carlo_errors(const std::vector<MeasurementRecord>& records,
                                            const MleFit& point, const MleConfig& cfg,
                                            int n_trials) {
  require(n_trials >= 1, "n_trials must be >= 1");
  std::vector<std::optional<StateMetrics>> results(n_trials);
  const Matrix4c warm = point.rho.matrix();
  parallel_for(static_cast<std::size_t>(n_trials), worker_count(cfg.workers), [&](std::size_t t) {
    std::vector<MeasurementRecord> trial = records;
    if (t > 0) {
      RandomEngine rng = make_engine(cfg.seed, t, 6);
      for (auto& r : trial)
        for (double& c : r.counts) {
          if (c > 0.0) {
            std::poisson_distribution<std::int64_t> pd(c);
            c = static_cast<double>(pd(rng));
          }
        }
    }
    if (t == 0) {
      results[t] = report_metrics(point.rho);
      return;
    }
    try {
      MleFit f = mle_fit(trial, cfg, cfg.mc_restarts, &warm, t + 1);
      results[t] = report_metrics(f.rho);
    } catch (const MleError&) {
    }
  });
  MonteCarloSummary s;
  s.trials = n_trials;
  for (const auto& r : results) {
    if (!r) {
      ++s.failures;
      continue;
    }
    s.fidelity.samples.push_back(r->fidelity);
    s.concurrence.samples.push_back(r->concurrence);
    s.entropy.samples.push_back(r->entropy);
    s.purity.samples.push_back(r->purity);
    s.chsh.samples.push_back(r->chsh);
  }
  for (auto* d : {&s.fidelity, &s.concurrence, &s.entropy, &s.purity, &s.chsh}) d->finalize();
  return s;
}

struct TomographyResult {
  DensityMatrix4 rho;
  StateMetrics metrics;
  MonteCarloSummary monte_carlo;
  double log_likelihood = 0.0;
  int iterations = 0;
  int converged_starts = 0;
  std::vector<double> ll_trace;
  int informational_rank = 0;
  bool informationally_complete = false;
  double ambiguity = 0.0;  // see reconstruction_ambiguity
  double corner_counts = 0.0;
  double corner_fraction = 0.0;  // corners over all assigned counts
};

inline TomographyResult tomography(const std::vector<MeasurementRecord>& records,
                                   const MleConfig& cfg, int n_trials) {
  MleFit fit = mle_fit(records, cfg, cfg.restarts);
  TomographyResult r;
  r.rho = fit.rho;
  r.metrics = report_metrics(fit.rho);
  r.log_likelihood = fit.log_likelihood;
  r.iterations = fit.iterations;
  r.converged_starts = fit.converged_starts;
  r.ll_trace = fit.ll_trace;
  auto ops = measurement_operators(settings_of(records), cfg.arms, cfg.region_acceptance);
  r.informational_rank = informational_rank(ops, cfg.use_corner_regions);
  r.informationally_complete = r.informational_rank == 16;
  r.ambiguity = r.informationally_complete
                    ? 0.0
                    : reconstruction_ambiguity(fit.rho, ops, cfg.use_corner_regions);
  double all = 0.0;
  for (const auto& rec : records) {
    r.corner_counts += rec.corner_total();
    all += rec.corner_total() + rec.informative_total();
  }
  r.corner_fraction = all > 0.0 ? r.corner_counts / all : 0.0;
  if (n_trials > 0) r.monte_carlo = monte_carlo_errors(records, fit, cfg, n_trials);
  return r;
}

/// Point reconstruction without Monte-Carlo trials.
inline TomographyResult mle_reconstruct(const std::vector<MeasurementRecord>& records,
                                        const MleConfig& cfg) {
  return tomography(records, cfg, 0);
}

}  // namespace franson_lab
