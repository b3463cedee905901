#pragma once

// Damped least squares (Levenberg-Marquardt) on weighted residuals.

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "franson_lab/common.hpp"

namespace franson_lab {

struct LmOptions {
  int max_iterations = 200;
  double relative_tolerance = 1e-10;  // on the objective
  double initial_damping = 1e-3;
};

struct LmResult {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;  // (J^T J)^-1 at the solution
  double objective = 0.0;      // sum of squared weighted residuals
  int iterations = 0;
  bool converged = false;
};

/// `model(x, r, J)` fills weighted residuals r and their Jacobian J at x.
/// Stops when an accepted step changes the objective by less than the
/// relative tolerance, or after max_iterations.
template <class Model>
LmResult levenberg_marquardt(Model&& model, Eigen::VectorXd x, const LmOptions& opt = {}) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd r, r_try;
  Eigen::MatrixXd jac, jac_try;
  model(x, r, jac);
  double f = r.squaredNorm();
  if (!std::isfinite(f)) throw FitError("objective is not finite at the starting point");
  double lambda = opt.initial_damping;
  LmResult out;

  for (int it = 0; it < opt.max_iterations; ++it) {
    out.iterations = it + 1;
    if (f == 0.0) {
      out.converged = true;
      break;
    }
    Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::VectorXd g = jac.transpose() * r;
    bool accepted = false;
    double f_try = f;
    for (int inner = 0; inner < 60; ++inner) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index k = 0; k < n; ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-12);
      Eigen::VectorXd step = a.ldlt().solve(-g);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      Eigen::VectorXd x_try = x + step;
      model(x_try, r_try, jac_try);
      f_try = r_try.squaredNorm();
      if (std::isfinite(f_try) && f_try <= f) {
        x = x_try;
        r.swap(r_try);
        jac.swap(jac_try);
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        break;
      }
      lambda *= 10.0;
      if (lambda > 1e16) break;
    }
    if (!accepted) {
      // no descent direction left: at a minimum to working precision
      out.converged = true;
      break;
    }
    double change = f - f_try;
    f = f_try;
    if (change <= opt.relative_tolerance * std::max(f, std::numeric_limits<double>::min())) {
      out.converged = true;
      break;
    }
  }

  out.params = x;
  out.objective = f;
  Eigen::MatrixXd jtj = jac.transpose() * jac;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
  if (lu.rank() < n) throw FitError("singular normal matrix at the solution");
  out.covariance = lu.inverse();
  return out;
}

}  // namespace franson_lab
