#pragma once

// Pair-number statistics of single-mode squeezed vacuum and the estimators
// used to characterise a pulsed SPDC source.

#include <algorithm>
#include <cmath>
#include <vector>

#include "franson_lab/common.hpp"

namespace franson_lab {

struct SqueezingParam {
  double s = 0.0;
  double theta = 0.0;
};

/// Probability of n pairs in one pump pulse:
///   sech(s) (2n)! / (4^n (n!)^2) tanh^{2n}(s).
inline double squeezed_pair_prob(double s, int n) {
  require(s >= 0.0 && std::isfinite(s), "squeezing parameter must be finite and >= 0");
  require(n >= 0, "pair number must be >= 0");
  if (s == 0.0) return n == 0 ? 1.0 : 0.0;
  const double t = std::tanh(s);
  double log_p = -std::log(std::cosh(s)) + std::lgamma(2.0 * n + 1.0) -
                 n * std::log(4.0) - 2.0 * std::lgamma(n + 1.0) +
                 2.0 * n * std::log(t);
  return std::exp(log_p);
}

/// Sum of P(s, n) for n = 0..cutoff.
inline double squeezed_series_total(double s, int cutoff) {
  double acc = 0.0;
  for (int n = 0; n <= cutoff; ++n) acc += squeezed_pair_prob(s, n);
  return acc;
}

/// Pair counts over an early/late pump pulse pair.
struct PairProbabilities {
  double p0 = 1.0;
  double p1 = 0.0;
  double p2 = 0.0;
  double higher = 0.0;  // three or more pairs; excluded from p0..p2
  double p2_split = 0.0;  // part of p2 with one pair in each pulse

  double p2_same_pulse() const { return std::max(0.0, p2 - p2_split); }

  double total() const { return p0 + p1 + p2 + higher; }
};

inline PairProbabilities pulse_pair_probs(double s) {
  const double q0 = squeezed_pair_prob(s, 0);
  const double q1 = squeezed_pair_prob(s, 1);
  const double q2 = squeezed_pair_prob(s, 2);
  PairProbabilities p;
  p.p0 = q0 * q0;
  p.p1 = 2.0 * q0 * q1;
  p.p2 = 2.0 * q0 * q2 + q1 * q1;
  p.p2_split = q1 * q1;
  p.higher = std::max(0.0, 1.0 - p.p0 - p.p1 - p.p2);
  return p;
}

/// Squeezing that maximises the single-pair probability P(s, 1).
inline double max_single_pair_squeezing() { return std::asinh(std::sqrt(2.0)); }
/// max_s P(s, 1) = 1 / (3 sqrt 3).
inline double max_single_pair_probability() { return 1.0 / (3.0 * std::sqrt(3.0)); }

/// Inverts P(s, 1) = p on the rising branch by bisection.
inline double s_from_pair_probability(double p) {
  require(p > 0.0 && p < max_single_pair_probability(),
          "pair probability outside the achievable range (0, 1/(3 sqrt 3))");
  double lo = 0.0, hi = max_single_pair_squeezing();
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double f = squeezed_pair_prob(mid, 1) - p;
    if (std::abs(f) < 1e-15 || hi - lo < 1e-16) return mid;
    (f < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Linear pair probability versus off-chip average pump power.
struct PowerCalibration {
  double slope = 2.79e-3;  // per uW off-chip
  double gc_loss_db = 7.0;
  double rep_rate = 80e6;  // Hz

  void validate() const {
    require(slope > 0.0 && std::isfinite(slope), "calibration slope must be > 0");
    require(gc_loss_db >= 0.0, "grating coupler loss must be >= 0 dB");
    require(rep_rate > 0.0, "repetition rate must be > 0");
  }
};

inline double spdc_prob_from_power(double power_uW, const PowerCalibration& cal) {
  cal.validate();
  require(power_uW >= 0.0, "pump power must be >= 0");
  return cal.slope * power_uW;
}

/// Average power after one grating coupler, in the unit of the input.
inline double on_chip_power(double off_chip_power, double gc_loss_db) {
  require(off_chip_power >= 0.0, "pump power must be >= 0");
  return off_chip_power / db_to_linear(gc_loss_db);
}

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

/// Pair probability from the accidental peak one repetition period away
/// relative to the zero-delay peak, with Poisson error propagation.
inline Estimate estimate_p_from_histogram(double center_counts, double side_counts) {
  require(center_counts >= 0.0 && side_counts >= 0.0, "counts must be >= 0");
  if (center_counts == 0.0) throw InvalidArgument("zero coincidences at zero delay");
  Estimate e;
  e.value = side_counts / center_counts;
  e.error = std::sqrt(side_counts + side_counts * side_counts / center_counts) /
            center_counts;
  return e;
}

struct KlyshkoEfficiency {
  double signal = 0.0;  // C / S_i, linear
  double idler = 0.0;   // C / S_s, linear
  double signal_db = 0.0;
  double idler_db = 0.0;
  double geometric_db = 0.0;   // 10 log10(C / sqrt(S_s S_i))
  double arithmetic_db = 0.0;  // 10 log10 of the mean of the two ratios
};

inline KlyshkoEfficiency klyshko_efficiency(double singles_s, double singles_i,
                                            double coincidences) {
  if (!(singles_s > 0.0) || !(singles_i > 0.0))
    throw InvalidArgument("singles rates must be > 0");
  require(coincidences > 0.0, "coincidence rate must be > 0");
  KlyshkoEfficiency k;
  k.signal = coincidences / singles_i;
  k.idler = coincidences / singles_s;
  k.signal_db = linear_to_db(k.signal);
  k.idler_db = linear_to_db(k.idler);
  k.geometric_db = 0.5 * (k.signal_db + k.idler_db);
  k.arithmetic_db = linear_to_db(0.5 * (k.signal + k.idler));
  return k;
}

/// Generated pair rate per unit on-chip power. The detected rate is divided
/// by both channel efficiencies (linear) and by the on-chip power; an extra
/// coupling correction in dB is removed from the detection chain.
inline double brightness(double pair_rate_hz, double eta_signal, double eta_idler,
                         double on_chip_power_mw, double coupling_correction_db = 0.0) {
  require(pair_rate_hz >= 0.0, "pair rate must be >= 0");
  require(eta_signal > 0.0 && eta_signal <= 1.0 && eta_idler > 0.0 && eta_idler <= 1.0,
          "channel efficiencies must lie in (0, 1]");
  require(on_chip_power_mw > 0.0, "on-chip power must be > 0");
  return pair_rate_hz / (eta_signal * eta_idler) / on_chip_power_mw /
         db_to_linear(coupling_correction_db);
}

}  // namespace franson_lab
