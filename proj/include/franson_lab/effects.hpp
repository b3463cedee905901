#pragma once

// Analytic models for the effects that limit or tune the fringe: pump
// dispersion, dispersion-limited visibility, double-pair accidentals,
// heater phase and arm balancing.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "franson_lab/common.hpp"
#include "franson_lab/qstate.hpp"
#include "franson_lab/source.hpp"

namespace franson_lab {

struct FiberDispersion {
  double D = -130.0;       // ps / (nm km)
  double length = 0.015;   // km
  double bandwidth_fwhm = 8.8;  // nm
};

/// Temporal broadening |D| L dlambda in ps.
inline double fiber_broadening(const FiberDispersion& d) {
  require(std::isfinite(d.D), "dispersion parameter must be finite");
  require(d.length >= 0.0, "fiber length must be >= 0");
  require(d.bandwidth_fwhm >= 0.0, "bandwidth must be >= 0");
  return std::abs(d.D) * d.length * d.bandwidth_fwhm;
}

struct VisibilityAnchor {
  double bandwidth_nm = 0.0;
  double visibility = 1.0;
};

/// Overlap visibility of a Gaussian wavepacket with a replica carrying a
/// residual quadratic spectral phase:
///   V(bw) = (1 + (c bw^2)^2)^(-1/4)
/// The constant c lumps the unknown group-delay dispersion and is fitted to
/// (bandwidth, visibility) anchors.
class VisibilityModel {
 public:
  VisibilityModel() = default;

  static VisibilityModel with_constant(double c) {
    require(c >= 0.0 && std::isfinite(c), "dispersion constant must be >= 0");
    VisibilityModel m;
    m.constant_ = c;
    return m;
  }

  /// Least-squares fit of c over the anchors.
  static VisibilityModel calibrate(const std::vector<VisibilityAnchor>& anchors) {
    require(!anchors.empty(), "at least one visibility anchor is required");
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (const auto& a : anchors) {
      require(a.bandwidth_nm > 0.0, "anchor bandwidth must be > 0");
      require(a.visibility > 0.0 && a.visibility <= 1.0, "anchor visibility must lie in (0, 1]");
      double c = std::sqrt(std::pow(a.visibility, -4.0) - 1.0) / (a.bandwidth_nm * a.bandwidth_nm);
      lo = first ? c : std::min(lo, c);
      hi = first ? c : std::max(hi, c);
      first = false;
    }
    // root of the cost gradient, bracketed by the single-anchor solutions
    auto gradient = [&](double c) {
      double g = 0.0;
      for (const auto& a : anchors) {
        double bw2 = a.bandwidth_nm * a.bandwidth_nm;
        double x = c * bw2;
        double dv = -0.5 * x * bw2 * std::pow(1.0 + x * x, -1.25);
        g += 2.0 * (curve(c, a.bandwidth_nm) - a.visibility) * dv;
      }
      return g;
    };
    double a = lo, b = hi;
    for (int it = 0; it < 200 && b - a > 0.0; ++it) {
      double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      (gradient(mid) < 0.0 ? a : b) = mid;
    }
    VisibilityModel m;
    m.constant_ = 0.5 * (a + b);
    m.anchors_ = anchors;
    return m;
  }

  bool calibrated() const { return constant_.has_value(); }
  double constant() const {
    if (!constant_) throw InvalidArgument("visibility model is not calibrated");
    return *constant_;
  }
  const std::vector<VisibilityAnchor>& anchors() const { return anchors_; }

  static double curve(double c, double bw) {
    double x = c * bw * bw;
    return std::pow(1.0 + x * x, -0.25);
  }

 private:
  std::optional<double> constant_;
  std::vector<VisibilityAnchor> anchors_;
};

inline VisibilityModel default_visibility_model() {
  return VisibilityModel::calibrate({{8.8, 0.794}, {10.5, 0.707}});
}

inline double visibility_vs_bandwidth(double bw_nm, const VisibilityModel& model) {
  require(bw_nm >= 0.0 && std::isfinite(bw_nm), "bandwidth must be >= 0");
  return VisibilityModel::curve(model.constant(), bw_nm);
}

/// Expected (signal, idler) record counts per region for one pump pulse pair.
/// Every ordered (signal photon, idler photon) combination counts once, as a
/// triple-coincidence histogram does. Photons split at a lossless Y-junction
/// and are observed at one output port of each analysis interferometer.
/// Single pairs carry the dephased Bell coherence; two pairs are treated as
/// four independent photons with definite time bins.
struct RegionExpectation {
  std::array<double, 9> single{};  // from exactly one pair
  std::array<double, 9> double_pair{};

  double operator[](int k) const { return single[k] + double_pair[k]; }
};

inline RegionExpectation expected_records_per_pulse_pair(const PairProbabilities& pp,
                                                         double visibility,
                                                         const PhaseSettings& phases,
                                                         const ArmModel& arms = {}) {
  RegionExpectation r;
  // one pair: distinct channels with probability 1/2, one monitored port each
  auto d = outcome_probabilities(dephased_bell_state(visibility, phases.phi_p),
                                 {phases.phi_s, phases.phi_i}, arms);
  for (int k = 0; k < 9; ++k) r.single[k] = pp.p1 * 0.5 * d[k] / 4.0;

  // per-photon probability of detection in channel c at slot a given its bin
  auto slot_prob = [&](const ChannelArms& a, int bin, int slot) {
    double w = 0.0;
    if (slot == bin) w += a.t_short * a.t_short;
    if (slot == bin + 1) w += a.t_long * a.t_long;
    return 0.5 * w / 4.0;
  };
  auto ordered_pairs = [&](int bin_x, int bin_y) {
    std::array<double, 9> w{};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        w[regions::index(a, b)] =
            slot_prob(arms.signal, bin_x, a) * slot_prob(arms.idler, bin_y, b);
    return w;
  };

  const double one_each = pp.p2_split;
  const double same_pulse = pp.p2_same_pulse();
  // four photons; 12 ordered (signal, idler) photon combinations
  auto ee = ordered_pairs(0, 0), ll = ordered_pairs(1, 1), el = ordered_pairs(0, 1),
       le = ordered_pairs(1, 0);
  for (int k = 0; k < 9; ++k) {
    r.double_pair[k] += same_pulse * 0.5 * 12.0 * (ee[k] + ll[k]);
    r.double_pair[k] += one_each * (2.0 * ee[k] + 2.0 * ll[k] + 4.0 * el[k] + 4.0 * le[k]);
  }
  return r;
}

/// TT fringe visibility from single- and double-pair contributions, with
/// monochromatic fields and lossless propagation.
inline double visibility_vs_squeezing(double s) {
  if (!(s > 0.0)) throw InvalidArgument("visibility is undefined at s <= 0");
  auto pp = pulse_pair_probs(s);
  double hi = expected_records_per_pulse_pair(pp, 1.0, {0.0, 0.0, 0.0})[regions::TT];
  double lo = expected_records_per_pulse_pair(pp, 1.0, {pi, 0.0, 0.0})[regions::TT];
  return (hi - lo) / (hi + lo);
}

/// Linear heater: phi = phi0 + kappa P.
struct ThermoOpticMap {
  double kappa = 1.0;  // rad / mW
  double phi0 = 0.0;   // rad
};

inline double phase_from_power(double power_mw, const ThermoOpticMap& map) {
  require(std::isfinite(map.kappa) && map.kappa != 0.0, "heater kappa must be finite and nonzero");
  require(power_mw >= 0.0, "heater power must be >= 0");
  return map.phi0 + map.kappa * power_mw;
}

/// Attenuator in the short arm of an analysis interferometer.
struct VoaModel {
  double transmission = 1.0;  // power
  double excess_long_arm_loss_db = 0.0;

  /// Control setting in [0, 1] mapped to transmission cos^2(pi x / 2).
  static double transmission_at(double setting) {
    require(setting >= 0.0 && setting <= 1.0, "VOA setting must lie in [0, 1]");
    double c = std::cos(0.5 * pi * setting);
    return c * c;
  }
  static double setting_for(double transmission) {
    require(transmission >= 0.0 && transmission <= 1.0, "transmission must lie in [0, 1]");
    return 2.0 * std::acos(std::sqrt(transmission)) / pi;
  }
};

/// Short-arm attenuation that matches the long-arm propagation loss.
inline VoaModel balance_arms(double excess_long_loss_db) {
  require(excess_long_loss_db >= 0.0, "excess loss must be >= 0 dB");
  VoaModel v;
  v.excess_long_arm_loss_db = excess_long_loss_db;
  v.transmission = db_to_linear(-excess_long_loss_db);
  return v;
}

inline ChannelArms arms_from_voa(const VoaModel& v) {
  require(v.transmission >= 0.0 && v.transmission <= 1.0, "transmission must lie in [0, 1]");
  return {std::sqrt(v.transmission), std::sqrt(db_to_linear(-v.excess_long_arm_loss_db))};
}

/// TT fringe visibility of a Bell state for given arms (noiseless transfer).
inline double transfer_fringe_visibility(const ArmModel& arms) {
  auto bell = bell_state(0.0);
  double hi = franson_transfer(bell, {0.0, 0.0}, arms)[regions::TT];
  double lo = franson_transfer(bell, {pi, 0.0}, arms)[regions::TT];
  return (hi - lo) / (hi + lo);
}

}  // namespace franson_lab
