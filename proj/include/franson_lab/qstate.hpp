#pragma once

// Two-qubit time-bin states, the Franson analysis transfer, outcome
// probabilities over the 3x3 detection regions, and entanglement metrics.
//
// Conventions
//   Basis order for two-qubit objects: (EE, EL, LE, LL), index 2*s + i with
//   E = 0, L = 1 for the signal (s) and idler (i) photon.
//   Output slots per channel: E = 0, T = 1 (on-time), L = 2.
//   Region index: 3*slot_signal + slot_idler, see `regions`.
//   The analysis-channel map carries the 1/sqrt(2) per-channel prefactor, so
//   a Bell state gives the 1/(2 sqrt 2) joint prefactor. Region probabilities
//   are relative detection probabilities: their sum depends on the phases and
//   only its average over the analysis phases equals one.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string_view>

#include <Eigen/Eigenvalues>

#include "franson_lab/common.hpp"

namespace franson_lab {

enum class Slot : int { early = 0, on_time = 1, late = 2 };

namespace regions {
inline constexpr int EE = 0, ET = 1, EL = 2, TE = 3, TT = 4, TL = 5, LE = 6,
                     LT = 7, LL = 8;
inline constexpr int count = 9;
inline constexpr std::array<std::string_view, 9> names = {
    "EE", "ET", "EL", "TE", "TT", "TL", "LE", "LT", "LL"};
/// The seven regions reachable by a pair born in a single pulse.
inline constexpr std::array<int, 7> informative = {EE, ET, TE, TT, TL, LT, LL};
/// Anti-diagonal corners: one photon early, the other late.
inline constexpr std::array<int, 2> corners = {EL, LE};

constexpr int index(int slot_signal, int slot_idler) {
  return 3 * slot_signal + slot_idler;
}
constexpr int signal_slot(int region) { return region / 3; }
constexpr int idler_slot(int region) { return region % 3; }
constexpr bool is_corner(int region) { return region == EL || region == LE; }
}  // namespace regions

namespace basis {
inline constexpr int EE = 0, EL = 1, LE = 2, LL = 3;
}

/// Analysis and pump phases in radians. Canonicalize with `canonical()`.
struct PhaseSettings {
  double phi_s = 0.0;
  double phi_i = 0.0;
  double phi_p = 0.0;

  PhaseSettings canonical() const {
    return {wrap_phase(phi_s), wrap_phase(phi_i), wrap_phase(phi_p)};
  }
  bool finite() const {
    return std::isfinite(phi_s) && std::isfinite(phi_i) && std::isfinite(phi_p);
  }
};

/// Analysis-interferometer phases only; the pump phase lives in the state.
struct AnalysisPhases {
  double phi_s = 0.0;
  double phi_i = 0.0;
};

/// Pure two-qubit state over (EE, EL, LE, LL).
class TwoQubitState {
 public:
  static constexpr double norm_tolerance = 1e-12;

  TwoQubitState() : amplitudes_(Vector4c::Zero()) { amplitudes_(0) = 1.0; }

  /// Normalizes the given amplitudes; rejects the zero vector.
  static TwoQubitState normalized(const Vector4c& amplitudes) {
    double n = amplitudes.norm();
    require(n > 0.0 && std::isfinite(n), "state amplitudes must be nonzero");
    return TwoQubitState(amplitudes / n);
  }

  /// Uses the amplitudes as given; they must already be normalized.
  static TwoQubitState from_amplitudes(const Vector4c& amplitudes,
                                       double tolerance = 1e-9) {
    require(std::abs(amplitudes.norm() - 1.0) <= tolerance,
            "state amplitudes are not normalized");
    return TwoQubitState(amplitudes);
  }

  static TwoQubitState basis_state(int index) {
    require(index >= 0 && index < 4, "basis index out of range");
    Vector4c v = Vector4c::Zero();
    v(index) = 1.0;
    return TwoQubitState(v);
  }

  const Vector4c& amplitudes() const { return amplitudes_; }
  cplx operator[](int k) const { return amplitudes_(k); }
  double norm() const { return amplitudes_.norm(); }

 private:
  explicit TwoQubitState(const Vector4c& a) : amplitudes_(a) {}
  Vector4c amplitudes_;
};

/// Result of the density-matrix validity checks.
struct ValidityReport {
  double hermiticity_error = 0.0;  // max |rho - rho^dagger|
  double min_eigenvalue = 0.0;
  double trace_error = 0.0;  // |tr rho - 1|

  bool valid(double tol = 1e-10) const {
    return hermiticity_error <= tol && min_eigenvalue >= -tol &&
           trace_error <= tol;
  }
};

inline ValidityReport check_density_matrix(const Matrix4c& m) {
  ValidityReport r;
  r.hermiticity_error = (m - m.adjoint()).cwiseAbs().maxCoeff();
  Matrix4c h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(h, Eigen::EigenvaluesOnly);
  r.min_eigenvalue = es.eigenvalues().minCoeff();
  r.trace_error = std::abs(m.trace() - cplx(1.0, 0.0));
  return r;
}

/// Hermitian, positive semidefinite, unit-trace 4x4 matrix.
class DensityMatrix4 {
 public:
  static constexpr double tolerance = 1e-10;

  DensityMatrix4() : m_(Matrix4c::Identity() / 4.0) {}

  static DensityMatrix4 from_matrix(const Matrix4c& m, double tol = tolerance) {
    ValidityReport r = check_density_matrix(m);
    if (!r.valid(tol)) {
      throw InvalidArgument(
          "not a density matrix: hermiticity error " +
          std::to_string(r.hermiticity_error) + ", min eigenvalue " +
          std::to_string(r.min_eigenvalue) + ", trace error " +
          std::to_string(r.trace_error));
    }
    return DensityMatrix4(0.5 * (m + m.adjoint()));
  }

  static DensityMatrix4 from_pure(const TwoQubitState& psi) {
    const Vector4c& a = psi.amplitudes();
    return DensityMatrix4(a * a.adjoint());
  }

  /// rho = G / tr G for any nonzero positive semidefinite G.
  static DensityMatrix4 from_gram(const Matrix4c& g) {
    double tr = g.trace().real();
    require(tr > 0.0 && std::isfinite(tr), "gram matrix has no trace");
    Matrix4c m = g / tr;
    return DensityMatrix4(0.5 * (m + m.adjoint()));
  }

  static DensityMatrix4 maximally_mixed() { return DensityMatrix4(); }

  const Matrix4c& matrix() const { return m_; }
  cplx operator()(int r, int c) const { return m_(r, c); }
  ValidityReport validity() const { return check_density_matrix(m_); }

  /// Eigenvalues in ascending order.
  Eigen::Vector4d eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<Matrix4c> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  }

 private:
  explicit DensityMatrix4(const Matrix4c& m) : m_(m) {}
  Matrix4c m_;
};

/// Amplitude transmissions of the two arms of one analysis interferometer.
struct ChannelArms {
  double t_short = 1.0;
  double t_long = 1.0;

  bool valid() const {
    return t_short >= 0.0 && t_short <= 1.0 && t_long >= 0.0 && t_long <= 1.0;
  }
};

struct ArmModel {
  ChannelArms signal;
  ChannelArms idler;

  static ArmModel ideal() { return {}; }
  static ArmModel symmetric(ChannelArms arms) { return {arms, arms}; }
};

/// Output slots (E, T, L) by input time bin (E, L) for one channel.
using ChannelTransfer = Eigen::Matrix<cplx, 3, 2>;
/// Nine regions by four input basis states.
using JointTransfer = Eigen::Matrix<cplx, 9, 4>;

/// Unbalanced analysis interferometer: the short arm keeps the time bin, the
/// long arm delays it by one slot and adds the analysis phase.
inline ChannelTransfer analysis_channel(double phi, const ChannelArms& arms) {
  require(arms.valid(), "arm transmissions must lie in [0, 1]");
  const double r = 1.0 / std::sqrt(2.0);
  const cplx shifted = arms.t_long * std::polar(1.0, phi) * r;
  ChannelTransfer k = ChannelTransfer::Zero();
  k(0, 0) = arms.t_short * r;
  k(1, 0) = shifted;
  k(1, 1) = arms.t_short * r;
  k(2, 1) = shifted;
  return k;
}

inline JointTransfer joint_transfer(const ChannelTransfer& ks,
                                    const ChannelTransfer& ki) {
  JointTransfer j;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
          j(regions::index(a, b), 2 * x + y) = ks(a, x) * ki(b, y);
  return j;
}

inline JointTransfer franson_joint_transfer(const AnalysisPhases& phases,
                                            const ArmModel& arms) {
  return joint_transfer(analysis_channel(phases.phi_s, arms.signal),
                        analysis_channel(phases.phi_i, arms.idler));
}

/// Probabilities (and, for pure inputs, amplitudes) over the nine regions.
struct OutcomeDistribution {
  std::array<double, 9> probabilities{};
  std::optional<std::array<cplx, 9>> amplitudes;

  double operator[](int region) const { return probabilities[region]; }
  double total() const {
    double t = 0.0;
    for (double p : probabilities) t += p;
    return t;
  }
};

/// |E> -> |E> + e^{i phi}|T>, |L> -> |T> + e^{i phi}|L> on each channel
/// (with arm transmissions and the 1/sqrt 2 prefactor); identical output
/// regions add coherently.
inline OutcomeDistribution franson_transfer(const TwoQubitState& state,
                                            const AnalysisPhases& phases,
                                            const ArmModel& arms = {}) {
  require(std::abs(state.norm() - 1.0) <= 1e-9, "input state is not normalized");
  Eigen::Matrix<cplx, 9, 1> out =
      franson_joint_transfer(phases, arms) * state.amplitudes();
  OutcomeDistribution d;
  d.amplitudes.emplace();
  for (int k = 0; k < 9; ++k) {
    (*d.amplitudes)[k] = out(k);
    d.probabilities[k] = std::norm(out(k));
  }
  return d;
}

inline TwoQubitState bell_state(double phi_p) {
  const double r = 1.0 / std::sqrt(2.0);
  Vector4c a = Vector4c::Zero();
  a(basis::EE) = r;
  a(basis::LL) = r * std::polar(1.0, phi_p);
  return TwoQubitState::from_amplitudes(a);
}

inline TwoQubitState phi_plus() { return bell_state(0.0); }

/// Probability of the on-time/on-time outcome for a Bell state.
inline double interfering_probability(const PhaseSettings& s) {
  return (1.0 + std::cos(s.phi_s + s.phi_i - s.phi_p)) / 4.0;
}

/// POVM-style region operators M_k = A_k^dagger A_k, with A_k the k-th row
/// of the joint transfer.
inline std::array<Matrix4c, 9> region_operators(const AnalysisPhases& phases,
                                                const ArmModel& arms = {}) {
  JointTransfer j = franson_joint_transfer(phases, arms);
  std::array<Matrix4c, 9> ops;
  for (int k = 0; k < 9; ++k) ops[k] = j.row(k).adjoint() * j.row(k);
  return ops;
}

inline OutcomeDistribution outcome_probabilities(const DensityMatrix4& rho,
                                                 const AnalysisPhases& phases,
                                                 const ArmModel& arms = {}) {
  JointTransfer j = franson_joint_transfer(phases, arms);
  Eigen::Matrix<cplx, 9, 9> out = j * rho.matrix() * j.adjoint();
  OutcomeDistribution d;
  for (int k = 0; k < 9; ++k) d.probabilities[k] = std::max(0.0, out(k, k).real());
  return d;
}

// ---------------------------------------------------------------------------
// State families

inline DensityMatrix4 werner_state(double visibility) {
  require(visibility >= -1.0 / 3.0 && visibility <= 1.0,
          "Werner visibility must lie in [-1/3, 1]");
  Matrix4c phi = DensityMatrix4::from_pure(phi_plus()).matrix();
  return DensityMatrix4::from_matrix(visibility * phi +
                                     (1.0 - visibility) * Matrix4c::Identity() / 4.0);
}

/// Bell state whose EE/LL coherence is scaled by `visibility`.
inline DensityMatrix4 dephased_bell_state(double visibility, double phi_p = 0.0) {
  require(visibility >= 0.0 && visibility <= 1.0, "visibility must lie in [0, 1]");
  Matrix4c m = Matrix4c::Zero();
  m(basis::EE, basis::EE) = 0.5;
  m(basis::LL, basis::LL) = 0.5;
  m(basis::EE, basis::LL) = 0.5 * visibility * std::polar(1.0, -phi_p);
  m(basis::LL, basis::EE) = 0.5 * visibility * std::polar(1.0, phi_p);
  return DensityMatrix4::from_matrix(m);
}

// ---------------------------------------------------------------------------
// Metrics

inline double fidelity(const DensityMatrix4& rho, const TwoQubitState& target) {
  const Vector4c& t = target.amplitudes();
  double f = (t.adjoint() * rho.matrix() * t)(0, 0).real();
  return std::clamp(f, 0.0, 1.0);
}

inline double purity(const DensityMatrix4& rho) {
  return (rho.matrix() * rho.matrix()).trace().real();
}

/// sigma_y (x) sigma_y in the (EE, EL, LE, LL) basis.
inline Matrix4c spin_flip_operator() {
  Matrix4c y = Matrix4c::Zero();
  y(0, 3) = -1.0;
  y(1, 2) = 1.0;
  y(2, 1) = 1.0;
  y(3, 0) = -1.0;
  return y;
}

inline Matrix4c hermitian_sqrt(const Matrix4c& h) {
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(h);
  Eigen::Vector4d ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.cast<cplx>().asDiagonal() *
         es.eigenvectors().adjoint();
}

/// Wootters concurrence.
inline double concurrence(const DensityMatrix4& rho) {
  const Matrix4c y = spin_flip_operator();
  Matrix4c flipped = y * rho.matrix().conjugate() * y;
  Matrix4c sq = hermitian_sqrt(rho.matrix());
  Matrix4c r = sq * flipped * sq;
  r = 0.5 * (r + r.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(r, Eigen::EigenvaluesOnly);
  Eigen::Vector4d l = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  std::sort(l.data(), l.data() + 4, std::greater<>());
  return std::clamp(l(0) - l(1) - l(2) - l(3), 0.0, 1.0);
}

/// Eigenvalues below this are treated as exact zeros in entropies.
inline constexpr double entropy_clamp = 1e-14;

template <class Vec>
double shannon_bits(const Vec& eigenvalues) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < eigenvalues.size(); ++k) {
    double p = eigenvalues(k);
    if (p > entropy_clamp) s -= p * std::log2(p);
  }
  return std::max(0.0, s);
}

/// Global von Neumann entropy in bits.
inline double von_neumann_entropy(const DensityMatrix4& rho) {
  return shannon_bits(rho.eigenvalues());
}

/// Reduced single-qubit state of the signal photon.
inline Eigen::Matrix2cd reduced_signal(const DensityMatrix4& rho) {
  Eigen::Matrix2cd r = Eigen::Matrix2cd::Zero();
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int y = 0; y < 2; ++y) r(a, b) += rho(2 * a + y, 2 * b + y);
  return r;
}

/// Entropy of the signal marginal in bits (entanglement entropy for pure states).
inline double reduced_entropy(const DensityMatrix4& rho) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(reduced_signal(rho),
                                                     Eigen::EigenvaluesOnly);
  return shannon_bits(es.eigenvalues());
}

inline std::array<Eigen::Matrix2cd, 3> pauli_matrices() {
  Eigen::Matrix2cd x, y, z;
  x << 0, 1, 1, 0;
  y << 0, cplx(0, -1), cplx(0, 1), 0;
  z << 1, 0, 0, -1;
  return {x, y, z};
}

/// T_ij = tr(rho sigma_i (x) sigma_j).
inline Eigen::Matrix3d correlation_matrix(const DensityMatrix4& rho) {
  auto p = pauli_matrices();
  Eigen::Matrix3d t;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Matrix4c op;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          for (int c = 0; c < 2; ++c)
            for (int d = 0; d < 2; ++d) op(2 * a + c, 2 * b + d) = p[i](a, b) * p[j](c, d);
      t(i, j) = (rho.matrix() * op).trace().real();
    }
  return t;
}

/// Maximal CHSH value over measurement settings (Horodecki criterion).
inline double chsh_max(const DensityMatrix4& rho) {
  Eigen::Matrix3d t = correlation_matrix(rho);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(t.transpose() * t,
                                                    Eigen::EigenvaluesOnly);
  Eigen::Vector3d u = es.eigenvalues();  // ascending
  return 2.0 * std::sqrt(std::max(0.0, u(1) + u(2)));
}

inline double trace_distance(const DensityMatrix4& a, const DensityMatrix4& b) {
  Matrix4c d = a.matrix() - b.matrix();
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(0.5 * (d + d.adjoint()),
                                             Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace franson_lab
