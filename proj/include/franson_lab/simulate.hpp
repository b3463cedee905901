#pragma once

// Monte-Carlo time-tag generator for the pulsed Franson experiment and the
// coincidence analysis that turns tags into region histograms.
//
// Timing: pulse pair k is emitted at k * period; the early pump pulse and the
// trigger share that time, the late pulse follows after tau. A photon leaving
// an analysis interferometer in slot a (E = 0, T = 1, L = 2) is detected at
// k * period + a * tau plus Gaussian jitter, rounded to integer picoseconds.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "franson_lab/analysis.hpp"
#include "franson_lab/common.hpp"
#include "franson_lab/effects.hpp"
#include "franson_lab/parallel.hpp"
#include "franson_lab/qstate.hpp"
#include "franson_lab/rng.hpp"
#include "franson_lab/source.hpp"

namespace franson_lab {

enum class RoutingPolicy { probabilistic, energy_basis, time_basis };
enum class TriggerFilter { conditional, all };

inline std::string to_string(RoutingPolicy p) {
  switch (p) {
    case RoutingPolicy::probabilistic: return "probabilistic";
    case RoutingPolicy::energy_basis: return "energy_basis";
    case RoutingPolicy::time_basis: return "time_basis";
  }
  return "probabilistic";
}

inline RoutingPolicy routing_from_string(const std::string& s) {
  if (s == "probabilistic") return RoutingPolicy::probabilistic;
  if (s == "energy_basis") return RoutingPolicy::energy_basis;
  if (s == "time_basis") return RoutingPolicy::time_basis;
  throw ConfigError("unknown routing policy '" + s + "'");
}

inline std::string to_string(TriggerFilter f) {
  return f == TriggerFilter::all ? "all" : "conditional";
}

inline TriggerFilter trigger_filter_from_string(const std::string& s) {
  if (s == "conditional") return TriggerFilter::conditional;
  if (s == "all") return TriggerFilter::all;
  throw ConfigError("unknown trigger filter '" + s + "'");
}

inline constexpr double default_jitter_sigma_ps = 50.0 / 1.4142135623730951;

struct ExperimentConfig {
  double rep_rate = 80e6;  // pulse pairs per second
  double tau_ps = 220.0;
  /// Single-pair probability per pump pulse; ignored when `squeezing` is set.
  double pair_probability = 0.0279;
  std::optional<double> squeezing;
  double phi_p = 0.0;
  double heater_power_s = 0.0;  // mW
  double heater_power_i = 0.0;  // mW
  ThermoOpticMap heater_s{0.2, 0.0};
  ThermoOpticMap heater_i{0.2, 0.0};
  double long_arm_excess_loss_db = 1.0;
  /// Short-arm VOA power transmission; unset means balanced to the long arm.
  std::optional<double> voa_transmission_s;
  std::optional<double> voa_transmission_i;
  double signal_loss_db = 20.0;
  double idler_loss_db = 30.4;
  double detector_efficiency = 1.0;
  double jitter_sigma_ps = default_jitter_sigma_ps;
  double dark_rate_hz = 100.0;  // per detector
  double acquisition_s = 10.0;
  RoutingPolicy routing = RoutingPolicy::probabilistic;
  TriggerFilter trigger_filter = TriggerFilter::conditional;
  /// Fixed visibility of the single-pair coherence; unset means from bandwidth.
  std::optional<double> visibility;
  double bandwidth_nm = 8.8;
  std::vector<VisibilityAnchor> visibility_anchors{{8.8, 0.794}, {10.5, 0.707}};
  std::uint64_t rng_seed = 1;
  std::uint64_t block_pulses = 1ULL << 22;
  std::size_t workers = 0;

  double period_ps() const { return 1e12 / rep_rate; }
  std::uint64_t pulse_pairs() const {
    return static_cast<std::uint64_t>(std::llround(rep_rate * acquisition_s));
  }

  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (!(rep_rate > 0.0) || !std::isfinite(rep_rate)) fail("rep_rate must be > 0");
    if (!(tau_ps > 0.0)) fail("tau_ps must be > 0");
    if (2.0 * tau_ps >= period_ps()) fail("2 tau must be shorter than the repetition period");
    if (squeezing) {
      if (!(*squeezing >= 0.0) || !std::isfinite(*squeezing)) fail("squeezing must be >= 0");
    } else if (!(pair_probability >= 0.0 && pair_probability < max_single_pair_probability())) {
      fail("pair_probability must lie in [0, 1/(3 sqrt 3))");
    }
    for (double v : {phi_p, heater_power_s, heater_power_i})
      if (!std::isfinite(v)) fail("phases and heater powers must be finite");
    if (heater_power_s < 0.0 || heater_power_i < 0.0) fail("heater powers must be >= 0");
    if (!std::isfinite(heater_s.kappa) || heater_s.kappa == 0.0 ||
        !std::isfinite(heater_i.kappa) || heater_i.kappa == 0.0)
      fail("heater kappa must be finite and nonzero");
    if (!(long_arm_excess_loss_db >= 0.0)) fail("long_arm_excess_loss_db must be >= 0");
    for (const auto& t : {voa_transmission_s, voa_transmission_i})
      if (t && !(*t >= 0.0 && *t <= 1.0)) fail("VOA transmission must lie in [0, 1]");
    if (!(signal_loss_db >= 0.0) || !(idler_loss_db >= 0.0)) fail("channel losses must be >= 0 dB");
    if (!(detector_efficiency >= 0.0 && detector_efficiency <= 1.0))
      fail("detector_efficiency must lie in [0, 1]");
    if (!(jitter_sigma_ps >= 0.0)) fail("jitter_sigma_ps must be >= 0");
    if (!(dark_rate_hz >= 0.0)) fail("dark_rate_hz must be >= 0");
    if (!(acquisition_s > 0.0) || !std::isfinite(acquisition_s)) fail("acquisition_s must be > 0");
    if (visibility && !(*visibility >= 0.0 && *visibility <= 1.0))
      fail("visibility must lie in [0, 1]");
    if (!visibility) {
      if (!(bandwidth_nm >= 0.0)) fail("bandwidth_nm must be >= 0");
      if (visibility_anchors.empty()) fail("visibility_anchors must not be empty");
      for (const auto& a : visibility_anchors)
        if (!(a.bandwidth_nm > 0.0) || !(a.visibility > 0.0 && a.visibility <= 1.0))
          fail("visibility anchors need bandwidth > 0 and visibility in (0, 1]");
    }
    if (block_pulses == 0) fail("block_pulses must be > 0");
    if (trigger_filter == TriggerFilter::all && pulse_pairs() > 200'000'000ULL)
      fail("trigger_filter 'all' is limited to 2e8 pulse pairs");
  }

  double squeezing_parameter() const {
    if (squeezing) return *squeezing;
    return pair_probability > 0.0 ? s_from_pair_probability(pair_probability) : 0.0;
  }

  double coherence_visibility() const {
    if (visibility) return *visibility;
    return visibility_vs_bandwidth(bandwidth_nm, VisibilityModel::calibrate(visibility_anchors));
  }

  PhaseSettings phases() const {
    return {phase_from_power(heater_power_s, heater_s), phase_from_power(heater_power_i, heater_i),
            phi_p};
  }

  /// Sets heater powers that realise the given physical analysis phases.
  void set_analysis_phases(double phi_s, double phi_i) {
    heater_power_s = power_for_phase(phi_s, heater_s.phi0, heater_s.kappa);
    heater_power_i = power_for_phase(phi_i, heater_i.phi0, heater_i.kappa);
  }

  ArmModel arms() const {
    VoaModel vs = balance_arms(long_arm_excess_loss_db);
    VoaModel vi = vs;
    if (voa_transmission_s) vs.transmission = *voa_transmission_s;
    if (voa_transmission_i) vi.transmission = *voa_transmission_i;
    return {arms_from_voa(vs), arms_from_voa(vi)};
  }

  double channel_efficiency_s() const { return db_to_linear(-signal_loss_db) * detector_efficiency; }
  double channel_efficiency_i() const { return db_to_linear(-idler_loss_db) * detector_efficiency; }
};

// ---------------------------------------------------------------------------
// Time tags

enum class Channel : std::uint8_t { trigger = 0, signal = 1, idler = 2 };

inline const char* channel_name(Channel c) {
  switch (c) {
    case Channel::trigger: return "trigger";
    case Channel::signal: return "signal";
    case Channel::idler: return "idler";
  }
  return "trigger";
}

struct TimeTag {
  std::int64_t time_ps = 0;
  Channel channel = Channel::trigger;

  friend bool operator<(const TimeTag& a, const TimeTag& b) {
    return a.time_ps != b.time_ps ? a.time_ps < b.time_ps : a.channel < b.channel;
  }
  friend bool operator==(const TimeTag& a, const TimeTag& b) = default;
};

struct TimeTagStream {
  std::vector<TimeTag> tags;
  std::uint64_t pulse_pairs = 0;  // simulated trigger periods
  double period_ps = 12500.0;
  double tau_ps = 220.0;

  bool sorted() const { return std::is_sorted(tags.begin(), tags.end()); }
};

struct SinglesCounts {
  std::uint64_t triggers = 0;
  std::uint64_t signal = 0;
  std::uint64_t idler = 0;
};

inline SinglesCounts count_tags(const TimeTagStream& s) {
  SinglesCounts c;
  for (const auto& t : s.tags) {
    if (t.channel == Channel::trigger) ++c.triggers;
    if (t.channel == Channel::signal) ++c.signal;
    if (t.channel == Channel::idler) ++c.idler;
  }
  return c;
}

namespace detail {

/// Squeezed-vacuum pair numbers up to the point where the remaining tail is
/// below 1e-17.
inline std::vector<double> fock_table(double s) {
  std::vector<double> p;
  double acc = 0.0;
  for (int n = 0; n < 400; ++n) {
    double v = squeezed_pair_prob(s, n);
    p.push_back(v);
    acc += v;
    if (n > 2 && 1.0 - acc < 1e-17) break;
  }
  return p;
}

/// Discrete sampler over a fixed weight table (inverse CDF).
class TableSampler {
 public:
  TableSampler() = default;
  explicit TableSampler(const std::vector<double>& w) {
    cdf_.reserve(w.size());
    double acc = 0.0;
    for (double v : w) cdf_.push_back(acc += std::max(v, 0.0));
    total_ = acc;
  }
  double total() const { return total_; }
  std::size_t size() const { return cdf_.size(); }
  std::size_t operator()(RandomEngine& rng) const {
    double u = uniform01(rng) * total_;
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::size_t>(it - cdf_.begin(), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
  double total_ = 0.0;
};

/// Index of the first surviving photon among m, given that one survives.
inline int first_survivor(RandomEngine& rng, int m, double eta) {
  if (eta >= 1.0) return 0;
  double q = 1.0 - eta;
  double u = uniform01(rng);
  double x = std::log1p(-u * (1.0 - std::pow(q, m))) / std::log(q);
  return std::min(m - 1, static_cast<int>(std::floor(x)));
}

/// Survival flags for m photons under thinning with eta, conditioned on at
/// least one survivor.
inline void candidate_flags(RandomEngine& rng, int m, double eta, std::vector<char>& out) {
  out.assign(m, 0);
  int j = first_survivor(rng, m, eta);
  out[j] = 1;
  for (int k = j + 1; k < m; ++k) out[k] = uniform01(rng) < eta ? 1 : 0;
}

struct PhotonFate {
  bool monitored = false;
  int slot = 0;
};

}  // namespace detail

/// Detection probabilities per (port pair, region) for one coherent pair at
/// the two analysis interferometers: index [port_s][port_i][region], port 0
/// is the monitored output.
inline std::array<std::array<std::array<double, 9>, 2>, 2> port_resolved_outcomes(
    const DensityMatrix4& rho, const PhaseSettings& ph, const ArmModel& arms) {
  std::array<std::array<std::array<double, 9>, 2>, 2> out{};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      auto d = outcome_probabilities(rho, {ph.phi_s + a * pi, ph.phi_i + b * pi}, arms);
      for (int k = 0; k < 9; ++k) out[a][b][k] = d[k] / 4.0;
    }
  return out;
}

/// Precomputed sampling model for one configuration.
class EventModel {
 public:
  explicit EventModel(const ExperimentConfig& cfg) : cfg_(cfg) {
    cfg.validate();
    s_ = cfg.squeezing_parameter();
    eta_s_ = cfg.channel_efficiency_s();
    eta_i_ = cfg.channel_efficiency_i();

    // arm loss common to both arms acts as per-photon thinning
    ArmModel arms = cfg.arms();
    double gs = std::max(arms.signal.t_short * arms.signal.t_short,
                         arms.signal.t_long * arms.signal.t_long);
    double gi = std::max(arms.idler.t_short * arms.idler.t_short,
                         arms.idler.t_long * arms.idler.t_long);
    if (gs > 0.0) {
      arms.signal.t_short /= std::sqrt(gs);
      arms.signal.t_long /= std::sqrt(gs);
    }
    if (gi > 0.0) {
      arms.idler.t_short /= std::sqrt(gi);
      arms.idler.t_long /= std::sqrt(gi);
    }
    eta_s_ *= gs;
    eta_i_ *= gi;
    arms_ = arms;
    eta_max_ = std::max(eta_s_, eta_i_);

    phases_ = cfg.phases();
    visibility_ = cfg.coherence_visibility();
    rho_ = dephased_bell_state(visibility_, phases_.phi_p);

    if (s_ > 0.0 && eta_max_ > 0.0) {
      fock_ = detail::fock_table(s_);
      const int n = static_cast<int>(fock_.size());
      std::vector<double> w(static_cast<std::size_t>(n) * n, 0.0);
      const double q = 1.0 - eta_max_;
      for (int e = 0; e < n; ++e)
        for (int l = 0; l < n; ++l) {
          int m = 2 * (e + l);
          if (m == 0) continue;
          w[e * n + l] = fock_[e] * fock_[l] * (1.0 - std::pow(q, m));
        }
      pair_sampler_ = detail::TableSampler(w);
      active_probability_ = std::min(1.0, pair_sampler_.total());
      fock_n_ = n;
    }

    // coherent single pair: 36 port/region outcomes, remainder absorbed
    auto pr = port_resolved_outcomes(rho_, phases_, arms_);
    std::vector<double> w;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int k = 0; k < 9; ++k) w.push_back(pr[a][b][k]);
    double sum = 0.0;
    for (double v : w) sum += v;
    w.push_back(std::max(0.0, 1.0 - sum));
    coherent_sampler_ = detail::TableSampler(w);

    Eigen::Vector4d pop;
    for (int k = 0; k < 4; ++k) pop(k) = rho_(k, k).real();
    population_sampler_ = detail::TableSampler({pop(0), pop(1), pop(2), pop(3)});
  }

  const ExperimentConfig& config() const { return cfg_; }
  double squeezing() const { return s_; }
  double eta_signal() const { return eta_s_; }
  double eta_idler() const { return eta_i_; }
  double active_probability() const { return active_probability_; }
  double visibility() const { return visibility_; }
  const PhaseSettings& phases() const { return phases_; }
  const ArmModel& normalized_arms() const { return arms_; }

  /// Simulates one active pulse pair starting at t0; appends detections.
  void simulate_event(RandomEngine& rng, std::int64_t t0, std::vector<TimeTag>& out) const {
    std::size_t idx = pair_sampler_(rng);
    const int n_early = static_cast<int>(idx / fock_n_);
    const int n_late = static_cast<int>(idx % fock_n_);
    const int pairs = n_early + n_late;
    const int m = 2 * pairs;
    detail::candidate_flags(rng, m, eta_max_, candidate_);

    channel_.assign(m, 0);
    fate_.assign(m, {});
    bins_.assign(m, 0);
    const bool deterministic = cfg_.routing != RoutingPolicy::probabilistic;

    if (pairs == 1) {
      // coherent pair: photon 0 is the signal-labelled, photon 1 the idler-labelled one
      bool distinct = deterministic || uniform01(rng) < 0.5;
      if (distinct && !deterministic) {
        channel_[0] = 0;
        channel_[1] = 1;
        std::size_t o = coherent_sampler_(rng);
        if (o < 36) {
          int ports = static_cast<int>(o / 9), region = static_cast<int>(o % 9);
          fate_[0] = {ports / 2 == 0, regions::signal_slot(region)};
          fate_[1] = {ports % 2 == 0, regions::idler_slot(region)};
        }
      } else {
        int basis_state = static_cast<int>(population_sampler_(rng));
        bins_[0] = basis_state / 2;
        bins_[1] = basis_state % 2;
        if (deterministic) {
          channel_[0] = 0;
          channel_[1] = 1;
        } else {
          int c = uniform01(rng) < 0.5 ? 0 : 1;
          channel_[0] = channel_[1] = c;
        }
        for (int k = 0; k < 2; ++k) fate_[k] = incoherent_fate(rng, channel_[k], bins_[k]);
      }
    } else {
      for (int p = 0; p < pairs; ++p) {
        int bin = p < n_early ? 0 : 1;
        for (int h = 0; h < 2; ++h) {
          int k = 2 * p + h;
          bins_[k] = bin;
          channel_[k] = deterministic ? h : (uniform01(rng) < 0.5 ? 0 : 1);
          fate_[k] = incoherent_fate(rng, channel_[k], bin);
        }
      }
    }

    for (int k = 0; k < m; ++k) {
      if (!candidate_[k] || !fate_[k].monitored) continue;
      double eta = channel_[k] == 0 ? eta_s_ : eta_i_;
      if (eta < eta_max_ && uniform01(rng) >= eta / eta_max_) continue;
      double t = static_cast<double>(t0) + fate_[k].slot * cfg_.tau_ps;
      if (cfg_.jitter_sigma_ps > 0.0) t += cfg_.jitter_sigma_ps * normal_(rng);
      out.push_back({static_cast<std::int64_t>(std::llround(t)),
                     channel_[k] == 0 ? Channel::signal : Channel::idler});
    }
  }

 private:
  /// Single photon with a definite time bin through channel c.
  detail::PhotonFate incoherent_fate(RandomEngine& rng, int c, int bin) const {
    const ChannelArms& a = c == 0 ? arms_.signal : arms_.idler;
    double u = uniform01(rng);
    switch (cfg_.routing) {
      case RoutingPolicy::probabilistic: {
        // first coupler 1/2 per arm, monitored port 1/2
        double ps = 0.25 * a.t_short * a.t_short, pl = 0.25 * a.t_long * a.t_long;
        if (u < ps) return {true, bin};
        if (u < ps + pl) return {true, bin + 1};
        return {};
      }
      case RoutingPolicy::energy_basis: {
        // early photons take the long arm, late photons the short arm
        double t = bin == 0 ? a.t_long : a.t_short;
        if (u < 0.5 * t * t) return {true, 1};
        return {};
      }
      case RoutingPolicy::time_basis: {
        double t = bin == 0 ? a.t_short : a.t_long;
        if (u < 0.5 * t * t) return {true, bin == 0 ? 0 : 2};
        return {};
      }
    }
    return {};
  }

  ExperimentConfig cfg_;
  double s_ = 0.0;
  double eta_s_ = 0.0, eta_i_ = 0.0, eta_max_ = 0.0;
  double active_probability_ = 0.0;
  double visibility_ = 1.0;
  PhaseSettings phases_;
  ArmModel arms_;
  DensityMatrix4 rho_;
  std::vector<double> fock_;
  int fock_n_ = 1;
  detail::TableSampler pair_sampler_, coherent_sampler_, population_sampler_;

  // scratch, one model per worker
  mutable std::vector<char> candidate_;
  mutable std::vector<int> channel_, bins_;
  mutable std::vector<detail::PhotonFate> fate_;
  mutable std::normal_distribution<double> normal_{0.0, 1.0};
};

namespace detail {

inline constexpr std::uint64_t photon_domain = 1;
inline constexpr std::uint64_t dark_domain = 2;

inline std::int64_t trigger_time(std::uint64_t k, double period) {
  return static_cast<std::int64_t>(std::llround(static_cast<double>(k) * period));
}

}  // namespace detail

/// Generates the time-tag stream. Pulse pairs are simulated in blocks with
/// per-block seeds, so the result does not depend on the worker count.
inline TimeTagStream run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const EventModel prototype(cfg);
  const double period = cfg.period_ps();
  const std::uint64_t total = cfg.pulse_pairs();
  const std::uint64_t block = cfg.block_pulses;
  const std::uint64_t n_blocks = total == 0 ? 0 : (total + block - 1) / block;
  // window in which a dark count can pair with a trigger
  const double reach_ps = 2.0 * cfg.tau_ps + 10.0 * cfg.jitter_sigma_ps + 1000.0;

  std::vector<std::vector<TimeTag>> out(n_blocks);
  parallel_for(n_blocks, worker_count(cfg.workers), [&](std::size_t b) {
    EventModel model = prototype;  // scratch buffers are per block
    const std::uint64_t start = b * block;
    const std::uint64_t stop = std::min(total, start + block);
    std::vector<TimeTag>& tags = out[b];
    std::vector<std::uint64_t> active;

    if (model.active_probability() > 0.0) {
      RandomEngine rng = make_engine(cfg.rng_seed, b, detail::photon_domain);
      std::geometric_distribution<std::uint64_t> skip(model.active_probability());
      std::uint64_t k = start;
      for (;;) {
        std::uint64_t gap = model.active_probability() >= 1.0 ? 0 : skip(rng);
        if (gap >= stop - k) break;
        k += gap;
        std::size_t before = tags.size();
        model.simulate_event(rng, detail::trigger_time(k, period), tags);
        if (tags.size() > before) active.push_back(k);
        ++k;
        if (k >= stop) break;
      }
    }

    if (cfg.dark_rate_hz > 0.0) {
      RandomEngine rng = make_engine(cfg.rng_seed, b, detail::dark_domain);
      const double t_start = static_cast<double>(start) * period;
      const double span = static_cast<double>(stop - start) * period;
      for (Channel c : {Channel::signal, Channel::idler}) {
        std::poisson_distribution<std::uint64_t> count(cfg.dark_rate_hz * span * 1e-12);
        std::uint64_t n = count(rng);
        for (std::uint64_t j = 0; j < n; ++j) {
          double t = t_start + uniform01(rng) * span;
          tags.push_back({static_cast<std::int64_t>(std::floor(t)), c});
          // triggers whose matching window may contain this tag
          double lo = (t - reach_ps) / period, hi = (t + 1000.0) / period;
          for (std::int64_t q = static_cast<std::int64_t>(std::ceil(lo));
               q <= static_cast<std::int64_t>(std::floor(hi)); ++q)
            if (q >= 0 && static_cast<std::uint64_t>(q) >= start &&
                static_cast<std::uint64_t>(q) < stop)
              active.push_back(static_cast<std::uint64_t>(q));
        }
      }
    }

    if (cfg.trigger_filter == TriggerFilter::all) {
      for (std::uint64_t k = start; k < stop; ++k)
        tags.push_back({detail::trigger_time(k, period), Channel::trigger});
    } else {
      std::sort(active.begin(), active.end());
      active.erase(std::unique(active.begin(), active.end()), active.end());
      for (std::uint64_t k : active) tags.push_back({detail::trigger_time(k, period), Channel::trigger});
    }
    std::sort(tags.begin(), tags.end());
  });

  TimeTagStream s;
  s.pulse_pairs = total;
  s.period_ps = period;
  s.tau_ps = cfg.tau_ps;
  std::size_t n = 0;
  for (const auto& v : out) n += v.size();
  s.tags.reserve(n);
  for (auto& v : out) {
    s.tags.insert(s.tags.end(), v.begin(), v.end());
    std::vector<TimeTag>().swap(v);
  }
  // jitter can carry a tag across a block boundary
  if (!s.sorted()) std::sort(s.tags.begin(), s.tags.end());
  return s;
}

// ---------------------------------------------------------------------------
// Triple coincidences

struct TripleRecord {
  std::int64_t dt_signal = 0;  // ps after the trigger
  std::int64_t dt_idler = 0;

  friend bool operator==(const TripleRecord&, const TripleRecord&) = default;
};

/// Every (signal, idler) pair whose delays after a trigger both lie in
/// [-window, 2 tau + window] forms one record.
inline std::vector<TripleRecord> match_triples(const TimeTagStream& stream, double window_ps,
                                               double tau_ps) {
  require(window_ps >= 0.0, "window must be >= 0");
  require(tau_ps > 0.0, "tau must be > 0");
  if (!stream.sorted()) throw InvalidArgument("time-tag stream is not sorted");
  std::vector<std::int64_t> sig, idl, trig;
  for (const auto& t : stream.tags) {
    if (t.channel == Channel::signal) sig.push_back(t.time_ps);
    else if (t.channel == Channel::idler) idl.push_back(t.time_ps);
    else trig.push_back(t.time_ps);
  }
  const auto lo_off = static_cast<std::int64_t>(std::floor(-window_ps));
  const auto hi_off = static_cast<std::int64_t>(std::floor(2.0 * tau_ps + window_ps));
  std::vector<TripleRecord> rec;
  std::size_t s0 = 0, i0 = 0;
  for (std::int64_t tt : trig) {
    while (s0 < sig.size() && sig[s0] < tt + lo_off) ++s0;
    while (i0 < idl.size() && idl[i0] < tt + lo_off) ++i0;
    for (std::size_t a = s0; a < sig.size() && sig[a] <= tt + hi_off; ++a)
      for (std::size_t b = i0; b < idl.size() && idl[b] <= tt + hi_off; ++b)
        rec.push_back({sig[a] - tt, idl[b] - tt});
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Histograms

struct Histogram2D {
  double bin_width = 8.0;
  double tau_ps = 220.0;
  double origin_ps = 0.0;  // lower edge of bin 0 on both axes
  int bins = 0;
  std::vector<std::uint64_t> counts;  // row = signal bin, column = idler bin
  std::array<std::uint64_t, 9> region_counts{};
  std::uint64_t unassigned = 0;
  std::uint64_t out_of_range = 0;
  std::uint64_t records = 0;
  double sigma_ps = 0.0;  // jitter used for the region radius
  bool sigma_fitted = false;
  double radius_ps = 0.0;

  std::uint64_t at(int row, int col) const { return counts[static_cast<std::size_t>(row) * bins + col]; }
  std::uint64_t assigned() const {
    std::uint64_t n = 0;
    for (auto c : region_counts) n += c;
    return n;
  }
};

/// Jitter estimate from a Gaussian fit to the signal delays around the
/// on-time slot; falls back to `nominal_sigma` when the fit is not possible.
inline std::pair<double, bool> fit_jitter(const std::vector<TripleRecord>& records, double bin_width,
                                          double tau_ps, double nominal_sigma) {
  const double lo = tau_ps / 2.0, hi = 1.5 * tau_ps;
  const int n = std::max(1, static_cast<int>(std::floor((hi - lo) / bin_width)));
  std::vector<double> h(n, 0.0);
  for (const auto& r : records) {
    double x = static_cast<double>(r.dt_signal);
    if (x < lo || x >= lo + n * bin_width) continue;
    h[static_cast<int>((x - lo) / bin_width)] += 1.0;
  }
  std::vector<Sample> samples;
  for (int k = 0; k < n; ++k) samples.push_back({lo + (k + 0.5) * bin_width, h[k]});
  try {
    GaussianFit f = fit_gaussian_peak(samples);
    // bin-width broadening is removed in quadrature
    double s2 = f.sigma * f.sigma - bin_width * bin_width / 12.0;
    if (s2 > 0.0 && f.amplitude >= 10.0) return {std::sqrt(s2), true};
  } catch (const FitError&) {
  }
  return {nominal_sigma, false};
}

inline Histogram2D build_histogram2d(const std::vector<TripleRecord>& records, double bin_width,
                                     double tau_ps, double window_ps,
                                     double nominal_sigma = default_jitter_sigma_ps) {
  require(bin_width > 0.0, "bin width must be > 0");
  require(tau_ps > 0.0, "tau must be > 0");
  Histogram2D h;
  h.bin_width = bin_width;
  h.tau_ps = tau_ps;
  h.origin_ps = -window_ps;
  h.bins = std::max(1, static_cast<int>(std::ceil((2.0 * tau_ps + 2.0 * window_ps) / bin_width)));
  h.counts.assign(static_cast<std::size_t>(h.bins) * h.bins, 0);
  h.records = records.size();
  auto [sigma, fitted] = fit_jitter(records, bin_width, tau_ps, nominal_sigma);
  h.sigma_ps = sigma;
  h.sigma_fitted = fitted;
  h.radius_ps = 5.0 * sigma;

  for (const auto& r : records) {
    const double xs = static_cast<double>(r.dt_signal), xi = static_cast<double>(r.dt_idler);
    int bs = static_cast<int>(std::floor((xs - h.origin_ps) / bin_width));
    int bi = static_cast<int>(std::floor((xi - h.origin_ps) / bin_width));
    if (bs >= 0 && bs < h.bins && bi >= 0 && bi < h.bins)
      ++h.counts[static_cast<std::size_t>(bs) * h.bins + bi];
    else
      ++h.out_of_range;
    int a = std::clamp(static_cast<int>(std::lround(xs / tau_ps)), 0, 2);
    int b = std::clamp(static_cast<int>(std::lround(xi / tau_ps)), 0, 2);
    double ds = xs - a * tau_ps, di = xi - b * tau_ps;
    if (ds * ds + di * di <= h.radius_ps * h.radius_ps)
      ++h.region_counts[regions::index(a, b)];
    else
      ++h.unassigned;
  }
  return h;
}

/// Region of a record under the nearest-centre rule, or -1 if outside radius.
inline int assign_region(const TripleRecord& r, double tau_ps, double radius_ps) {
  const double xs = static_cast<double>(r.dt_signal), xi = static_cast<double>(r.dt_idler);
  int a = std::clamp(static_cast<int>(std::lround(xs / tau_ps)), 0, 2);
  int b = std::clamp(static_cast<int>(std::lround(xi / tau_ps)), 0, 2);
  double ds = xs - a * tau_ps, di = xi - b * tau_ps;
  return ds * ds + di * di <= radius_ps * radius_ps ? regions::index(a, b) : -1;
}

/// Five peaks along the diagonal (EE, ET+TE, TT, TL+LT, LL); the EL and LE
/// corners share the TT line and are kept apart.
struct Collapsed1D {
  std::array<std::uint64_t, 5> peaks{};
  std::uint64_t corner_el = 0;
  std::uint64_t corner_le = 0;

  std::uint64_t total() const {
    std::uint64_t n = corner_el + corner_le;
    for (auto p : peaks) n += p;
    return n;
  }
};

inline Collapsed1D collapse_histogram(const Histogram2D& h) {
  using namespace regions;
  const auto& r = h.region_counts;
  Collapsed1D c;
  c.peaks = {r[EE], r[ET] + r[TE], r[TT], r[TL] + r[LT], r[LL]};
  c.corner_el = r[EL];
  c.corner_le = r[LE];
  return c;
}

/// Histogram of the mean delay (dt_s + dt_i)/2 over records assigned to the
/// seven non-corner regions, for peak fitting.
inline std::vector<Sample> collapsed_profile(const std::vector<TripleRecord>& records,
                                             const Histogram2D& h, double bin_width) {
  require(bin_width > 0.0, "bin width must be > 0");
  const double lo = h.origin_ps, hi = 2.0 * h.tau_ps - h.origin_ps;
  const int n = std::max(1, static_cast<int>(std::ceil((hi - lo) / bin_width)));
  std::vector<double> counts(n, 0.0);
  for (const auto& r : records) {
    int region = assign_region(r, h.tau_ps, h.radius_ps);
    if (region < 0 || regions::is_corner(region)) continue;
    double u = 0.5 * static_cast<double>(r.dt_signal + r.dt_idler);
    int k = static_cast<int>(std::floor((u - lo) / bin_width));
    if (k >= 0 && k < n) counts[k] += 1.0;
  }
  std::vector<Sample> s;
  for (int k = 0; k < n; ++k) s.push_back({lo + (k + 0.5) * bin_width, counts[k]});
  return s;
}

/// Samples of the collapsed profile around one of the five peak centres.
inline std::vector<Sample> peak_window(const std::vector<Sample>& profile, int peak, double tau_ps) {
  const double c = 0.5 * peak * tau_ps;
  std::vector<Sample> out;
  for (const auto& s : profile)
    if (std::abs(s.x - c) <= 0.25 * tau_ps) out.push_back(s);
  return out;
}

// ---------------------------------------------------------------------------
// Analytic expectation (oracle for the sampler)

struct RegionRates {
  std::array<double, 9> photon{};  // records per second from photon pairs
  std::array<double, 9> dark{};    // records per second involving a dark count

  double operator[](int k) const { return photon[k] + dark[k]; }
  double total() const {
    double t = 0.0;
    for (int k = 0; k < 9; ++k) t += photon[k] + dark[k];
    return t;
  }
};

/// Expected record rates per region from exact enumeration over the pair
/// numbers of both pulses. Dark contributions use square region cells of the
/// given radius and are approximate.
inline RegionRates expected_region_rates(const ExperimentConfig& cfg, double radius_ps = 0.0) {
  EventModel model(cfg);
  RegionRates out;
  const double s = model.squeezing();
  const ArmModel& arms = model.normalized_arms();
  const double es = model.eta_signal(), ei = model.eta_idler();
  const bool deterministic = cfg.routing != RoutingPolicy::probabilistic;

  // per photon: probability to reach channel c's monitored port at slot a
  auto slot_prob = [&](int c, int bin, int slot, bool split) {
    const ChannelArms& a = c == 0 ? arms.signal : arms.idler;
    double y = split ? 0.5 : 1.0;
    switch (cfg.routing) {
      case RoutingPolicy::probabilistic: {
        double w = 0.0;
        if (slot == bin) w += a.t_short * a.t_short;
        if (slot == bin + 1) w += a.t_long * a.t_long;
        return y * 0.25 * w;
      }
      case RoutingPolicy::energy_basis: {
        double t = bin == 0 ? a.t_long : a.t_short;
        return slot == 1 ? y * 0.5 * t * t : 0.0;
      }
      case RoutingPolicy::time_basis: {
        double t = bin == 0 ? a.t_short : a.t_long;
        return slot == 2 * bin ? y * 0.5 * t * t : 0.0;
      }
    }
    return 0.0;
  };

  std::array<double, 9> per_pulse{};
  std::array<std::array<double, 3>, 2> singles{};  // [channel][slot] photons per pulse pair
  if (s > 0.0) {
    auto fock = detail::fock_table(s);
    const int n = static_cast<int>(fock.size());
    double p_single = 2.0 * fock[0] * fock[1];
    // coherent single pair
    if (!deterministic) {
      auto pr = port_resolved_outcomes(dephased_bell_state(model.visibility(), cfg.phi_p),
                                       model.phases(), arms);
      for (int k = 0; k < 9; ++k) per_pulse[k] += p_single * 0.5 * pr[0][0][k];
      // same-channel half contributes no records
    } else {
      Matrix4c rho = dephased_bell_state(model.visibility(), cfg.phi_p).matrix();
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) {
          double pop = rho(2 * x + y, 2 * x + y).real();
          for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
              per_pulse[regions::index(a, b)] +=
                  p_single * pop * slot_prob(0, x, a, false) * slot_prob(1, y, b, false);
        }
    }
    // two or more pairs: independent photons with definite bins
    for (int e = 0; e < n; ++e)
      for (int l = 0; l < n; ++l) {
        int pairs = e + l;
        if (pairs < 2) continue;
        double w = fock[e] * fock[l];
        if (w < 1e-30) continue;
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) {
            double acc = 0.0;
            if (!deterministic) {
              double se = slot_prob(0, 0, a, true), sl = slot_prob(0, 1, a, true);
              double ie = slot_prob(1, 0, b, true), il = slot_prob(1, 1, b, true);
              const double ne = 2.0 * e, nl = 2.0 * l;
              acc = ne * (ne - 1) * se * ie + nl * (nl - 1) * sl * il + ne * nl * (se * il + sl * ie);
            } else {
              // signal photon of pair j with idler photon of pair k
              double se = slot_prob(0, 0, a, false), sl = slot_prob(0, 1, a, false);
              double ie = slot_prob(1, 0, b, false), il = slot_prob(1, 1, b, false);
              acc = e * e * se * ie + l * l * sl * il + e * l * (se * il + sl * ie);
            }
            per_pulse[regions::index(a, b)] += w * acc;
          }
      }
    // singles per slot for dark accidentals
    for (int e = 0; e < n; ++e)
      for (int l = 0; l < n; ++l) {
        double w = fock[e] * fock[l];
        for (int c = 0; c < 2; ++c)
          for (int a = 0; a < 3; ++a) {
            double per = deterministic ? 1.0 : 2.0;
            singles[c][a] += w * per * (e * slot_prob(c, 0, a, !deterministic) +
                                        l * slot_prob(c, 1, a, !deterministic));
          }
      }
  }
  for (int k = 0; k < 9; ++k) out.photon[k] = per_pulse[k] * es * ei * cfg.rep_rate;

  if (cfg.dark_rate_hz > 0.0 && radius_ps > 0.0) {
    auto cell = [&](int a) {
      double lo = a == 0 ? radius_ps : std::min(radius_ps, cfg.tau_ps / 2);
      double hi = a == 2 ? radius_ps : std::min(radius_ps, cfg.tau_ps / 2);
      return (lo + hi) * 1e-12;  // seconds
    };
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        double ds = cfg.dark_rate_hz * cell(a), di = cfg.dark_rate_hz * cell(b);
        double rate = ds * singles[1][b] * ei + di * singles[0][a] * es + ds * di;
        out.dark[regions::index(a, b)] = rate * cfg.rep_rate;
      }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Straight-waveguide pair source (Klyshko and accidental-ratio measurements)

struct PairSourceConfig {
  double pair_probability = 0.005;  // P(s, 1) per pulse
  double rep_rate = 80e6;
  double signal_loss_db = 15.5;
  double idler_loss_db = 15.5;
  double detector_efficiency = 1.0;
  /// 50:50 fibre splitter instead of deterministic signal/idler separation.
  bool splitter = false;
  std::uint64_t pulses = 100'000'000;
  std::uint64_t rng_seed = 1;
  std::uint64_t block_pulses = 1ULL << 24;
  std::size_t workers = 0;

  void validate() const {
    if (!(pair_probability >= 0.0 && pair_probability < max_single_pair_probability()))
      throw ConfigError("pair_probability must lie in [0, 1/(3 sqrt 3))");
    if (!(rep_rate > 0.0)) throw ConfigError("rep_rate must be > 0");
    if (!(signal_loss_db >= 0.0) || !(idler_loss_db >= 0.0))
      throw ConfigError("channel losses must be >= 0 dB");
    if (!(detector_efficiency >= 0.0 && detector_efficiency <= 1.0))
      throw ConfigError("detector_efficiency must lie in [0, 1]");
    if (block_pulses == 0) throw ConfigError("block_pulses must be > 0");
  }
};

/// Click counts per trigger period: a channel clicks at most once per
/// period. `side_coincidences` pairs a signal click with an idler click one
/// period later.
struct PairSourceCounts {
  std::uint64_t pulses = 0;
  std::uint64_t singles_signal = 0;
  std::uint64_t singles_idler = 0;
  std::uint64_t coincidences = 0;
  std::uint64_t side_coincidences = 0;
  double acquisition_s = 0.0;
};

inline PairSourceCounts run_pair_source(const PairSourceConfig& cfg) {
  cfg.validate();
  PairSourceCounts total;
  total.pulses = cfg.pulses;
  total.acquisition_s = static_cast<double>(cfg.pulses) / cfg.rep_rate;
  if (cfg.pair_probability == 0.0 || cfg.pulses == 0) return total;

  const double s = s_from_pair_probability(cfg.pair_probability);
  const double es = db_to_linear(-cfg.signal_loss_db) * cfg.detector_efficiency;
  const double ei = db_to_linear(-cfg.idler_loss_db) * cfg.detector_efficiency;
  const double emax = std::max(es, ei);
  if (emax == 0.0) return total;
  auto fock = detail::fock_table(s);
  std::vector<double> w(fock.size(), 0.0);
  for (std::size_t n = 1; n < fock.size(); ++n)
    w[n] = fock[n] * (1.0 - std::pow(1.0 - emax, 2.0 * static_cast<double>(n)));
  detail::TableSampler sampler(w);
  const double active = std::min(1.0, sampler.total());

  struct BlockResult {
    PairSourceCounts c;
    std::uint64_t first = 0, last = 0;
    bool any = false;
    bool first_idler = false, last_signal = false;
  };
  const std::uint64_t nb = (cfg.pulses + cfg.block_pulses - 1) / cfg.block_pulses;
  std::vector<BlockResult> res(nb);

  parallel_for(nb, worker_count(cfg.workers), [&](std::size_t b) {
    RandomEngine rng = make_engine(cfg.rng_seed, b, 3);
    std::geometric_distribution<std::uint64_t> skip(active);
    const std::uint64_t start = b * cfg.block_pulses;
    const std::uint64_t stop = std::min(cfg.pulses, start + cfg.block_pulses);
    BlockResult& r = res[b];
    std::vector<char> flags;
    std::uint64_t prev = std::numeric_limits<std::uint64_t>::max();
    bool prev_signal = false;
    std::uint64_t k = start;
    for (;;) {
      std::uint64_t gap = active >= 1.0 ? 0 : skip(rng);
      if (gap >= stop - k) break;
      k += gap;
      int n = static_cast<int>(sampler(rng));
      int m = 2 * n;
      detail::candidate_flags(rng, m, emax, flags);
      bool cs = false, ci = false;
      for (int j = 0; j < m; ++j) {
        if (!flags[j]) continue;
        int c = cfg.splitter ? (uniform01(rng) < 0.5 ? 0 : 1) : (j % 2);
        double eta = c == 0 ? es : ei;
        if (eta < emax && uniform01(rng) >= eta / emax) continue;
        (c == 0 ? cs : ci) = true;
      }
      if (cs || ci) {
        if (!r.any) {
          r.any = true;
          r.first = k;
          r.first_idler = ci;
        }
        r.last = k;
        r.last_signal = cs;
        r.c.singles_signal += cs;
        r.c.singles_idler += ci;
        r.c.coincidences += cs && ci;
        if (prev != std::numeric_limits<std::uint64_t>::max() && prev + 1 == k && prev_signal && ci)
          ++r.c.side_coincidences;
        prev = k;
        prev_signal = cs;
      }
      ++k;
      if (k >= stop) break;
    }
  });

  const BlockResult* last = nullptr;
  for (const auto& r : res) {
    total.singles_signal += r.c.singles_signal;
    total.singles_idler += r.c.singles_idler;
    total.coincidences += r.c.coincidences;
    total.side_coincidences += r.c.side_coincidences;
    if (r.any) {
      if (last && last->last + 1 == r.first && last->last_signal && r.first_idler)
        ++total.side_coincidences;
      last = &r;
    }
  }
  return total;
}

}  // namespace franson_lab
