#include <gtest/gtest.h>

#include <cmath>

#include "franson_lab/tomography.hpp"

using namespace franson_lab;

namespace {

double expectation(const Matrix4c& m, const DensityMatrix4& rho) {
  return (m * rho.matrix()).trace().real();
}

DensityMatrix4 random_state(std::uint64_t seed) {
  RandomEngine rng = make_engine(seed, 0, 42);
  std::normal_distribution<double> nd;
  Matrix4c t = Matrix4c::Zero();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c <= r; ++c) t(r, c) = cplx(nd(rng), r == c ? 0.0 : nd(rng));
  return DensityMatrix4::from_gram(t * t.adjoint());
}

MleConfig quick_config() {
  MleConfig c;
  c.restarts = 4;
  return c;
}

}  // namespace

TEST(MeasurementOperators, BellExpectations) {
  auto rho = DensityMatrix4::from_pure(phi_plus());
  auto ops = measurement_operators(standard_settings());
  EXPECT_NEAR(expectation(ops[0][regions::TT], rho), 0.5, 1e-12);
  for (const auto& set : ops) {
    EXPECT_NEAR(expectation(set[regions::EE], rho), 1.0 / 8, 1e-12);
    EXPECT_NEAR(expectation(set[regions::LL], rho), 1.0 / 8, 1e-12);
    EXPECT_NEAR(expectation(set[regions::EL], rho), 0.0, 1e-15);
    EXPECT_NEAR(expectation(set[regions::LE], rho), 0.0, 1e-15);
  }
  EXPECT_TRUE(ops[0][regions::EE].isApprox(ops[2][regions::EE]));
  EXPECT_TRUE(ops[1][regions::LL].isApprox(ops[3][regions::LL]));
}

TEST(MeasurementOperators, SumMatchesOutcomeTotal) {
  auto rho = random_state(3);
  for (const auto& s : standard_settings()) {
    auto ops = measurement_operators({s});
    double sum = 0.0;
    for (const auto& m : ops[0]) sum += expectation(m, rho);
    EXPECT_NEAR(sum, outcome_probabilities(rho, s).total(), 1e-12);
  }
}

TEST(MeasurementOperators, AcceptanceScales) {
  auto a = measurement_operators({{0.2, 0.1}}, ArmModel::ideal(), 0.5);
  auto b = measurement_operators({{0.2, 0.1}});
  EXPECT_TRUE(a[0][regions::TT].isApprox(0.5 * b[0][regions::TT]));
}

TEST(InformationalRank, FourSettingsLeaveTwoDirections) {
  auto ops = measurement_operators(standard_settings());
  EXPECT_EQ(informational_rank(ops), 14);
  EXPECT_LT(informational_rank(measurement_operators({{0, 0}})), 14);
}

TEST(Mle, NoiselessBellRoundTrip) {
  auto rec = expected_counts(DensityMatrix4::from_pure(phi_plus()), standard_settings(), 1e6);
  auto r = mle_reconstruct(rec, quick_config());
  EXPECT_GE(r.metrics.fidelity, 0.999);
  EXPECT_TRUE(r.rho.validity().valid());
  EXPECT_FALSE(r.informationally_complete);
  EXPECT_LT(r.ambiguity, 0.01);
}

TEST(Mle, DephasedStateFidelity) {
  const double v = 0.781;
  auto rec = expected_counts(dephased_bell_state(v), standard_settings(), 1e6);
  auto r = mle_reconstruct(rec, quick_config());
  EXPECT_NEAR(r.metrics.fidelity, (1 + v) / 2, 0.01);
  EXPECT_NEAR(r.metrics.concurrence, v, 0.01);
}

TEST(Mle, MaximallyMixedIsFlaggedAmbiguous) {
  auto settings = standard_settings();
  auto rec = expected_counts(DensityMatrix4::maximally_mixed(), settings, 1e6);
  MleConfig cfg = quick_config();
  cfg.corner_weight = 0.0;
  auto r = mle_reconstruct(rec, cfg);
  // the four settings do not pin the cross-sector populations of this state
  EXPECT_GT(r.ambiguity, 0.01);
  EXPECT_LE(trace_distance(r.rho, DensityMatrix4::maximally_mixed()), r.ambiguity + 0.01);
}

TEST(Mle, EmptyCornerTermPinsPoissonNoisyBellState) {
  auto settings = standard_settings();
  for (std::uint64_t t = 0; t < 5; ++t) {
    auto rec = expected_counts(DensityMatrix4::from_pure(phi_plus()), settings, 1e4);
    RandomEngine rng = make_engine(11, t, 0);
    for (auto& r : rec)
      for (double& c : r.counts)
        if (c > 0.0) c = static_cast<double>(std::poisson_distribution<std::int64_t>(c)(rng));
    EXPECT_GE(mle_reconstruct(rec, quick_config()).metrics.fidelity, 0.999) << t;
  }
}

TEST(Mle, LikelihoodTraceIsMonotone) {
  auto rec = expected_counts(dephased_bell_state(0.8, 0.3), standard_settings(), 2e4);
  auto r = mle_reconstruct(rec, quick_config());
  ASSERT_GT(r.ll_trace.size(), 2u);
  for (std::size_t k = 1; k < r.ll_trace.size(); ++k) EXPECT_GE(r.ll_trace[k], r.ll_trace[k - 1]);
  EXPECT_NEAR(r.ll_trace.back(), r.log_likelihood, 1e-2);
}

TEST(Mle, RandomStatesReproduceDataAndFlagAmbiguity) {
  auto settings = standard_settings();
  auto ops = measurement_operators(settings);
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    auto truth = random_state(seed);
    auto rec = expected_counts(truth, settings, 1e6);
    MleConfig cfg = quick_config();
    cfg.corner_weight = 0.0;
    auto fit = mle_fit(rec, cfg, 4);
    for (std::size_t j = 0; j < settings.size(); ++j)
      for (int k : regions::informative)
        EXPECT_NEAR(fit.rate * expectation(ops[j][k], fit.rho), rec[j].counts[k],
                    0.5 * std::sqrt(rec[j].counts[k]) + 1.0)
            << seed;
    double ambiguity = reconstruction_ambiguity(fit.rho, ops);
    double d = trace_distance(fit.rho, truth);
    if (ambiguity < 1e-3)
      EXPECT_LT(d, 0.01) << seed;
    else
      EXPECT_LE(d, ambiguity + 0.01) << seed;
  }
}

TEST(Mle, CornerRegionsCompleteTheMeasurement) {
  auto settings = standard_settings();
  EXPECT_EQ(informational_rank(measurement_operators(settings), true), 16);
  MleConfig cfg = quick_config();
  cfg.use_corner_regions = true;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    auto truth = random_state(seed);
    auto r = mle_reconstruct(expected_counts(truth, settings, 1e6), cfg);
    EXPECT_TRUE(r.informationally_complete);
    EXPECT_LT(trace_distance(r.rho, truth), 0.01) << seed;
  }
}

TEST(Mle, RejectsDegenerateInput) {
  std::vector<MeasurementRecord> rec(4);
  EXPECT_THROW(mle_reconstruct(rec, quick_config()), MleError);
  EXPECT_THROW(mle_reconstruct({}, quick_config()), MleError);
  rec[0].counts[regions::TT] = -1.0;
  EXPECT_THROW(mle_reconstruct(rec, quick_config()), MleError);
  MleConfig bad;
  bad.tolerance = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Mle, DeterministicUnderSeed) {
  auto rec = expected_counts(dephased_bell_state(0.7), standard_settings(), 3e3);
  rec[0].counts[regions::TT] += 17;
  auto a = mle_reconstruct(rec, quick_config());
  auto b = mle_reconstruct(rec, quick_config());
  EXPECT_EQ(a.rho.matrix(), b.rho.matrix());
}

TEST(Mle, CornerDiagnostic) {
  auto rec = expected_counts(dephased_bell_state(0.8), standard_settings(), 1e4);
  rec[1].counts[regions::EL] = 12;
  rec[2].counts[regions::LE] = 8;
  auto r = mle_reconstruct(rec, quick_config());
  EXPECT_EQ(r.corner_counts, 20.0);
  EXPECT_GT(r.corner_fraction, 0.0);
  rec[1].counts[regions::EL] = 1e5;
  EXPECT_NEAR(mle_reconstruct(rec, quick_config()).metrics.fidelity, r.metrics.fidelity, 1e-6);
}

TEST(MonteCarlo, SingleTrialEqualsPointEstimate) {
  auto rec = expected_counts(dephased_bell_state(0.8), standard_settings(), 1e5);
  MleConfig cfg = quick_config();
  auto r = tomography(rec, cfg, 1);
  ASSERT_EQ(r.monte_carlo.fidelity.samples.size(), 1u);
  EXPECT_NEAR(r.monte_carlo.fidelity.samples[0], r.metrics.fidelity, 1e-6);
  EXPECT_NEAR(r.monte_carlo.concurrence.samples[0], r.metrics.concurrence, 1e-6);
  EXPECT_EQ(r.monte_carlo.failures, 0);
}

TEST(MonteCarlo, WorkerInvariant) {
  auto rec = expected_counts(dephased_bell_state(0.8), standard_settings(), 2e3);
  MleConfig cfg = quick_config();
  auto fit = mle_fit(rec, cfg, cfg.restarts);
  cfg.workers = 1;
  auto a = monte_carlo_errors(rec, fit, cfg, 24);
  cfg.workers = 3;
  auto b = monte_carlo_errors(rec, fit, cfg, 24);
  EXPECT_EQ(a.fidelity.samples, b.fidelity.samples);
  EXPECT_EQ(a.failures, b.failures);
}

TEST(MonteCarlo, MeanNearPointEstimate) {
  auto rec = expected_counts(dephased_bell_state(0.78), standard_settings(), 1500 / 0.5);
  MleConfig cfg = quick_config();
  auto r = tomography(rec, cfg, 300);
  EXPECT_EQ(r.monte_carlo.failures, 0);
  for (auto* d : {&r.monte_carlo.fidelity, &r.monte_carlo.concurrence, &r.monte_carlo.entropy}) {
    EXPECT_GT(d->std, 0.0);
  }
  EXPECT_NEAR(r.monte_carlo.fidelity.mean, r.metrics.fidelity, 2 * r.monte_carlo.fidelity.std);
  EXPECT_NEAR(r.monte_carlo.concurrence.mean, r.metrics.concurrence,
              2 * r.monte_carlo.concurrence.std);
}

TEST(MonteCarlo, FidelitySpreadScalesWithCounts) {
  std::vector<double> x, y;
  MleConfig cfg = quick_config();
  for (double n : {1e3, 1e4, 1e5}) {
    auto rec = expected_counts(dephased_bell_state(0.78), standard_settings(), n);
    auto fit = mle_fit(rec, cfg, cfg.restarts);
    auto mc = monte_carlo_errors(rec, fit, cfg, 200);
    x.push_back(std::log(n));
    y.push_back(std::log(mc.fidelity.std));
  }
  double slope = (y[2] - y[0]) / (x[2] - x[0]);
  EXPECT_NEAR(slope, -0.5, 0.1);
}

TEST(ReportMetrics, ClosedForms) {
  auto bell = report_metrics(DensityMatrix4::from_pure(phi_plus()));
  EXPECT_NEAR(bell.fidelity, 1.0, 1e-12);
  EXPECT_NEAR(bell.concurrence, 1.0, 1e-9);
  EXPECT_NEAR(bell.entropy, 0.0, 1e-9);
  EXPECT_NEAR(bell.chsh, 2 * std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(bell.purity, 1.0, 1e-12);
  EXPECT_TRUE(bell.chsh_violation);

  auto w = report_metrics(werner_state(0.76));
  EXPECT_NEAR(w.concurrence, 0.64, 1e-9);
  EXPECT_NEAR(w.chsh, 2 * std::sqrt(2.0) * 0.76, 1e-9);
  EXPECT_TRUE(w.chsh_violation);
  EXPECT_TRUE(w.concurrence_above_chsh_threshold);

  auto mixed = report_metrics(DensityMatrix4::maximally_mixed());
  EXPECT_NEAR(mixed.fidelity, 0.25, 1e-12);
  EXPECT_NEAR(mixed.concurrence, 0.0, 1e-9);
  EXPECT_NEAR(mixed.entropy, 2.0, 1e-9);
  EXPECT_LE(mixed.chsh, 2.0);
  EXPECT_NEAR(mixed.purity, 0.25, 1e-12);
  EXPECT_FALSE(mixed.chsh_violation);
}
