// Tests for the statistics experiments: mixing decay of ensemble transport
// distances, running time averages, the periodic-sample central-limit
// experiment, and the return-to-neighborhood probe.  Statistical tolerances
// were calibrated against the frozen seeds used here.

#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "tsns/stats.hpp"
#include "test_support.hpp"

namespace {

using namespace tsns;

SolverConfig mixing_cfg() {
  SolverConfig c;
  c.nu = 1.0;
  c.dt = 0.02;
  c.trunc = {3, true};
  c.forcing.period = 1.0;
  c.forcing.terms = {{{1, 1}, 0.5, 0.3}};
  c.noise.modes = {{1, 0}, {-1, 0}, {1, 1}, {-1, -1}};
  c.noise.amplitudes = {0.15, 0.15, 0.15, 0.15};
  return c;
}

SolverConfig noiseless_cfg() {
  SolverConfig c = mixing_cfg();
  c.noise = {};
  return c;
}

MetricConfig metric_cfg() {
  MetricConfig m;
  m.eta = 0.15;
  m.r = 1.0;
  m.quad_nodes = 16;
  return m;
}

SpectralField seed_field(const TruncationSpec& t) {
  return make_field(t, {{{1, 0}, 0.5}, {{0, 1}, -0.4}, {{2, 1}, 0.3}});
}

TEST(MetricCompatibility, EnforcesEtaBandOnlyWithNoise) {
  SolverConfig cfg = mixing_cfg();
  const double bound = eta_upper_bound(cfg.nu, noise_energy_rate(cfg.noise));
  MetricConfig ok = metric_cfg();
  ASSERT_LT(ok.eta, bound);
  EXPECT_NO_THROW(require_metric_compatible(ok, cfg));

  MetricConfig hot = ok;
  hot.eta = bound * 1.01;
  EXPECT_THROW(require_metric_compatible(hot, cfg), std::invalid_argument);
  MetricConfig flat = ok;
  flat.eta = 0.0;
  EXPECT_THROW(require_metric_compatible(flat, cfg), std::invalid_argument);

  SolverConfig quiet = noiseless_cfg();
  EXPECT_NO_THROW(require_metric_compatible(flat, quiet));
  EXPECT_NO_THROW(require_metric_compatible(ok, quiet));
}

TEST(MixingDecay, NoiselessEnsemblesCollapseToDeterministicPair) {
  SolverConfig cfg = noiseless_cfg();
  SpectralField w1 = zero_field(cfg.trunc);
  SpectralField w2 = seed_field(cfg.trunc);
  MetricConfig m = metric_cfg();
  auto res = mixing_decay_experiment(w1, w2, cfg, 5, 3, 3, m);

  const std::int64_t P = steps_per_period(cfg);
  Stepper st(cfg);
  SpectralField a = w1, b = w2;
  for (int n = 0; n <= 3; ++n) {
    if (n > 0) {
      a = advance(std::move(a), (n - 1) * P, P, st, nullptr);
      b = advance(std::move(b), (n - 1) * P, P, st, nullptr);
    }
    const double d = h_dist(a, b);
    EXPECT_NEAR(res.table[n].dist_lower, d, 1e-13 * std::max(1.0, d)) << "period " << n;
    EXPECT_GE(res.table[n].dist_upper, res.table[n].dist_lower);
    EXPECT_EQ(res.floor_table[n].dist_lower, 0.0);
    EXPECT_EQ(res.floor_table[n].dist_upper, 0.0);
  }
  EXPECT_EQ(res.floor_upper, 0.0);
  EXPECT_LT(res.table[3].dist_lower, res.table[0].dist_lower);
}

TEST(MixingDecay, SameLawEnsemblesSitAtSamplingFloor) {
  SolverConfig cfg = mixing_cfg();
  SpectralField w2 = seed_field(cfg.trunc);
  auto res = mixing_decay_experiment(w2, w2, cfg, 99, 8, 3, metric_cfg());
  EXPECT_EQ(res.table[0].dist_upper, 0.0);
  EXPECT_EQ(res.floor_table[0].dist_upper, 0.0);
  std::vector<double> dist, floor;
  for (int n = 1; n <= 3; ++n) {
    dist.push_back(res.table[n].dist_upper);
    floor.push_back(res.floor_table[n].dist_upper);
    EXPECT_GT(res.table[n].dist_upper, 0.0);
  }
  EXPECT_LE(median(dist), 2.0 * median(floor));
}

TEST(MixingDecay, ContractionVisibleAtDeskScale) {
  SolverConfig cfg = mixing_cfg();
  SpectralField w1 = zero_field(cfg.trunc);
  SpectralField w2 = seed_field(cfg.trunc);
  auto res = mixing_decay_experiment(w1, w2, cfg, 2024, 16, 8, metric_cfg());
  ASSERT_EQ(res.table.size(), 9u);
  EXPECT_NEAR(res.table[0].dist_lower, h_dist(w1, w2), 1e-14 * h_dist(w1, w2));
  EXPECT_GT(res.gamma_hat, 0.0);
  EXPECT_GE(res.fit_points, 2);
  EXPECT_LE(res.table[8].dist_upper, 0.3 * res.table[0].dist_upper);
  EXPECT_GT(res.floor_upper, 0.0);
}

TEST(MixingDecay, RejectsBadArguments) {
  SolverConfig cfg = mixing_cfg();
  SpectralField w = zero_field(cfg.trunc);
  MetricConfig m = metric_cfg();
  EXPECT_THROW(mixing_decay_experiment(w, w, cfg, 1, 257, 2, m), std::invalid_argument);
  EXPECT_THROW(mixing_decay_experiment(w, w, cfg, 1, 0, 2, m), std::invalid_argument);
  EXPECT_THROW(mixing_decay_experiment(w, w, cfg, 1, 4, 0, m), std::invalid_argument);
  MetricConfig hot = m;
  hot.eta = 10.0;
  EXPECT_THROW(mixing_decay_experiment(w, w, cfg, 1, 4, 2, hot), std::invalid_argument);
}

TEST(MixingDecay, DeterministicFunctionOfSeed) {
  SolverConfig cfg = mixing_cfg();
  SpectralField w1 = zero_field(cfg.trunc);
  SpectralField w2 = seed_field(cfg.trunc);
  auto r1 = mixing_decay_experiment(w1, w2, cfg, 7, 4, 2, metric_cfg());
  auto r2 = mixing_decay_experiment(w1, w2, cfg, 7, 4, 2, metric_cfg());
  ASSERT_EQ(r1.table.size(), r2.table.size());
  for (std::size_t i = 0; i < r1.table.size(); ++i) {
    EXPECT_EQ(r1.table[i].dist_lower, r2.table[i].dist_lower);
    EXPECT_EQ(r1.table[i].dist_upper, r2.table[i].dist_upper);
    EXPECT_EQ(r1.floor_table[i].dist_upper, r2.floor_table[i].dist_upper);
  }
  EXPECT_EQ(r1.gamma_hat, r2.gamma_hat);
  EXPECT_EQ(r1.intercept, r2.intercept);
}

TEST(Wlln, ChainWithSinglePeriodReturnsObservableAtStart) {
  SolverConfig cfg = mixing_cfg();
  SpectralField w0 = seed_field(cfg.trunc);
  Observable psi = observable_enstrophy();
  auto res = wlln_estimate(w0, cfg, 42, psi, 1, AverageMode::periodic_chain);
  ASSERT_EQ(res.running.size(), 1u);
  EXPECT_EQ(res.running[0], evaluate(psi, w0));
  EXPECT_EQ(res.final_average, evaluate(psi, w0));
}

TEST(Wlln, NoiselessUnforcedZeroStateAveragesToZero) {
  SolverConfig cfg = noiseless_cfg();
  cfg.forcing.terms.clear();
  SpectralField w0 = zero_field(cfg.trunc);
  for (AverageMode mode : {AverageMode::continuous, AverageMode::periodic_chain}) {
    auto res = wlln_estimate(w0, cfg, 1, observable_enstrophy(), 3, mode);
    for (double v : res.running) EXPECT_EQ(v, 0.0);
  }
}

TEST(Wlln, ChainAverageMatchesDirectSimulation) {
  SolverConfig cfg = mixing_cfg();
  SpectralField w0 = seed_field(cfg.trunc);
  Observable psi = observable_clipped_enstrophy(10.0);
  const int horizon = 5;
  auto res = wlln_estimate(w0, cfg, 77, psi, horizon, AverageMode::periodic_chain);

  const std::int64_t P = steps_per_period(cfg);
  WienerStore store = derive_wiener_store(77, cfg.dt, cfg.noise.channels(), 0, P * horizon);
  Trajectory traj = simulate(w0, 0, P * horizon, cfg, &store);
  double sum = 0.0;
  for (int k = 0; k < horizon; ++k) {
    sum += evaluate(psi, traj.frames[(std::size_t)(k * P)]);
    EXPECT_EQ(res.running[(std::size_t)k], sum / (k + 1)) << "period " << k;
  }
}

TEST(Wlln, ContinuousAverageMatchesTrapezoidOracle) {
  SolverConfig cfg = mixing_cfg();
  SpectralField w0 = seed_field(cfg.trunc);
  Observable psi = observable_enstrophy();
  const int horizon = 3;
  auto res = wlln_estimate(w0, cfg, 123, psi, horizon, AverageMode::continuous);

  const std::int64_t P = steps_per_period(cfg);
  const std::int64_t total = P * horizon;
  WienerStore store = derive_wiener_store(123, cfg.dt, cfg.noise.channels(), 0, total);
  Trajectory traj = simulate(w0, 0, total, cfg, &store);
  double integral = 0.0;
  for (std::int64_t j = 0; j < total; ++j) {
    integral += 0.5 * cfg.dt *
                (evaluate(psi, traj.frames[(std::size_t)j]) +
                 evaluate(psi, traj.frames[(std::size_t)j + 1]));
  }
  const double oracle = integral / (cfg.dt * (double)total);
  ASSERT_EQ(res.running.size(), (std::size_t)total + 1);
  EXPECT_NEAR(res.final_average, oracle, 1e-12 * std::max(1.0, std::abs(oracle)));
}

TEST(Wlln, UnforcedSymmetricNoiseCentersModeCoefficient) {
  // Without deterministic forcing the invariant law is symmetric under the
  // half-torus translation that flips odd-parity modes, so the average of a
  // single odd-mode coefficient must hover near zero.  Bound calibrated ~8x
  // above the observed |average| at these seeds.
  SolverConfig cfg = mixing_cfg();
  cfg.forcing.terms.clear();
  SpectralField w0 = seed_field(cfg.trunc);
  Observable psi = observable_mode_coefficient({1, 0});
  auto chain = wlln_estimate(w0, cfg, 7, psi, 200, AverageMode::periodic_chain);
  EXPECT_LE(std::abs(chain.final_average), 0.15);
  auto cont = wlln_estimate(w0, cfg, 8, psi, 200, AverageMode::continuous);
  EXPECT_LE(std::abs(cont.final_average), 0.15);
}

TEST(Wlln, TwoSeedsAgreeAtDeskScale) {
  SolverConfig cfg = mixing_cfg();
  SpectralField w0 = zero_field(cfg.trunc);
  Observable psi = observable_clipped_enstrophy(10.0);
  auto a = wlln_estimate(w0, cfg, 11, psi, 64, AverageMode::periodic_chain);
  auto b = wlln_estimate(w0, cfg, 12, psi, 64, AverageMode::periodic_chain);
  EXPECT_GT(a.final_average, 0.0);
  EXPECT_LT(a.final_average, 10.0);
  EXPECT_LE(std::abs(a.final_average - b.final_average), 0.15);
}

TEST(Clt, ConstantObservableIsDegenerate) {
  SolverConfig cfg = mixing_cfg();
  SpectralField w0 = zero_field(cfg.trunc);
  Observable psi = observable_polynomial("constant", {{0.7, {}}});
  auto res = clt_experiment(w0, cfg, 9, psi, 3, 8, 0);
  EXPECT_TRUE(res.degenerate);
  EXPECT_TRUE(std::isnan(res.ks_stat));
  for (double s : res.samples) EXPECT_LE(std::abs(s), 1e-12);
}

TEST(Clt, NoiseFreeRunIsDegenerate) {
  SolverConfig cfg = noiseless_cfg();
  SpectralField w0 = seed_field(cfg.trunc);
  auto res = clt_experiment(w0, cfg, 3, observable_enstrophy(), 4, 4, 1);
  EXPECT_TRUE(res.degenerate);
  for (double s : res.samples) EXPECT_EQ(s, res.samples[0]);
}

TEST(Clt, ShorterChainsAreExactPrefixes) {
  SolverConfig cfg = mixing_cfg();
  SpectralField w0 = zero_field(cfg.trunc);
  Observable psi = observable_clipped_enstrophy(10.0);
  auto multi = clt_multi_experiment(w0, cfg, 555, psi, {4, 8}, 16, 1);
  auto single4 = clt_experiment(w0, cfg, 555, psi, 4, 16, 1);
  auto single8 = clt_experiment(w0, cfg, 555, psi, 8, 16, 1);
  ASSERT_EQ(multi.size(), 2u);
  EXPECT_EQ(multi[0].mu_hat, single4.mu_hat);
  for (int i = 0; i < 16; ++i) {
    EXPECT_EQ(multi[0].samples[(std::size_t)i], single4.samples[(std::size_t)i]);
    EXPECT_EQ(multi[1].samples[(std::size_t)i], single8.samples[(std::size_t)i]);
  }
  EXPECT_EQ(multi[0].sigma2_hat, single4.sigma2_hat);
  EXPECT_EQ(multi[1].ks_stat, single8.ks_stat);
}

TEST(Clt, DeskScaleShapeIsHealthy) {
  SolverConfig cfg = mixing_cfg();
  SpectralField w0 = zero_field(cfg.trunc);
  auto res = clt_experiment(w0, cfg, 31337, observable_clipped_enstrophy(10.0), 8, 64, 2);
  EXPECT_FALSE(res.degenerate);
  EXPECT_GT(res.sigma2_hat, 0.0);
  EXPECT_LE(res.ks_stat, 0.35);  // calibrated: observed 0.17 at this seed
  EXPECT_GT(res.mu_hat, 0.0);
  EXPECT_LT(res.mu_hat, 5.0);
  ASSERT_EQ(res.samples.size(), 64u);
}

TEST(Clt, RejectsBadArguments) {
  SolverConfig cfg = mixing_cfg();
  SpectralField w0 = zero_field(cfg.trunc);
  Observable psi = observable_enstrophy();
  EXPECT_THROW(clt_experiment(w0, cfg, 1, psi, 0, 8, 0), std::invalid_argument);
  EXPECT_THROW(clt_experiment(w0, cfg, 1, psi, 4, 1, 0), std::invalid_argument);
  EXPECT_THROW(clt_experiment(w0, cfg, 1, psi, 4, 8, -1), std::invalid_argument);
  EXPECT_THROW(clt_multi_experiment(w0, cfg, 1, psi, {}, 8, 0), std::invalid_argument);
}

TEST(Irreducibility, SphereSamplerIsDeterministicWithExactRadius) {
  TruncationSpec t{3, true};
  SpectralField a = sample_sphere(t, 10, 2.5);
  SpectralField b = sample_sphere(t, 10, 2.5);
  SpectralField c = sample_sphere(t, 11, 2.5);
  EXPECT_NEAR(h_norm(a), 2.5, 1e-12);
  for (std::size_t i = 0; i < a.coeff.size(); ++i) EXPECT_EQ(a.coeff[i], b.coeff[i]);
  EXPECT_GT(h_dist(a, c), 0.0);
  EXPECT_THROW(sample_sphere(t, 1, 0.0), std::invalid_argument);
}

TEST(Irreducibility, NoiseOffContractionHitsTarget) {
  SolverConfig cfg = noiseless_cfg();
  cfg.nu = 2.0;
  auto res = irreducibility_probe(2.0, 0.05, cfg, 1, 8, 10);
  EXPECT_EQ(res.hit_fraction, 1.0);
  EXPECT_EQ(res.hits, 8);
  for (double d : res.distances) EXPECT_LE(d, 1e-6);
}

TEST(Irreducibility, VacuousBallHitsImmediately) {
  SolverConfig cfg = mixing_cfg();
  PeriodicSolution z = solve_deterministic_periodic(cfg, 1e-10, 256);
  ASSERT_TRUE(z.converged);
  const double R = 3.0;
  const double sigma = 2.0 * R + h_norm(z.trajectory.frames.front());
  auto res = irreducibility_probe(R, sigma, cfg, 2, 12, 0);
  EXPECT_EQ(res.hit_fraction, 1.0);
}

TEST(Irreducibility, StochasticRunReachesNeighborhood) {
  SolverConfig cfg = mixing_cfg();
  auto res = irreducibility_probe(2.0, 1.0, cfg, 5150, 16, 4);
  EXPECT_GT(res.hit_fraction, 0.0);
  EXPECT_LE(res.hit_fraction, 1.0);
  EXPECT_EQ(res.replicas, 16);
}

TEST(Irreducibility, NonConvergentPeriodicStateThrows) {
  SolverConfig cfg;
  cfg.nu = 0.05;
  cfg.dt = 0.02;
  cfg.trunc = {3, true};
  cfg.forcing.period = 1.0;
  cfg.forcing.terms = {{{1, 1}, 5.0, 0.0}};
  EXPECT_THROW(irreducibility_probe(1.0, 0.1, cfg, 1, 2, 1, 1e-14, 3), std::runtime_error);
}

}  // namespace
