#pragma once
// Statistics experiments over the stochastic solver: transport-distance decay
// between evolving ensembles, time-average estimates with running series, a
// central-limit experiment on periodic samples, and a return-to-neighborhood
// probe against the deterministic periodic state.
//
// Every experiment is a deterministic function of (config, master_seed):
// replica noise is derived from the master seed with fixed tags, and parallel
// execution never changes any reported number.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "field.hpp"
#include "metrics.hpp"
#include "solver.hpp"
#include "util.hpp"
#include "wiener.hpp"

namespace tsns {

// Experiments pair a MetricConfig with a SolverConfig; when the config
// carries noise, the weight strength must sit inside the admissible band.
inline void require_metric_compatible(const MetricConfig& m, const SolverConfig& cfg) {
  const double b0 = noise_energy_rate(cfg.noise);
  if (b0 > 0.0) {
    enforce_eta_bound(m, cfg.nu, b0);
  } else {
    validate(m);
  }
}

namespace detail {

// Fixed tag bases separating the independent noise streams an experiment
// derives from one master seed.
inline constexpr std::uint64_t kTagMeanRun = 0x6d65616e00000000ull;   // centering run
inline constexpr std::uint64_t kTagCltReplica = 0x636c740000000000ull;
inline constexpr std::uint64_t kTagSphere = 0x7068657200000000ull;    // sphere sampler
inline constexpr std::uint64_t kTagProbe = 0x70726f6200000000ull;     // probe replicas

struct ReplicaEnsemble {
  std::vector<SpectralField> fields;
  std::vector<WienerStore> stores;  // empty when the config carries no noise
};

inline ReplicaEnsemble make_replica_ensemble(const SpectralField& w0,
                                             const SolverConfig& cfg,
                                             std::uint64_t master_seed,
                                             std::uint64_t tag_base, int replicas,
                                             std::int64_t n_steps) {
  ReplicaEnsemble e;
  e.fields.assign((std::size_t)replicas, w0);
  const int ch = cfg.noise.channels();
  if (ch > 0) {
    e.stores.reserve((std::size_t)replicas);
    for (int r = 0; r < replicas; ++r) {
      e.stores.push_back(derive_wiener_store(
          replica_seed(master_seed, tag_base + (std::uint64_t)r), cfg.dt, ch, 0, n_steps));
    }
  }
  return e;
}

inline void advance_replica_ensemble(ReplicaEnsemble& e, const SolverConfig& cfg,
                                     std::int64_t s_index, std::int64_t n_steps) {
  parallel_for(e.fields.size(), [&](std::size_t r) {
    Stepper stepper(cfg);  // per-task stepper: step workspaces are not shared
    const WienerStore* store = e.stores.empty() ? nullptr : &e.stores[r];
    e.fields[r] = advance(std::move(e.fields[r]), s_index, n_steps, stepper, store);
  });
}

// One rho pass per pair, two assignment solves: returns the exact transport
// distance under the lower and upper ground costs together.
inline std::pair<double, double> wasserstein_both_grounds(
    const std::vector<SpectralField>& a, const std::vector<SpectralField>& b,
    const MetricConfig& m) {
  const std::size_t n = a.size();
  std::vector<std::vector<double>> clo(n, std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> cup(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const RhoBounds rb = rho_bounds(a[i], b[j], m);
      clo[i][j] = rb.lower;
      cup[i][j] = rb.upper;
    }
  }
  const auto mlo = solve_assignment(clo);
  const auto mup = solve_assignment(cup);
  return {matched_cost_total(clo, mlo) / (double)n,
          matched_cost_total(cup, mup) / (double)n};
}

// Standard-normal draw from a splitmix64 counter chain (Box-Muller, cosine
// branch); used by the documented sphere sampler.
inline double unit_gaussian(std::uint64_t& state) {
  const std::uint64_t a = splitmix64(state++);
  const std::uint64_t b = splitmix64(state++);
  const double u1 = ((double)(a >> 11) + 1.0) * 0x1.0p-53;  // in (0, 1]
  const double u2 = (double)(b >> 11) * 0x1.0p-53;          // in [0, 1)
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Ensemble mixing decay
// ---------------------------------------------------------------------------

struct MixingDecayRow {
  int period_index = 0;
  double dist_lower = 0.0;  // exact transport distance, plain-norm ground cost
  double dist_upper = 0.0;  // exact transport distance, weighted-path ground cost
};

struct MixingDecayResult {
  std::vector<MixingDecayRow> table;        // ensemble A (from w1) vs B (from w2)
  std::vector<MixingDecayRow> floor_table;  // same-law control: two fresh ensembles from w1
  double gamma_hat = 0.0;                   // fitted decay rate per unit time (log upper distance)
  double intercept = 0.0;                   // fitted intercept of the same line
  int fit_points = 0;                       // leading rows used by the fit
  double floor_lower = 0.0;                 // median same-law distance, lower ground
  double floor_upper = 0.0;                 // median same-law distance, upper ground
};

// Evolves two replica ensembles from point masses at w1 and w2 with fully
// independent noise (across replicas and between ensembles), recording the
// exact transport distance at every period boundary.  A same-law control pair
// (two independent ensembles both from w1) is evolved alongside to report the
// sampling-noise floor of the estimator.  The rate fit uses the leading
// periods whose upper distance still stands above 3x the floor median; if
// fewer than two such points exist, it falls back to the first half of the
// table.
inline MixingDecayResult mixing_decay_experiment(const SpectralField& w1,
                                                 const SpectralField& w2,
                                                 const SolverConfig& cfg,
                                                 std::uint64_t master_seed, int replicas,
                                                 int n_periods, const MetricConfig& m) {
  validate(cfg);
  require_metric_compatible(m, cfg);
  check_same_truncation(w1, w2);
  if (replicas < 1 || replicas > kMaxExactAssignment) {
    throw std::invalid_argument("mixing_decay_experiment: replicas must be in [1, 256]");
  }
  if (n_periods < 1) {
    throw std::invalid_argument("mixing_decay_experiment: n_periods must be >= 1");
  }
  const std::int64_t P = steps_per_period(cfg);
  const std::int64_t total = P * n_periods;
  const std::uint64_t R = (std::uint64_t)replicas;

  auto A = detail::make_replica_ensemble(w1, cfg, master_seed, 0 * R, replicas, total);
  auto B = detail::make_replica_ensemble(w2, cfg, master_seed, 1 * R, replicas, total);
  auto F1 = detail::make_replica_ensemble(w1, cfg, master_seed, 2 * R, replicas, total);
  auto F2 = detail::make_replica_ensemble(w1, cfg, master_seed, 3 * R, replicas, total);

  MixingDecayResult out;
  auto record = [&](int period) {
    const auto [dlo, dup] = detail::wasserstein_both_grounds(A.fields, B.fields, m);
    out.table.push_back({period, dlo, dup});
    const auto [flo, fup] = detail::wasserstein_both_grounds(F1.fields, F2.fields, m);
    out.floor_table.push_back({period, flo, fup});
  };
  record(0);
  for (int n = 1; n <= n_periods; ++n) {
    const std::int64_t s = (std::int64_t)(n - 1) * P;
    detail::advance_replica_ensemble(A, cfg, s, P);
    detail::advance_replica_ensemble(B, cfg, s, P);
    detail::advance_replica_ensemble(F1, cfg, s, P);
    detail::advance_replica_ensemble(F2, cfg, s, P);
    record(n);
  }

  {
    std::vector<double> fl, fu;
    for (const auto& r : out.floor_table) {
      fl.push_back(r.dist_lower);
      fu.push_back(r.dist_upper);
    }
    out.floor_lower = median(fl);
    out.floor_upper = median(fu);
  }

  std::vector<double> xs, ys;
  for (const auto& row : out.table) {
    if (!(row.dist_upper > 3.0 * out.floor_upper) || !(row.dist_upper > 0.0)) break;
    xs.push_back(row.period_index * cfg.forcing.period);
    ys.push_back(std::log(row.dist_upper));
  }
  if (xs.size() < 2) {
    xs.clear();
    ys.clear();
    const std::size_t half = std::max<std::size_t>(2, out.table.size() / 2);
    for (std::size_t i = 0; i < half && i < out.table.size(); ++i) {
      if (out.table[i].dist_upper > 0.0) {
        xs.push_back(out.table[i].period_index * cfg.forcing.period);
        ys.push_back(std::log(out.table[i].dist_upper));
      }
    }
  }
  if (xs.size() >= 2) {
    const LineFit f = fit_line(xs, ys);
    out.gamma_hat = -f.slope;
    out.intercept = f.intercept;
    out.fit_points = (int)xs.size();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Running time averages
// ---------------------------------------------------------------------------

enum class AverageMode { continuous, periodic_chain };

struct WllnResult {
  AverageMode mode = AverageMode::periodic_chain;
  // Running averages: one entry per dt-grid node in continuous mode (entry 0
  // is the instantaneous value at the start), one entry per period sample in
  // chain mode.
  std::vector<double> running;
  double final_average = 0.0;
};

// Time average of an observable along one trajectory.  Continuous mode is the
// trapezoid average (1/t) * integral of psi over [0, t] on the dt grid; chain
// mode is the running mean of psi sampled at period starts, so a horizon of
// one period returns exactly psi(w0).
inline WllnResult wlln_estimate(const SpectralField& w0, const SolverConfig& cfg,
                                std::uint64_t seed, const Observable& psi,
                                int horizon_periods, AverageMode mode) {
  validate(cfg);
  if (horizon_periods < 1) {
    throw std::invalid_argument("wlln_estimate: horizon_periods must be >= 1");
  }
  const std::int64_t P = steps_per_period(cfg);
  const std::int64_t total = P * horizon_periods;
  const int ch = cfg.noise.channels();
  WienerStore store;
  const WienerStore* sp = nullptr;
  if (ch > 0) {
    store = derive_wiener_store(seed, cfg.dt, ch, 0, total);
    sp = &store;
  }
  Stepper stepper(cfg);
  SpectralField w = w0;
  WllnResult out;
  out.mode = mode;
  if (mode == AverageMode::periodic_chain) {
    out.running.reserve((std::size_t)horizon_periods);
    double sum = 0.0;
    for (int k = 0; k < horizon_periods; ++k) {
      if (k > 0) w = advance(std::move(w), (std::int64_t)(k - 1) * P, P, stepper, sp);
      sum += evaluate(psi, w);
      out.running.push_back(sum / (double)(k + 1));
    }
  } else {
    out.running.reserve((std::size_t)total + 1);
    double prev = evaluate(psi, w);
    out.running.push_back(prev);  // t -> 0 limit of the average
    double integral = 0.0;
    for (std::int64_t j = 1; j <= total; ++j) {
      stepper.step(w, j - 1, sp);
      const double cur = evaluate(psi, w);
      integral += 0.5 * cfg.dt * (prev + cur);
      prev = cur;
      out.running.push_back(integral / (cfg.dt * (double)j));
    }
  }
  out.final_average = out.running.back();
  return out;
}

// ---------------------------------------------------------------------------
// Central-limit experiment on periodic samples
// ---------------------------------------------------------------------------

struct CltResult {
  int chain_length = 0;      // N: periodic samples per replica sum
  double mu_hat = 0.0;       // centering estimate from the auxiliary run
  double sigma2_hat = 0.0;   // sample variance of the normalized sums
  double ks_stat = 0.0;      // Kolmogorov-Smirnov distance to Normal(0, sigma2_hat)
  bool degenerate = false;   // variance vanished after centering
  std::vector<double> samples;  // one normalized sum per replica, replica order
};

// Centering constant: one long auxiliary run with an independent noise stream,
// 64 burn-in periods followed by a 512-period chain average of psi sampled at
// period starts.
inline double estimate_periodic_mean(const SpectralField& w0, const SolverConfig& cfg,
                                     std::uint64_t master_seed, const Observable& psi) {
  validate(cfg);
  constexpr int kBurn = 64;
  constexpr int kAvg = 512;
  const std::int64_t P = steps_per_period(cfg);
  const std::int64_t total = (std::int64_t)(kBurn + kAvg) * P;
  const int ch = cfg.noise.channels();
  WienerStore store;
  const WienerStore* sp = nullptr;
  if (ch > 0) {
    store = derive_wiener_store(replica_seed(master_seed, detail::kTagMeanRun), cfg.dt,
                                ch, 0, total);
    sp = &store;
  }
  Stepper stepper(cfg);
  SpectralField w = advance(w0, 0, (std::int64_t)kBurn * P, stepper, sp);
  double sum = evaluate(psi, w);
  for (int k = 1; k < kAvg; ++k) {
    w = advance(std::move(w), (std::int64_t)(kBurn + k - 1) * P, P, stepper, sp);
    sum += evaluate(psi, w);
  }
  return sum / (double)kAvg;
}

// Core experiment, shared across chain lengths: every replica evolves
// burn_in_periods + max(Ns) periods; the normalized sum for each requested
// chain length N uses the first N period samples of that replica, so shorter
// chains are exact prefixes of longer ones.
inline std::vector<CltResult> clt_multi_experiment(const SpectralField& w0,
                                                   const SolverConfig& cfg,
                                                   std::uint64_t master_seed,
                                                   const Observable& psi,
                                                   std::vector<int> chain_lengths,
                                                   int M_replicas, int burn_in_periods) {
  validate(cfg);
  if (chain_lengths.empty()) {
    throw std::invalid_argument("clt_experiment: need at least one chain length");
  }
  for (int N : chain_lengths) {
    if (N < 1) throw std::invalid_argument("clt_experiment: chain length must be >= 1");
  }
  if (M_replicas < 2) throw std::invalid_argument("clt_experiment: need >= 2 replicas");
  if (burn_in_periods < 0) {
    throw std::invalid_argument("clt_experiment: burn_in_periods must be >= 0");
  }
  const std::int64_t P = steps_per_period(cfg);
  const int n_max = *std::max_element(chain_lengths.begin(), chain_lengths.end());
  const std::int64_t total = (std::int64_t)(burn_in_periods + n_max) * P;
  const int ch = cfg.noise.channels();

  const double mu = estimate_periodic_mean(w0, cfg, master_seed, psi);

  // partial_sums[rep][i] = sum of the first chain_lengths[i] centered samples
  std::vector<std::vector<double>> partial_sums(
      (std::size_t)M_replicas, std::vector<double>(chain_lengths.size(), 0.0));
  parallel_for((std::size_t)M_replicas, [&](std::size_t rep) {
    WienerStore store;
    const WienerStore* sp = nullptr;
    if (ch > 0) {
      store = derive_wiener_store(
          replica_seed(master_seed, detail::kTagCltReplica + rep), cfg.dt, ch, 0, total);
      sp = &store;
    }
    Stepper stepper(cfg);
    SpectralField w = advance(w0, 0, (std::int64_t)burn_in_periods * P, stepper, sp);
    double sum = 0.0;
    for (int k = 0; k < n_max; ++k) {
      if (k > 0) {
        w = advance(std::move(w), (std::int64_t)(burn_in_periods + k - 1) * P, P, stepper,
                    sp);
      }
      sum += evaluate(psi, w) - mu;
      for (std::size_t i = 0; i < chain_lengths.size(); ++i) {
        if (chain_lengths[i] == k + 1) partial_sums[rep][i] = sum;
      }
    }
  });

  std::vector<CltResult> out;
  out.reserve(chain_lengths.size());
  for (std::size_t i = 0; i < chain_lengths.size(); ++i) {
    CltResult r;
    r.chain_length = chain_lengths[i];
    r.mu_hat = mu;
    r.samples.resize((std::size_t)M_replicas);
    const double scale = 1.0 / std::sqrt((double)chain_lengths[i]);
    for (int rep = 0; rep < M_replicas; ++rep) {
      r.samples[(std::size_t)rep] = scale * partial_sums[(std::size_t)rep][i];
    }
    double mean = 0.0;
    for (double s : r.samples) mean += s;
    mean /= (double)M_replicas;
    double var = 0.0;
    for (double s : r.samples) var += (s - mean) * (s - mean);
    var /= (double)(M_replicas - 1);
    r.sigma2_hat = var;
    double maxabs = 0.0;
    for (double s : r.samples) maxabs = std::max(maxabs, std::abs(s));
    // Deterministic samples leave only summation round-off behind (relative
    // spread ~ M * ulp); anything at or below that scale is degenerate.
    const double var_floor = 1e-24 * maxabs * maxabs;
    if (!(var > var_floor) || !std::isfinite(var)) {
      r.degenerate = true;
      r.ks_stat = std::numeric_limits<double>::quiet_NaN();
    } else {
      const double sd = std::sqrt(var);
      std::function<double(double)> cdf = [sd](double x) { return normal_cdf(x, 0.0, sd); };
      r.ks_stat = ks_statistic(r.samples, cdf);
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline CltResult clt_experiment(const SpectralField& w0, const SolverConfig& cfg,
                                std::uint64_t master_seed, const Observable& psi, int N,
                                int M_replicas, int burn_in_periods) {
  return clt_multi_experiment(w0, cfg, master_seed, psi, {N}, M_replicas,
                              burn_in_periods)[0];
}

// ---------------------------------------------------------------------------
// Return-to-neighborhood probe
// ---------------------------------------------------------------------------

struct IrreducibilityResult {
  double hit_fraction = 0.0;
  int hits = 0;
  int replicas = 0;
  double z_norm = 0.0;             // norm of the deterministic periodic state at phase 0
  std::vector<double> distances;   // final distance to the target, replica order
};

// Documented sphere sampler: independent standard-normal coefficients from a
// counter-based generator, normalized to radius R.
inline SpectralField sample_sphere(const TruncationSpec& t, std::uint64_t seed, double R) {
  if (!(R > 0.0)) throw std::invalid_argument("sample_sphere: radius must be positive");
  SpectralField g = zero_field(t);
  for (std::uint64_t attempt = 0;; ++attempt) {
    std::uint64_t state = hash64(seed, attempt);
    for (double& c : g.coeff) c = detail::unit_gaussian(state);
    const double n = h_norm(g);
    if (n > 0.0) {
      return scaled(g, R / n);
    }
  }
}

// Launches replicas from the sphere of radius R, runs them n_periods periods,
// and reports the fraction landing within plain-norm distance sigma of the
// deterministic periodic state at the same phase.  n_periods = 0 measures the
// initial condition itself.
inline IrreducibilityResult irreducibility_probe(double R, double sigma,
                                                 const SolverConfig& cfg,
                                                 std::uint64_t master_seed, int replicas,
                                                 int n_periods,
                                                 double periodic_tol = 1e-10,
                                                 int max_solve_periods = 256) {
  validate(cfg);
  if (replicas < 1) throw std::invalid_argument("irreducibility_probe: replicas >= 1");
  if (n_periods < 0) throw std::invalid_argument("irreducibility_probe: n_periods >= 0");
  if (!(sigma > 0.0)) throw std::invalid_argument("irreducibility_probe: sigma > 0");

  const PeriodicSolution z = solve_deterministic_periodic(cfg, periodic_tol,
                                                          max_solve_periods);
  if (!z.converged) {
    throw std::runtime_error(
        "irreducibility_probe: deterministic periodic solution did not converge");
  }
  const SpectralField& z0 = z.trajectory.frames.front();

  const std::int64_t P = steps_per_period(cfg);
  const std::int64_t total = (std::int64_t)n_periods * P;
  const int ch = cfg.noise.channels();

  IrreducibilityResult out;
  out.replicas = replicas;
  out.z_norm = h_norm(z0);
  out.distances.assign((std::size_t)replicas, 0.0);
  parallel_for((std::size_t)replicas, [&](std::size_t r) {
    SpectralField w = sample_sphere(cfg.trunc,
                                    replica_seed(master_seed, detail::kTagSphere + r), R);
    if (total > 0) {
      WienerStore store;
      const WienerStore* sp = nullptr;
      if (ch > 0) {
        store = derive_wiener_store(replica_seed(master_seed, detail::kTagProbe + r),
                                    cfg.dt, ch, 0, total);
        sp = &store;
      }
      Stepper stepper(cfg);
      w = advance(std::move(w), 0, total, stepper, sp);
    }
    out.distances[r] = h_dist(w, z0);
  });
  for (double d : out.distances) {
    if (d <= sigma) ++out.hits;
  }
  out.hit_fraction = (double)out.hits / (double)replicas;
  return out;
}

}  // namespace tsns
