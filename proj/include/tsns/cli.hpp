#pragma once
// Command-line driver: ten subcommands over the simulation, analysis, and
// statistics layers.  Every run resolves one configuration (file + flag
// overrides), writes its tables as CSV (plus the binary trajectory container
// for `simulate`), and drops a run manifest next to them.  Exit codes:
// 0 success, 1 contract-violation report, 2 usage or environment error.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bracket_analysis.hpp"
#include "io.hpp"
#include "malliavin.hpp"
#include "metrics.hpp"
#include "regime.hpp"
#include "solver.hpp"
#include "stats.hpp"
#include "version.hpp"

namespace tsns {

namespace cli_detail {

constexpr const char* kDefaultW1 = "1,0,0.5;0,1,-0.4;2,1,0.3";
constexpr const char* kDefaultW2 = "1,1,-0.6;2,0,0.2";

struct Ctx {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed_flag = 0;
  bool seed_set = false;
  AppConfig app;

  void resolve() {
    if (!config_path.empty()) app = load_config_file(config_path);
    if (seed_set) app.seed = seed_flag;
    std::filesystem::create_directories(out_dir);
  }

  std::string path(const std::string& name) const { return out_dir + "/" + name; }

  // Writes <name> and records it as the run's primary payload in the manifest.
  void emit(const std::string& name, const std::string& text,
            const std::string& provenance = "CONFIGURED") const {
    write_text_file(text, path(name));
    RunManifest m;
    m.tool_version = kToolVersion;
    m.config_echo = config_to_text(app);
    m.master_seed = app.seed;
    m.c0_provenance = provenance;
    m.created_at = iso8601_utc_now();
    m.content_hash = fnv1a64(text);
    write_manifest(m, path("manifest.json"));
  }
};

inline Observable parse_observable(const std::string& spec) {
  if (spec == "enstrophy") return observable_enstrophy();
  if (spec.rfind("clipped:", 0) == 0) {
    return observable_clipped_enstrophy(
        detail::parse_double(spec.substr(8), "observable clip level"));
  }
  if (spec.rfind("mode:", 0) == 0) {
    return observable_mode_coefficient(parse_mode(spec.substr(5)));
  }
  throw std::invalid_argument(
      "observable: want 'enstrophy', 'clipped:<L>', or 'mode:<k1,k2>'");
}

inline SpectralField field_or_zero(const TruncationSpec& t, const std::string& spec) {
  if (spec.empty()) return zero_field(t);
  return parse_field_spec(t, spec);
}

inline const char* yesno(bool b) { return b ? "yes" : "no"; }

// ---------------------------------------------------------------------------
// Handlers (return the process exit code)
// ---------------------------------------------------------------------------

struct SimulateOpts {
  std::int64_t steps = 0;
  int periods = 0;
  std::string w0;
};

inline int run_simulate(Ctx& ctx, const SimulateOpts& o, std::ostream& out) {
  const SolverConfig& cfg = ctx.app.solver;
  validate(cfg);
  std::int64_t steps = o.steps;
  if (o.periods > 0) {
    if (steps > 0)
      throw std::invalid_argument("simulate: give --steps or --periods, not both");
    steps = (std::int64_t)o.periods * steps_per_period(cfg);
  }
  if (steps < 1) throw std::invalid_argument("simulate: need --steps or --periods");
  const SpectralField w0 = field_or_zero(cfg.trunc, o.w0);
  WienerStore store;
  const WienerStore* sp = nullptr;
  if (cfg.noise.channels() > 0) {
    store = derive_wiener_store(ctx.app.seed, cfg.dt, cfg.noise.channels(), 0, steps);
    sp = &store;
  }
  const Trajectory traj = simulate(w0, 0, steps, cfg, sp);
  save_trajectory(traj, ctx.path("trajectory.bin"));

  std::vector<std::vector<double>> rows;
  rows.reserve(traj.frames.size());
  for (std::size_t j = 0; j < traj.frames.size(); ++j) {
    rows.push_back({(double)j, (double)j * cfg.dt, h_norm(traj.frames[j])});
  }
  const std::string csv =
      csv_text("state norm along the simulated path", {"step", "time", "h_norm"}, rows);
  ctx.emit("norms.csv", csv);
  out << "frames = " << traj.frames.size() << "\n";
  out << "final_norm = " << detail::fmt_double(h_norm(traj.frames.back())) << "\n";
  out << "trajectory = " << ctx.path("trajectory.bin") << "\n";
  return 0;
}

struct BracketsOpts {
  std::string modes;
  std::string amps;
  int trunc_k = 0;
  int max_depth = 16;
};

inline int run_brackets(Ctx& ctx, const BracketsOpts& o, std::ostream& out) {
  ForcedModeSet g;
  g.modes = parse_mode_list(o.modes);
  if (o.amps.empty()) {
    g.amplitudes.assign(g.modes.size(), 1.0);
  } else {
    for (const std::string& a : detail::split(o.amps, ','))
      g.amplitudes.push_back(detail::parse_double(a, "bracket amplitude"));
  }
  const TruncationSpec trunc{o.trunc_k, true};
  const BracketReport rep = analyze_brackets(g, trunc, o.max_depth);

  out << "classification: " << to_string(rep.classification) << "\n";
  out << "final_dim: " << rep.final_dim << " of " << rep.truncation_dim << "\n";
  out << "span_dims:";
  for (int d : rep.span_dims) out << " " << d;
  out << "\n";
  if (rep.saturated_at.has_value())
    out << "saturated_at_round: " << *rep.saturated_at << "\n";
  out << "condition_A1: " << yesno(rep.condition_a1) << "\n";
  out << "condition_A2: " << yesno(rep.condition_a2) << "\n";

  std::vector<std::vector<double>> rows;
  for (std::size_t r = 0; r < rep.span_dims.size(); ++r)
    rows.push_back({(double)r, (double)rep.span_dims[r]});
  ctx.emit("brackets.csv",
           csv_text("span dimension after each interaction round", {"round", "dim"}, rows));
  return 0;
}

struct RegimeOpts {
  double nu = 0.0, f_sup = 0.0, b0 = 0.0, c0 = 0.0, alpha = 1.0;
  bool raw = false, c0_given = false;
};

inline int run_regime(Ctx& ctx, const RegimeOpts& o, std::ostream& out) {
  const double c0 = o.c0_given ? o.c0 : ctx.app.c0;
  RegimeReport r;
  if (o.raw) {
    r = regime_report_values(o.nu, o.f_sup, o.b0, c0, o.alpha);
  } else {
    if (ctx.config_path.empty())
      throw std::invalid_argument("regime: need --nu (raw mode) or --config");
    r = regime_report(ctx.app.solver, c0, o.alpha);
  }
  out << "G1 = " << detail::fmt_double(r.G1) << "\n";
  out << "G2 = " << detail::fmt_double(r.G2) << "\n";
  out << "delta0 = " << detail::fmt_double(r.delta0) << "\n";
  out << "classification = " << to_string(r.classification) << "\n";
  out << "c0 = " << detail::fmt_double(r.c0) << " (" << to_string(r.c0_provenance)
      << ")\n";
  out << "alpha1_equivalence_ok = " << yesno(r.alpha1_equivalence_ok) << "\n";

  ctx.emit("regime.csv",
           csv_text("regime report", {"nu", "f_sup", "b0", "c0", "alpha", "G1", "G2", "delta0"},
                    {{o.raw ? o.nu : ctx.app.solver.nu, r.f_sup, r.noise_rate, r.c0,
                      r.alpha, r.G1, r.G2, r.delta0}}));
  return r.alpha1_equivalence_ok ? 0 : 1;
}

struct SyncOpts {
  int seeds = 5;
  double horizon = 10.0;
  double fit_start = -1.0;
  std::string w1 = kDefaultW1;
  std::string w2 = kDefaultW2;
};

inline int run_sync(Ctx& ctx, const SyncOpts& o, std::ostream& out) {
  const SolverConfig& cfg = ctx.app.solver;
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < o.seeds; ++i) seeds.push_back(replica_seed(ctx.app.seed, (std::uint64_t)i));
  const SynchronizationResult s = synchronization_experiment(
      cfg, ctx.app.c0, seeds, parse_field_spec(cfg.trunc, o.w1),
      parse_field_spec(cfg.trunc, o.w2), o.horizon, o.fit_start);

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < s.slopes.size(); ++i)
    rows.push_back({(double)i, s.slopes[i]});
  ctx.emit("sync.csv",
           csv_text("fitted slope of log squared separation per seed",
                    {"seed_index", "slope"}, rows));

  out << "delta0 = " << detail::fmt_double(s.report.delta0) << "\n";
  out << "median_slope = " << detail::fmt_double(s.median_slope) << "\n";
  out << "degenerate = " << yesno(s.degenerate) << "\n";
  out << "prefix_fit = " << yesno(s.prefix_fit) << "\n";
  if (s.degenerate) return 1;
  if (s.delta0_positive && !(s.median_slope <= -s.report.delta0 / 2.0)) {
    out << "contract_violation: median slope exceeds -delta0/2\n";
    return 1;
  }
  return 0;
}

struct PullbackOpts {
  int n_max = 20;
  std::int64_t probe = 0;
  int attraction_periods = 0;
};

inline int run_pullback(Ctx& ctx, const PullbackOpts& o, std::ostream& out) {
  const SolverConfig& cfg = ctx.app.solver;
  validate(cfg);
  const std::int64_t P = steps_per_period(cfg);
  WienerStore store;
  const WienerStore* sp = nullptr;
  if (cfg.noise.channels() > 0) {
    store = derive_wiener_store(
        ctx.app.seed, cfg.dt, cfg.noise.channels(), o.probe - (std::int64_t)o.n_max * P,
        o.probe + ((std::int64_t)o.attraction_periods + 1) * P);
    sp = &store;
  }
  const PullbackResult pb = pullback_periodic_solution(cfg, sp, o.n_max, o.probe);

  std::vector<std::vector<double>> rows;
  for (std::size_t d = 0; d < pb.cauchy_table.size(); ++d)
    rows.push_back({(double)(d + 1), pb.cauchy_table[d]});
  ctx.emit("pullback.csv",
           csv_text("distance between successive pullback depths at the probe time",
                    {"depth", "increment"}, rows));

  out << "tail_decreasing = " << yesno(pb.tail_decreasing) << "\n";
  out << "max_tail_ratio = " << detail::fmt_double(pb.max_tail_ratio) << "\n";
  out << "tail_pairs = " << pb.tail_pairs << "\n";

  int code = pb.tail_decreasing ? 0 : 1;
  if (o.attraction_periods > 0) {
    const RandomPeriodicityResult rp = random_periodicity_check(
        cfg, sp, o.n_max, o.probe, 1.0, o.attraction_periods);
    out << "periodicity_residual = " << detail::fmt_double(rp.periodicity_residual)
        << "\n";
    out << "forward_attraction_slope = "
        << detail::fmt_double(rp.forward_attraction_slope) << "\n";
    if (!(rp.periodicity_residual <= 1e-6)) {
      out << "contract_violation: periodicity residual exceeds 1e-6\n";
      code = 1;
    }
  }
  return code;
}

struct MixingOpts {
  int replicas = 32;
  int periods = 10;
  std::string w1 = kDefaultW1;
  std::string w2 = kDefaultW2;
};

inline int run_mixing(Ctx& ctx, const MixingOpts& o, std::ostream& out) {
  const SolverConfig& cfg = ctx.app.solver;
  const MixingDecayResult r = mixing_decay_experiment(
      parse_field_spec(cfg.trunc, o.w1), parse_field_spec(cfg.trunc, o.w2), cfg,
      ctx.app.seed, o.replicas, o.periods, ctx.app.metric);

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < r.table.size(); ++i) {
    rows.push_back({(double)r.table[i].period_index,
                    (double)r.table[i].period_index * cfg.forcing.period,
                    r.table[i].dist_lower, r.table[i].dist_upper,
                    r.floor_table[i].dist_lower, r.floor_table[i].dist_upper});
  }
  ctx.emit("mixing.csv",
           csv_text("ensemble transport distance per period, with same-law floor",
                    {"period", "time", "lower", "upper", "floor_lower", "floor_upper"},
                    rows));

  out << "gamma_hat = " << detail::fmt_double(r.gamma_hat) << "\n";
  out << "fit_points = " << r.fit_points << "\n";
  out << "floor_upper = " << detail::fmt_double(r.floor_upper) << "\n";
  if (!(r.gamma_hat > 0.0)) {
    out << "contract_violation: fitted decay rate is not positive\n";
    return 1;
  }
  return 0;
}

struct WllnOpts {
  int periods = 64;
  std::string average = "chain";
  std::string observable = "enstrophy";
  std::string w0;
};

inline int run_wlln(Ctx& ctx, const WllnOpts& o, std::ostream& out) {
  const SolverConfig& cfg = ctx.app.solver;
  AverageMode mode;
  if (o.average == "chain") {
    mode = AverageMode::periodic_chain;
  } else if (o.average == "continuous") {
    mode = AverageMode::continuous;
  } else {
    throw std::invalid_argument("wlln: --average must be 'chain' or 'continuous'");
  }
  const WllnResult r =
      wlln_estimate(field_or_zero(cfg.trunc, o.w0), cfg, ctx.app.seed,
                    parse_observable(o.observable), o.periods, mode);

  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < r.running.size(); ++k)
    rows.push_back({(double)k, r.running[k]});
  ctx.emit("wlln.csv",
           csv_text("running time average of the observable", {"sample", "average"}, rows));
  out << "final_average = " << detail::fmt_double(r.final_average) << "\n";
  return 0;
}

struct CltOpts {
  std::string chain_lengths = "64";
  int replicas = 64;
  int burn = 2;
  std::string observable = "clipped:25";
  std::string w0;
};

inline int run_clt(Ctx& ctx, const CltOpts& o, std::ostream& out) {
  const SolverConfig& cfg = ctx.app.solver;
  std::vector<int> lengths;
  for (const std::string& s : detail::split(o.chain_lengths, ','))
    lengths.push_back((int)detail::parse_int(s, "chain length"));
  const std::vector<CltResult> results =
      clt_multi_experiment(field_or_zero(cfg.trunc, o.w0), cfg, ctx.app.seed,
                           parse_observable(o.observable), lengths, o.replicas, o.burn);

  std::vector<std::vector<double>> rows;
  for (const CltResult& r : results) {
    for (std::size_t m = 0; m < r.samples.size(); ++m)
      rows.push_back({(double)r.chain_length, (double)m, r.samples[m]});
  }
  ctx.emit("clt.csv",
           csv_text("normalized partial sums per replica", {"chain_length", "replica", "sample"},
                    rows));
  for (const CltResult& r : results) {
    out << "N = " << r.chain_length << ": mu_hat = " << detail::fmt_double(r.mu_hat)
        << ", sigma2_hat = " << detail::fmt_double(r.sigma2_hat)
        << ", ks = " << detail::fmt_double(r.ks_stat)
        << ", degenerate = " << yesno(r.degenerate) << "\n";
  }
  return 0;
}

struct MalliavinOpts {
  int samples = 8;
  int window_periods = 1;
  int proj_kmax = 2;
  std::string w0 = kDefaultW1;
  std::string complement;
};

inline int run_malliavin(Ctx& ctx, const MalliavinOpts& o, std::ostream& out) {
  const SolverConfig& cfg = ctx.app.solver;
  validate(cfg);
  std::vector<ModeIndex> proj;
  for (const ModeIndex& k : enumerate_modes(TruncationSpec{o.proj_kmax, true}))
    proj.push_back(k);
  std::vector<ModeIndex> comp;
  if (!o.complement.empty()) comp = parse_mode_list(o.complement);

  const NondegeneracyResult r =
      nondegeneracy_probe(cfg, ctx.app.seed, o.samples, proj, o.window_periods,
                          field_or_zero(cfg.trunc, o.w0), comp);

  std::vector<std::vector<double>> rows;
  for (std::size_t s = 0; s < r.min_eigs.size(); ++s)
    rows.push_back({(double)s, r.min_eigs[s], r.epsilons[s]});
  ctx.emit("malliavin.csv",
           csv_text("minimum projected influence eigenvalue per sample",
                    {"sample", "min_eigenvalue", "epsilon"}, rows));

  out << "min_eig_quantiles =";
  for (double q : r.quantiles) out << " " << detail::fmt_double(q);
  out << "\n";
  out << "degenerate_fraction = " << detail::fmt_double(r.degenerate_fraction) << "\n";
  int code = 0;
  for (double e : r.min_eigs) {
    if (!(e > 0.0)) code = 1;
  }
  if (code != 0) out << "contract_violation: non-positive minimum eigenvalue\n";
  if (r.has_complement) {
    out << "complement_max_quadform = "
        << detail::fmt_double(r.complement_max_quadform) << "\n";
    if (!(r.complement_max_quadform <= 1e-12)) {
      out << "contract_violation: complement quadratic form exceeds 1e-12\n";
      code = 1;
    }
  }
  return code;
}

struct C0Opts {
  int trunc_k = 6;
  int samples = 4096;
};

inline int run_c0_estimate(Ctx& ctx, const C0Opts& o, std::ostream& out) {
  const C0Estimate e =
      estimate_ladyzhenskaya_c0(TruncationSpec{o.trunc_k, true}, o.samples, ctx.app.seed);
  out << "c0_estimate = " << detail::fmt_double(e.value) << "\n";
  out << "samples = " << e.samples << "\n";
  ctx.emit("c0.csv",
           csv_text("empirical interpolation-constant estimate", {"samples", "c0"},
                    {{(double)e.samples, e.value}}),
           "ESTIMATED");
  return 0;
}

}  // namespace cli_detail

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline int run_cli(std::vector<std::string> args, std::ostream& out,
                   std::ostream& err) {
  using namespace cli_detail;
  CLI::App app{"Spectral simulator and verification harness for a noisy "
               "vorticity equation on the torus"};
  app.require_subcommand(1);

  Ctx ctx;
  CLI::Option* seed_opt = app.add_option("--seed", ctx.seed_flag, "master seed override");
  app.add_option("--config", ctx.config_path, "configuration file (key = value lines)");
  app.add_option("--out", ctx.out_dir, "output directory (default '.')");

  SimulateOpts sim;
  CLI::App* c_sim = app.add_subcommand("simulate", "integrate one path and save it");
  c_sim->add_option("--steps", sim.steps, "number of steps");
  c_sim->add_option("--periods", sim.periods, "horizon in forcing periods");
  c_sim->add_option("--w0", sim.w0, "initial field 'k1,k2,c;...' (default zero)");

  BracketsOpts br;
  CLI::App* c_br = app.add_subcommand("brackets", "interaction-span analysis of a mode set");
  c_br->add_option("--modes", br.modes, "noise modes 'k1,k2;...'")->required();
  c_br->add_option("--trunc", br.trunc_k, "truncation radius K")->required();
  c_br->add_option("--amps", br.amps, "amplitudes 'a,a,...' (default all 1)");
  c_br->add_option("--max-depth", br.max_depth, "interaction rounds cap");

  RegimeOpts rg;
  CLI::App* c_rg = app.add_subcommand("regime", "dissipation-margin classification");
  CLI::Option* rg_nu = c_rg->add_option("--nu", rg.nu, "viscosity (raw mode)");
  c_rg->add_option("--f-sup", rg.f_sup, "forcing sup norm (raw mode)");
  c_rg->add_option("--b0", rg.b0, "noise energy rate (raw mode)");
  CLI::Option* rg_c0 = c_rg->add_option("--c0", rg.c0, "interpolation constant");
  c_rg->add_option("--alpha", rg.alpha, "margin parameter in (0,1]");

  SyncOpts sy;
  CLI::App* c_sy = app.add_subcommand("sync", "shared-noise two-point contraction");
  c_sy->add_option("--seeds", sy.seeds, "number of noise paths");
  c_sy->add_option("--horizon", sy.horizon, "time horizon");
  c_sy->add_option("--fit-start", sy.fit_start, "fit window start (default 20% of horizon)");
  c_sy->add_option("--w1", sy.w1, "first initial field");
  c_sy->add_option("--w2", sy.w2, "second initial field");

  PullbackOpts pb;
  CLI::App* c_pb = app.add_subcommand("pullback", "periodic state by pullback");
  c_pb->add_option("--n-max", pb.n_max, "deepest pullback (periods)");
  c_pb->add_option("--probe", pb.probe, "probe step index");
  c_pb->add_option("--attraction-periods", pb.attraction_periods,
                   "also check periodicity and forward attraction");

  MixingOpts mx;
  CLI::App* c_mx = app.add_subcommand("mixing", "ensemble transport-distance decay");
  c_mx->add_option("--replicas", mx.replicas, "ensemble size (max 256)");
  c_mx->add_option("--periods", mx.periods, "horizon in periods");
  c_mx->add_option("--w1", mx.w1, "first initial field");
  c_mx->add_option("--w2", mx.w2, "second initial field");

  WllnOpts wl;
  CLI::App* c_wl = app.add_subcommand("wlln", "running time average of an observable");
  c_wl->add_option("--periods", wl.periods, "horizon in periods");
  c_wl->add_option("--average", wl.average, "'chain' or 'continuous'");
  c_wl->add_option("--observable", wl.observable,
                   "'enstrophy', 'clipped:<L>', or 'mode:<k1,k2>'");
  c_wl->add_option("--w0", wl.w0, "initial field (default zero)");

  CltOpts cl;
  CLI::App* c_cl = app.add_subcommand("clt", "normalized partial sums across replicas");
  c_cl->add_option("--chain-lengths", cl.chain_lengths, "comma list of N values");
  c_cl->add_option("--replicas", cl.replicas, "replica count M");
  c_cl->add_option("--burn", cl.burn, "burn-in periods per replica");
  c_cl->add_option("--observable", cl.observable, "observable spec");
  c_cl->add_option("--w0", cl.w0, "initial field (default zero)");

  MalliavinOpts ml;
  CLI::App* c_ml = app.add_subcommand("malliavin", "noise-influence spectrum probe");
  c_ml->add_option("--samples", ml.samples, "independent sample paths");
  c_ml->add_option("--window-periods", ml.window_periods, "influence window length");
  c_ml->add_option("--proj-kmax", ml.proj_kmax, "projection: all modes with |k|_inf <= kmax");
  c_ml->add_option("--w0", ml.w0, "initial field");
  c_ml->add_option("--complement", ml.complement, "complement modes 'k1,k2;...'");

  C0Opts c0o;
  CLI::App* c_c0 = app.add_subcommand("c0-estimate", "interpolation-constant estimate");
  c_c0->add_option("--trunc", c0o.trunc_k, "truncation radius K");
  c_c0->add_option("--samples", c0o.samples, "random fields to scan");

  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return (code == 0) ? 0 : 2;
  }

  try {
    ctx.seed_set = seed_opt->count() > 0;
    rg.raw = rg_nu->count() > 0;
    rg.c0_given = rg_c0->count() > 0;
    ctx.resolve();
    if (app.got_subcommand(c_sim)) return run_simulate(ctx, sim, out);
    if (app.got_subcommand(c_br)) return run_brackets(ctx, br, out);
    if (app.got_subcommand(c_rg)) return run_regime(ctx, rg, out);
    if (app.got_subcommand(c_sy)) return run_sync(ctx, sy, out);
    if (app.got_subcommand(c_pb)) return run_pullback(ctx, pb, out);
    if (app.got_subcommand(c_mx)) return run_mixing(ctx, mx, out);
    if (app.got_subcommand(c_wl)) return run_wlln(ctx, wl, out);
    if (app.got_subcommand(c_cl)) return run_clt(ctx, cl, out);
    if (app.got_subcommand(c_ml)) return run_malliavin(ctx, ml, out);
    if (app.got_subcommand(c_c0)) return run_c0_estimate(ctx, c0o, out);
    err << "error: no subcommand dispatched\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace tsns
