#pragma once
// Noise-influence Gram matrix along simulated trajectories, assembled from
// the time-reversed adjoint of the linearized flow, plus a spectral
// non-degeneracy probe over independent sample paths.
//
// For a window [tau, t] on a stored trajectory, the quadratic form of the
// influence operator is
//   <M xi, xi> = sum_i int_tau^t <g_i, U^{t,xi}(r)>^2 dr,
// where g_i are the noise coupling fields and U^{t,xi}(r) is the H-adjoint
// of the linearized flow applied to xi, run backwards from t to r.  One
// backward sweep per projection direction assembles the whole projected
// matrix; an independent forward assembly (one Jacobian solve per channel
// and quadrature node) is provided as a cross-check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "field.hpp"
#include "operators.hpp"
#include "solver.hpp"
#include "util.hpp"
#include "wiener.hpp"

namespace tsns {

// ---------------------------------------------------------------------------
// Backward adjoint propagation
// ---------------------------------------------------------------------------

namespace detail {

// In-place H-adjoint of one linearized step at the given frame:
//   U <- E.U + L^T(P.U),  L^T v = B(Kw, v) - K^*(v grad w).
// Exact transpose of Stepper::jacobian_step because E and P are diagonal in
// an orthogonal basis of uniform normalization.
inline void adjoint_step(SpectralField& U, const SpectralField& frame,
                         const Stepper& stepper) {
  const std::vector<double>& E = stepper.decay();
  const std::vector<double>& P = stepper.drift_weight();
  if (stepper.config().nonlinear_enabled) {
    SpectralField v = U;
    for (std::size_t s = 0; s < v.coeff.size(); ++s) v.coeff[s] *= P[s];
    SpectralField lt = bracket_linearization_adjoint(frame, v);
    for (std::size_t s = 0; s < U.coeff.size(); ++s)
      U.coeff[s] = E[s] * U.coeff[s] + lt.coeff[s];
  } else {
    for (std::size_t s = 0; s < U.coeff.size(); ++s) U.coeff[s] *= E[s];
  }
}

inline void require_window(const Trajectory& traj, std::int64_t tau_index,
                           std::int64_t t_index) {
  if (tau_index > t_index)
    throw std::invalid_argument("adjoint window: tau must not exceed t");
  if (tau_index < traj.start_index ||
      t_index > traj.start_index + (std::int64_t)traj.frames.size() - 1)
    throw std::out_of_range("adjoint window not covered by trajectory");
}

}  // namespace detail

// U^{t,phi}(tau): the adjoint of the linearized flow over [tau, t] applied
// to phi, computed by one backward sweep along the stored frames.
inline SpectralField backward_adjoint(const Trajectory& traj,
                                      const SpectralField& phi,
                                      std::int64_t t_index,
                                      std::int64_t tau_index) {
  detail::require_window(traj, tau_index, t_index);
  check_same_truncation(phi, traj.frames.front());
  Stepper stepper(traj.config);
  SpectralField U = phi;
  for (std::int64_t m = t_index - 1; m >= tau_index; --m) {
    detail::adjoint_step(
        U, traj.frames[(std::size_t)(m - traj.start_index)], stepper);
  }
  return U;
}

// ---------------------------------------------------------------------------
// Projected Gram matrix
// ---------------------------------------------------------------------------

struct MalliavinReport {
  std::int64_t from_index = 0;
  std::int64_t to_index = 0;
  std::vector<ModeIndex> projection_modes;
  std::vector<std::vector<double>> gram;  // p x p in the normalized mode basis
  double min_eigenvalue = 0.0;
  double trace = 0.0;
  double max_asymmetry = 0.0;  // measured before any symmetrization
  bool has_complement = false;
  double complement_max_quadform = 0.0;  // meaningful when has_complement
};

namespace detail {

// Quadrature nodes tau, tau + stride, ..., t (step indices) and trapezoid
// weights for spacing stride*dt.  Requires the window length to be a
// multiple of the stride.
struct QuadGrid {
  std::vector<std::int64_t> nodes;
  std::vector<double> weights;
};

inline QuadGrid make_quad_grid(std::int64_t tau_index, std::int64_t t_index,
                               int stride, double dt) {
  if (stride < 1) throw std::invalid_argument("gram quadrature: stride >= 1");
  const std::int64_t len = t_index - tau_index;
  if (len % stride != 0)
    throw std::invalid_argument(
        "gram quadrature: window length must be a multiple of the stride");
  QuadGrid g;
  if (len == 0) return g;  // zero-length window: no quadrature mass
  const std::int64_t n_r = len / stride;
  const double h = stride * dt;
  g.nodes.reserve((std::size_t)n_r + 1);
  g.weights.reserve((std::size_t)n_r + 1);
  for (std::int64_t j = 0; j <= n_r; ++j) {
    g.nodes.push_back(tau_index + j * stride);
    g.weights.push_back((j == 0 || j == n_r) ? 0.5 * h : h);
  }
  return g;
}

// Channel inner products q[i][j] = <g_i, U(r_j)> collected during one
// backward sweep of phi from t down to tau.
inline std::vector<std::vector<double>> backward_channel_products(
    const Trajectory& traj, const Stepper& stepper, const QuadGrid& grid,
    const SpectralField& phi, std::int64_t tau_index, std::int64_t t_index,
    const std::vector<int>& noise_slots, const std::vector<double>& amps) {
  const std::size_t d = noise_slots.size();
  std::vector<std::vector<double>> q(d,
                                     std::vector<double>(grid.nodes.size(), 0.0));
  if (grid.nodes.empty()) return q;
  SpectralField U = phi;
  auto record = [&](std::int64_t r) {
    // grid nodes are tau + j*stride in increasing order
    const std::int64_t stride = (grid.nodes.size() > 1)
                                    ? grid.nodes[1] - grid.nodes[0]
                                    : 1;
    if ((r - tau_index) % stride != 0) return;
    const std::size_t j = (std::size_t)((r - tau_index) / stride);
    if (j >= grid.nodes.size()) return;
    for (std::size_t i = 0; i < d; ++i) {
      q[i][j] = amps[i] * kBasisNormSq * U.coeff[(std::size_t)noise_slots[i]];
    }
  };
  record(t_index);
  for (std::int64_t m = t_index - 1; m >= tau_index; --m) {
    adjoint_step(U, traj.frames[(std::size_t)(m - traj.start_index)], stepper);
    record(m);
  }
  return q;
}

inline std::vector<int> projection_slots(const TruncationSpec& t,
                                         const std::vector<ModeIndex>& modes) {
  if (modes.empty())
    throw std::invalid_argument("projection basis must be nonempty");
  std::vector<int> slots;
  slots.reserve(modes.size());
  for (const ModeIndex& k : modes) {
    int s = mode_slot(t, k);
    if (s < 0)
      throw std::invalid_argument("projection mode " + to_string(k) +
                                  " outside truncation");
    slots.push_back(s);
  }
  return slots;
}

inline SpectralField normalized_mode(const TruncationSpec& t, int slot) {
  SpectralField f = zero_field(t);
  f.coeff[(std::size_t)slot] = 1.0 / std::sqrt(kBasisNormSq);
  return f;
}

}  // namespace detail

// Projected Gram over [tau, t] by backward assembly: one adjoint sweep per
// projection direction, trapezoid quadrature on the dt grid thinned by
// `stride`.  Directions are the orthonormalized basis modes.  Supplying
// complement modes additionally evaluates the quadratic form on each of
// them and records the maximum.
inline MalliavinReport projected_malliavin_gram(
    const Trajectory& traj, std::int64_t tau_index, std::int64_t t_index,
    const std::vector<ModeIndex>& projection_modes, const ForcedModeSet& noise,
    int stride = 1, const std::vector<ModeIndex>& complement_modes = {}) {
  detail::require_window(traj, tau_index, t_index);
  validate(noise);
  const TruncationSpec& trunc = traj.config.trunc;
  const std::vector<int> pslots = detail::projection_slots(trunc, projection_modes);
  std::vector<int> nslots;
  for (const ModeIndex& k : noise.modes) {
    int s = mode_slot(trunc, k);
    if (s < 0)
      throw std::invalid_argument("noise mode " + to_string(k) +
                                  " outside truncation");
    nslots.push_back(s);
  }
  const detail::QuadGrid grid =
      detail::make_quad_grid(tau_index, t_index, stride, traj.config.dt);

  MalliavinReport rep;
  rep.from_index = tau_index;
  rep.to_index = t_index;
  rep.projection_modes = projection_modes;
  const std::size_t p = pslots.size();
  rep.gram.assign(p, std::vector<double>(p, 0.0));

  Stepper stepper(traj.config);
  std::vector<std::vector<std::vector<double>>> q(p);
  for (std::size_t a = 0; a < p; ++a) {
    q[a] = detail::backward_channel_products(
        traj, stepper, grid, detail::normalized_mode(trunc, pslots[a]),
        tau_index, t_index, nslots, noise.amplitudes);
  }
  const std::size_t d = nslots.size();
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b < p; ++b) {
      double sum = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < grid.nodes.size(); ++j) {
          sum += grid.weights[j] * q[a][i][j] * q[b][i][j];
        }
      }
      rep.gram[a][b] = sum;
    }
  }

  for (std::size_t a = 0; a < p; ++a) {
    rep.trace += rep.gram[a][a];
    for (std::size_t b = 0; b < p; ++b) {
      rep.max_asymmetry =
          std::max(rep.max_asymmetry, std::abs(rep.gram[a][b] - rep.gram[b][a]));
    }
  }

  Eigen::MatrixXd G((Eigen::Index)p, (Eigen::Index)p);
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < p; ++b)
      G((Eigen::Index)a, (Eigen::Index)b) =
          0.5 * (rep.gram[a][b] + rep.gram[b][a]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G,
                                                    Eigen::EigenvaluesOnly);
  rep.min_eigenvalue = es.eigenvalues().minCoeff();

  if (!complement_modes.empty()) {
    rep.has_complement = true;
    const std::vector<int> cslots =
        detail::projection_slots(trunc, complement_modes);
    for (int cs : cslots) {
      const auto qc = detail::backward_channel_products(
          traj, stepper, grid, detail::normalized_mode(trunc, cs), tau_index,
          t_index, nslots, noise.amplitudes);
      double quad = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < grid.nodes.size(); ++j) {
          quad += grid.weights[j] * qc[i][j] * qc[i][j];
        }
      }
      rep.complement_max_quadform = std::max(rep.complement_max_quadform, quad);
    }
  }
  return rep;
}

// Independent assembly of the same matrix from forward Jacobian solves:
// q[i][j][a] = <J_{r_j,t} g_i, xi_a> with one linearized forward run per
// channel and node.  Same quadrature grid and weights as the backward
// assembly at equal stride.
inline std::vector<std::vector<double>> forward_gram_reference(
    const Trajectory& traj, std::int64_t tau_index, std::int64_t t_index,
    const std::vector<ModeIndex>& projection_modes, const ForcedModeSet& noise,
    int stride = 1) {
  detail::require_window(traj, tau_index, t_index);
  validate(noise);
  const TruncationSpec& trunc = traj.config.trunc;
  const std::vector<int> pslots = detail::projection_slots(trunc, projection_modes);
  const detail::QuadGrid grid =
      detail::make_quad_grid(tau_index, t_index, stride, traj.config.dt);
  const std::size_t p = pslots.size();
  std::vector<std::vector<double>> gram(p, std::vector<double>(p, 0.0));
  if (grid.nodes.empty()) return gram;

  const std::size_t d = noise.modes.size();
  for (std::size_t i = 0; i < d; ++i) {
    int ns = mode_slot(trunc, noise.modes[i]);
    if (ns < 0)
      throw std::invalid_argument("noise mode " + to_string(noise.modes[i]) +
                                  " outside truncation");
    SpectralField g = zero_field(trunc);
    g.coeff[(std::size_t)ns] = noise.amplitudes[i];
    for (std::size_t j = 0; j < grid.nodes.size(); ++j) {
      const SpectralField y =
          propagate_jacobian(traj, g, grid.nodes[j], t_index);
      std::vector<double> qa(p);
      for (std::size_t a = 0; a < p; ++a) {
        qa[a] = std::sqrt(kBasisNormSq) * y.coeff[(std::size_t)pslots[a]];
      }
      for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < p; ++b)
          gram[a][b] += grid.weights[j] * qa[a] * qa[b];
    }
  }
  return gram;
}

// ---------------------------------------------------------------------------
// Non-degeneracy probe over independent sample paths
// ---------------------------------------------------------------------------

struct NondegeneracyResult {
  std::vector<double> min_eigs;   // per sample, in sample order
  std::vector<double> epsilons;   // per-sample degeneracy thresholds
  std::vector<double> quantiles;  // min eigenvalue at p = 0, .25, .5, .75, 1
  double degenerate_fraction = 0.0;
  bool has_complement = false;
  double complement_max_quadform = 0.0;  // max over samples
};

// Empirical quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> v, double prob) {
  if (v.empty()) throw std::invalid_argument("quantile: empty sample");
  if (!(prob >= 0.0) || prob > 1.0)
    throw std::invalid_argument("quantile: probability in [0, 1]");
  std::sort(v.begin(), v.end());
  const double h = prob * (double)(v.size() - 1);
  const std::size_t lo = (std::size_t)h;
  if (lo + 1 >= v.size()) return v.back();
  const double frac = h - (double)lo;
  return v[lo] + frac * (v[lo + 1] - v[lo]);
}

// Runs `samples` independent trajectories from w0, one noise path each, and
// records the minimum eigenvalue of the projected Gram over the first
// `window_periods` forcing periods.  A sample counts as degenerate when its
// minimum eigenvalue fails to exceed eps_scale * trace / p.  Complement
// modes, when supplied, are evaluated on every sample and the largest
// quadratic form is reported.
inline NondegeneracyResult nondegeneracy_probe(
    const SolverConfig& cfg, std::uint64_t master_seed, int samples,
    const std::vector<ModeIndex>& projection_modes, int window_periods,
    const SpectralField& w0, const std::vector<ModeIndex>& complement_modes = {},
    double eps_scale = 1e-8) {
  validate(cfg);
  if (samples < 1) throw std::invalid_argument("probe: samples >= 1");
  if (window_periods < 0) throw std::invalid_argument("probe: window_periods >= 0");
  if (!(eps_scale >= 0.0)) throw std::invalid_argument("probe: eps_scale >= 0");
  check_same_truncation(w0, zero_field(cfg.trunc));
  detail::projection_slots(cfg.trunc, projection_modes);  // validate up front
  const std::int64_t n = (std::int64_t)window_periods * steps_per_period(cfg);
  const int ch = cfg.noise.channels();

  NondegeneracyResult out;
  out.min_eigs.assign((std::size_t)samples, 0.0);
  out.epsilons.assign((std::size_t)samples, 0.0);
  out.has_complement = !complement_modes.empty();
  std::vector<double> comp((std::size_t)samples, 0.0);

  parallel_for((std::size_t)samples, [&](std::size_t s) {
    WienerStore store;
    const WienerStore* sp = nullptr;
    if (ch > 0) {
      store = derive_wiener_store(replica_seed(master_seed, s), cfg.dt, ch, 0,
                                  std::max<std::int64_t>(n, 1));
      sp = &store;
    }
    const Trajectory traj = simulate(w0, 0, n, cfg, sp);
    const MalliavinReport rep = projected_malliavin_gram(
        traj, 0, n, projection_modes, cfg.noise, 1, complement_modes);
    out.min_eigs[s] = rep.min_eigenvalue;
    out.epsilons[s] =
        eps_scale * rep.trace / (double)projection_modes.size();
    comp[s] = rep.complement_max_quadform;
  });

  int degenerate = 0;
  for (std::size_t s = 0; s < out.min_eigs.size(); ++s) {
    if (!(out.min_eigs[s] > out.epsilons[s])) ++degenerate;
  }
  out.degenerate_fraction = (double)degenerate / (double)samples;
  for (double prob : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    out.quantiles.push_back(quantile(out.min_eigs, prob));
  }
  if (out.has_complement) {
    out.complement_max_quadform = *std::max_element(comp.begin(), comp.end());
  }
  return out;
}

}  // namespace tsns
