#pragma once
// Weighted-metric toolkit: the exponential Lyapunov weight, computable
// lower/upper brackets on the weighted path metric between two fields,
// exact optimal-transport distance between equal-size ensembles, and the
// scalar observables used by the statistics experiments.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "field.hpp"
#include "util.hpp"

namespace tsns {

// ---------------------------------------------------------------------------
// Metric configuration
// ---------------------------------------------------------------------------

struct MetricConfig {
  double eta = 0.0;     // weight strength in exp(eta * ||w||^2); >= 0
  double r = 1.0;       // weight power for the ground distance, in (0, 1]
  int quad_nodes = 16;  // Gauss-Legendre node count for the upper bracket
};

inline void validate(const MetricConfig& m) {
  if (!(m.eta >= 0.0) || !std::isfinite(m.eta)) {
    throw std::invalid_argument("MetricConfig: eta must be finite and >= 0");
  }
  if (!(m.r > 0.0) || m.r > 1.0) {
    throw std::invalid_argument("MetricConfig: r must lie in (0, 1]");
  }
  if (m.quad_nodes < 1) {
    throw std::invalid_argument("MetricConfig: quad_nodes must be >= 1");
  }
}

// Largest admissible weight strength for a given dissipation/noise balance:
// eta <= 0.5 * sqrt(nu / (4 * noise_energy_rate)).  Experiments reject
// configurations above this bound; metric evaluation itself does not care.
inline double eta_upper_bound(double nu, double noise_rate) {
  if (!(nu > 0.0)) throw std::invalid_argument("eta_upper_bound: nu must be positive");
  if (!(noise_rate > 0.0)) {
    throw std::invalid_argument("eta_upper_bound: noise energy rate must be positive");
  }
  return 0.5 * std::sqrt(nu / (4.0 * noise_rate));
}

inline void enforce_eta_bound(const MetricConfig& m, double nu, double noise_rate) {
  validate(m);
  if (!(m.eta > 0.0)) {
    throw std::invalid_argument("MetricConfig: experiments require eta > 0");
  }
  const double bound = eta_upper_bound(nu, noise_rate);
  if (m.eta > bound) {
    throw std::invalid_argument("MetricConfig: eta exceeds the admissible bound 0.5*sqrt(nu/(4*B0))");
  }
}

inline MetricConfig default_metric_config(double nu, double noise_rate) {
  MetricConfig m;
  m.eta = eta_upper_bound(nu, noise_rate);
  m.r = 1.0;
  m.quad_nodes = 16;
  return m;
}

// ---------------------------------------------------------------------------
// Lyapunov weight V(w) = exp(eta * ||w||^2)
// ---------------------------------------------------------------------------

struct LyapunovValue {
  double value = 1.0;
  bool overflow = false;  // true when exp overflowed; value is +infinity
};

inline LyapunovValue lyapunov_V(const SpectralField& w, double eta) {
  if (!(eta >= 0.0)) throw std::invalid_argument("lyapunov_V: eta must be >= 0");
  const double n = h_norm(w);
  const double v = std::exp(eta * n * n);
  LyapunovValue out;
  out.value = v;
  out.overflow = !std::isfinite(v);
  if (out.overflow) out.value = std::numeric_limits<double>::infinity();
  return out;
}

// ---------------------------------------------------------------------------
// Bracketing bounds on the weighted path metric
// ---------------------------------------------------------------------------

struct RhoBounds {
  double lower = 0.0;  // plain H distance (weight >= 1 makes this a lower bound)
  double upper = 0.0;  // straight-segment path cost with weight V^r
};

namespace detail {

// Lexicographic coefficient comparison used to canonicalize argument order so
// that rho_bounds(a, b) and rho_bounds(b, a) run bit-identical arithmetic.
inline bool coeff_lex_less(const SpectralField& a, const SpectralField& b) {
  return std::lexicographical_compare(a.coeff.begin(), a.coeff.end(),
                                      b.coeff.begin(), b.coeff.end());
}

}  // namespace detail

inline RhoBounds rho_bounds(const SpectralField& w1, const SpectralField& w2,
                            const MetricConfig& m) {
  check_same_truncation(w1, w2);
  validate(m);
  const SpectralField* lo = &w1;
  const SpectralField* hi = &w2;
  if (detail::coeff_lex_less(*hi, *lo)) std::swap(lo, hi);

  RhoBounds out;
  out.lower = h_dist(*lo, *hi);
  if (out.lower == 0.0) {
    out.upper = 0.0;
    return out;
  }

  const Quadrature q = gauss_legendre(m.quad_nodes);
  const double c = m.r * m.eta;
  double sum = 0.0;
  SpectralField seg = zero_field(lo->trunc);
  for (int i = 0; i < m.quad_nodes; ++i) {
    const double tau = q.nodes[i];
    for (std::size_t s = 0; s < seg.coeff.size(); ++s) {
      seg.coeff[s] = lo->coeff[s] + tau * (hi->coeff[s] - lo->coeff[s]);
    }
    const double nn = h_norm(seg);
    sum += q.weights[i] * std::exp(c * nn * nn);
  }
  // The weight V^r >= 1 pointwise, so the true path cost dominates the plain
  // distance; guard the documented lower <= upper against quadrature round-off.
  out.upper = std::max(out.lower, out.lower * sum);
  return out;
}

// ---------------------------------------------------------------------------
// Ensembles and exact optimal transport
// ---------------------------------------------------------------------------

struct EnsembleSnapshot {
  std::vector<SpectralField> fields;
  long long time_index = 0;
  std::string provenance;  // free-form run-manifest reference
};

inline void validate(const EnsembleSnapshot& e) {
  if (e.fields.empty()) throw std::invalid_argument("EnsembleSnapshot: empty ensemble");
  for (std::size_t i = 1; i < e.fields.size(); ++i) {
    check_same_truncation(e.fields[0], e.fields[i]);
  }
}

enum class GroundCost { lower, upper };

inline constexpr int kMaxExactAssignment = 256;

namespace detail {

// Exact minimum-cost perfect matching on a square cost matrix via the
// O(n^3) potentials / shortest-augmenting-path method.  Returns the column
// assigned to each row.
inline std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

// Order-independent total: sort the matched costs before summing so the
// result is invariant under relabeling of either ensemble.
inline double matched_cost_total(const std::vector<std::vector<double>>& cost,
                                 const std::vector<int>& row_to_col) {
  std::vector<double> picked;
  picked.reserve(cost.size());
  for (std::size_t i = 0; i < cost.size(); ++i) picked.push_back(cost[i][row_to_col[i]]);
  std::sort(picked.begin(), picked.end());
  return std::accumulate(picked.begin(), picked.end(), 0.0);
}

}  // namespace detail

inline std::vector<std::vector<double>> ground_cost_matrix(const EnsembleSnapshot& a,
                                                           const EnsembleSnapshot& b,
                                                           const MetricConfig& m,
                                                           GroundCost ground) {
  validate(a);
  validate(b);
  validate(m);
  if (a.fields.size() != b.fields.size()) {
    throw std::invalid_argument("ground_cost_matrix: ensembles must have equal size");
  }
  check_same_truncation(a.fields[0], b.fields[0]);
  const std::size_t n = a.fields.size();
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const RhoBounds rb = rho_bounds(a.fields[i], b.fields[j], m);
      cost[i][j] = (ground == GroundCost::lower) ? rb.lower : rb.upper;
    }
  }
  return cost;
}

// Exact 1-Wasserstein distance between two equal-size empirical measures with
// uniform weights 1/n: minimum assignment cost divided by n.  Exact mode only;
// ensembles larger than kMaxExactAssignment are rejected outright.
inline double empirical_wasserstein(const EnsembleSnapshot& a, const EnsembleSnapshot& b,
                                    const MetricConfig& m,
                                    GroundCost ground = GroundCost::lower) {
  if (a.fields.size() != b.fields.size()) {
    throw std::invalid_argument("empirical_wasserstein: ensembles must have equal size");
  }
  if (a.fields.size() > static_cast<std::size_t>(kMaxExactAssignment)) {
    throw std::invalid_argument(
        "empirical_wasserstein: ensemble size exceeds the exact-assignment cap (256); "
        "no approximate fallback is provided");
  }
  const auto cost = ground_cost_matrix(a, b, m, ground);
  const auto match = detail::solve_assignment(cost);
  return detail::matched_cost_total(cost, match) / static_cast<double>(cost.size());
}

// ---------------------------------------------------------------------------
// Observables
// ---------------------------------------------------------------------------

enum class ObservableKind {
  mode_coefficient,            // raw basis coefficient of one mode
  enstrophy,                   // ||w||^2
  clipped_enstrophy,           // min(||w||^2, L): globally bounded
  custom_low_mode_polynomial,  // weighted sum of monomials in coefficients
};

struct PolynomialTerm {
  double weight = 0.0;
  std::vector<std::pair<ModeIndex, int>> powers;  // (mode, exponent >= 1)
};

struct Observable {
  std::string name;
  ObservableKind kind = ObservableKind::enstrophy;
  ModeIndex mode{0, 0};                // mode_coefficient payload
  double clip = 1.0;                   // clipped_enstrophy payload (L > 0)
  std::vector<PolynomialTerm> terms;   // polynomial payload
};

inline Observable observable_mode_coefficient(ModeIndex k) {
  Observable o;
  o.name = "mode_coefficient(" + to_string(k) + ")";
  o.kind = ObservableKind::mode_coefficient;
  o.mode = k;
  return o;
}

inline Observable observable_enstrophy() {
  Observable o;
  o.name = "enstrophy";
  o.kind = ObservableKind::enstrophy;
  return o;
}

inline Observable observable_clipped_enstrophy(double clip) {
  if (!(clip > 0.0)) {
    throw std::invalid_argument("observable_clipped_enstrophy: clip level must be positive");
  }
  Observable o;
  o.name = "clipped_enstrophy(" + std::to_string(clip) + ")";
  o.kind = ObservableKind::clipped_enstrophy;
  o.clip = clip;
  return o;
}

inline Observable observable_polynomial(std::string name, std::vector<PolynomialTerm> terms) {
  Observable o;
  o.name = std::move(name);
  o.kind = ObservableKind::custom_low_mode_polynomial;
  o.terms = std::move(terms);
  return o;
}

inline double evaluate(const Observable& o, const SpectralField& w) {
  switch (o.kind) {
    case ObservableKind::mode_coefficient: {
      const int slot = mode_slot(w.trunc, o.mode);
      if (slot < 0) {
        throw std::invalid_argument("Observable: mode " + to_string(o.mode) +
                                    " outside the field truncation");
      }
      return w.coeff[static_cast<std::size_t>(slot)];
    }
    case ObservableKind::enstrophy: {
      const double n = h_norm(w);
      return n * n;
    }
    case ObservableKind::clipped_enstrophy: {
      const double n = h_norm(w);
      return std::min(n * n, o.clip);
    }
    case ObservableKind::custom_low_mode_polynomial: {
      double total = 0.0;
      for (const PolynomialTerm& t : o.terms) {
        double mono = t.weight;
        for (const auto& [k, p] : t.powers) {
          const int slot = mode_slot(w.trunc, k);
          if (slot < 0) {
            throw std::invalid_argument("Observable: mode " + to_string(k) +
                                        " outside the field truncation");
          }
          if (p < 1) throw std::invalid_argument("Observable: monomial exponent must be >= 1");
          double f = 1.0;
          const double c = w.coeff[static_cast<std::size_t>(slot)];
          for (int e = 0; e < p; ++e) f *= c;
          mono *= f;
        }
        total += mono;
      }
      return total;
    }
  }
  throw std::logic_error("Observable: unknown kind");
}

}  // namespace tsns
