#pragma once

// Closed-form symmetrized mode brackets and the span-growth analysis used to
// classify how the forced directions spread through the truncated system:
//   - closed_form_mode_bracket: exact trig-identity bracket of two basis modes
//   - generate_bracket_spans:   iterated span closure with Gram-Schmidt rank
//   - classify_degeneracy:      Full / Case1 / Case2 / Indeterminate report
// Lattice reasoning (subgroup membership, generators) is exact in integers.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "tsns/field.hpp"
#include "tsns/lattice.hpp"
#include "tsns/modes.hpp"

namespace tsns {

struct ModeBracket {
  SpectralField field;              // projection onto the truncation
  std::vector<ModeIndex> dropped;   // output modes falling outside it
};

namespace detail {

// Accumulate coefficient `c` for the function cos(m.x) or sin(m.x) into the
// canonical real basis, or record the canonical index as dropped.
inline void emit_trig(bool is_sin, ModeIndex m, double c, ModeBracket& out) {
  if (c == 0.0) return;
  if (m.k1 == 0 && m.k2 == 0) return;  // only reached with zero coefficient
  ModeIndex idx;
  double coeff;
  if (is_sin) {
    idx = is_sin_mode(m) ? m : negate(m);
    coeff = is_sin_mode(m) ? c : -c;
  } else {
    idx = is_sin_mode(m) ? negate(m) : m;
    coeff = c;
  }
  int slot = mode_slot(out.field.trunc, idx);
  if (slot < 0)
    out.dropped.push_back(idx);
  else
    out.field.coeff[slot] += coeff;
}

}  // namespace detail

// Symmetrized bracket of two canonical basis functions gamma_j, gamma_k,
// evaluated by the exact product-to-sum trig identities. The interaction
// coefficient is C = (j x k) * (|k|^-2 - |j|^-2), symmetric under j <-> k,
// and vanishes exactly for collinear or equal-length wavevectors.
inline ModeBracket closed_form_mode_bracket(ModeIndex j, ModeIndex k,
                                            const TruncationSpec& trunc) {
  ModeBracket out{zero_field(trunc), {}};
  double nj = norm_sq(j), nk = norm_sq(k);
  double C = static_cast<double>(cross(j, k)) * (1.0 / nk - 1.0 / nj);
  if (C == 0.0) return out;
  double h = 0.5 * C;

  bool sj = is_sin_mode(j), sk = is_sin_mode(k);
  ModeIndex sum{j.k1 + k.k1, j.k2 + k.k2};
  ModeIndex dif{j.k1 - k.k1, j.k2 - k.k2};

  if (sj && sk) {  // sin.sin -> -h [cos(sum) + cos(dif)]
    detail::emit_trig(false, sum, -h, out);
    detail::emit_trig(false, dif, -h, out);
  } else if (!sj && !sk) {  // cos.cos -> h [cos(sum) - cos(dif)]
    detail::emit_trig(false, sum, h, out);
    detail::emit_trig(false, dif, -h, out);
  } else if (sj && !sk) {  // sin.cos -> h [sin(sum) - sin(dif)]
    detail::emit_trig(true, sum, h, out);
    detail::emit_trig(true, dif, -h, out);
  } else {  // cos.sin -> h [sin(sum) + sin(dif)]
    detail::emit_trig(true, sum, h, out);
    detail::emit_trig(true, dif, h, out);
  }
  return out;
}

// Bracket of an arbitrary truncated field against one canonical mode,
// extended from the mode-mode case by bilinearity. Dropped output modes are
// collected (duplicates possible; they only signal truncation leakage).
inline ModeBracket bracket_field_with_mode(const SpectralField& h, ModeIndex k) {
  ModeBracket out{zero_field(h.trunc), {}};
  std::vector<ModeIndex> modes = enumerate_modes(h.trunc);
  for (std::size_t s = 0; s < modes.size(); ++s) {
    double a = h.coeff[s];
    if (a == 0.0) continue;
    ModeBracket mb = closed_form_mode_bracket(modes[s], k, h.trunc);
    for (int i = 0; i < (int)mb.field.coeff.size(); ++i)
      out.field.coeff[i] += a * mb.field.coeff[i];
    for (ModeIndex d : mb.dropped) out.dropped.push_back(d);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Structural conditions on the forced mode set

// A1: at least two forced modes with different integer length-squared.
inline bool check_condition_A1(const std::vector<ModeIndex>& modes) {
  for (std::size_t i = 0; i < modes.size(); ++i)
    for (std::size_t j = i + 1; j < modes.size(); ++j) {
      long long ni = (long long)modes[i].k1 * modes[i].k1 +
                     (long long)modes[i].k2 * modes[i].k2;
      long long nj = (long long)modes[j].k1 * modes[j].k1 +
                     (long long)modes[j].k2 * modes[j].k2;
      if (ni != nj) return true;
    }
  return false;
}

// A2: the forced modes generate all of Z^2 as a group (rank 2 with both
// Smith invariant factors equal to 1).
inline bool check_condition_A2(const std::vector<ModeIndex>& modes) {
  SmithInvariants s = smith_invariants(modes);
  return s.rank == 2 && s.d1 == 1 && s.minor_gcd == 1;
}

inline bool all_collinear(const std::vector<ModeIndex>& modes) {
  for (std::size_t i = 0; i < modes.size(); ++i)
    for (std::size_t j = i + 1; j < modes.size(); ++j)
      if (cross(modes[i], modes[j]) != 0) return false;
  return true;
}

inline bool all_equal_length(const std::vector<ModeIndex>& modes) {
  if (modes.empty()) return true;
  long long n0 = (long long)modes[0].k1 * modes[0].k1 +
                 (long long)modes[0].k2 * modes[0].k2;
  for (const ModeIndex& m : modes) {
    long long n = (long long)m.k1 * m.k1 + (long long)m.k2 * m.k2;
    if (n != n0) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Span growth

enum class DegeneracyClass { Full, Case1, Case2, Indeterminate };

inline std::string to_string(DegeneracyClass c) {
  switch (c) {
    case DegeneracyClass::Full: return "Full";
    case DegeneracyClass::Case1: return "Case1";
    case DegeneracyClass::Case2: return "Case2";
    default: return "Indeterminate";
  }
}

struct BracketReport {
  std::vector<int> span_dims;          // dim after 0,1,2,... bracket rounds
  std::optional<int> saturated_at;     // first round with no growth
  int final_dim = 0;
  int truncation_dim = 0;
  bool condition_a1 = false;
  bool condition_a2 = false;
  DegeneracyClass classification = DegeneracyClass::Indeterminate;
  std::vector<ModeIndex> degenerate_basis;      // modes spanning the trap
  std::vector<ModeIndex> subgroup_generators;   // lattice basis if Case2
};

namespace detail {

// Modified Gram-Schmidt insertion with one re-orthogonalization pass.
// Returns true when `v` added a new direction at relative tolerance `tol`.
inline bool mgs_insert(std::vector<std::vector<double>>& basis,
                       std::vector<double> v, double tol) {
  double n0 = 0.0;
  for (double x : v) n0 += x * x;
  n0 = std::sqrt(n0);
  if (n0 == 0.0) return false;
  for (int pass = 0; pass < 2; ++pass) {
    for (const std::vector<double>& q : basis) {
      double d = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) d += q[i] * v[i];
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= d * q[i];
    }
  }
  double nr = 0.0;
  for (double x : v) nr += x * x;
  nr = std::sqrt(nr);
  if (nr <= tol * n0) return false;
  for (double& x : v) x /= nr;
  basis.push_back(std::move(v));
  return true;
}

}  // namespace detail

// Iterate A_{m+1} = A_m + span{ bracket(h, gamma_l) : h in A_m, l forced }
// starting from the forced directions. The recursion itself runs in a working
// wavevector window grown large enough that no bracket output is ever
// truncated away: each round spreads wavevectors by at most the largest
// forced component, and clipping intermediates at the requested truncation
// would lose directions that are only reachable through modes just outside
// it (e.g. the (+-2,0) classes at K=2 under the standard four-direction
// forcing need an excursion through |k|_inf = 3). The reported span_dims are
// the dimensions of the span PROJECTED onto the requested truncation - the
// quantity the classification is about - measured after every round until
// two consecutive values agree or max_depth is exhausted. Rank decisions use
// relative tolerance 1e-9.
inline BracketReport generate_bracket_spans(const ForcedModeSet& g,
                                            const TruncationSpec& trunc,
                                            int max_depth = 16) {
  validate(trunc);
  validate(g);
  for (ModeIndex m : g.modes)
    if (!in_truncation(trunc, m))
      throw std::invalid_argument("forced mode outside truncation");
  const double tol = 1e-9;
  const int D = mode_count(trunc);
  int gmax = 1;
  for (ModeIndex m : g.modes)
    gmax = std::max({gmax, std::abs(m.k1), std::abs(m.k2)});

  BracketReport rep;
  rep.truncation_dim = D;
  rep.condition_a1 = check_condition_A1(g.modes);
  rep.condition_a2 = check_condition_A2(g.modes);

  TruncationSpec work = trunc;                 // grown lazily per round
  std::vector<std::vector<double>> basis;      // orthonormal, working window
  std::vector<std::vector<double>> projected;  // orthonormal, requested window

  // Count a working-space vector's contribution to the projected span.
  // Components outside the requested window are discarded for this count
  // only. A floor of 1e-12 on the projected norm suppresses round-off
  // leakage from the orthogonalization (true bracket coefficients are
  // rationals with moderate denominators, far above this scale).
  auto note_projection = [&](const std::vector<double>& v) {
    std::vector<ModeIndex> wmodes = enumerate_modes(work);
    std::vector<double> p((std::size_t)D, 0.0);
    double norm = 0.0;
    for (std::size_t s = 0; s < wmodes.size(); ++s) {
      int slot = mode_slot(trunc, wmodes[s]);
      if (slot >= 0) {
        p[(std::size_t)slot] = v[s];
        norm += v[s] * v[s];
      }
    }
    if (std::sqrt(norm) <= 1e-12) return;
    detail::mgs_insert(projected, std::move(p), tol);
  };

  // Re-embed the working basis into a larger window (pads with zeros;
  // orthonormality is preserved exactly).
  auto grow_work = [&](int newK) {
    TruncationSpec bigger{newK, trunc.dealias};
    std::vector<ModeIndex> old_modes = enumerate_modes(work);
    std::size_t DW = (std::size_t)mode_count(bigger);
    for (std::vector<double>& v : basis) {
      std::vector<double> nv(DW, 0.0);
      for (std::size_t s = 0; s < old_modes.size(); ++s)
        nv[(std::size_t)mode_slot(bigger, old_modes[s])] = v[s];
      v = std::move(nv);
    }
    work = bigger;
  };

  std::size_t frontier_begin = 0;
  for (std::size_t l = 0; l < g.modes.size(); ++l) {
    std::vector<double> v((std::size_t)mode_count(work), 0.0);
    v[(std::size_t)mode_slot(work, g.modes[l])] = g.amplitudes[l];
    if (detail::mgs_insert(basis, std::move(v), tol))
      note_projection(basis.back());
  }
  rep.span_dims.push_back((int)projected.size());

  for (int depth = 1; depth <= max_depth; ++depth) {
    int prev = rep.span_dims.back();
    if (prev == D) {
      // projected dims are nondecreasing and capped at D, so the next
      // round is guaranteed to repeat the value
      rep.span_dims.push_back(D);
      rep.saturated_at = depth;
      break;
    }
    grow_work(trunc.K + depth * gmax);
    std::size_t frontier_end = basis.size();
    for (std::size_t b = frontier_begin; b < frontier_end; ++b) {
      SpectralField h = zero_field(work);
      h.coeff = basis[b];
      for (const ModeIndex& k : g.modes) {
        ModeBracket mb = bracket_field_with_mode(h, k);
        if (!mb.dropped.empty())
          throw std::logic_error("bracket output escaped the working window");
        if (detail::mgs_insert(basis, std::move(mb.field.coeff), tol))
          note_projection(basis.back());
      }
    }
    frontier_begin = frontier_end;
    rep.span_dims.push_back((int)projected.size());
    if ((int)projected.size() == prev) {
      rep.saturated_at = depth;
      break;
    }
  }
  rep.final_dim = rep.span_dims.back();
  return rep;
}

// Attach the degeneracy classification to a span report. Precedence:
// Full saturation of the truncated space, then the two recognized
// degeneracy mechanisms, then Indeterminate (including depth exhaustion).
inline void classify_degeneracy(BracketReport& rep, const ForcedModeSet& g,
                                const TruncationSpec& trunc) {
  rep.degenerate_basis.clear();
  rep.subgroup_generators.clear();
  if (!rep.saturated_at.has_value()) {
    rep.classification = DegeneracyClass::Indeterminate;
    return;
  }
  if (rep.final_dim == rep.truncation_dim) {
    rep.classification = DegeneracyClass::Full;
    return;
  }
  if (all_collinear(g.modes) || all_equal_length(g.modes)) {
    rep.classification = DegeneracyClass::Case1;
    rep.degenerate_basis = g.modes;
    return;
  }
  LatticeBasis lat = lattice_basis(g.modes);
  if (!lattice_is_full(lat)) {
    rep.classification = DegeneracyClass::Case2;
    if (lat.u1 != 0 || lat.u2 != 0)
      rep.subgroup_generators.push_back(
          ModeIndex{(int)lat.u1, (int)lat.u2});
    if (lat.v2 != 0)
      rep.subgroup_generators.push_back(ModeIndex{0, (int)lat.v2});
    for (ModeIndex m : enumerate_modes(trunc))
      if (lattice_contains(lat, m)) rep.degenerate_basis.push_back(m);
    return;
  }
  rep.classification = DegeneracyClass::Indeterminate;
}

inline BracketReport analyze_brackets(const ForcedModeSet& g,
                                      const TruncationSpec& trunc,
                                      int max_depth = 16) {
  BracketReport rep = generate_bracket_spans(g, trunc, max_depth);
  classify_degeneracy(rep, g, trunc);
  return rep;
}

}  // namespace tsns
