#pragma once

/// Spectral fields: real coefficient vectors over the canonical mode
/// enumeration, plus the Sobolev norm family and basic linear algebra.

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tsns/modes.hpp"

namespace tsns {

/// Mean-zero scalar field w = sum_k coeff[k] * gamma_k on the truncation.
struct SpectralField {
  TruncationSpec trunc;
  std::vector<double> coeff;
};

/// Divergence-free velocity field; component spectra share the truncation.
struct VelocityField {
  TruncationSpec trunc;
  std::vector<double> c1;
  std::vector<double> c2;
};

inline SpectralField zero_field(const TruncationSpec& t) {
  validate(t);
  return {t, std::vector<double>(mode_count(t), 0.0)};
}

inline void check_same_truncation(const SpectralField& a, const SpectralField& b) {
  if (!(a.trunc == b.trunc))
    throw std::invalid_argument("fields live on different truncations");
}

/// Builds a field from (mode, coefficient) entries.
/// Rejects out-of-truncation modes, duplicate modes, and non-finite values.
inline SpectralField make_field(const TruncationSpec& t,
                                const std::vector<std::pair<ModeIndex, double>>& entries) {
  SpectralField w = zero_field(t);
  std::vector<bool> seen(w.coeff.size(), false);
  for (const auto& [k, v] : entries) {
    int s = mode_slot(t, k);
    if (s < 0)
      throw std::invalid_argument("make_field: mode " + to_string(k) + " outside truncation");
    if (seen[s])
      throw std::invalid_argument("make_field: duplicate mode " + to_string(k));
    if (!std::isfinite(v))
      throw std::invalid_argument("make_field: non-finite coefficient at " + to_string(k));
    seen[s] = true;
    w.coeff[s] = v;
  }
  return w;
}

/// H inner product <a,b> = 2 pi^2 * sum_k a_k b_k.
inline double inner(const SpectralField& a, const SpectralField& b) {
  check_same_truncation(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.coeff.size(); ++i) s += a.coeff[i] * b.coeff[i];
  return s * kBasisNormSq;
}

/// ||w||_s = sqrt( sum_k |k|^{2s} w_k^2 * 2 pi^2 ); s = 0 is the L2 norm,
/// s = 1 the enstrophy-gradient norm, s = -1 the velocity norm.
inline double sobolev_norm(const SpectralField& w, double s = 0.0) {
  const auto modes = enumerate_modes(w.trunc);
  double acc = 0.0;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    double c = w.coeff[i];
    if (c == 0.0) continue;
    double wgt = (s == 0.0) ? 1.0 : std::pow(double(norm_sq(modes[i])), s);
    acc += wgt * c * c;
  }
  return std::sqrt(acc * kBasisNormSq);
}

inline double h_norm(const SpectralField& w) {
  double acc = 0.0;
  for (double c : w.coeff) acc += c * c;
  return std::sqrt(acc * kBasisNormSq);
}

inline SpectralField& axpy(SpectralField& y, double a, const SpectralField& x) {
  check_same_truncation(y, x);
  for (std::size_t i = 0; i < y.coeff.size(); ++i) y.coeff[i] += a * x.coeff[i];
  return y;
}

inline SpectralField lin_comb(double a, const SpectralField& x, double b,
                              const SpectralField& y) {
  check_same_truncation(x, y);
  SpectralField out = zero_field(x.trunc);
  for (std::size_t i = 0; i < out.coeff.size(); ++i)
    out.coeff[i] = a * x.coeff[i] + b * y.coeff[i];
  return out;
}

inline SpectralField scaled(const SpectralField& x, double a) {
  SpectralField out = x;
  for (double& c : out.coeff) c *= a;
  return out;
}

inline double h_dist(const SpectralField& a, const SpectralField& b) {
  check_same_truncation(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.coeff.size(); ++i) {
    double d = a.coeff[i] - b.coeff[i];
    acc += d * d;
  }
  return std::sqrt(acc * kBasisNormSq);
}

/// Partial-derivative coefficient rule (axis 0 -> d/dx1, 1 -> d/dx2):
/// d_j sin(k.x) = k_j cos(k.x), d_j cos(k.x) = -k_j sin(k.x).
inline SpectralField derivative_field(const SpectralField& w, int axis) {
  if (axis != 0 && axis != 1) throw std::invalid_argument("derivative_field: axis");
  const auto modes = enumerate_modes(w.trunc);
  SpectralField out = zero_field(w.trunc);
  for (std::size_t i = 0; i < modes.size(); ++i) {
    ModeIndex k = modes[i];
    if (!is_sin_mode(k)) continue;  // handle each +-k pair once
    int s_sin = int(i);
    int s_cos = mode_slot(w.trunc, negate(k));
    double a = w.coeff[s_sin];   // sin(k.x) coefficient
    double b = w.coeff[s_cos];   // cos(k.x) coefficient
    double kj = axis == 0 ? double(k.k1) : double(k.k2);
    out.coeff[s_sin] += -kj * b;
    out.coeff[s_cos] += kj * a;
  }
  return out;
}

}  // namespace tsns
