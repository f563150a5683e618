#pragma once

// Mode bookkeeping for the real trigonometric basis on the torus [-pi,pi]^2.
//
// The basis is indexed by nonzero integer pairs k with |k|_inf <= K. Indices
// in the upper half-lattice (k2 > 0, or k2 == 0 and k1 > 0) carry sin(k.x);
// indices in the lower half carry cos(k.x). Every basis function has
// L2-norm^2 equal to 2*pi^2.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsns {

inline constexpr double kPi = 3.14159265358979323846;
// \int_{T^2} sin^2(k.x) dx = \int_{T^2} cos^2(k.x) dx = 2 pi^2
inline constexpr double kBasisNormSq = 2.0 * kPi * kPi;

struct ModeIndex {
  int k1 = 0;
  int k2 = 0;
  friend bool operator==(const ModeIndex&, const ModeIndex&) = default;
  friend auto operator<=>(const ModeIndex&, const ModeIndex&) = default;
};

inline std::string to_string(ModeIndex k) {
  return "(" + std::to_string(k.k1) + "," + std::to_string(k.k2) + ")";
}

inline bool is_sin_mode(ModeIndex k) {
  return k.k2 > 0 || (k.k2 == 0 && k.k1 > 0);
}

inline ModeIndex negate(ModeIndex k) { return {-k.k1, -k.k2}; }

inline long long norm_sq(ModeIndex k) {
  return (long long)k.k1 * k.k1 + (long long)k.k2 * k.k2;
}

// k1*j2 - k2*j1; zero iff collinear.
inline long long cross(ModeIndex k, ModeIndex j) {
  return (long long)k.k1 * j.k2 - (long long)k.k2 * j.k1;
}

struct TruncationSpec {
  int K = 0;
  bool dealias = true;
  friend bool operator==(const TruncationSpec&, const TruncationSpec&) = default;
};

inline void validate(const TruncationSpec& t) {
  if (t.K < 1) throw std::invalid_argument("TruncationSpec: K must be >= 1");
}

inline bool in_truncation(const TruncationSpec& t, ModeIndex k) {
  if (k.k1 == 0 && k.k2 == 0) return false;
  return std::abs(k.k1) <= t.K && std::abs(k.k2) <= t.K;
}

inline int mode_count(const TruncationSpec& t) {
  return (2 * t.K + 1) * (2 * t.K + 1) - 1;
}

// Canonical enumeration: lexicographic in (k1, k2) over the punctured square.
inline std::vector<ModeIndex> enumerate_modes(const TruncationSpec& t) {
  validate(t);
  std::vector<ModeIndex> out;
  out.reserve(mode_count(t));
  for (int k1 = -t.K; k1 <= t.K; ++k1)
    for (int k2 = -t.K; k2 <= t.K; ++k2)
      if (k1 != 0 || k2 != 0) out.push_back({k1, k2});
  return out;
}

// Slot of k in the canonical enumeration, or -1 if outside.
inline int mode_slot(const TruncationSpec& t, ModeIndex k) {
  if (!in_truncation(t, k)) return -1;
  int side = 2 * t.K + 1;
  int raw = (k.k1 + t.K) * side + (k.k2 + t.K);
  int origin = t.K * side + t.K;
  return raw < origin ? raw : raw - 1;  // skip (0,0)
}

// Noise coupling: diagonal map G with G e_l = amplitudes[l] * gamma_{modes[l]}.
struct ForcedModeSet {
  std::vector<ModeIndex> modes;
  std::vector<double> amplitudes;

  int channels() const { return int(modes.size()); }
};

inline void validate(const ForcedModeSet& g) {
  if (g.modes.size() != g.amplitudes.size())
    throw std::invalid_argument("ForcedModeSet: modes/amplitudes size mismatch");
  for (std::size_t i = 0; i < g.modes.size(); ++i) {
    const ModeIndex& k = g.modes[i];
    if (k.k1 == 0 && k.k2 == 0)
      throw std::invalid_argument("ForcedModeSet: zero mode not allowed");
    if (!(g.amplitudes[i] > 0.0) || !std::isfinite(g.amplitudes[i]))
      throw std::invalid_argument("ForcedModeSet: amplitudes must be positive finite");
    for (std::size_t j = i + 1; j < g.modes.size(); ++j)
      if (g.modes[j] == k)
        throw std::invalid_argument("ForcedModeSet: duplicate mode " + to_string(k));
  }
}

// B0 = sum_l ||a_l gamma_{k_l}||^2; the basis normalization is part of it.
inline double noise_energy_rate(const ForcedModeSet& g) {
  double b0 = 0.0;
  for (double a : g.amplitudes) b0 += a * a * kBasisNormSq;
  return b0;
}

}  // namespace tsns
