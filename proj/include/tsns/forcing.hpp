#pragma once

// Time-periodic deterministic forcing: a sum of single-mode terms
// A * cos(2*pi*t/T + phase) * gamma_k. Evaluation on the integer step grid
// goes through the reduced phase index u = (step + phase_steps) mod P, so
// shifting time by whole steps and shifting the profile's phase_steps by the
// same amount produce literally identical doubles - the backbone of the
// exact translation identity. The sup norm over a period has a closed form.

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tsns/field.hpp"
#include "tsns/modes.hpp"

namespace tsns {

struct ForcingTerm {
  ModeIndex mode;
  double amplitude = 0.0;
  double phase = 0.0;  // radians
};

struct ForcingProfile {
  double period = 1.0;
  std::vector<ForcingTerm> terms;
  std::int64_t phase_steps = 0;  // integer phase offset on the step grid
};

inline void validate(const ForcingProfile& f, const TruncationSpec& trunc) {
  if (!(f.period > 0.0) || !std::isfinite(f.period))
    throw std::invalid_argument("forcing: period must be positive");
  for (const ForcingTerm& t : f.terms) {
    if (!std::isfinite(t.amplitude) || !std::isfinite(t.phase))
      throw std::invalid_argument("forcing: non-finite term");
    if (mode_slot(trunc, t.mode) < 0)
      throw std::invalid_argument("forcing: term mode outside truncation");
  }
}

// Number of dt-steps per period; requires the period to be an exact integer
// multiple of dt (to 1e-9 relative), so phase arithmetic stays integral.
inline std::int64_t steps_per_period(double period, double dt) {
  if (!(dt > 0.0) || !(period > 0.0))
    throw std::invalid_argument("steps_per_period: need positive period, dt");
  std::int64_t P = (std::int64_t)std::llround(period / dt);
  if (P < 1 || std::fabs((double)P * dt - period) >
                   1e-9 * std::max(1.0, period))
    throw std::invalid_argument(
        "steps_per_period: period must be an integer multiple of dt");
  return P;
}

// Reduced phase index in [0, P): pure integer arithmetic.
inline std::int64_t reduced_phase_step(const ForcingProfile& f,
                                       std::int64_t global_step,
                                       std::int64_t P) {
  std::int64_t u = (global_step + f.phase_steps) % P;
  return (u < 0) ? u + P : u;
}

// Coefficient of term `t` of profile `f` at global step index `n`.
inline double forcing_term_value(const ForcingProfile& f, const ForcingTerm& t,
                                 std::int64_t global_step, std::int64_t P) {
  std::int64_t u = reduced_phase_step(f, global_step, P);
  double angle =
      2.0 * 3.14159265358979323846 * ((double)u / (double)P) + t.phase;
  return t.amplitude * std::cos(angle);
}

// Full forcing field at a global step index.
inline SpectralField forcing_field_at_step(const ForcingProfile& f,
                                           const TruncationSpec& trunc,
                                           std::int64_t global_step,
                                           std::int64_t P) {
  SpectralField out = zero_field(trunc);
  for (const ForcingTerm& t : f.terms) {
    int slot = mode_slot(trunc, t.mode);
    if (slot < 0)
      throw std::invalid_argument("forcing: term mode outside truncation");
    out.coeff[(std::size_t)slot] += forcing_term_value(f, t, global_step, P);
  }
  return out;
}

// Continuous-time evaluation (oracle/report use; the stepper itself only
// ever evaluates on the integer grid above).
inline SpectralField forcing_field_at_time(const ForcingProfile& f,
                                           const TruncationSpec& trunc,
                                           double t) {
  SpectralField out = zero_field(trunc);
  for (const ForcingTerm& term : f.terms) {
    int slot = mode_slot(trunc, term.mode);
    if (slot < 0)
      throw std::invalid_argument("forcing: term mode outside truncation");
    double angle =
        2.0 * 3.14159265358979323846 * (t / f.period) + term.phase;
    out.coeff[(std::size_t)slot] += term.amplitude * std::cos(angle);
  }
  return out;
}

// Closed-form sup_t ||f(t)||. Collecting each mode's terms into a complex
// amplitude zeta_k = sum_j A_j e^{i phase_j}, the squared norm is
//   ||f(t)||^2 / c_basis = B/2 + Re(Z e^{2iwt})/2,
// with B = sum |zeta_k|^2 and Z = sum zeta_k^2, so the supremum is
// sqrt(c_basis (B + |Z|) / 2).
inline double forcing_sup_norm(const ForcingProfile& f) {
  std::vector<ModeIndex> seen;
  std::vector<std::complex<double>> zeta;
  for (const ForcingTerm& t : f.terms) {
    std::complex<double> a =
        t.amplitude * std::complex<double>(std::cos(t.phase),
                                           std::sin(t.phase));
    bool found = false;
    for (std::size_t i = 0; i < seen.size(); ++i)
      if (seen[i] == t.mode) {
        zeta[i] += a;
        found = true;
        break;
      }
    if (!found) {
      seen.push_back(t.mode);
      zeta.push_back(a);
    }
  }
  double B = 0.0;
  std::complex<double> Z = 0.0;
  for (const std::complex<double>& z : zeta) {
    B += std::norm(z);
    Z += z * z;
  }
  return std::sqrt(kBasisNormSq * 0.5 * (B + std::abs(Z)));
}

}  // namespace tsns
