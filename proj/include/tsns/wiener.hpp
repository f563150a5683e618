#pragma once

// Two-sided Wiener increment store backed by a counter-based generator
// (Philox4x32-10 + Box-Muller). Every increment is a pure function of
// (master_seed, channel, global_index), so extending the index range never
// perturbs existing values and the shift map is an exact integer
// re-indexing: bit-identical reals, no state to replay.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "tsns/util.hpp"

namespace tsns {

struct WienerStore {
  std::uint64_t master_seed = 0;
  double dt = 0.0;
  int channels = 0;
  std::int64_t n_min = 0;  // covered increment indices: n_min <= n < n_max
  std::int64_t n_max = 0;
  std::int64_t offset = 0;  // composition of applied shifts
};

namespace detail {

inline void philox_round(std::uint32_t& c0, std::uint32_t& c1,
                         std::uint32_t& c2, std::uint32_t& c3,
                         std::uint32_t k0, std::uint32_t k1) {
  const std::uint64_t M0 = 0xD2511F53ull, M1 = 0xCD9E8D57ull;
  std::uint64_t p0 = M0 * c0;
  std::uint64_t p1 = M1 * c2;
  std::uint32_t h0 = (std::uint32_t)(p0 >> 32), l0 = (std::uint32_t)p0;
  std::uint32_t h1 = (std::uint32_t)(p1 >> 32), l1 = (std::uint32_t)p1;
  c0 = h1 ^ c1 ^ k0;
  c1 = l1;
  c2 = h0 ^ c3 ^ k1;
  c3 = l0;
}

// Philox4x32-10: 128-bit counter, 64-bit key, ten rounds.
inline std::array<std::uint32_t, 4> philox10(std::uint64_t key,
                                             std::uint64_t ctr_hi,
                                             std::uint64_t ctr_lo) {
  std::uint32_t c0 = (std::uint32_t)ctr_lo, c1 = (std::uint32_t)(ctr_lo >> 32);
  std::uint32_t c2 = (std::uint32_t)ctr_hi, c3 = (std::uint32_t)(ctr_hi >> 32);
  std::uint32_t k0 = (std::uint32_t)key, k1 = (std::uint32_t)(key >> 32);
  const std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int r = 0; r < 10; ++r) {
    philox_round(c0, c1, c2, c3, k0, k1);
    k0 += W0;
    k1 += W1;
  }
  return {c0, c1, c2, c3};
}

}  // namespace detail

inline WienerStore derive_wiener_store(std::uint64_t master_seed, double dt,
                                       int channels, std::int64_t n_min,
                                       std::int64_t n_max) {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("wiener store: dt must be positive");
  if (channels < 1)
    throw std::invalid_argument("wiener store: channels must be >= 1");
  if (n_min > n_max) throw std::invalid_argument("wiener store: empty range");
  return WienerStore{master_seed, dt, channels, n_min, n_max, 0};
}

// N(0, dt) increment for (channel, index). Pure function of the store's
// master seed, the channel, and index + offset.
inline double wiener_increment(const WienerStore& s, int channel,
                               std::int64_t index) {
  if (channel < 0 || channel >= s.channels)
    throw std::out_of_range("wiener store: channel out of range");
  std::uint64_t ctr_lo =
      static_cast<std::uint64_t>(index) + static_cast<std::uint64_t>(s.offset);
  std::array<std::uint32_t, 4> r =
      detail::philox10(s.master_seed, (std::uint64_t)channel, ctr_lo);
  std::uint64_t a = (std::uint64_t)r[0] | ((std::uint64_t)r[1] << 32);
  std::uint64_t b = (std::uint64_t)r[2] | ((std::uint64_t)r[3] << 32);
  // Box-Muller; u1 in (0,1] so the log is always finite
  double u1 = ((double)(a >> 11) + 1.0) * 0x1p-53;
  double u2 = (double)(b >> 11) * 0x1p-53;
  double z = std::sqrt(-2.0 * std::log(u1)) *
             std::cos(2.0 * 3.14159265358979323846 * u2);
  return z * std::sqrt(s.dt);
}

inline bool store_covers(const WienerStore& s, std::int64_t first,
                         std::int64_t count) {
  return first >= s.n_min && first + count <= s.n_max;
}

// Wiener shift by an integer number of steps: increment(i, n) of the result
// equals increment(i, n + steps) of the input, bit-exactly.
inline WienerStore shift_wiener(const WienerStore& s, std::int64_t steps) {
  WienerStore out = s;
  if (__builtin_add_overflow(s.offset, steps, &out.offset) ||
      __builtin_sub_overflow(s.n_min, steps, &out.n_min) ||
      __builtin_sub_overflow(s.n_max, steps, &out.n_max))
    throw std::overflow_error("wiener store: shift overflows index range");
  return out;
}

// Seed for ensemble replica r derived from a master seed.
inline std::uint64_t replica_seed(std::uint64_t master_seed,
                                  std::uint64_t replica_index) {
  return hash64(master_seed, replica_index);
}

}  // namespace tsns
