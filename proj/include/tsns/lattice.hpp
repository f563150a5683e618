#pragma once

// Exact integer-lattice arithmetic for mode sets: gcd/Smith invariants and a
// Hermite basis of the subgroup of Z^2 generated by a list of modes. All
// arithmetic is in int64; mode entries are tiny so overflow is not a concern.

#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <vector>

#include "tsns/modes.hpp"

namespace tsns {

struct LatticeBasis {
  // lattice = { x*(u1,u2) + y*(0,v2) : x,y in Z }, canonical shape:
  // u1 > 0; v2 >= 0; 0 <= u2 < v2 when v2 > 0. rank in {0,1,2}.
  long long u1 = 0, u2 = 0, v2 = 0;
  int rank = 0;
};

namespace detail {

// extended gcd: returns g = gcd(a,b) and x,y with a*x + b*y = g
inline long long ext_gcd(long long a, long long b, long long& x, long long& y) {
  if (b == 0) {
    x = (a >= 0) ? 1 : -1;
    y = 0;
    return std::llabs(a);
  }
  long long x1, y1;
  long long g = ext_gcd(b, a % b, x1, y1);
  x = y1;
  y = x1 - (a / b) * y1;
  return g;
}

}  // namespace detail

// Hermite-style basis of the subgroup generated by `modes` (and their
// negatives; a subgroup is negation-closed automatically).
inline LatticeBasis lattice_basis(const std::vector<ModeIndex>& modes) {
  // stage 1: combine columns until a single one carries gcd of first entries
  long long a1 = 0, a2 = 0;           // column with nonzero first entry
  std::vector<long long> seconds;     // columns reduced to (0, *)
  for (const ModeIndex& m : modes) {
    long long c1 = m.k1, c2 = m.k2;
    if (c1 == 0) {
      if (c2 != 0) seconds.push_back(c2);
      continue;
    }
    if (a1 == 0) {
      a1 = c1;
      a2 = c2;
      continue;
    }
    long long x, y;
    long long g = detail::ext_gcd(a1, c1, x, y);
    long long n2 = x * a2 + y * c2;              // new pivot column (g, n2)
    long long r2 = (c1 / g) * a2 - (a1 / g) * c2;  // eliminated column (0, r2)
    a1 = g;
    a2 = n2;
    if (r2 != 0) seconds.push_back(r2);
  }
  long long v2 = 0;
  for (long long s : seconds) v2 = std::gcd(v2, s);

  LatticeBasis b;
  if (a1 == 0 && v2 == 0) return b;  // rank 0
  if (a1 < 0) {
    a1 = -a1;
    a2 = -a2;
  }
  if (a1 == 0) {  // pure vertical lattice
    b.u1 = 0;
    b.v2 = std::llabs(v2);
    b.rank = 1;
    // store as (0, v2) in the v slot for uniform membership tests
    b.u2 = 0;
    return b;
  }
  b.u1 = a1;
  b.v2 = std::llabs(v2);
  b.u2 = (b.v2 > 0) ? ((a2 % b.v2) + b.v2) % b.v2 : a2;
  b.rank = (b.v2 > 0) ? 2 : 1;
  return b;
}

inline bool lattice_contains(const LatticeBasis& b, ModeIndex k) {
  long long k1 = k.k1, k2 = k.k2;
  if (b.rank == 0) return k1 == 0 && k2 == 0;
  if (b.u1 == 0) {  // rank-1 vertical
    if (k1 != 0) return false;
    return b.v2 != 0 && k2 % b.v2 == 0;
  }
  if (k1 % b.u1 != 0) return false;
  long long x = k1 / b.u1;
  long long rem = k2 - x * b.u2;
  if (b.v2 == 0) return rem == 0;
  return rem % b.v2 == 0;
}

inline bool lattice_is_full(const LatticeBasis& b) {
  return b.rank == 2 && b.u1 == 1 && b.v2 == 1;
}

// Smith invariant data for the 2 x n matrix of mode columns:
// d1 = gcd of entries, d1*d2 = gcd of 2x2 minors.
struct SmithInvariants {
  long long d1 = 0;
  long long minor_gcd = 0;  // = d1 * d2 when rank 2
  int rank = 0;
};

inline SmithInvariants smith_invariants(const std::vector<ModeIndex>& modes) {
  SmithInvariants s;
  for (const ModeIndex& m : modes) {
    s.d1 = std::gcd(s.d1, (long long)std::llabs(m.k1));
    s.d1 = std::gcd(s.d1, (long long)std::llabs(m.k2));
  }
  for (std::size_t i = 0; i < modes.size(); ++i)
    for (std::size_t j = i + 1; j < modes.size(); ++j)
      s.minor_gcd = std::gcd(s.minor_gcd, std::llabs(cross(modes[i], modes[j])));
  if (s.minor_gcd > 0)
    s.rank = 2;
  else if (s.d1 > 0)
    s.rank = 1;
  return s;
}

}  // namespace tsns
