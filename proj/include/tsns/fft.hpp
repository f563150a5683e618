#pragma once

// FFT grid pipeline. Real r2c/c2r transforms via FFTW, plans cached per grid
// size (FFTW_ESTIMATE|FFTW_UNALIGNED so cached plans run on any buffer).
// Grid points are x_j = 2 pi j / N, j = 0..N-1 per axis; products and
// quadrature are shift-invariant so the origin convention never matters.

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "tsns/field.hpp"
#include "tsns/modes.hpp"

namespace tsns::detail {

using cplx = std::complex<double>;

// smallest N >= n whose factors are 2, 3, 5 (fast FFTW sizes)
inline int fast_fft_size(int n) {
  for (int N = n;; ++N) {
    int m = N;
    for (int f : {2, 3, 5})
      while (m % f == 0) m /= f;
    if (m == 1) return N;
  }
}

// product grid: exact dealiasing of quadratic terms needs N >= 3K+1
inline int product_grid_size(const TruncationSpec& t) {
  int want = t.dealias ? 3 * t.K + 1 : 2 * t.K + 1;
  return fast_fft_size(want);
}

struct GridPlans {
  int N = 0;
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
  std::vector<double> real_buf;   // planning buffers, kept alive
  std::vector<cplx> cplx_buf;

  GridPlans(const GridPlans&) = delete;
  explicit GridPlans(int n) : N(n), real_buf(std::size_t(n) * n), cplx_buf(std::size_t(n) * (n / 2 + 1)) {
    unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    r2c = fftw_plan_dft_r2c_2d(N, N, real_buf.data(),
                               reinterpret_cast<fftw_complex*>(cplx_buf.data()), flags);
    c2r = fftw_plan_dft_c2r_2d(N, N, reinterpret_cast<fftw_complex*>(cplx_buf.data()),
                               real_buf.data(), flags);
    if (!r2c || !c2r) throw std::runtime_error("FFTW planning failed");
  }
  ~GridPlans() {
    if (r2c) fftw_destroy_plan(r2c);
    if (c2r) fftw_destroy_plan(c2r);
  }
};

inline const GridPlans& grid_plans(int N) {
  static std::mutex mu;
  static std::map<int, GridPlans*> cache;  // leaked at exit, by design
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(N);
  if (it == cache.end()) it = cache.emplace(N, new GridPlans(N)).first;
  return *it->second;
}

// per-thread scratch buffers, keyed by grid size
struct GridScratch {
  std::vector<cplx> spec;               // N x (N/2+1)
  std::vector<std::vector<double>> g;   // real grids
  void ensure(int N, int ngrids) {
    spec.assign(std::size_t(N) * (N / 2 + 1), cplx(0.0, 0.0));
    if (int(g.size()) < ngrids) g.resize(ngrids);
    for (int i = 0; i < ngrids; ++i) g[i].resize(std::size_t(N) * N);
  }
};

inline GridScratch& grid_scratch() {
  thread_local GridScratch s;
  return s;
}

// half-spectrum slot of mode (k1, k2>=0)
inline std::size_t spec_slot(int N, int k1, int k2) {
  int r = k1 >= 0 ? k1 : k1 + N;
  return std::size_t(r) * (N / 2 + 1) + k2;
}

// adds v * e^{i k.x} (+ Hermitian mirror where the layout stores it)
inline void add_mode(std::vector<cplx>& spec, int N, ModeIndex k, cplx v) {
  if (k.k2 > 0) {
    spec[spec_slot(N, k.k1, k.k2)] += v;
  } else if (k.k2 < 0) {
    spec[spec_slot(N, -k.k1, -k.k2)] += std::conj(v);
  } else {  // k2 == 0 column stores both rows; keep them conjugate-consistent
    spec[spec_slot(N, k.k1, 0)] += v;
    spec[spec_slot(N, -k.k1, 0)] += std::conj(v);
  }
}

// complex amplitude of e^{i k.x} for the +-k pair of a real field:
// sin coeff a at the upper-half index, cos coeff b at its negation
inline cplx pair_amplitude(double a, double b) { return cplx(0.5 * b, -0.5 * a); }

// Fills spec with (factor applied per upper-half mode) * base spectrum, then
// inverse-transforms into grid. factor(k) multiplies the e^{ik.x} amplitude.
template <class Factor>
void spectral_to_grid(const SpectralField& w, int N, std::vector<cplx>& spec,
                      double* grid, Factor&& factor) {
  const TruncationSpec& t = w.trunc;
  if (N < 2 * t.K + 1) throw std::invalid_argument("grid too small for truncation");
  std::fill(spec.begin(), spec.end(), cplx(0.0, 0.0));
  for (int k1 = -t.K; k1 <= t.K; ++k1)
    for (int k2 = 0; k2 <= t.K; ++k2) {
      ModeIndex k{k1, k2};
      if (!is_sin_mode(k)) continue;
      double a = w.coeff[mode_slot(t, k)];
      double b = w.coeff[mode_slot(t, negate(k))];
      if (a == 0.0 && b == 0.0) continue;
      add_mode(spec, N, k, factor(k) * pair_amplitude(a, b));
    }
  fftw_execute_dft_c2r(grid_plans(N).c2r,
                       reinterpret_cast<fftw_complex*>(spec.data()), grid);
}

// r2c of grid, Galerkin-truncated back onto the canonical coefficients
inline void grid_to_spectral(const double* grid, int N, std::vector<cplx>& spec,
                             SpectralField& out) {
  fftw_execute_dft_r2c(grid_plans(N).r2c, const_cast<double*>(grid),
                       reinterpret_cast<fftw_complex*>(spec.data()));
  const TruncationSpec& t = out.trunc;
  const double inv = 1.0 / (double(N) * N);
  for (int k1 = -t.K; k1 <= t.K; ++k1)
    for (int k2 = 0; k2 <= t.K; ++k2) {
      ModeIndex k{k1, k2};
      if (!is_sin_mode(k)) continue;
      cplx c = spec[spec_slot(N, k.k1, k.k2)] * inv;
      out.coeff[mode_slot(t, k)] = -2.0 * c.imag();         // sin coefficient
      out.coeff[mode_slot(t, negate(k))] = 2.0 * c.real();  // cos coefficient
    }
}

}  // namespace tsns::detail
