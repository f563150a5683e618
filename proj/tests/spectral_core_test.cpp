#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"
#include "tsns/operators.hpp"

using namespace tsns;

namespace {

constexpr double kTight = 1e-12;

TEST(Modes, EnumerationIsLexicographicAndComplete) {
  TruncationSpec t{2, true};
  auto modes = enumerate_modes(t);
  ASSERT_EQ(int(modes.size()), mode_count(t));
  EXPECT_EQ(int(modes.size()), 24);
  EXPECT_TRUE(std::is_sorted(modes.begin(), modes.end()));
  for (std::size_t i = 0; i < modes.size(); ++i)
    EXPECT_EQ(mode_slot(t, modes[i]), int(i));
  EXPECT_EQ(mode_slot(t, ModeIndex{0, 0}), -1);
  EXPECT_EQ(mode_slot(t, ModeIndex{3, 0}), -1);
}

TEST(Modes, SinCosSplit) {
  EXPECT_TRUE(is_sin_mode({1, 0}));
  EXPECT_TRUE(is_sin_mode({-3, 1}));
  EXPECT_FALSE(is_sin_mode({-1, 0}));
  EXPECT_FALSE(is_sin_mode({3, -1}));
}

TEST(MakeField, RejectsBadEntries) {
  TruncationSpec t{3, true};
  EXPECT_THROW(make_field(t, {{{4, 0}, 1.0}}), std::invalid_argument);
  EXPECT_THROW(make_field(t, {{{1, 0}, 1.0}, {{1, 0}, 2.0}}), std::invalid_argument);
  EXPECT_THROW(make_field(t, {{{1, 0}, std::nan("")}}), std::invalid_argument);
  EXPECT_THROW(make_field(t, {{{0, 0}, 1.0}}), std::invalid_argument);
}

// Single-mode L2 norm has the closed form sqrt(2 pi^2); the general-norm
// oracle is direct trig evaluation plus brute-force quadrature.
TEST(SobolevNorm, SingleModeClosedForm) {
  TruncationSpec t{3, true};
  auto w = make_field(t, {{{1, 0}, 1.0}});
  EXPECT_NEAR(sobolev_norm(w, 0.0), std::sqrt(2.0 * kPi * kPi), 1e-14);
  EXPECT_NEAR(sobolev_norm(w, 0.0), 4.442882938158366, 1e-12);
}

TEST(SobolevNorm, MatchesQuadratureOracle) {
  TruncationSpec t{3, true};
  auto w = oracle::random_field(t, 42);
  const int n = 4 * t.K + 3;
  EXPECT_NEAR(sobolev_norm(w, 0.0), oracle::quad_l2_norm(w, n), 1e-10);
  EXPECT_NEAR(sobolev_norm(w, 1.0), oracle::quad_h1_norm(w, n), 1e-9);
}

TEST(SobolevNorm, PoincareOnUnitLattice) {
  TruncationSpec t{4, true};
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto w = oracle::random_field(t, 100 + s);
    EXPECT_LE(sobolev_norm(w, 0.0), sobolev_norm(w, 1.0) * (1.0 + 1e-13));
    EXPECT_LE(sobolev_norm(w, -1.0), sobolev_norm(w, 0.0) * (1.0 + 1e-13));
  }
}

TEST(BiotSavart, HandExampleSineX1) {
  // w = sin(x1)  =>  u = (0, -cos(x1))
  TruncationSpec t{2, true};
  auto w = make_field(t, {{{1, 0}, 1.0}});
  auto u = biot_savart(w);
  SpectralField u1{t, u.c1}, u2{t, u.c2};
  for (double x : {-2.0, -0.5, 0.3, 1.7}) {
    EXPECT_NEAR(oracle::eval_field(u1, x, 0.4), 0.0, kTight);
    EXPECT_NEAR(oracle::eval_field(u2, x, 0.4), -std::cos(x), kTight);
  }
}

TEST(BiotSavart, CurlRecoversVorticity) {
  TruncationSpec t{4, true};
  auto w = oracle::random_field(t, 7);
  auto u = biot_savart(w);
  SpectralField u1{t, u.c1}, u2{t, u.c2};
  auto curl = lin_comb(1.0, derivative_field(u2, 0), -1.0, derivative_field(u1, 1));
  for (std::size_t i = 0; i < w.coeff.size(); ++i)
    EXPECT_NEAR(curl.coeff[i], w.coeff[i], 1e-12);
}

TEST(BiotSavart, DivergenceFreeAndNormIdentity) {
  TruncationSpec t{4, true};
  auto w = oracle::random_field(t, 8);
  auto u = biot_savart(w);
  SpectralField u1{t, u.c1}, u2{t, u.c2};
  auto div = lin_comb(1.0, derivative_field(u1, 0), 1.0, derivative_field(u2, 1));
  for (double c : div.coeff) EXPECT_NEAR(c, 0.0, 1e-12);
  // ||Kw||_{L2}^2 = ||w||_{-1}^2
  double unorm = std::sqrt(inner(u1, u1) + inner(u2, u2));
  EXPECT_NEAR(unorm, sobolev_norm(w, -1.0), 1e-10);
}

TEST(NonlinearTerm, SingleModeVanishes) {
  TruncationSpec t{3, true};
  for (auto k : {ModeIndex{1, 0}, ModeIndex{2, 1}, ModeIndex{-1, -2}}) {
    auto w = make_field(t, {{k, 1.3}});
    auto b = nonlinear_term(w);
    for (double c : b.coeff) EXPECT_NEAR(c, 0.0, 1e-14);
  }
}

TEST(NonlinearTerm, EqualLengthPairVanishesPointwise) {
  // u.grad w cancels exactly for sin(x1)+sin(x2)
  TruncationSpec t{3, true};
  auto w = make_field(t, {{{1, 0}, 1.0}, {{0, 1}, 1.0}});
  auto b = nonlinear_term(w);
  for (double c : b.coeff) EXPECT_NEAR(c, 0.0, 1e-14);
}

TEST(NonlinearTerm, TwoModeCouplingHandValue) {
  // w = sin(x1) + sin(x1+x2):
  //   B(Kw,w) = -1/4 cos(2x1+x2) - 1/4 cos(x2)
  // (derived by hand from u.grad w with the curl-normalized Biot-Savart).
  TruncationSpec t{3, true};
  auto w = make_field(t, {{{1, 0}, 1.0}, {{1, 1}, 1.0}});
  auto b = nonlinear_term(w);
  auto expected = make_field(t, {{{-2, -1}, -0.25}, {{0, -1}, -0.25}});
  for (std::size_t i = 0; i < b.coeff.size(); ++i)
    EXPECT_NEAR(b.coeff[i], expected.coeff[i], 1e-13) << "slot " << i;
}

TEST(NonlinearTerm, ConservationOrthogonality) {
  TruncationSpec t{5, true};
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto w = oracle::random_field(t, 200 + s);
    auto b = nonlinear_term(w);
    double n3 = std::pow(sobolev_norm(w, 0.0), 3);
    // enstrophy flux <B(Kw,w), w> = 0
    EXPECT_LE(std::abs(inner(b, w)), 1e-10 * n3);
    // energy flux <B(Kw,w), (-Lap)^{-1} w> = 0
    auto winv = zero_field(t);
    auto modes = enumerate_modes(t);
    for (std::size_t i = 0; i < modes.size(); ++i)
      winv.coeff[i] = w.coeff[i] / double(norm_sq(modes[i]));
    EXPECT_LE(std::abs(inner(b, winv)), 1e-10 * n3);
  }
}

TEST(NonlinearTerm, DealiasedMatchesOversampledProjection) {
  // Alias-free means: computing on the padded grid at K, or embedding into a
  // 2K truncation and projecting the result back, must agree to round-off.
  TruncationSpec t{4, true};
  TruncationSpec big{8, true};
  auto w = oracle::random_field(t, 31);
  SpectralField wb = zero_field(big);
  auto modes = enumerate_modes(t);
  for (std::size_t i = 0; i < modes.size(); ++i)
    wb.coeff[mode_slot(big, modes[i])] = w.coeff[i];
  auto b_small = nonlinear_term(w);
  auto b_big = nonlinear_term(wb);
  for (std::size_t i = 0; i < modes.size(); ++i)
    EXPECT_NEAR(b_small.coeff[i], b_big.coeff[mode_slot(big, modes[i])], 1e-11);
}

TEST(SymmetrizedBracket, HandValueAndSymmetry) {
  // B~(gamma_{(1,0)}, gamma_{(1,1)}) = 1/4 cos((2,1).x) + 1/4 cos((0,1).x)
  TruncationSpec t{3, true};
  auto a = make_field(t, {{{1, 0}, 1.0}});
  auto b = make_field(t, {{{1, 1}, 1.0}});
  auto br = symmetrized_bracket(a, b);
  auto expected = make_field(t, {{{-2, -1}, 0.25}, {{0, -1}, 0.25}});
  for (std::size_t i = 0; i < br.coeff.size(); ++i)
    EXPECT_NEAR(br.coeff[i], expected.coeff[i], 1e-13);
  auto br2 = symmetrized_bracket(b, a);
  for (std::size_t i = 0; i < br.coeff.size(); ++i)
    EXPECT_NEAR(br.coeff[i], br2.coeff[i], 1e-14);
}

TEST(SymmetrizedBracket, BilinearityAndDiagonalIdentity) {
  TruncationSpec t{4, true};
  auto u = oracle::random_field(t, 51);
  auto v = oracle::random_field(t, 52);
  auto w = oracle::random_field(t, 53);
  // linearity in the first slot
  auto lhs = symmetrized_bracket(lin_comb(2.0, u, -3.0, v), w);
  auto rhs = lin_comb(2.0, symmetrized_bracket(u, w), -3.0, symmetrized_bracket(v, w));
  for (std::size_t i = 0; i < lhs.coeff.size(); ++i)
    EXPECT_NEAR(lhs.coeff[i], rhs.coeff[i], 1e-12);
  // B~(w,w) = -2 B(Kw,w)
  auto diag = symmetrized_bracket(w, w);
  auto bt = nonlinear_term(w);
  for (std::size_t i = 0; i < diag.coeff.size(); ++i)
    EXPECT_NEAR(diag.coeff[i], -2.0 * bt.coeff[i], 1e-12);
}

TEST(BracketAdjoint, MatchesInnerProductIdentity) {
  // <B~(w, xi), v> == <xi, L^T v> for the implemented adjoint
  TruncationSpec t{4, true};
  auto w = oracle::random_field(t, 61);
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto xi = oracle::random_field(t, 70 + s);
    auto v = oracle::random_field(t, 80 + s);
    double lhs = inner(symmetrized_bracket(w, xi), v);
    double rhs = inner(xi, bracket_linearization_adjoint(w, v));
    double scale = sobolev_norm(w) * sobolev_norm(xi) * sobolev_norm(v);
    EXPECT_LE(std::abs(lhs - rhs), 1e-10 * scale);
  }
}

TEST(L4Norm, SingleModeClosedForm) {
  // ||sin(x1)||_{L4}^4 = (3/8)(2 pi)^2, so the Ladyzhenskaya ratio of a
  // single unit mode is sqrt(1.5)/(2 pi).
  TruncationSpec t{2, true};
  auto w = make_field(t, {{{1, 0}, 1.0}});
  EXPECT_NEAR(l4_norm(w), std::pow(1.5 * kPi * kPi, 0.25), 1e-12);
  EXPECT_NEAR(ladyzhenskaya_ratio(w), std::sqrt(1.5) / (2.0 * kPi), 1e-12);
}

TEST(L4Norm, MatchesDirectEvaluationOnPinnedGrid) {
  // same 4K x 4K grid, but direct trig evaluation instead of the FFT path
  TruncationSpec t{3, true};
  auto w = oracle::random_field(t, 90);
  const int n = 4 * t.K;
  double acc = 0.0;
  const double h = 2.0 * kPi / n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      // the library grid starts at 0; shift-invariance of the rectangle rule
      // lets the oracle use the same offsets
      double v = oracle::eval_field(w, i * h, j * h);
      acc += v * v * v * v;
    }
  EXPECT_NEAR(l4_norm(w), std::pow(acc * h * h, 0.25), 1e-10);
}

TEST(C0Estimator, MonotoneInSamplesAndReproducible) {
  TruncationSpec t{3, true};
  auto e1 = estimate_ladyzhenskaya_c0(t, 40, 777);
  auto e2 = estimate_ladyzhenskaya_c0(t, 160, 777);
  auto e1b = estimate_ladyzhenskaya_c0(t, 40, 777);
  EXPECT_LE(e1.value, e2.value);
  EXPECT_DOUBLE_EQ(e1.value, e1b.value);
  EXPECT_GE(e1.value, e1.best_sample);
  // any evaluated ratio is a valid lower bound, so the estimate dominates
  // the single-mode closed form only if such a field was tried; sanity: the
  // estimate is positive and finite
  EXPECT_GT(e1.value, 0.0);
  EXPECT_TRUE(std::isfinite(e2.value));
}

}  // namespace
