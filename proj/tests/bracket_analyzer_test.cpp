// Tests for integer-lattice helpers, the closed-form mode bracket, and the
// span-growth degeneracy classification. The closed-form path is checked
// against the independent dealiased pseudospectral bracket, and the lattice
// code against hand-computed subgroup structure.

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"
#include "tsns/bracket_analysis.hpp"
#include "tsns/lattice.hpp"
#include "tsns/operators.hpp"

using namespace tsns;

namespace {

SpectralField unit_mode(const TruncationSpec& t, ModeIndex k) {
  SpectralField w = zero_field(t);
  w.coeff[(std::size_t)mode_slot(t, k)] = 1.0;
  return w;
}

ForcedModeSet unit_amplitude_set(std::vector<ModeIndex> modes) {
  ForcedModeSet g;
  g.modes = std::move(modes);
  g.amplitudes.assign(g.modes.size(), 1.0);
  return g;
}

}  // namespace

// ---------------------------------------------------------------------------
// Lattice helpers

TEST(Lattice, FullLatticeFromStandardBasis) {
  LatticeBasis b = lattice_basis({{1, 0}, {0, 1}});
  EXPECT_EQ(b.rank, 2);
  EXPECT_TRUE(lattice_is_full(b));
  EXPECT_TRUE(lattice_contains(b, {7, -3}));
}

TEST(Lattice, EvenSublattice) {
  LatticeBasis b = lattice_basis({{2, 0}, {0, 2}, {2, 2}, {-2, -2}});
  EXPECT_EQ(b.rank, 2);
  EXPECT_FALSE(lattice_is_full(b));
  EXPECT_EQ(b.u1, 2);
  EXPECT_EQ(b.u2, 0);
  EXPECT_EQ(b.v2, 2);
  EXPECT_TRUE(lattice_contains(b, {4, -2}));
  EXPECT_FALSE(lattice_contains(b, {1, 0}));
  EXPECT_FALSE(lattice_contains(b, {2, 1}));
}

TEST(Lattice, CheckerboardSublattice) {
  // (1,1) and (1,-1) generate the index-2 sublattice with even coordinate sum
  LatticeBasis b = lattice_basis({{1, 1}, {1, -1}});
  EXPECT_EQ(b.rank, 2);
  EXPECT_FALSE(lattice_is_full(b));
  EXPECT_TRUE(lattice_contains(b, {2, 0}));
  EXPECT_TRUE(lattice_contains(b, {3, 1}));
  EXPECT_FALSE(lattice_contains(b, {1, 0}));
}

TEST(Lattice, RankOneLine) {
  LatticeBasis b = lattice_basis({{2, 0}, {3, 0}});
  EXPECT_EQ(b.rank, 1);
  EXPECT_TRUE(lattice_contains(b, {5, 0}));
  EXPECT_FALSE(lattice_contains(b, {0, 1}));
  EXPECT_FALSE(lattice_is_full(b));
}

TEST(Lattice, SmithInvariantsMatchHermiteDeterminant) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> d(-4, 4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ModeIndex> modes;
    int n = 2 + (int)(rng() % 3);
    for (int i = 0; i < n; ++i) {
      ModeIndex m{d(rng), d(rng)};
      if (m.k1 == 0 && m.k2 == 0) m = ModeIndex{1, 2};
      modes.push_back(m);
    }
    SmithInvariants s = smith_invariants(modes);
    LatticeBasis b = lattice_basis(modes);
    EXPECT_EQ(s.rank, b.rank);
    if (s.rank == 2) {
      // gcd of 2x2 minors equals the Hermite determinant (lattice index)
      EXPECT_EQ(s.minor_gcd, b.u1 * b.v2);
      // every generator must lie in the computed lattice
      for (ModeIndex m : modes) EXPECT_TRUE(lattice_contains(b, m));
    }
  }
}

TEST(Lattice, ConditionChecks) {
  EXPECT_TRUE(check_condition_A1({{1, 0}, {1, 1}}));
  EXPECT_FALSE(check_condition_A1({{1, 0}, {0, 1}, {-1, 0}}));
  EXPECT_TRUE(check_condition_A2({{1, 0}, {0, 1}}));
  EXPECT_TRUE(check_condition_A2({{1, 1}, {1, 2}}));
  EXPECT_FALSE(check_condition_A2({{2, 0}, {0, 1}}));   // minor gcd 2
  EXPECT_FALSE(check_condition_A2({{1, 1}, {1, -1}}));  // index-2 sublattice
  EXPECT_FALSE(check_condition_A2({{2, 0}, {0, 2}}));   // d1 = 2
  EXPECT_FALSE(check_condition_A2({{1, 0}, {2, 0}}));   // rank 1
}

// ---------------------------------------------------------------------------
// Closed-form mode bracket

TEST(ClosedFormBracket, VanishesForCollinearAndEqualLength) {
  TruncationSpec t{6, true};
  ModeBracket z1 = closed_form_mode_bracket({1, 0}, {3, 0}, t);
  ModeBracket z2 = closed_form_mode_bracket({2, 1}, {1, 2}, t);
  for (double c : z1.field.coeff) EXPECT_EQ(c, 0.0);
  for (double c : z2.field.coeff) EXPECT_EQ(c, 0.0);
  EXPECT_TRUE(z1.dropped.empty());
  EXPECT_TRUE(z2.dropped.empty());
}

TEST(ClosedFormBracket, HandValueTwoModes) {
  // bracket of sin(x1) with sin(x1+x2): quarter-strength cosines at the sum
  // and difference wavevectors
  TruncationSpec t{4, true};
  ModeBracket mb = closed_form_mode_bracket({1, 0}, {1, 1}, t);
  EXPECT_TRUE(mb.dropped.empty());
  std::vector<ModeIndex> modes = enumerate_modes(t);
  for (std::size_t s = 0; s < modes.size(); ++s) {
    double expect = 0.0;
    if (modes[s] == ModeIndex{-2, -1} || modes[s] == ModeIndex{0, -1})
      expect = 0.25;
    EXPECT_NEAR(mb.field.coeff[s], expect, 1e-15);
  }
}

TEST(ClosedFormBracket, ExactlySymmetric) {
  TruncationSpec t{5, true};
  std::vector<ModeIndex> modes = enumerate_modes(t);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    ModeIndex j = modes[rng() % modes.size()];
    ModeIndex k = modes[rng() % modes.size()];
    ModeBracket a = closed_form_mode_bracket(j, k, t);
    ModeBracket b = closed_form_mode_bracket(k, j, t);
    for (std::size_t s = 0; s < a.field.coeff.size(); ++s)
      EXPECT_EQ(a.field.coeff[s], b.field.coeff[s]);
  }
}

TEST(ClosedFormBracket, MatchesPseudospectralOnRandomPairs) {
  TruncationSpec t{4, true};
  std::vector<ModeIndex> modes = enumerate_modes(t);
  std::mt19937_64 rng(42);
  int nontrivial = 0;
  for (int trial = 0; trial < 100; ++trial) {
    ModeIndex j = modes[rng() % modes.size()];
    ModeIndex k = modes[rng() % modes.size()];
    ModeBracket closed = closed_form_mode_bracket(j, k, t);
    SpectralField ps = symmetrized_bracket(unit_mode(t, j), unit_mode(t, k));
    double diff = 0.0, mag = 0.0;
    for (std::size_t s = 0; s < ps.coeff.size(); ++s) {
      diff = std::max(diff, std::fabs(ps.coeff[s] - closed.field.coeff[s]));
      mag = std::max(mag, std::fabs(ps.coeff[s]));
    }
    EXPECT_LE(diff, 1e-10);
    if (mag > 0.1) ++nontrivial;
  }
  EXPECT_GT(nontrivial, 20);  // the comparison exercised real interactions
}

TEST(ClosedFormBracket, FieldExtensionMatchesPseudospectral) {
  TruncationSpec t{3, true};
  SpectralField h = oracle::random_field(t, 99, 0.7);
  for (ModeIndex k : {ModeIndex{1, 1}, ModeIndex{2, -1}, ModeIndex{0, -2}}) {
    ModeBracket closed = bracket_field_with_mode(h, k);
    SpectralField ps = symmetrized_bracket(h, unit_mode(t, k));
    for (std::size_t s = 0; s < ps.coeff.size(); ++s)
      EXPECT_NEAR(closed.field.coeff[s], ps.coeff[s], 1e-10);
  }
}

TEST(ClosedFormBracket, FlagsDroppedOutputModes) {
  TruncationSpec t{4, true};
  ModeBracket mb = closed_form_mode_bracket({4, 0}, {1, 1}, t);
  // sum wavevector (5,1) leaves the truncation; its canonical cosine index
  // is (-5,-1). difference (3,-1) stays inside.
  ASSERT_EQ(mb.dropped.size(), 1u);
  EXPECT_EQ(mb.dropped[0], (ModeIndex{-5, -1}));
  int slot = mode_slot(t, {3, -1});
  ASSERT_GE(slot, 0);
  EXPECT_NE(mb.field.coeff[(std::size_t)slot], 0.0);
}

// ---------------------------------------------------------------------------
// Span growth and classification

TEST(BracketSpans, FourDirectionSetSaturatesFullAtK2) {
  TruncationSpec t{2, true};
  ForcedModeSet g =
      unit_amplitude_set({{1, 0}, {-1, 0}, {1, 1}, {-1, -1}});
  BracketReport rep = analyze_brackets(g, t);
  EXPECT_TRUE(rep.condition_a1);
  EXPECT_TRUE(rep.condition_a2);
  EXPECT_EQ(rep.truncation_dim, 24);
  EXPECT_EQ(rep.final_dim, 24);
  ASSERT_TRUE(rep.saturated_at.has_value());
  EXPECT_EQ(rep.classification, DegeneracyClass::Full);
  EXPECT_EQ(rep.span_dims.front(), 4);
  // dims never decrease
  for (std::size_t i = 1; i < rep.span_dims.size(); ++i)
    EXPECT_GE(rep.span_dims[i], rep.span_dims[i - 1]);
}

TEST(BracketSpans, FourDirectionSetSaturatesFullAtK3) {
  TruncationSpec t{3, true};
  ForcedModeSet g =
      unit_amplitude_set({{1, 0}, {-1, 0}, {1, 1}, {-1, -1}});
  BracketReport rep = analyze_brackets(g, t);
  EXPECT_EQ(rep.truncation_dim, 48);
  EXPECT_EQ(rep.final_dim, 48);
  EXPECT_EQ(rep.classification, DegeneracyClass::Full);
}

TEST(BracketSpans, EqualLengthSetStaysPut) {
  TruncationSpec t{3, true};
  ForcedModeSet g =
      unit_amplitude_set({{1, 0}, {0, 1}, {-1, 0}, {0, -1}});
  BracketReport rep = analyze_brackets(g, t);
  EXPECT_EQ(rep.final_dim, 4);
  ASSERT_TRUE(rep.saturated_at.has_value());
  EXPECT_EQ(*rep.saturated_at, 1);
  EXPECT_EQ(rep.classification, DegeneracyClass::Case1);
  EXPECT_EQ(rep.degenerate_basis.size(), 4u);
}

TEST(BracketSpans, SingletonIsCase1) {
  TruncationSpec t{3, true};
  ForcedModeSet g = unit_amplitude_set({{1, 1}});
  BracketReport rep = analyze_brackets(g, t);
  EXPECT_EQ(rep.final_dim, 1);
  EXPECT_EQ(rep.classification, DegeneracyClass::Case1);
}

TEST(BracketSpans, CollinearSetIsCase1) {
  TruncationSpec t{4, true};
  ForcedModeSet g = unit_amplitude_set({{1, 0}, {2, 0}, {-3, 0}});
  BracketReport rep = analyze_brackets(g, t);
  EXPECT_EQ(rep.final_dim, 3);
  EXPECT_EQ(rep.classification, DegeneracyClass::Case1);
}

TEST(BracketSpans, EvenModeSetIsCase2ConfinedToSublattice) {
  TruncationSpec t{4, true};
  ForcedModeSet g =
      unit_amplitude_set({{2, 0}, {0, 2}, {2, 2}, {-2, -2}});
  BracketReport rep = analyze_brackets(g, t);
  EXPECT_EQ(rep.classification, DegeneracyClass::Case2);
  // even modes within max-norm 4 form a scaled copy of the K=2 square
  EXPECT_EQ(rep.degenerate_basis.size(), 24u);
  EXPECT_EQ(rep.final_dim, 24);
  ASSERT_EQ(rep.subgroup_generators.size(), 2u);
  EXPECT_EQ(rep.subgroup_generators[0], (ModeIndex{2, 0}));
  EXPECT_EQ(rep.subgroup_generators[1], (ModeIndex{0, 2}));
  for (ModeIndex m : rep.degenerate_basis) {
    EXPECT_EQ(m.k1 % 2, 0);
    EXPECT_EQ(m.k2 % 2, 0);
  }
}

TEST(BracketSpans, DepthExhaustionReportsIndeterminate) {
  TruncationSpec t{2, true};
  ForcedModeSet g =
      unit_amplitude_set({{1, 0}, {-1, 0}, {1, 1}, {-1, -1}});
  BracketReport rep = analyze_brackets(g, t, 1);
  EXPECT_FALSE(rep.saturated_at.has_value());
  EXPECT_EQ(rep.classification, DegeneracyClass::Indeterminate);
}

TEST(BracketSpans, AmplitudeScaleDoesNotChangeDims) {
  TruncationSpec t{2, true};
  ForcedModeSet g1 =
      unit_amplitude_set({{1, 0}, {-1, 0}, {1, 1}, {-1, -1}});
  ForcedModeSet g2 = g1;
  g2.amplitudes = {0.01, 5.0, 0.3, 2.0};
  BracketReport r1 = analyze_brackets(g1, t);
  BracketReport r2 = analyze_brackets(g2, t);
  EXPECT_EQ(r1.span_dims, r2.span_dims);
  EXPECT_EQ(r1.classification, r2.classification);
}
