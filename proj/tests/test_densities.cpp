// Tests for density polynomials, normalized/derived densities, and the
// isometric overlattice count.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "latdens/densities.hpp"

#include <vector>

using namespace latdens;

namespace {

Mat diag_mat(const std::vector<Rat>& d) {
  Mat m(static_cast<long>(d.size()), static_cast<long>(d.size()));
  for (size_t i = 0; i < d.size(); ++i)
    m.at(static_cast<long>(i), static_cast<long>(i)) = d[i];
  return m;
}

GramLattice diag_lat(long p, const std::vector<Rat>& d) {
  return make_lattice(p, diag_mat(d));
}

GramLattice dual_lat(const GramLattice& L) { return dual(L).first; }

}  // namespace

TEST_CASE("normalizing polynomials") {
  // Pinned closed forms at small rank.
  CHECK(nor(3, 2, +1) == Poly({Rat(1), Rat(-1) / 3}));
  CHECK(nor(3, 2, -1) == Poly({Rat(1), Rat(1) / 3}));
  CHECK(nor(5, 2, +1) == Poly({Rat(1), Rat(-1) / 5}));
  for (long p : {3L, 5L}) {
    for (int eps : {+1, -1}) {
      CHECK(nor(p, 3, eps).eval(1) == Rat(1) - Rat(1) / (p * p));
      CHECK(nor_flat(p, 3, eps) == nor(p, 3, eps).scale(2));
    }
  }
  // Rank 4, split: (1 - q^{-2} X)(1 - q^{-2} X^2).
  const Poly n4 = nor(3, 4, +1);
  CHECK(n4 == Poly({Rat(1), Rat(0), Rat(-1) / 9}).mul(
                  Poly({Rat(1), Rat(-1) / 9})));
  CHECK_THROWS_AS((void)nor(3, 1, +1), std::domain_error);
  CHECK_THROWS_AS((void)nor_flat(3, 1, -1), std::domain_error);
  CHECK_THROWS_AS((void)nor(3, 2, 0), std::domain_error);

  // Norflat(1, H_n^eps) equals the self-represented density Den(H, H).
  for (int eps : {+1, -1}) {
    const GramLattice h2 = self_dual_lattice(3, 2, eps);
    CHECK(nor_flat(3, 2, eps).eval(1) == den(h2, h2));
    const GramLattice h3 = self_dual_lattice(3, 3, eps);
    CHECK(nor_flat(3, 3, eps).eval(1) == den(h3, h3));
  }
}

TEST_CASE("hyperbolic augmentation") {
  const GramLattice one = diag_lat(3, {1});
  CHECK(hyperbolic_augment(one, 0).gram == one.gram);

  const GramLattice aug1 = hyperbolic_augment(one, 1);
  CHECK(aug1.rank() == 3);
  CHECK(aug1.gram.det() == Rat(-1) / 4);

  const GramLattice h2 = make_lattice(3, hyperbolic_plane_gram());
  const auto cls = classify_self_dual(hyperbolic_augment(h2, 1));
  REQUIRE(cls.has_value());
  CHECK(cls->m == 4);
  CHECK(cls->eps == +1);

  CHECK_THROWS_AS((void)hyperbolic_augment(one, -1), std::domain_error);
}

TEST_CASE("density polynomial fits its evaluation table") {
  const GramLattice h2 = make_lattice(3, hyperbolic_plane_gram());
  const GramLattice one = diag_lat(3, {1});

  const DensityPolynomial dp = den_poly(h2, one);
  // Every table entry is reproduced at its node, and the k=1 node matches an
  // independently computed augmented density.
  for (const auto& [k, v] : dp.table) {
    CHECK(dp.eval(pow_rat(3, -k)) == v);
    CHECK(v == den(hyperbolic_augment(h2, k), one));
  }
  CHECK(dp.eval(Rat(1) / 3) == den(hyperbolic_augment(h2, 1), one));

  // The polynomial genuinely depends on X here.
  CHECK(dp.poly.degree() >= 1);

  // Refitting with one more degree of freedom reproduces the same polynomial.
  const DensityPolynomial dp2 = den_poly(h2, one, dp.degree_bound + 1);
  CHECK(dp2.poly == dp.poly);

  // A degree bound below the true degree is rejected.
  CHECK_THROWS_AS((void)den_poly(h2, one, 0), DegreeBoundTooSmall);
  // Too few evaluation points for the requested bound are rejected.
  CHECK_THROWS_AS((void)den_poly(h2, one, 2, 3), std::domain_error);
}

TEST_CASE("density polynomial support and vanishing") {
  const GramLattice L = diag_lat(3, {1, 3});

  // <1> is represented: nonzero value at X = 1, matching the plain density.
  const DensityPolynomial rep = den_poly(L, diag_lat(3, {1}));
  CHECK(rep.eval(1) == den(L, diag_lat(3, {1})));
  CHECK(rep.eval(1) > 0);

  // <2> and <6> generate the non-embeddable rank-1 classes for this space:
  // the k=0 density vanishes but the augmented ones do not, so the
  // polynomial is nonzero with a root at X = 1.
  for (Rat a : {Rat(2), Rat(6)}) {
    const DensityPolynomial dp = den_poly(L, diag_lat(3, {a}));
    CHECK(dp.eval(1) == 0);
    CHECK(dp.poly.degree() >= 1);
    CHECK(dp.table.at(1).second > 0);
  }
}

TEST_CASE("derived densities: preconditions and exact derivative") {
  const GramLattice h2 = make_lattice(3, hyperbolic_plane_gram());
  const GramLattice bad_scale = diag_lat(3, {1, 9});
  const GramLattice one = diag_lat(3, {1});
  CHECK_THROWS_AS((void)derived_den_L(h2, one), std::domain_error);
  CHECK_THROWS_AS((void)derived_den_L(bad_scale, one), std::domain_error);
  CHECK_THROWS_AS((void)normalized_den_Ldual(bad_scale, one),
                  std::domain_error);

  // n=1 instance with M in the non-embeddable space: the symbolic derivative
  // agrees with the coefficient-sum form of the difference quotient at X=1,
  // and the normalized density of the dual detects the empty support.
  const GramLattice L = diag_lat(3, {1, 3});
  for (Rat a : {Rat(2), Rat(6), Rat(18)}) {
    const GramLattice M = diag_lat(3, {a});
    const DensityPolynomial dp = den_poly(L, M);
    Rat deriv_at_one = 0;
    for (size_t i = 1; i < dp.poly.coeffs.size(); ++i)
      deriv_at_one += Rat(static_cast<long>(i)) * dp.poly.coeffs[i];
    CHECK(dp.poly.derivative().eval(1) == deriv_at_one);
    CHECK(derived_den_L(L, M) == deriv_at_one * Rat(-2) / 2);

    // Same space as L, so the dual's support is empty too.
    CHECK(normalized_den_Ldual(L, M) == 0);
  }

  // The dual-side derived density carries the extra q^n factor.
  const GramLattice M2 = diag_lat(3, {2});
  const DensityPolynomial dpd = den_poly(dual_lat(L), M2);
  CHECK(derived_den_Ldual(L, M2) ==
        dpd.poly.derivative().eval(1) * Rat(-2) * 3 / 2);
}

TEST_CASE("isometric overlattice count: proof cases") {
  const GramLattice Lp = orthogonal_sum(self_dual_lattice(3, 2, +1),
                                        diag_lat(3, {3}));
  const GramLattice Lm = orthogonal_sum(self_dual_lattice(3, 2, -1),
                                        diag_lat(3, {3}));

  // Unimodular M isometric to the self-dual part: exactly one sublattice.
  CHECK(count_isometric_overlattices(Lp, self_dual_lattice(3, 2, +1)) == 1);
  CHECK(count_isometric_overlattices(Lm, self_dual_lattice(3, 2, -1)) == 1);
  // Wrong sign: no sublattice at all.
  CHECK(count_isometric_overlattices(Lp, self_dual_lattice(3, 2, -1)) == 0);
  CHECK(count_isometric_overlattices(Lm, self_dual_lattice(3, 2, +1)) == 0);

  // diag(3,3): the deep-vector case with no unimodular overlattice (chi(-1)
  // = -1 at p=3 blocks the index-3 integral overlattice): exactly two.
  CHECK(count_isometric_overlattices(Lp, diag_lat(3, {3, 3})) == 2);

  // diag(6,3) admits one unimodular overlattice on top of the deep case.
  CHECK(count_isometric_overlattices(Lp, diag_lat(3, {6, 3})) == 3);

  // Degenerate or mis-sized input is rejected.
  GramLattice degenerate = Lp;
  degenerate.gram = Mat(2, 2);
  CHECK_THROWS_AS((void)count_isometric_overlattices(Lp, degenerate),
                  std::domain_error);
  CHECK_THROWS_AS(
      (void)count_isometric_overlattices(Lp, diag_lat(3, {1, 1, 1})),
      std::domain_error);
}

TEST_CASE("lattice-counting identity: density vs enumeration") {
  // Den(L^dual, M) = q^{-n} Norflat(1, H_n^eps) #{L' ~ L : M in L'^dual},
  // both sides computed independently, on hand-picked rank-2 instances.
  const Rat norm_flat_p = nor_flat(3, 2, +1).eval(1);  // 4/3
  const GramLattice L = orthogonal_sum(self_dual_lattice(3, 2, +1),
                                       diag_lat(3, {3}));
  const GramLattice Lv = dual_lat(L);
  const std::vector<std::vector<Rat>> targets = {
      {Rat(1), Rat(-1)},        // ~ H_2^+ when chi(-(-1)) = ... det -1
      {Rat(3), Rat(3)},         // deep pair, count 2
      {Rat(6), Rat(3)},         // deep pair with a unimodular overlattice
      {Rat(1), Rat(3)},         // unit perp scaled
      {Rat(2), Rat(2)},         // unimodular, other sign
      {Rat(1), Rat(27)},        // deeper scale
  };
  for (const auto& d : targets) {
    const GramLattice M = diag_lat(3, d);
    const Rat lhs = den(Lv, M);
    const long count = count_isometric_overlattices(L, M);
    CHECK(lhs == norm_flat_p * count / 9);
  }
}

TEST_CASE("density is the sum of primitive densities over overlattices") {
  // Den(L^dual, M) = sum over M' between M and L tensor Q of
  // Pden(L^dual, M'), with the overlattice list enumerated explicitly.
  const GramLattice L = orthogonal_sum(self_dual_lattice(3, 2, +1),
                                       diag_lat(3, {3}));
  const GramLattice Lv = dual_lat(L);
  for (const auto& d : std::vector<std::vector<Rat>>{
           {Rat(3), Rat(3)}, {Rat(6), Rat(3)}, {Rat(1), Rat(9)}}) {
    const GramLattice M = diag_lat(3, d);
    // Overlattices with nonzero primitive density sit inside p^{-1} M'^dual,
    // so their index exponent is bounded via determinant valuations.
    const long vdet = val_p(3, M.gram.det());
    const long max_e = (vdet + 2) / 2;
    const Mat window = Mat::identity(2).scale(pow_rat(3, -max_e));
    const auto between = lattices_between(
        3, LatticeSpan{Mat::identity(2)}, LatticeSpan{window});
    Rat sum = 0;
    for (const auto& span : between) {
      const Mat gram = span_gram(M.gram, span);
      sum += pden(Lv, make_lattice(3, gram));
    }
    CHECK(sum == den(Lv, M));
  }
}

TEST_CASE("primitive density table rows") {
  // Pden(L^dual, M) = q^{-n} Norflat(1, H_n^eps) * {1, 1, 2, 0} for the four
  // target classes of the classification.
  const long p = 3;
  const Rat unit = nor_flat(p, 2, +1).eval(1) / 9;  // q^{-n} Norflat
  const GramLattice L = orthogonal_sum(self_dual_lattice(p, 2, +1),
                                       diag_lat(p, {3}));
  const GramLattice Lv = dual_lat(L);
  // M ~ H_2^+ (the eps of L): coefficient 1.
  CHECK(pden(Lv, self_dual_lattice(p, 2, +1)) == unit);
  // M ~ H_1^{eps'} perp <x>: coefficient 1 for both eps'.
  CHECK(pden(Lv, diag_lat(p, {1, 3})) == unit);
  CHECK(pden(Lv, diag_lat(p, {2, 3})) == unit);
  // M ~ <y> perp <x> with val(q(y)) >= 1: coefficient 2.
  CHECK(pden(Lv, diag_lat(p, {3, 3})) == unit * 2);
  CHECK(pden(Lv, diag_lat(p, {9, 3})) == unit * 2);
  // Off-table classes: coefficient 0.
  CHECK(pden(Lv, self_dual_lattice(p, 2, -1)) == 0);
  CHECK(pden(Lv, diag_lat(p, {1, 1})) == 0);  // ~ H_2^- here
  CHECK(pden(Lv, diag_lat(p, {1, 9})) == 0);
}

TEST_CASE("almost self-dual dual-representation identity") {
  // Den(H_n^eps perp <x>, H_{n-1}^{eps'} perp <x>) = Norflat(1, H_n^eps),
  // one combination per sign of eps' (the full sweep runs in acceptance).
  const long p = 3;
  const GramLattice L = orthogonal_sum(self_dual_lattice(p, 2, +1),
                                       diag_lat(p, {3}));
  for (int epsp : {+1, -1}) {
    const GramLattice M = orthogonal_sum(self_dual_lattice(p, 1, epsp),
                                         diag_lat(p, {3}));
    CHECK(den(L, M) == nor_flat(p, 2, +1).eval(1));
  }
}

TEST_CASE("type-1 script densities against direct counts") {
  // n=1 model of the main-theorem bookkeeping: V is the rank-2 space with
  // the opposite Hasse invariant, scriptL = diag(2,6) its type-1 lattice.
  const long p = 3;
  const GramLattice scriptL = diag_lat(p, {2, 6});
  CHECK(vertex_type(scriptL) == 1);

  CHECK_THROWS_AS((void)normalized_den_script(diag_lat(p, {3, 3, 3}),
                                              diag_lat(p, {1, 1})),
                  std::domain_error);
  CHECK_THROWS_AS((void)normalized_den_script(scriptL, diag_lat(p, {1, 1})),
                  std::domain_error);

  const GramLattice scriptLv = dual_lat(scriptL);
  for (Rat a : {Rat(2), Rat(6), Rat(18), Rat(54)}) {
    const GramLattice M = diag_lat(p, {a});
    const Rat script = normalized_den_script(scriptL, M);
    // Lattice-counting applied to scriptL itself: M inside the duals.
    CHECK(script == count_isometric_overlattices(scriptL, M));
    // The main theorem's lattice term counts M inside the lattices
    // themselves; dualizing swaps the two counts, and both agree with the
    // normalized density.
    CHECK(script == count_isometric_overlattices(scriptLv, M));
  }
}
