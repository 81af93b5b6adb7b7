#pragma once
/// \file densities.hpp
/// Local density polynomials Den(L, M, X) and the normalized and derived
/// densities built from them, plus the lattice-counting identity.
///
/// The polynomial Den(L, M, X) is pinned down by its values at X = q^{-k}:
/// Den(L, M, X)|_{X = q^{-k}} = Den(L perp H_{2k}^+, M), the local density of
/// representations of M by L augmented with k hyperbolic planes.  All
/// quantities here are exact rationals; densities come from the counting
/// module and interpolation is exact.
///
/// For an almost self-dual lattice L = H_n^eps perp <x> with val(q(x)) = 1
/// and a rank-n lattice M, the normalized and derived densities divide by
/// the normalizing constant Norflat(1, H_n^eps):
///   Den^L(M)          = Den(L, M) / Norflat(1, H_n^eps)
///   Den^{Lv}(M)       = q^n Den(Lv, M) / Norflat(1, H_n^eps)
///   dDen^L(M)         = -2 (d/dX)|_{X=1} Den(L, M, X)  / Norflat(1, H_n^eps)
///   dDen^{Lv}(M)      = -2 q^n (d/dX)|_{X=1} Den(Lv, M, X) / Norflat(...)
/// where Lv is the dual lattice.

#include "latdens/counting.hpp"
#include "latdens/lattice.hpp"

#include <stdexcept>
#include <utility>
#include <vector>

namespace latdens {

/// Exact value r * q^{e/2} with the exponent folded into {0, 1}.
using QHalfValue = QHalf;

/// Normalizing factor Nor(X, H_n^eps) as an exact polynomial in X:
///   (1 - ((1+(-1)^n)/2) eps q^{-n/2} X) * prod_{1 <= i < n/2} (1 - q^{-2i} X^2).
/// The first factor is 1 for odd n, so q^{-n/2} only appears when n is even
/// and all coefficients are rational.  Requires n >= 2.
Poly nor(long p, long n, int eps);

/// Norflat(X, H_n^eps) = 2 * Nor(X, H_n^eps).  Requires n >= 2.
Poly nor_flat(long p, long n, int eps);

/// L perp (H_2^+)^{perp k} with H_2^+ the hyperbolic plane [[0,1/2],[1/2,0]].
GramLattice hyperbolic_augment(const GramLattice& L, long k);

/// The interpolated density polynomial together with the evaluation table it
/// was fitted to and verified against.
struct DensityPolynomial {
  Poly poly;              // coefficients ascending in X
  long degree_bound = 0;  // bound D the successful fit used
  std::vector<std::pair<long, Rat>> table;  // (k, Den(L perp H_2k^+, M))

  Rat eval(const Rat& x) const { return poly.eval(x); }
};

/// Fit Den(L, M, X) through the nodes X = q^{-k}, k = 0..K-1, as the unique
/// polynomial of degree <= D through the first D+1 nodes, then verify it on
/// the remaining K - D - 1 nodes (K >= D+2).
///
/// degree_bound < 0 selects the default D = ceil(rank(M) (rank(L) + rank(M)
/// + 1) / 2) and enables adaptive growth: on an extra-point mismatch D is
/// raised and the fit redone, reusing already computed evaluations.  An
/// explicit degree_bound is used as-is and a mismatch throws
/// DegreeBoundTooSmall so the caller can raise D.  eval_points < 0 selects
/// K = D + 2; an explicit K below D+2 is a domain error.
DensityPolynomial den_poly(const GramLattice& L, const GramLattice& M,
                           long degree_bound = -1, long eval_points = -1,
                           const CountBudget& budget = CountBudget{});

/// Derived density dDen^L(M) = -2 (d/dX)|_{X=1} Den(L,M,X) / Norflat(1,H_n^eps).
/// Throws std::domain_error unless L is almost self-dual, i.e. its Jordan
/// splitting is a unimodular block of rank n = rank(L)-1 plus a p-modular
/// line.
Rat derived_den_L(const GramLattice& L, const GramLattice& M,
                  const CountBudget& budget = CountBudget{});

/// Derived density of the dual:
///   dDen^{Lv}(M) = -2 q^n (d/dX)|_{X=1} Den(Lv,M,X) / Norflat(1,H_n^eps).
Rat derived_den_Ldual(const GramLattice& L, const GramLattice& M,
                      const CountBudget& budget = CountBudget{});

/// Normalized density of the dual: Den^{Lv}(M) = q^n Den(Lv,M) / Norflat(1,H_n^eps).
Rat normalized_den_Ldual(const GramLattice& L, const GramLattice& M,
                         const CountBudget& budget = CountBudget{});

/// Normalized density against the dual of a type-1 vertex lattice:
/// Den^{scriptLv}(M) = q^n Den(scriptLv, M) / Norflat(1, H_n^eps) with eps
/// the sign of scriptL's unimodular part.  Throws std::domain_error unless
/// scriptL has vertex type 1 and rank rank(M) + 1.
Rat normalized_den_script(const GramLattice& scriptL, const GramLattice& M,
                          const CountBudget& budget = CountBudget{});

/// #{L' in L tensor Q : L' isometric to L and M inside the dual of L'} for a
/// nondegenerate M of rank n = rank(L) - 1.
///
/// Enumeration: dualizing turns the set into {K isometric to Lv : M inside
/// K}.  Every such K meets the line orthogonal to M in exactly one lattice
/// <p^{-j} z0>, so K contains A_j = M + <p^{-j} z0> with index p^{e_j} pinned
/// by determinants.  For each j in a provably complete window the index-p^e
/// overlattices of A_j are grown one p-step at a time (duplicates removed by
/// Hermite keys, branches pruned by pairing valuations and by exactness of
/// the line intersection) and the survivors are Jordan-classified against Lv.
///
/// Throws std::domain_error when M is degenerate or has the wrong rank.
long count_isometric_overlattices(const GramLattice& L, const GramLattice& M);

namespace detail {
/// Nor(X, H_n^eps) for any n >= 1 (1 for n = 1); the public nor() restricts
/// to n >= 2.
Poly nor_any(long p, long n, int eps);

/// Norflat(1, H_n^eps) = 2 Nor(1, H_n^eps) as a number, any n >= 1.
Rat nor_flat_at_one(long p, long n, int eps);

/// The (n, eps) of an almost self-dual lattice L = H_n^eps perp <x>,
/// val(q(x)) = 1; domain error if L has another shape.
std::pair<long, int> almost_self_dual_shape(const GramLattice& L);
}  // namespace detail

}  // namespace latdens
