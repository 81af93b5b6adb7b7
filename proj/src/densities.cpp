/// \file densities.cpp
/// Density polynomials, normalized/derived densities, and the isometric
/// overlattice count.  See densities.hpp for the conventions.

#include "latdens/densities.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <utility>

namespace latdens {

namespace detail {

Poly nor_any(long p, long n, int eps) {
  if (n < 1) throw std::domain_error("nor: rank must be at least 1");
  if (eps != 1 && eps != -1) throw std::domain_error("nor: eps must be +-1");
  Poly result = Poly::constant(1);
  if (n % 2 == 0) {
    // 1 - eps q^{-n/2} X
    result = result.mul(Poly({Rat(1), Rat(-eps) * pow_rat(p, -(n / 2))}));
  }
  for (long i = 1; 2 * i < n; ++i) {
    // 1 - q^{-2i} X^2
    result = result.mul(Poly({Rat(1), Rat(0), -pow_rat(p, -2 * i)}));
  }
  return result;
}

Rat nor_flat_at_one(long p, long n, int eps) {
  return nor_any(p, n, eps).eval(1) * 2;
}

std::pair<long, int> almost_self_dual_shape(const GramLattice& L) {
  const long n = L.rank() - 1;
  const JordanProfile prof = jordan_profile(L);
  const bool ok = n >= 1 && prof.size() == 2 && prof[0].scale == 0 &&
                  prof[0].rank == n && prof[1].scale == 1 && prof[1].rank == 1;
  if (!ok)
    throw std::domain_error(
        "expected an almost self-dual lattice H_n^eps perp <x> with "
        "val(q(x)) = 1");
  return {n, prof[0].det_chi};
}

}  // namespace detail

Poly nor(long p, long n, int eps) {
  if (n < 2) throw std::domain_error("nor: rank must be at least 2");
  return detail::nor_any(p, n, eps);
}

Poly nor_flat(long p, long n, int eps) { return nor(p, n, eps).scale(2); }

GramLattice hyperbolic_augment(const GramLattice& L, long k) {
  if (k < 0) throw std::domain_error("hyperbolic_augment: k must be >= 0");
  GramLattice result = L;
  for (long i = 0; i < k; ++i)
    result = orthogonal_sum(result, make_lattice(L.p, hyperbolic_plane_gram()));
  return result;
}

DensityPolynomial den_poly(const GramLattice& L, const GramLattice& M,
                           long degree_bound, long eval_points,
                           const CountBudget& budget) {
  const long p = L.p;
  const bool adaptive = degree_bound < 0;
  const long default_numer = M.rank() * (L.rank() + M.rank() + 1);
  long D = adaptive ? (default_numer + 1) / 2 : degree_bound;
  long K = eval_points < 0 ? D + 2 : eval_points;
  if (K < D + 2)
    throw std::domain_error("den_poly: need at least D+2 evaluation points");

  std::vector<Rat> values;  // values[k] = Den(L perp H_2k^+, M)
  auto value_at = [&](long k) -> Rat {
    while (static_cast<long>(values.size()) <= k) {
      const long next = static_cast<long>(values.size());
      values.push_back(den(hyperbolic_augment(L, next), M, budget));
    }
    return values[static_cast<size_t>(k)];
  };

  // With a defaulted bound, grow D until the verification points pass; the
  // exact polynomial exists, so this terminates once D reaches its degree.
  // The cap only guards against runaway growth on a miswired instance.
  const long max_D = D + 24;
  for (;;) {
    std::vector<std::pair<Rat, Rat>> nodes;
    for (long k = 0; k <= D; ++k) nodes.push_back({pow_rat(p, -k), value_at(k)});
    const Poly fit = lagrange_interpolate(nodes);
    bool verified = true;
    for (long k = D + 1; k < K; ++k) {
      if (fit.eval(pow_rat(p, -k)) != value_at(k)) {
        verified = false;
        break;
      }
    }
    if (verified) {
      DensityPolynomial out;
      out.poly = fit;
      out.degree_bound = D;
      for (long k = 0; k < K; ++k) out.table.emplace_back(k, value_at(k));
      return out;
    }
    if (!adaptive || D + 2 > max_D)
      throw DegreeBoundTooSmall("den_poly: degree bound " + std::to_string(D) +
                                " cannot reproduce the verification points");
    D += 2;
    K = std::max(K, D + 2);
  }
}

Rat derived_den_L(const GramLattice& L, const GramLattice& M,
                  const CountBudget& budget) {
  const auto [n, eps] = detail::almost_self_dual_shape(L);
  const DensityPolynomial dp = den_poly(L, M, -1, -1, budget);
  return dp.poly.derivative().eval(1) * Rat(-2) /
         detail::nor_flat_at_one(L.p, n, eps);
}

Rat derived_den_Ldual(const GramLattice& L, const GramLattice& M,
                      const CountBudget& budget) {
  const auto [n, eps] = detail::almost_self_dual_shape(L);
  const GramLattice Lv = dual(L).first;
  const DensityPolynomial dp = den_poly(Lv, M, -1, -1, budget);
  return dp.poly.derivative().eval(1) * Rat(-2) * pow_rat(L.p, n) /
         detail::nor_flat_at_one(L.p, n, eps);
}

Rat normalized_den_Ldual(const GramLattice& L, const GramLattice& M,
                         const CountBudget& budget) {
  const auto [n, eps] = detail::almost_self_dual_shape(L);
  const GramLattice Lv = dual(L).first;
  return pow_rat(L.p, n) * den(Lv, M, budget) /
         detail::nor_flat_at_one(L.p, n, eps);
}

Rat normalized_den_script(const GramLattice& scriptL, const GramLattice& M,
                          const CountBudget& budget) {
  if (scriptL.rank() != M.rank() + 1)
    throw std::domain_error(
        "normalized_den_script: vertex lattice must have rank rank(M)+1");
  if (vertex_type(scriptL) != 1)
    throw std::domain_error(
        "normalized_den_script: lattice must have vertex type 1");
  const auto [n, eps] = detail::almost_self_dual_shape(scriptL);
  const GramLattice Sv = dual(scriptL).first;
  return pow_rat(scriptL.p, n) * den(Sv, M, budget) /
         detail::nor_flat_at_one(scriptL.p, n, eps);
}

namespace {

long floor_div2(long x) { return x >= 0 ? x / 2 : -((-x + 1) / 2); }
long ceil_div2(long x) { return x >= 0 ? (x + 1) / 2 : -((-x) / 2); }

long min_jordan_scale(const GramLattice& L) {
  return jordan_profile(L).front().scale;  // profiles are scale-ascending
}

/// All nonzero pairings among the columns of basis have valuation >= s.
bool pairings_at_least(long p, const Mat& gram, long s) {
  for (const Rat& x : gram.a)
    if (x != 0 && val_p(p, x) < s) return false;
  return true;
}

}  // namespace

long count_isometric_overlattices(const GramLattice& L, const GramLattice& M) {
  if (L.p != M.p)
    throw std::domain_error("count_isometric_overlattices: mismatched primes");
  const long p = L.p;
  const long n = M.rank();
  const long r = L.rank();
  if (r != n + 1)
    throw std::domain_error(
        "count_isometric_overlattices: rank(M) must be rank(L) - 1");
  const Rat detT = M.gram.det();
  if (detT == 0)
    throw std::domain_error("count_isometric_overlattices: M is degenerate");

  // Dualize: #{L' ~ L : M in L'^dual} = #{K ~ L^dual : M in K}.
  const GramLattice Dlat = dual(L).first;
  const JordanProfile target_profile = jordan_profile(Dlat);
  const long s = target_profile.front().scale;
  if (min_jordan_scale(M) < s) return 0;  // M fits in no lattice ~ Dlat

  // Ambient space W = M perp <gamma> with the determinant class matched to
  // L's space; if the Hasse invariants then disagree, M does not embed into
  // L tensor Q at all and the count is zero.
  const Rat gamma = square_class_rep(p, L.gram.det() / detT);
  Mat W(r, r);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) W.at(i, j) = M.gram.at(i, j);
  W.at(n, n) = gamma;
  {
    const SpaceInvariants a = invariants(make_lattice(p, W));
    const SpaceInvariants b = invariants(L);
    if (a.disc_class != b.disc_class || a.hasse != b.hasse) return 0;
  }

  const long vdetT = val_p(p, detT);
  const long vgamma = val_p(p, gamma);
  const long vdetD = val_p(p, Dlat.gram.det());
  // Matching determinant classes force matching valuation parities.
  if ((vdetT + vgamma - vdetD) % 2 != 0)
    throw std::logic_error("count_isometric_overlattices: parity mismatch");

  // Any candidate K meets the line M^perp = F z0 in exactly one <p^{-j} z0>,
  // so K grows from A_j = M + <p^{-j} z0> with index exponent
  //   e_j = (val det A_j - val det K) / 2,  val det A_j = vdetT + vgamma - 2j.
  // Window: the generator's norm gamma p^{-2j} needs valuation >= s and
  // e_j >= 0 (upper bounds); exactness of the line intersection makes K/A_j
  // embed into p^s M^dual / M of exponent vdetT - n s (lower bound).
  const long j_hi =
      std::min(floor_div2(vgamma - s), floor_div2(vdetT + vgamma - vdetD));
  const long j_lo = ceil_div2(vgamma - vdetT + 2 * n * s - vdetD);

  long total = 0;
  for (long j = j_lo; j <= j_hi; ++j) {
    const long e = (vdetT + vgamma - 2 * j - vdetD) / 2;
    if (e < 0) continue;

    Mat C0 = Mat::identity(r);
    C0.at(n, n) = pow_rat(p, -j);

    // K must not contain p^{-j-1} z0, or its line intersection is too big.
    auto line_too_big = [&](const Mat& basis_inv) {
      const Rat scale = pow_rat(p, -j - 1);
      for (long i = 0; i < r; ++i) {
        const Rat x = basis_inv.at(i, n) * scale;
        if (x != 0 && val_p(p, x) < 0) return false;
      }
      return true;  // p^{-j-1} z0 lies in K
    };

    // Grow overlattices one index-p step at a time.  Both prunes are
    // inherited by every sublattice of a valid K, so every valid K is
    // reachable through surviving intermediates.
    std::map<std::string, Mat> level;
    level.emplace(lattice_key(LatticeSpan{C0}), C0);
    for (long step = 0; step < e; ++step) {
      std::map<std::string, Mat> next;
      for (const auto& [key, C] : level) {
        // Projective representatives w of P(K/pK): leading coordinate 1.
        for (long lead = 0; lead < r; ++lead) {
          long combos = 1;
          for (long i = lead + 1; i < r; ++i) combos *= p;
          for (long code = 0; code < combos; ++code) {
            Mat gens(r, r + 1);
            for (long i = 0; i < r; ++i)
              for (long c = 0; c < r; ++c) gens.at(i, c) = C.at(i, c);
            // Column C * w / p with w = e_lead + higher digits from code.
            long rem = code;
            std::vector<long> w(r, 0);
            w[lead] = 1;
            for (long i = lead + 1; i < r; ++i) {
              w[i] = rem % p;
              rem /= p;
            }
            for (long i = 0; i < r; ++i) {
              Rat acc = 0;
              for (long c = 0; c < r; ++c)
                if (w[c] != 0) acc += C.at(i, c) * w[c];
              gens.at(i, r) = acc / p;
            }
            Mat basis = p_local_hnf(p, gens);
            const Mat gram = basis.transpose().mul(W).mul(basis);
            if (!pairings_at_least(p, gram, s)) continue;
            if (line_too_big(basis.inverse())) continue;
            std::string new_key = lattice_key(LatticeSpan{basis});
            next.emplace(std::move(new_key), std::move(basis));
            if (next.size() > 500000)
              throw BudgetExceeded(
                  "count_isometric_overlattices: overlattice frontier "
                  "exceeds the search budget");
          }
        }
      }
      level = std::move(next);
    }

    for (const auto& [key, C] : level) {
      const Mat gram = C.transpose().mul(W).mul(C);
      if (jordan_profile(make_lattice(p, gram)) == target_profile) ++total;
    }
  }
  return total;
}

}  // namespace latdens
