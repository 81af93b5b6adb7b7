/// \file counting.cpp
/// Exact representation counting modulo prime powers.
///
/// Layout of this file:
///   1. modular arithmetic helpers (int64 with __int128 products),
///   2. value histograms and orbit data for unimodular forms, including
///      closed-form solution counts (UniHist) and hyperbolic-plane splitting,
///   3. pair tables: cached dense joint distributions of (q(v), t(v,w), q(w))
///      over pairs of vectors of a unimodular form, plus a memory-free probe
///      that answers a single key triple at large moduli via the orbit
///      decomposition and closed-form counts,
///   4. literal nested-loop counters (the independent cross-check),
///   5. the tiered fast engine: tier A (one column, value convolution),
///      tier B (two columns, sparse/unimodular split), tier D (three columns,
///      orbit decomposition against a rank-(m-2) pair table),
///   6. the public counting and density API.
///
/// Counting semantics are representative based: column j runs over
/// shift_j + [0, p^{cmod_j})^m and a condition of depth e on entry (i, j)
/// means val_p(t(v_i, v_j) - T_ij) >= e on exact rational values.  For
/// integral forms at uniform depth d = cmod this coincides with counting
/// residue classes mod p^d, and the result is independent of the basis.

#include "latdens/counting.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

namespace latdens {

namespace {

// ---------------------------------------------------------------------------
// Modular helpers
// ---------------------------------------------------------------------------

bool depth_vacuous(long dval) { return dval <= kVacuousDepth / 2; }

long long pow_ll(long p, long e) {
  long long r = 1;
  for (long i = 0; i < e; ++i) r *= p;
  return r;
}

/// p^e < 4.6e18 (safe for int64 and for __int128 products of two residues).
bool pow_fits(long p, long e) {
  if (e <= 0) return true;
  unsigned __int128 acc = 1;
  const unsigned __int128 lim = (unsigned __int128)4600000000000000000ULL;
  for (long i = 0; i < e; ++i) {
    acc *= (unsigned long long)p;
    if (acc > lim) return false;
  }
  return true;
}

long long mulmod(long long a, long long b, long long m) {
  return (long long)((__int128)a * b % m);
}

long long addmod(long long a, long long b, long long m) {
  long long r = a + b;
  if (r >= m) r -= m;
  return r;
}

long long submod(long long a, long long b, long long m) {
  long long r = a - b;
  if (r < 0) r += m;
  return r;
}

/// Valuation of x in [0, p^W), with val(0) := W.
long val_mod(long long x, long p, long W) {
  if (x == 0) return W;
  long v = 0;
  while (x % p == 0) {
    x /= p;
    ++v;
  }
  return v;
}

/// max(0, -val_p(r)): the denominator exponent of r at p.
long denom_exp(long p, const Rat& r) {
  if (r == 0) return 0;
  long v = val_p(p, r);
  return v < 0 ? -v : 0;
}

/// r mod p^W as an int64 residue; requires val_p(r) >= 0 and p^W to fit.
long long rat_mod_ppow(const Rat& r, long p, long W) {
  if (W <= 0) return 0;
  Int P = pow_int(p, W);
  Int den = r.get_den();
  Int dinv;
  if (!mpz_invert(dinv.get_mpz_t(), den.get_mpz_t(), P.get_mpz_t()))
    throw std::domain_error("rat_mod_ppow: denominator divisible by p");
  Int num;
  mpz_fdiv_r(num.get_mpz_t(), r.get_num().get_mpz_t(), P.get_mpz_t());
  Int res = num * dinv;
  mpz_fdiv_r(res.get_mpz_t(), res.get_mpz_t(), P.get_mpz_t());
  return res.get_si();
}

long long inv_mod_ppow(long long a, long p, long W) {
  Int P = pow_int(p, W);
  Int A((long)a);
  Int inv;
  if (!mpz_invert(inv.get_mpz_t(), A.get_mpz_t(), P.get_mpz_t()))
    throw std::domain_error("inv_mod_ppow: not invertible");
  return inv.get_si();
}

// ---------------------------------------------------------------------------
// Closed-form value counts for unimodular forms
// ---------------------------------------------------------------------------

/// Solution counts for a unimodular diagonal form of rank rr over Z_p with
/// chi(det) given, built from the classical mod-p counts:
///   rr = 2k:    N_1(0) = p^{rr-1} + eta (p^k - p^{k-1}),
///               N_1(a) = p^{rr-1} - eta p^{k-1}        (a != 0),
///               with eta = chi((-1)^k det);
///   rr = 2k+1:  N_1(0) = p^{rr-1},
///               N_1(a) = p^{rr-1} + p^k chi((-1)^k a det).
/// Primitive solutions mod p^s lift smoothly (the gradient is a unit), so
///   prim_s(g) = p^{(s-1)(rr-1)} c1(g mod p),  c1(a) = N_1(a) - [a = 0],
/// and h(s, g) = #{ v in (Z/p^s)^rr : q(v) = g } is obtained by summing the
/// valuation strata v = p^{e} w, w primitive, plus the deep tail.
struct UniHist {
  long p = 3;
  long rr = 0;  // rank; 0 means the empty form (q = 0)
  std::vector<long long> c1;

  UniHist(long p_, long rr_, int chi_det) : p(p_), rr(rr_) {
    if (rr == 0) return;
    c1.assign((size_t)p, 0);
    const int chim1 = legendre(Int(-1), p);
    if (rr % 2 == 0) {
      long k = rr / 2;
      long eta = ((k % 2) ? chim1 : 1) * chi_det;
      long long base = pow_ll(p, rr - 1);
      long long pk = pow_ll(p, k), pk1 = pow_ll(p, k - 1);
      for (long a = 0; a < p; ++a)
        c1[(size_t)a] =
            (a == 0) ? base + eta * (pk - pk1) - 1 : base - eta * pk1;
    } else {
      long k = (rr - 1) / 2;
      long sgn = (k % 2) ? chim1 : 1;
      long long base = pow_ll(p, rr - 1);
      long long pk = pow_ll(p, k);
      for (long a = 0; a < p; ++a) {
        if (a == 0) {
          c1[0] = base - 1;
        } else {
          int ch = legendre(Int((long)a), p);
          c1[(size_t)a] = base + pk * (long long)(sgn * chi_det * ch);
        }
      }
    }
  }

  /// #{ v in (Z/p^s)^rr : q(v) = g mod p^s } for g in [0, p^s).
  Int h(long s, long long g) const {
    if (s <= 0) return Int(1);
    if (rr == 0) return Int(g == 0 ? 1 : 0);
    Int total = 0;
    long long pe2 = 1;
    for (long ep = 0; 2 * ep < s; ++ep) {
      if (g % pe2 != 0) break;
      long long gp = g / pe2;
      long smod = s - 2 * ep;
      long long cb = c1[(size_t)(gp % p)];
      if (cb != 0)
        total += pow_int(p, ep * rr + (smod - 1) * (rr - 1)) * (long)cb;
      pe2 *= (long long)p * p;
    }
    if (g == 0) total += pow_int(p, (s / 2) * rr);
    return total;
  }
};

// ---------------------------------------------------------------------------
// Enumerated value histograms (small moduli only)
// ---------------------------------------------------------------------------

/// Histogram of u x^2 mod p^s over x in [0, p^s).
std::vector<Int> square_hist(long p, long s, long long unit) {
  long long Ps = pow_ll(p, s);
  std::vector<Int> h((size_t)Ps);
  long long u = ((unit % Ps) + Ps) % Ps;
  for (long long x = 0; x < Ps; ++x)
    h[(size_t)mulmod(u, mulmod(x, x, Ps), Ps)] += 1;
  return h;
}

/// Histogram of x y mod p^s over (x, y) in [0, p^s)^2 (the value spectrum of
/// a hyperbolic plane normalized to q(x e + y f) = x y).
std::vector<Int> plane_hist(long p, long s) {
  long long Ps = pow_ll(p, s);
  std::vector<Int> h((size_t)Ps);
  for (long long x = 0; x < Ps; ++x)
    for (long long y = 0; y < Ps; ++y) h[(size_t)mulmod(x, y, Ps)] += 1;
  return h;
}

std::vector<Int> conv_hist(const std::vector<Int>& a, const std::vector<Int>& b,
                           long long Ps) {
  std::vector<Int> out((size_t)Ps);
  for (long long x = 0; x < Ps; ++x) {
    if (a[(size_t)x] == 0) continue;
    for (long long y = 0; y < Ps; ++y) {
      if (b[(size_t)y] == 0) continue;
      out[(size_t)addmod(x, y, Ps)] += a[(size_t)x] * b[(size_t)y];
    }
  }
  return out;
}

/// Diagonal units of the canonical unimodular form of given rank and
/// discriminant class: (1, ..., 1, u*) with u* the least non-residue when
/// chi(det) = -1.  Any unimodular form of the same rank and chi(det) is
/// isometric to it over Z_p (p odd), so all residue counts agree.
std::vector<long long> canonical_units(long p, long rank, int chi_det) {
  std::vector<long long> u((size_t)rank, 1);
  if (chi_det < 0) u.back() = least_nonresidue(p);
  return u;
}

/// Vector counts by norm for the form plane (+) diag(rest_units), together
/// with primitive-only counts:
///   hist[s][a] = #{ v in (Z/p^s)^r : q(v) = a },
///   prim[s][a] = the same over primitive v only (s >= 1).
/// full_rank is the total rank r (the plane contributes 2 when with_plane).
struct OrbitData {
  std::vector<std::vector<Int>> hist;
  std::vector<std::vector<Int>> prim;
};

OrbitData make_orbit_data(long p, const std::vector<long long>& rest_units,
                          bool with_plane, long Mt, long full_rank) {
  OrbitData od;
  od.hist.resize((size_t)Mt + 1);
  od.prim.resize((size_t)Mt + 1);
  for (long s = 0; s <= Mt; ++s) {
    long long Ps = pow_ll(p, s);
    std::vector<Int> h;
    if (with_plane) {
      h = plane_hist(p, s);
    } else {
      h.assign((size_t)Ps, Int(0));
      h[0] = 1;
    }
    for (long long u : rest_units) h = conv_hist(h, square_hist(p, s, u), Ps);
    od.hist[(size_t)s] = std::move(h);
  }
  for (long s = 1; s <= Mt; ++s) {
    long long Ps = pow_ll(p, s);
    std::vector<Int> pr = od.hist[(size_t)s];
    if (s == 1) {
      pr[0] -= 1;  // v = 0 is the only imprimitive vector mod p
    } else {
      // v = p w imprimitive: w mod p^{s-1} determines v mod p^s, and
      // q(v) = p^2 q(w) with p^{full_rank} lifts of each class mod p^{s-2}.
      Int lift = pow_int(p, full_rank);
      long long q2 = (long long)p * p;
      for (long long a = 0; a < Ps; ++a)
        if (a % q2 == 0)
          pr[(size_t)a] -= lift * od.hist[(size_t)(s - 2)][(size_t)(a / q2)];
    }
    od.prim[(size_t)s] = std::move(pr);
  }
  return od;
}

// ---------------------------------------------------------------------------
// Hyperbolic plane splitting mod p^Q
// ---------------------------------------------------------------------------

/// For a unimodular diagonal form diag(units) of rank >= 3, computes mod p^Q
/// a splitting (hyperbolic plane) + diag(rest_units), with the plane
/// normalized so that q(x e + y f) = x y.  Only the complement units are
/// needed by the callers.
struct PlaneSplit {
  std::vector<long long> rest_units;
};

PlaneSplit split_plane(long p, const std::vector<long long>& units, long Q) {
  const long r = (long)units.size();
  if (r < 3) throw std::logic_error("split_plane: rank < 3");
  const long long PQ = pow_ll(p, Q);
  std::vector<long long> u((size_t)r);
  for (long i = 0; i < r; ++i)
    u[(size_t)i] = ((units[(size_t)i] % PQ) + PQ) % PQ;

  auto qform = [&](const std::vector<long long>& v) {
    long long s = 0;
    for (long i = 0; i < r; ++i)
      s = addmod(s, mulmod(u[(size_t)i], mulmod(v[(size_t)i], v[(size_t)i], PQ), PQ), PQ);
    return s;
  };
  // Bilinear form (a, b) = 2 t(a, b) = sum 2 u_i a_i b_i.
  auto bil = [&](const std::vector<long long>& a, const std::vector<long long>& b) {
    long long s = 0;
    for (long i = 0; i < r; ++i)
      s = addmod(s, mulmod(u[(size_t)i], mulmod(a[(size_t)i], b[(size_t)i], PQ), PQ), PQ);
    return addmod(s, s, PQ);
  };

  // Isotropic vector mod p among the first three coordinates (exists for any
  // nondegenerate ternary form over F_p).
  std::vector<long long> v((size_t)r, 0);
  bool found = false;
  for (long a = 0; a < p && !found; ++a)
    for (long b = 0; b < p && !found; ++b)
      for (long c = 0; c < p && !found; ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        long long val =
            (u[0] % p) * a * a + (u[1] % p) * b * b + (u[2] % p) * c * c;
        if (val % p == 0) {
          v.assign((size_t)r, 0);
          v[0] = a;
          v[1] = b;
          v[2] = c;
          found = true;
        }
      }
  if (!found) throw std::logic_error("split_plane: no isotropic vector mod p");

  // Partner with unit pairing: the standard vector at a unit coordinate of v.
  long wi = -1;
  for (long i = 0; i < 3; ++i)
    if (v[(size_t)i] % p != 0) wi = i;
  std::vector<long long> w((size_t)r, 0);
  w[(size_t)wi] = 1;

  // Hensel refinement: each step at least doubles the valuation of q(v)
  // because bil(v, w) stays a unit.
  for (long guard = 0; guard < 2 * Q + 4; ++guard) {
    long long qv = qform(v);
    if (qv == 0) break;
    long long bw = bil(v, w);
    long long dcorr = mulmod(submod(0, qv, PQ), inv_mod_ppow(bw, p, Q), PQ);
    for (long i = 0; i < r; ++i)
      v[(size_t)i] = addmod(v[(size_t)i], mulmod(dcorr, w[(size_t)i], PQ), PQ);
  }
  if (qform(v) != 0) throw std::logic_error("split_plane: lift failed");

  // Normalize: e = v, then f with bil(e, f) = 1, q(f) = 0.
  std::vector<long long> e = v;
  long long binv = inv_mod_ppow(bil(e, w), p, Q);
  std::vector<long long> f((size_t)r);
  for (long i = 0; i < r; ++i) f[(size_t)i] = mulmod(w[(size_t)i], binv, PQ);
  long long qf = qform(f);
  for (long i = 0; i < r; ++i)
    f[(size_t)i] = submod(f[(size_t)i], mulmod(qf, e[(size_t)i], PQ), PQ);

  // Orthogonal complement of (e, f): project the standard basis and keep an
  // independent-mod-p subset of size r - 2.
  std::vector<std::vector<long long>> gs;
  std::vector<std::vector<long long>> rows;
  for (long i = 0; i < r && (long)gs.size() < r - 2; ++i) {
    std::vector<long long> g((size_t)r, 0);
    g[(size_t)i] = 1;
    long long be = bil(e, g);
    long long bfg = bil(f, g);
    for (long k = 0; k < r; ++k) {
      g[(size_t)k] = submod(g[(size_t)k], mulmod(bfg, e[(size_t)k], PQ), PQ);
      g[(size_t)k] = submod(g[(size_t)k], mulmod(be, f[(size_t)k], PQ), PQ);
    }
    std::vector<long long> red((size_t)r);
    for (long k = 0; k < r; ++k) red[(size_t)k] = g[(size_t)k] % p;
    for (const auto& row : rows) {
      long piv = -1;
      for (long k = 0; k < r; ++k)
        if (row[(size_t)k] % p != 0) {
          piv = k;
          break;
        }
      long long cc = red[(size_t)piv] % p;
      if (cc != 0) {
        long long ci = inv_mod_ppow(row[(size_t)piv] % p, p, 1);
        long long f0 = (cc * ci) % p;
        for (long k = 0; k < r; ++k)
          red[(size_t)k] = ((red[(size_t)k] - f0 * row[(size_t)k]) % p + p) % p;
      }
    }
    bool zero = true;
    for (long k = 0; k < r; ++k)
      if (red[(size_t)k] % p != 0) zero = false;
    if (zero) continue;
    rows.push_back(red);
    gs.push_back(g);
  }
  if ((long)gs.size() != r - 2)
    throw std::logic_error("split_plane: complement has wrong rank");

  // Half-Gram of the complement and symmetric diagonalization mod p^Q.
  const long rc = r - 2;
  long long inv2 = inv_mod_ppow(2, p, Q);
  std::vector<std::vector<long long>> R((size_t)rc,
                                        std::vector<long long>((size_t)rc));
  for (long a = 0; a < rc; ++a)
    for (long b = 0; b < rc; ++b)
      R[(size_t)a][(size_t)b] = mulmod(bil(gs[(size_t)a], gs[(size_t)b]), inv2, PQ);

  PlaneSplit out;
  std::vector<char> alive((size_t)rc, 1);
  for (long step = 0; step < rc; ++step) {
    long piv = -1;
    for (long i = 0; i < rc; ++i)
      if (alive[(size_t)i] && R[(size_t)i][(size_t)i] % p != 0) {
        piv = i;
        break;
      }
    if (piv < 0) {
      // Mix rows with a unit off-diagonal pairing; p odd makes the mixed
      // diagonal entry R_aa + 2 R_ab + R_bb a unit.
      long aa = -1, bb = -1;
      for (long i = 0; i < rc && aa < 0; ++i)
        for (long j = 0; j < rc && aa < 0; ++j)
          if (i != j && alive[(size_t)i] && alive[(size_t)j] &&
              R[(size_t)i][(size_t)j] % p != 0) {
            aa = i;
            bb = j;
          }
      if (aa < 0) throw std::logic_error("split_plane: degenerate complement");
      for (long k = 0; k < rc; ++k)
        R[(size_t)aa][(size_t)k] =
            addmod(R[(size_t)aa][(size_t)k], R[(size_t)bb][(size_t)k], PQ);
      for (long k = 0; k < rc; ++k)
        R[(size_t)k][(size_t)aa] =
            addmod(R[(size_t)k][(size_t)aa], R[(size_t)k][(size_t)bb], PQ);
      piv = aa;
    }
    long long dval = R[(size_t)piv][(size_t)piv];
    out.rest_units.push_back(dval);
    long long dinv = inv_mod_ppow(dval, p, Q);
    std::vector<long long> coef((size_t)rc, 0);
    for (long j = 0; j < rc; ++j)
      if (alive[(size_t)j] && j != piv)
        coef[(size_t)j] = mulmod(R[(size_t)j][(size_t)piv], dinv, PQ);
    std::vector<std::vector<long long>> R2 = R;
    for (long j = 0; j < rc; ++j) {
      if (!alive[(size_t)j] || j == piv) continue;
      for (long k = 0; k < rc; ++k) {
        if (!alive[(size_t)k] || k == piv) continue;
        long long t = R[(size_t)j][(size_t)k];
        t = submod(t, mulmod(coef[(size_t)j], R[(size_t)piv][(size_t)k], PQ), PQ);
        t = submod(t, mulmod(coef[(size_t)k], R[(size_t)j][(size_t)piv], PQ), PQ);
        t = addmod(t, mulmod(mulmod(coef[(size_t)j], coef[(size_t)k], PQ), dval, PQ), PQ);
        R2[(size_t)j][(size_t)k] = t;
      }
    }
    R = std::move(R2);
    alive[(size_t)piv] = 0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rank-2 orbit buckets
// ---------------------------------------------------------------------------

/// One orbit of the orthogonal group of U = diag(u0, u1) acting on
/// (Z/p^Mt)^2: vectors sharing (valuation, norm of the primitive part) form
/// a single orbit, so q and t(v, .) statistics can be read off one
/// representative.
struct OrbitRep2 {
  long long vx, vy;
  long long b11;  // q(rep) mod p^Mt, constant on the orbit
  long long count;
};

std::vector<OrbitRep2> bucket_orbits_rank2(long p, long Mt, long long u0,
                                           long long u1) {
  const long long P = pow_ll(p, Mt);
  // Dense index: stratum e in [0, Mt] and key in [0, p^{Mt-e}).
  std::vector<long> offs((size_t)Mt + 2, 0);
  for (long e = 0; e <= Mt; ++e)
    offs[(size_t)e + 1] = offs[(size_t)e] + (long)pow_ll(p, Mt - e);
  std::vector<OrbitRep2> slots((size_t)offs[(size_t)Mt + 1],
                               OrbitRep2{-1, -1, 0, 0});
  for (long long x = 0; x < P; ++x)
    for (long long y = 0; y < P; ++y) {
      long e = std::min(val_mod(x, p, Mt), val_mod(y, p, Mt));
      long long key = 0;
      if (e >= Mt) {
        e = Mt;
      } else {
        long long pe = pow_ll(p, e);
        long long Ps = pow_ll(p, Mt - e);
        long long xs = (x / pe) % Ps, ys = (y / pe) % Ps;
        key = addmod(mulmod(u0 % Ps, mulmod(xs, xs, Ps), Ps),
                     mulmod(u1 % Ps, mulmod(ys, ys, Ps), Ps), Ps);
      }
      OrbitRep2& slot = slots[(size_t)(offs[(size_t)e] + key)];
      if (slot.vx < 0) {
        long long q = addmod(mulmod(u0, mulmod(x, x, P), P),
                             mulmod(u1, mulmod(y, y, P), P), P);
        slot = OrbitRep2{x, y, q, 1};
      } else {
        ++slot.count;
      }
    }
  std::vector<OrbitRep2> out;
  for (const auto& s : slots)
    if (s.vx >= 0) out.push_back(s);
  return out;
}

// ---------------------------------------------------------------------------
// Pair tables
// ---------------------------------------------------------------------------

/// Joint residue distribution over pairs of vectors of a unimodular form U:
///   bins[(k11 P + k12) P + k22] = #{ (v, w) in ((Z/p^Mt)^r)^2 :
///       q(v) = k11, t(v, w) = k12, q(w) = k22  (mod p^Mt) }.
/// Tables depend only on (p, rank, chi(det), Mt) and are cached for the
/// process lifetime.
struct PairTable {
  long p = 0;
  long Mt = 0;
  long r0 = 0;
  long long P = 1;
  bool is64 = true;
  std::vector<long long> bins64;
  std::vector<Int> binsZ;
  std::map<std::array<long, 3>, std::vector<Int>> agg;

  Int at(long long k11, long long k12, long long k22) const {
    size_t idx = (size_t)((k11 * P + k12) * P + k22);
    return is64 ? Int((long)bins64[idx]) : binsZ[idx];
  }

  /// Bins aggregated to the digit pattern (a, b, c) <= Mt:
  /// out[(k11 mod p^a) p^{b+c} + (k12 mod p^b) p^c + (k22 mod p^c)].
  const std::vector<Int>& agg_pattern(long a, long b, long c) {
    auto it = agg.find({a, b, c});
    if (it != agg.end()) return it->second;
    long long Pa = pow_ll(p, a), Pb = pow_ll(p, b), Pc = pow_ll(p, c);
    std::vector<Int> out((size_t)(Pa * Pb * Pc));
    for (long long k1 = 0; k1 < P; ++k1)
      for (long long k2 = 0; k2 < P; ++k2) {
        size_t base = (size_t)((k1 * P + k2) * P);
        size_t obase = (size_t)(((k1 % Pa) * Pb + (k2 % Pb)) * Pc);
        for (long long k3 = 0; k3 < P; ++k3) {
          if (is64) {
            long long v = bins64[base + (size_t)k3];
            if (v) out[obase + (size_t)(k3 % Pc)] += (long)v;
          } else {
            const Int& v = binsZ[base + (size_t)k3];
            if (v != 0) out[obase + (size_t)(k3 % Pc)] += v;
          }
        }
      }
    return agg.emplace(std::array<long, 3>{a, b, c}, std::move(out))
        .first->second;
  }
};

bool pair_table_fits(long p, long r0, long Mt) {
  if (Mt == 0) return true;
  double P = std::pow((double)p, (double)Mt);
  double bins = P * P * P;
  if (r0 <= 2) return bins <= 2.2e7;
  return bins <= 1.6e7 && bins * P <= 4.4e9;
}

std::map<std::array<long, 4>, std::unique_ptr<PairTable>>& pair_table_cache() {
  static std::map<std::array<long, 4>, std::unique_ptr<PairTable>> cache;
  return cache;
}

bool pair_table_cached(long p, long r0, int chi_det, long Mt) {
  return pair_table_cache().count(
             {p, r0, (long)(chi_det > 0 ? 1 : 0), Mt}) > 0;
}

std::unique_ptr<PairTable> build_pair_table(long p, long r0, int chi_det,
                                            long Mt) {
  auto T = std::make_unique<PairTable>();
  T->p = p;
  T->Mt = Mt;
  T->r0 = r0;
  T->P = pow_ll(p, Mt);
  const long long P = T->P;
  if (Mt == 0) {
    T->is64 = true;
    T->bins64.assign(1, 1);
    return T;
  }
  if (!pair_table_fits(p, r0, Mt)) throw BudgetExceeded("pair table too large");
  T->is64 = (double)(2 * r0 * Mt) * std::log2((double)p) < 61.5;
  const size_t nbins = (size_t)(P * P * P);
  std::vector<long long> units = canonical_units(p, r0, chi_det);

  if (r0 == 1) {
    T->bins64.assign(nbins, 0);
    long long u = units[0];
    for (long long v = 0; v < P; ++v) {
      long long k11 = mulmod(u, mulmod(v, v, P), P);
      for (long long w = 0; w < P; ++w) {
        long long k12 = mulmod(u, mulmod(v, w, P), P);
        long long k22 = mulmod(u, mulmod(w, w, P), P);
        ++T->bins64[(size_t)((k11 * P + k12) * P + k22)];
      }
    }
    return T;
  }

  if (r0 == 2) {
    T->bins64.assign(nbins, 0);
    long long u0 = units[0], u1 = units[1];
    auto orbits = bucket_orbits_rank2(p, Mt, u0, u1);
    for (const auto& ob : orbits) {
      for (long long wx = 0; wx < P; ++wx) {
        long long c0 = mulmod(u0, mulmod(ob.vx, wx, P), P);
        long long qx = mulmod(u0, mulmod(wx, wx, P), P);
        size_t rowbase = (size_t)(ob.b11 * P);
        for (long long wy = 0; wy < P; ++wy) {
          long long k12 = addmod(c0, mulmod(u1, mulmod(ob.vy, wy, P), P), P);
          long long k22 = addmod(qx, mulmod(u1, mulmod(wy, wy, P), P), P);
          T->bins64[(rowbase + (size_t)k12) * (size_t)P + (size_t)k22] +=
              ob.count;
        }
      }
    }
    return T;
  }

  // r0 >= 3: decompose v by orbit (valuation e, norm a of the primitive
  // part) and write w = x1 e + y1 f + w_rest in plane coordinates.  The
  // orbit with invariants (e, a) contains the representative p^e (e + a f),
  // giving
  //   q(v)   = p^{2e} a,
  //   t(v,w) = p^e (y1 + a x1) / 2,
  //   q(w)   = x1 y1 + q_rest(w_rest).
  // Accumulate the (q(v), t(v,w), x1 y1) distribution weighted by orbit
  // sizes, then convolve the last slot with the rest-form value histogram.
  PlaneSplit sp = split_plane(p, units, Mt + 1);
  std::vector<long long> rest((size_t)(r0 - 2));
  for (size_t i = 0; i < rest.size(); ++i) rest[i] = sp.rest_units[i] % P;
  OrbitData od = make_orbit_data(p, rest, true, Mt, r0);
  std::vector<Int> qrest((size_t)P, Int(0));
  {
    std::vector<Int> h((size_t)P, Int(0));
    h[0] = 1;
    for (long long uu : rest) h = conv_hist(h, square_hist(p, Mt, uu), P);
    qrest = std::move(h);
  }
  long long inv2 = inv_mod_ppow(2, p, Mt);

  auto fill_pre = [&](auto&& add) {
    for (long e = 0; e <= Mt; ++e) {
      long s = Mt - e;
      long long pe = pow_ll(p, e) % P;
      long long p2e = (2 * e >= Mt) ? 0 : pow_ll(p, 2 * e);
      long long Ps = pow_ll(p, s);
      for (long long a = 0;; ++a) {
        if (s == 0 ? a > 0 : a >= Ps) break;
        Int N = (s == 0) ? Int(1) : od.prim[(size_t)s][(size_t)a];
        if (N == 0) continue;
        long long b11 = mulmod(p2e, a % P, P);
        long long am = a % P;
        for (long long x1 = 0; x1 < P; ++x1) {
          long long ax = mulmod(am, x1, P);
          for (long long y1 = 0; y1 < P; ++y1) {
            long long b12 = mulmod(mulmod(pe, addmod(y1, ax, P), P), inv2, P);
            long long xy = mulmod(x1, y1, P);
            add((size_t)((b11 * P + b12) * P + xy), N);
          }
        }
      }
    }
  };

  if (T->is64) {
    std::vector<long long> pre(nbins, 0);
    fill_pre([&](size_t idx, const Int& N) { pre[idx] += N.get_si(); });
    std::vector<long long> q64((size_t)P);
    for (long long i = 0; i < P; ++i) q64[(size_t)i] = qrest[(size_t)i].get_si();
    T->bins64.assign(nbins, 0);
    for (long long k1 = 0; k1 < P; ++k1)
      for (long long k2 = 0; k2 < P; ++k2) {
        size_t base = (size_t)((k1 * P + k2) * P);
        for (long long xy = 0; xy < P; ++xy) {
          long long cnt = pre[base + (size_t)xy];
          if (!cnt) continue;
          for (long long t = 0; t < P; ++t) {
            long long q = q64[(size_t)t];
            if (q) T->bins64[base + (size_t)addmod(xy, t, P)] += cnt * q;
          }
        }
      }
  } else {
    std::vector<Int> pre(nbins);
    fill_pre([&](size_t idx, const Int& N) { pre[idx] += N; });
    T->binsZ.assign(nbins, Int(0));
    for (long long k1 = 0; k1 < P; ++k1)
      for (long long k2 = 0; k2 < P; ++k2) {
        size_t base = (size_t)((k1 * P + k2) * P);
        for (long long xy = 0; xy < P; ++xy) {
          const Int& cnt = pre[base + (size_t)xy];
          if (cnt == 0) continue;
          for (long long t = 0; t < P; ++t) {
            const Int& q = qrest[(size_t)t];
            if (q != 0)
              mpz_addmul(T->binsZ[base + (size_t)addmod(xy, t, P)].get_mpz_t(),
                         cnt.get_mpz_t(), q.get_mpz_t());
          }
        }
      }
  }
  return T;
}

PairTable& get_pair_table(long p, long r0, int chi_det, long Mt) {
  auto& cache = pair_table_cache();
  std::array<long, 4> key{p, r0, (long)(chi_det > 0 ? 1 : 0), Mt};
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, build_pair_table(p, r0, chi_det, Mt)).first;
  return *it->second;
}

// ---------------------------------------------------------------------------
// Single-key probe
// ---------------------------------------------------------------------------

/// Answers one pair-table query without building the table:
///   #{ (v, w) in ((Z/p^Mt)^{r0})^2 : q(v) = k11 mod p^a,
///      t(v, w) = k12 mod p^b, q(w) = k22 mod p^c }
/// for the canonical unimodular form of rank r0 >= 2 and given chi(det).
///
/// v is decomposed by orbit (valuation e, primitive norm av); in plane
/// coordinates v ~ p^e (e + av f) and w = x e + y f + w_rest, so the cross
/// condition p^e (y + av x) = 2 k12 mod p^b pins y to an arithmetic
/// progression and the norm condition x y + q_rest = k22 mod p^c is summed
/// in closed form over each progression using UniHist.  Cost is about
/// (matching orbit classes) x p^Mt.
Int pair_probe(long p, long r0, int chi_det, long Mt, long a, long b, long c,
               long long k11, long long k12, long long k22, double max_ops,
               double* ops_acc) {
  if (r0 < 2) throw BudgetExceeded("probe: rank too small");
  if (Mt == 0) return Int(1);
  const long long P = pow_ll(p, Mt);
  const long long Pa = pow_ll(p, a), Pb = pow_ll(p, b), Pc = pow_ll(p, c);
  const int chim1 = legendre(Int(-1), p);
  UniHist hfull(p, r0, chi_det);
  UniHist hrest(p, r0 - 2, chim1 * chi_det);
  // A binary form with chi(-det) = -1 has no isotropic plane; its primitive
  // vectors all have unit norm av and split the lattice as <av> + <beta>
  // with chi(beta) = chi_det chi(av).  Ranks >= 3 always contain a plane.
  const bool aniso2 = (r0 == 2) && (chim1 * chi_det == -1);
  UniHist hline_plus(p, 1, +1), hline_minus(p, 1, -1);
  const long rr = r0 - 2;
  const long long R2 = mulmod(2 % Pb, k12 % Pb, Pb);  // 2 k12 mod p^b

  Int acc = 0;
  for (long e = 0; e <= Mt; ++e) {
    const long s = Mt - e;
    if (s == 0) {
      // v = 0: no cross condition beyond R2 = 0, w is a free full-form
      // vector with a norm condition at c digits.
      if (k11 % Pa != 0) continue;
      if (R2 != 0) continue;
      acc += pow_int(p, r0 * (Mt - c)) * hfull.h(c, k22 % Pc);
      continue;
    }
    // Norm condition on v: p^{2e} av = k11 mod p^a.
    long long av_start = 0, av_step = 1;
    if (a > 2 * e) {
      long long pe2 = pow_ll(p, 2 * e);
      if (k11 % pe2 != 0) continue;
      av_step = pow_ll(p, a - 2 * e);
      av_start = (k11 / pe2) % av_step;
    } else {
      if (k11 % Pa != 0) continue;
    }
    const long long Ps = pow_ll(p, s);
    const bool efree = (e >= b);
    // B(v, w) = p^e B(v', w) with B(v', .) surjective, so the cross residue
    // must vanish to e digits; at e >= b that means R2 = 0 exactly.
    if (efree ? (R2 != 0) : (val_mod(R2, p, b) < e)) continue;

    double n_av = (double)Ps / (double)av_step;
    *ops_acc += n_av * (efree ? 1.0 : (double)P);
    if (*ops_acc > max_ops) throw BudgetExceeded("probe: too many operations");

    const long long Pbe = efree ? 1 : pow_ll(p, b - e);
    const long long Rq = efree ? 0 : (R2 / pow_ll(p, e)) % Pbe;

    for (long long av = av_start; av < Ps; av += av_step) {
      long long cb = hfull.c1[(size_t)(av % p)];
      if (cb == 0) continue;
      Int N = pow_int(p, (s - 1) * (r0 - 1)) * (long)cb;
      if (efree) {
        // y free: (x, y, rest) range over all w with the norm condition.
        acc += N * pow_int(p, r0 * (Mt - c)) * hfull.h(c, k22 % Pc);
        continue;
      }
      if (aniso2) {
        // Diagonal model: w = x v' + y u, B(v, w) = 2 av x p^e and
        // q(w) = av x^2 + beta y^2.  The cross condition pins x modulo
        // p^{b-e}; each x leaves a rank-1 value count over y.  Any integer
        // representative of av mod p^s is a legitimate exact norm of a lift
        // of v', so the quadratic term av x^2 is evaluated literally.
        const UniHist& hline =
            (chi_det * legendre(Int((long)(av % p)), p) > 0) ? hline_plus
                                                             : hline_minus;
        long long inv2a =
            inv_mod_ppow(mulmod(2 % Pbe, av % Pbe, Pbe), p, b - e);
        long long x0 = mulmod(Rq, inv2a, Pbe);
        long mx = std::max(c, b - e);
        long long Pmx = pow_ll(p, mx);
        long long nx = Pmx / Pbe;
        Int sx = 0;
        for (long long j = 0; j < nx; ++j) {
          long long x = (x0 + Pbe * j) % Pmx;
          long long g0 = submod(
              k22 % Pc, mulmod(av % Pc, mulmod(x % Pc, x % Pc, Pc), Pc), Pc);
          Int hv = hline.h(c, g0);
          if (hv != 0) sx += hv;
        }
        if (sx != 0) acc += N * pow_int(p, (Mt - mx) + (Mt - c)) * sx;
        continue;
      }
      // y = (Rq - av x) mod p^{b-e} plus p^{Mt-b+e} lifts; over each lift
      // progression x y walks an arithmetic progression mod p^c whose step
      // has valuation vs, so the rest-count sums to a single UniHist value
      // at vs digits.
      Int sx = 0;
      long long sx64 = 0;
      bool use64 = (rr == 0) && (double)(2 * Mt + 2) * std::log2((double)p) +
                                    std::log2((double)P) <
                                61.0;
      for (long long x = 0; x < P; ++x) {
        long long y0 = submod(Rq, mulmod(av % Pbe, x % Pbe, Pbe), Pbe);
        long vx = val_mod(x, p, Mt);
        long vs = std::min(c, vx + (b - e));
        long long Pvs = pow_ll(p, vs);
        long long g0 = submod(k22 % Pc, mulmod(x % Pc, y0 % Pc, Pc), Pc);
        long E = (Mt - b + e) - (c - vs);
        if (rr == 0) {
          if (g0 % Pvs == 0) {
            if (use64)
              sx64 += pow_ll(p, E);
            else
              sx += pow_int(p, E);
          }
        } else {
          Int hv = hrest.h(vs, g0 % Pvs);
          if (hv != 0) sx += pow_int(p, E + rr * (Mt - vs)) * hv;
        }
      }
      if (use64 && sx64) sx += (long)sx64;
      acc += N * sx;
    }
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Problem validation and construction
// ---------------------------------------------------------------------------

std::pair<long, long> validate_problem(const GenCountProblem& prob) {
  const long m = (long)prob.source_diag.size();
  const long n = prob.target.rows;
  if (m < 1 || n < 1) throw std::domain_error("count: empty problem");
  if (prob.p < 3 || prob.p % 2 == 0)
    throw std::domain_error("count: p must be an odd prime");
  if (prob.target.cols != n || (long)prob.depth.size() != n ||
      (long)prob.cmod.size() != n)
    throw std::domain_error("count: inconsistent problem shape");
  for (long i = 0; i < n; ++i)
    if ((long)prob.depth[(size_t)i].size() != n)
      throw std::domain_error("count: inconsistent depth shape");
  for (long j = 0; j < n; ++j)
    if (prob.cmod[(size_t)j] < 0)
      throw std::domain_error("count: negative column modulus");
  if (!prob.shifts.empty()) {
    if ((long)prob.shifts.size() != n)
      throw std::domain_error("count: need one shift per column");
    for (long j = 0; j < n; ++j)
      if ((long)prob.shifts[(size_t)j].size() != m)
        throw std::domain_error("count: shift vector has wrong length");
  }
  for (long k = 0; k < m; ++k)
    if (prob.source_diag[(size_t)k] == 0)
      throw std::domain_error("count: zero diagonal entry in source form");
  return {m, n};
}

Rat shift_of(const GenCountProblem& prob, long j, long k) {
  if (prob.shifts.empty()) return Rat(0);
  return prob.shifts[(size_t)j][(size_t)k];
}

GenCountProblem problem_from_lattices(const GramLattice& M,
                                      const GramLattice& L, long d) {
  if (M.p != L.p)
    throw std::domain_error("count: source and target have different primes");
  GenCountProblem prob;
  prob.p = M.p;
  JordanDecomposition jd = jordan_decompose(M);
  for (const auto& blk : jd.blocks)
    for (long i = 0; i < blk.unimodular_gram.rows; ++i)
      prob.source_diag.push_back(blk.unimodular_gram.at(i, i) *
                                 pow_rat(M.p, blk.scale));
  const long n = L.rank();
  prob.target = L.gram;
  prob.depth.assign((size_t)n, std::vector<long>((size_t)n, d));
  prob.cmod.assign((size_t)n, d);
  return prob;
}

// ---------------------------------------------------------------------------
// Literal counter in the original coordinates
// ---------------------------------------------------------------------------

Int count_reps_naive_impl(const GramLattice& M, const GramLattice& L, long d,
                          bool prim, const CountBudget& budget) {
  if (M.p != L.p)
    throw std::domain_error("count: source and target have different primes");
  const long p = M.p;
  const long m = M.rank(), n = L.rank();
  if (d < 0) throw std::domain_error("count: negative depth");
  if (d == 0) return prim ? Int(0) : Int(1);
  if (pow_int(p, d * m * n) > Int(budget.max_enumeration))
    throw BudgetExceeded("count_reps_naive: p^(dmn) exceeds budget");

  long CL = 0;
  for (long i = 0; i < m; ++i)
    for (long j = 0; j < m; ++j)
      CL = std::max(CL, denom_exp(p, M.gram.at(i, j)));
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      CL = std::max(CL, denom_exp(p, L.gram.at(i, j)));
  const long W = d + CL;
  if (!pow_fits(p, W))
    throw BudgetExceeded("count_reps_naive: modulus overflow");
  const long long PW = pow_ll(p, W);
  const long long Pd = pow_ll(p, d);

  std::vector<std::vector<long long>> G((size_t)m,
                                        std::vector<long long>((size_t)m));
  for (long i = 0; i < m; ++i)
    for (long j = 0; j < m; ++j)
      G[(size_t)i][(size_t)j] =
          rat_mod_ppow(M.gram.at(i, j) * pow_rat(p, CL), p, W);
  std::vector<long long> Ttil((size_t)(n * n));
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      Ttil[(size_t)(i * n + j)] =
          rat_mod_ppow(L.gram.at(i, j) * pow_rat(p, CL), p, W);

  std::vector<std::vector<long long>> cols((size_t)n,
                                           std::vector<long long>((size_t)m, 0));
  std::vector<long long> Gv((size_t)m, 0);
  Int total = 0;

  auto leaf_primitive = [&]() {
    // The m x n column matrix must have rank n over F_p.
    std::vector<std::vector<long>> A((size_t)m, std::vector<long>((size_t)n));
    for (long i = 0; i < m; ++i)
      for (long j = 0; j < n; ++j)
        A[(size_t)i][(size_t)j] = (long)(cols[(size_t)j][(size_t)i] % p);
    long rank = 0;
    for (long col = 0; col < n; ++col) {
      long piv = -1;
      for (long row = rank; row < m; ++row)
        if (A[(size_t)row][(size_t)col] % p != 0) {
          piv = row;
          break;
        }
      if (piv < 0) return false;
      std::swap(A[(size_t)piv], A[(size_t)rank]);
      long inv = (long)inv_mod_ppow(A[(size_t)rank][(size_t)col] % p, p, 1);
      for (long row = 0; row < m; ++row) {
        if (row == rank) continue;
        long f = (A[(size_t)row][(size_t)col] * inv) % p;
        if (!f) continue;
        for (long cc = 0; cc < n; ++cc)
          A[(size_t)row][(size_t)cc] =
              ((A[(size_t)row][(size_t)cc] - f * A[(size_t)rank][(size_t)cc]) % p +
               p) %
              p;
      }
      ++rank;
    }
    return rank == n;
  };

  std::function<void(long)> rec = [&](long j) {
    if (j == n) {
      if (!prim || leaf_primitive()) total += 1;
      return;
    }
    std::vector<long long>& v = cols[(size_t)j];
    v.assign((size_t)m, 0);
    while (true) {
      for (long i = 0; i < m; ++i) {
        long long sum = 0;
        for (long k = 0; k < m; ++k)
          sum = addmod(sum, mulmod(G[(size_t)i][(size_t)k], v[(size_t)k], PW), PW);
        Gv[(size_t)i] = sum;
      }
      bool ok = true;
      for (long i = 0; i <= j && ok; ++i) {
        long long t = 0;
        for (long k = 0; k < m; ++k)
          t = addmod(t, mulmod(cols[(size_t)i][(size_t)k], Gv[(size_t)k], PW), PW);
        if (t != Ttil[(size_t)(i * n + j)]) ok = false;
      }
      if (ok) rec(j + 1);
      long idx = 0;
      while (idx < m) {
        if (++v[(size_t)idx] < Pd) break;
        v[(size_t)idx] = 0;
        ++idx;
      }
      if (idx == m) break;
    }
  };
  rec(0);
  return total;
}

}  // namespace

// ---------------------------------------------------------------------------
// Generalized literal counter (public, for cross-checks)
// ---------------------------------------------------------------------------

Int generalized_count_naive(const GenCountProblem& prob,
                            const CountBudget& budget) {
  auto [m, n] = validate_problem(prob);
  const long p = prob.p;

  long total_exp = 0;
  for (long j = 0; j < n; ++j) total_exp += m * prob.cmod[(size_t)j];
  if (pow_int(p, total_exp) > Int(budget.max_enumeration))
    throw BudgetExceeded("generalized_count_naive: enumeration exceeds budget");

  std::vector<long> D((size_t)m, 0);
  for (long k = 0; k < m; ++k)
    for (long j = 0; j < n; ++j)
      D[(size_t)k] = std::max(D[(size_t)k], denom_exp(p, shift_of(prob, j, k)));
  long CL = 0;
  for (long k = 0; k < m; ++k)
    CL = std::max(CL,
                  2 * D[(size_t)k] - val_p(p, prob.source_diag[(size_t)k]));
  long maxdep = 0;
  for (long i = 0; i < n; ++i)
    for (long j = i; j < n; ++j) {
      long dv = prob.depth[(size_t)i][(size_t)j];
      if (depth_vacuous(dv)) continue;
      CL = std::max(CL, denom_exp(p, prob.target.at(i, j)));
      maxdep = std::max(maxdep, dv);
    }
  CL = std::max(CL, 0L);
  const long W = std::max(1L, CL + std::max(0L, maxdep));
  if (!pow_fits(p, W))
    throw BudgetExceeded("generalized_count_naive: modulus overflow");
  const long long PW = pow_ll(p, W);

  std::vector<long long> ctil((size_t)m), stepv((size_t)m);
  for (long k = 0; k < m; ++k) {
    ctil[(size_t)k] = rat_mod_ppow(
        prob.source_diag[(size_t)k] * pow_rat(p, CL - 2 * D[(size_t)k]), p, W);
    stepv[(size_t)k] = pow_ll(p, D[(size_t)k]) % PW;
  }
  std::vector<std::vector<long long>> mu0((size_t)n,
                                          std::vector<long long>((size_t)m, 0));
  for (long j = 0; j < n; ++j)
    for (long k = 0; k < m; ++k)
      mu0[(size_t)j][(size_t)k] = rat_mod_ppow(
          shift_of(prob, j, k) * pow_rat(p, D[(size_t)k]), p, W);

  std::vector<std::vector<long long>> Pdelta((size_t)n,
                                             std::vector<long long>((size_t)n, 1));
  std::vector<std::vector<long long>> Ttil((size_t)n,
                                           std::vector<long long>((size_t)n, 0));
  for (long i = 0; i < n; ++i)
    for (long j = i; j < n; ++j) {
      long dv = prob.depth[(size_t)i][(size_t)j];
      if (depth_vacuous(dv)) continue;
      long delta = std::clamp(dv + CL, 0L, W);
      Pdelta[(size_t)i][(size_t)j] = pow_ll(p, delta);
      Ttil[(size_t)i][(size_t)j] =
          rat_mod_ppow(prob.target.at(i, j) * pow_rat(p, CL), p, W);
    }

  std::vector<std::vector<long long>> vals((size_t)n,
                                           std::vector<long long>((size_t)m, 0));
  std::vector<long long> cmrep((size_t)n);
  for (long j = 0; j < n; ++j) cmrep[(size_t)j] = pow_ll(p, prob.cmod[(size_t)j]);

  Int total = 0;
  std::vector<std::vector<long long>> x((size_t)n,
                                        std::vector<long long>((size_t)m, 0));
  std::function<void(long)> rec = [&](long j) {
    if (j == n) {
      total += 1;
      return;
    }
    std::vector<long long>& xj = x[(size_t)j];
    xj.assign((size_t)m, 0);
    while (true) {
      for (long k = 0; k < m; ++k)
        vals[(size_t)j][(size_t)k] =
            addmod(mu0[(size_t)j][(size_t)k],
                   mulmod(xj[(size_t)k] % PW, stepv[(size_t)k], PW), PW);
      bool ok = true;
      for (long i = 0; i <= j && ok; ++i) {
        long long pd = Pdelta[(size_t)i][(size_t)j];
        if (pd == 1) continue;
        long long t = 0;
        for (long k = 0; k < m; ++k)
          t = addmod(t,
                     mulmod(ctil[(size_t)k],
                            mulmod(vals[(size_t)i][(size_t)k],
                                   vals[(size_t)j][(size_t)k], PW),
                            PW),
                     PW);
        if (submod(t, Ttil[(size_t)i][(size_t)j], PW) % pd != 0) ok = false;
      }
      if (ok) rec(j + 1);
      long idx = 0;
      while (idx < m) {
        if (++xj[(size_t)idx] < cmrep[(size_t)j]) break;
        xj[(size_t)idx] = 0;
        ++idx;
      }
      if (idx == m) break;
    }
  };
  rec(0);
  return total;
}

namespace {

// ---------------------------------------------------------------------------
// Tier A: one column
// ---------------------------------------------------------------------------

Int tier_a(const GenCountProblem& prob, const CountBudget& budget) {
  const long p = prob.p;
  const long m = (long)prob.source_diag.size();
  const long c = prob.cmod[0];
  const long dep = prob.depth[0][0];
  const bool enf = !depth_vacuous(dep);

  std::vector<long> D((size_t)m, 0);
  for (long k = 0; k < m; ++k) D[(size_t)k] = denom_exp(p, shift_of(prob, 0, k));
  long CL = 0;
  for (long k = 0; k < m; ++k)
    CL = std::max(CL,
                  2 * D[(size_t)k] - val_p(p, prob.source_diag[(size_t)k]));
  if (enf) CL = std::max(CL, denom_exp(p, prob.target.at(0, 0)));
  CL = std::max(CL, 0L);
  const long delta = enf ? std::max(0L, dep + CL) : 0;
  if (delta == 0) return pow_int(p, m * c);

  // Work entirely mod p^delta: per-coordinate value histograms convolved
  // together, then a single bin lookup.
  if (!pow_fits(p, delta)) throw BudgetExceeded("tier A: modulus overflow");
  const long long PW = pow_ll(p, delta);
  if (PW > 30000000) throw BudgetExceeded("tier A: modulus too large");
  const double ops_budget = 60.0 * (double)budget.max_enumeration;
  if ((double)(m * c) * std::log2((double)p) > 61.0)
    throw BudgetExceeded("tier A: counts exceed int64");
  if (std::pow((double)p, (double)c) * (double)m > ops_budget)
    throw BudgetExceeded("tier A: histogram pass too large");
  if (m >= 2 && (double)(m - 1) * (double)PW * (double)PW > ops_budget)
    throw BudgetExceeded("tier A: convolution too large");
  const long long crep = pow_ll(p, c);

  std::vector<long long> cur;
  for (long k = 0; k < m; ++k) {
    long long base =
        rat_mod_ppow(shift_of(prob, 0, k) * pow_rat(p, D[(size_t)k]), p, delta);
    long long step = pow_ll(p, D[(size_t)k]) % PW;
    long long ct = rat_mod_ppow(
        prob.source_diag[(size_t)k] * pow_rat(p, CL - 2 * D[(size_t)k]), p,
        delta);
    std::vector<long long> h((size_t)PW, 0);
    for (long long xx = 0; xx < crep; ++xx) {
      long long v = addmod(base, mulmod(xx % PW, step, PW), PW);
      ++h[(size_t)mulmod(ct, mulmod(v, v, PW), PW)];
    }
    if (k == 0) {
      cur = std::move(h);
    } else {
      std::vector<long long> nxt((size_t)PW, 0);
      for (long long aa = 0; aa < PW; ++aa) {
        long long ca = cur[(size_t)aa];
        if (!ca) continue;
        for (long long bb = 0; bb < PW; ++bb) {
          long long cb = h[(size_t)bb];
          if (cb) nxt[(size_t)addmod(aa, bb, PW)] += ca * cb;
        }
      }
      cur = std::move(nxt);
    }
  }
  long long key = rat_mod_ppow(prob.target.at(0, 0) * pow_rat(p, CL), p, delta);
  return Int((long)cur[(size_t)key]);
}

// ---------------------------------------------------------------------------
// Tier B: two columns
// ---------------------------------------------------------------------------

/// Per-entry condition after clearing by p^CL: with R the cleared residual,
/// val(t - T) >= dep becomes R = 0 mod p^leafmod together with
/// (R / p^leafmod) mod p^digits as the key into the unimodular part.
struct EntryCond {
  bool enf = false;
  long leafmod = 0;
  long long Pleaf = 1;
  long digits = 0;
  long long Pdig = 1;
  long long Ttil = 0;
};

Int tier_b(const GenCountProblem& prob, const CountBudget& budget) {
  const long p = prob.p;
  const long m = (long)prob.source_diag.size();
  const long c0 = prob.cmod[0], c1 = prob.cmod[1];
  const double ops_budget = 60.0 * (double)budget.max_enumeration;

  std::vector<long> fval((size_t)m), dexp((size_t)m, 0);
  for (long k = 0; k < m; ++k) {
    fval[(size_t)k] = val_p(p, prob.source_diag[(size_t)k]);
    dexp[(size_t)k] = std::max(denom_exp(p, shift_of(prob, 0, k)),
                               denom_exp(p, shift_of(prob, 1, k)));
  }
  long esc_max = 0;
  for (long k = 0; k < m; ++k) esc_max = std::max(esc_max, -fval[(size_t)k]);

  struct BaseEntry {
    long i, j, dep;
    bool enf;
  };
  const std::array<BaseEntry, 3> ents = {{
      {0, 0, prob.depth[0][0], !depth_vacuous(prob.depth[0][0])},
      {0, 1, prob.depth[0][1], !depth_vacuous(prob.depth[0][1])},
      {1, 1, prob.depth[1][1], !depth_vacuous(prob.depth[1][1])},
  }};

  // Candidate scalings: multiplying the form and target by p^esc leaves the
  // count unchanged (columns untouched, depths shift by esc) and can turn
  // fractional diagonal entries into units absorbable by the unimodular-part
  // machinery.
  struct Cand {
    long esc = -1;
    double cost = 0;
    bool use_probe = false;
  };
  Cand best;
  for (long esc = 0; esc <= esc_max; ++esc) {
    long Mt = 0;
    for (const auto& e : ents)
      if (e.enf) Mt = std::max(Mt, std::max(0L, e.dep + esc));
    long r0 = 0, F = 0;
    Rat uprod = 1;
    double colA = 1, colB = 1;
    for (long k = 0; k < m; ++k) {
      if (fval[(size_t)k] + esc == 0 && dexp[(size_t)k] == 0) {
        ++r0;
        uprod *= prob.source_diag[(size_t)k] * pow_rat(p, esc);
      } else {
        ++F;
        colA *= std::pow((double)p, (double)c0);
        colB *= std::pow((double)p, (double)c1);
      }
    }
    // Exactness: every enforced positive depth must be covered by both
    // involved column moduli, otherwise residues beyond the enumeration
    // window would be constrained and the unimodular-part class adjustment
    // would be wrong.
    bool ok = true;
    if (r0 > 0)
      for (const auto& e : ents)
        if (e.enf && e.dep + esc > 0) {
          long dp = e.dep + esc;
          if (dp > prob.cmod[(size_t)e.i] || dp > prob.cmod[(size_t)e.j])
            ok = false;
        }
    if (!ok) continue;
    if (colA > 1.2e7 || colB > 1.2e7) continue;
    double leaf_pairs = colA * colB;
    if (leaf_pairs > 2.0 * (double)budget.max_enumeration) continue;
    double cost = leaf_pairs * (F + 2.0);
    bool use_probe = false;
    if (r0 > 0 && Mt > 0) {
      double P = std::pow((double)p, (double)Mt);
      double cost_dense = -1, cost_probe = -1;
      if (pair_table_fits(p, r0, Mt)) {
        int chi01 = chi(p, uprod);
        cost_dense = pair_table_cached(p, r0, chi01, Mt)
                         ? leaf_pairs
                         : 0.5 * (1.7 * P * P * P +
                                  (r0 >= 3 ? 0.6 * P * P * P * P : 0.0));
      }
      if (r0 >= 2) {
        double pc = leaf_pairs * 2.0 * P;
        if (pc <= ops_budget) cost_probe = pc;
      }
      if (cost_dense < 0 && cost_probe < 0) continue;
      if (cost_dense >= 0 && (cost_probe < 0 || cost_dense <= cost_probe)) {
        cost += cost_dense;
      } else {
        cost += cost_probe;
        use_probe = true;
      }
    }
    if (best.esc < 0 || cost < best.cost) best = {esc, cost, use_probe};
  }
  if (best.esc < 0) throw BudgetExceeded("tier B: no feasible decomposition");

  const long esc = best.esc;
  const bool use_probe = best.use_probe;
  std::vector<Rat> cs((size_t)m);
  for (long k = 0; k < m; ++k)
    cs[(size_t)k] = prob.source_diag[(size_t)k] * pow_rat(p, esc);
  Mat Ts(2, 2);
  for (long i = 0; i < 2; ++i)
    for (long j = 0; j < 2; ++j)
      Ts.at(i, j) = prob.target.at(i, j) * pow_rat(p, esc);

  long Mt = 0;
  for (const auto& e : ents)
    if (e.enf) Mt = std::max(Mt, std::max(0L, e.dep + esc));
  std::vector<long> Us, Fs;
  Rat uprod = 1;
  for (long k = 0; k < m; ++k) {
    if (fval[(size_t)k] + esc == 0 && dexp[(size_t)k] == 0) {
      Us.push_back(k);
      uprod *= cs[(size_t)k];
    } else {
      Fs.push_back(k);
    }
  }
  const long r0 = (long)Us.size();
  const int chiU = r0 > 0 ? chi(p, uprod) : 1;

  long CL = 0;
  for (long k : Fs)
    CL = std::max(CL, 2 * dexp[(size_t)k] - (fval[(size_t)k] + esc));
  for (const auto& e : ents)
    if (e.enf) CL = std::max(CL, denom_exp(p, Ts.at(e.i, e.j)));
  CL = std::max(CL, 0L);
  const long W = CL + Mt;
  if (!pow_fits(p, std::max(W, 1L)))
    throw BudgetExceeded("tier B: modulus overflow");
  const long long PW = pow_ll(p, W);

  std::array<EntryCond, 3> E;
  for (size_t idx = 0; idx < 3; ++idx) {
    const auto& e = ents[idx];
    if (!e.enf) continue;
    long dp = e.dep + esc;
    EntryCond ec;
    ec.enf = true;
    ec.leafmod = std::clamp(dp + CL, 0L, CL);
    ec.Pleaf = pow_ll(p, ec.leafmod);
    ec.digits = std::max(0L, dp);
    ec.Pdig = pow_ll(p, ec.digits);
    ec.Ttil = rat_mod_ppow(Ts.at(e.i, e.j) * pow_rat(p, CL), p, W);
    E[idx] = ec;
  }

  // Sparse-coordinate assignment lists per column: cleared coordinate values
  // plus each assignment's diagonal quadratic contribution.
  const long Fn = (long)Fs.size();
  std::vector<long long> ctil((size_t)Fn), stepv((size_t)Fn);
  std::array<std::vector<long long>, 2> basev;
  for (int j = 0; j < 2; ++j) basev[(size_t)j].resize((size_t)Fn);
  for (long fi = 0; fi < Fn; ++fi) {
    long k = Fs[(size_t)fi];
    ctil[(size_t)fi] = rat_mod_ppow(
        cs[(size_t)k] * pow_rat(p, CL - 2 * dexp[(size_t)k]), p, W);
    stepv[(size_t)fi] = pow_ll(p, dexp[(size_t)k]) % PW;
    for (int j = 0; j < 2; ++j)
      basev[(size_t)j][(size_t)fi] = rat_mod_ppow(
          shift_of(prob, j, k) * pow_rat(p, dexp[(size_t)k]), p, W);
  }

  struct ColList {
    std::vector<long long> flat;  // Fn cleared values per assignment
    std::vector<long long> qq;    // diagonal contribution per assignment
  };
  auto build_col = [&](int j) {
    ColList out;
    if (Fn == 0) {
      out.qq.push_back(0);
      return out;
    }
    long long cmrep = pow_ll(p, prob.cmod[(size_t)j]);
    std::vector<long long> x((size_t)Fn, 0);
    while (true) {
      long long q = 0;
      for (long fi = 0; fi < Fn; ++fi) {
        long long v = addmod(basev[(size_t)j][(size_t)fi],
                             mulmod(x[(size_t)fi] % PW, stepv[(size_t)fi], PW),
                             PW);
        out.flat.push_back(v);
        q = addmod(q, mulmod(ctil[(size_t)fi], mulmod(v, v, PW), PW), PW);
      }
      out.qq.push_back(q);
      long idx = 0;
      while (idx < Fn) {
        if (++x[(size_t)idx] < cmrep) break;
        x[(size_t)idx] = 0;
        ++idx;
      }
      if (idx == Fn) break;
    }
    return out;
  };
  ColList A = build_col(0), B = build_col(1);

  PairTable* PT = nullptr;
  const std::vector<Int>* AGG = nullptr;
  bool full_pat = false;
  long long Pb_agg = 1, Pc_agg = 1;
  if (r0 > 0 && Mt > 0 && !use_probe) {
    PT = &get_pair_table(p, r0, chiU, Mt);
    full_pat = (E[0].enf && E[1].enf && E[2].enf && E[0].digits == Mt &&
                E[1].digits == Mt && E[2].digits == Mt);
    if (!full_pat) {
      AGG = &PT->agg_pattern(E[0].digits, E[1].digits, E[2].digits);
      Pb_agg = pow_ll(p, E[1].digits);
      Pc_agg = pow_ll(p, E[2].digits);
    }
  }

  // Prefilter: diagonal conditions depend on only one column each.
  auto prefilter = [&](const ColList& Lc, const EntryCond& ec,
                       std::vector<long>& idxs, std::vector<long long>& keys) {
    const long cnt = (long)Lc.qq.size();
    for (long idx = 0; idx < cnt; ++idx) {
      long long key = 0;
      if (ec.enf) {
        long long R = submod(ec.Ttil, Lc.qq[(size_t)idx], PW);
        if (ec.Pleaf > 1 && R % ec.Pleaf != 0) continue;
        if (ec.Pdig > 1) key = (R / ec.Pleaf) % ec.Pdig;
        if (r0 == 0 && key != 0) continue;
      }
      idxs.push_back(idx);
      keys.push_back(key);
    }
  };
  std::vector<long> Ai, Bi;
  std::vector<long long> Ak, Bk;
  prefilter(A, E[0], Ai, Ak);
  prefilter(B, E[2], Bi, Bk);

  Int psum = 0;
  double probe_ops = 0;
  const EntryCond& EX = E[1];
  for (size_t ai = 0; ai < Ai.size(); ++ai) {
    const long long* va = A.flat.data() + (size_t)Ai[ai] * (size_t)Fn;
    for (size_t bi = 0; bi < Bi.size(); ++bi) {
      const long long* vb = B.flat.data() + (size_t)Bi[bi] * (size_t)Fn;
      long long keyx = 0;
      if (EX.enf) {
        long long s = 0;
        for (long fi = 0; fi < Fn; ++fi)
          s = addmod(
              s, mulmod(ctil[(size_t)fi], mulmod(va[fi], vb[fi], PW), PW), PW);
        long long R = submod(EX.Ttil, s, PW);
        if (EX.Pleaf > 1 && R % EX.Pleaf != 0) continue;
        if (EX.Pdig > 1) keyx = (R / EX.Pleaf) % EX.Pdig;
        if (r0 == 0 && keyx != 0) continue;
      }
      if (r0 == 0 || Mt == 0) {
        psum += 1;  // class adjustment below supplies the p-power
      } else if (use_probe) {
        psum += pair_probe(p, r0, chiU, Mt, E[0].digits, E[1].digits,
                           E[2].digits, Ak[ai], keyx, Bk[bi], ops_budget,
                           &probe_ops);
      } else if (full_pat) {
        psum += PT->at(Ak[ai], keyx, Bk[bi]);
      } else {
        psum += (*AGG)[(size_t)((Ak[ai] * Pb_agg + keyx) * Pc_agg + Bk[bi])];
      }
    }
  }

  // Class adjustment: the unimodular coordinates were counted mod p^Mt while
  // each column enumerates p^{cmod_j} representatives per coordinate; the
  // conditions only constrain residues mod p^{digits} <= p^{Mt}, so the
  // correction is an exact power of p (exact division when a column modulus
  // is below Mt).
  long adj = r0 * ((c0 - Mt) + (c1 - Mt));
  if (adj >= 0) return psum * pow_int(p, adj);
  Int denom = pow_int(p, -adj);
  if (!mpz_divisible_p(psum.get_mpz_t(), denom.get_mpz_t()))
    throw std::logic_error("tier B: class adjustment not exact");
  Int out;
  mpz_divexact(out.get_mpz_t(), psum.get_mpz_t(), denom.get_mpz_t());
  return out;
}

// ---------------------------------------------------------------------------
// Tier D: three columns against a unimodular source at uniform depth
// ---------------------------------------------------------------------------

Int tier_d(const GenCountProblem& prob, const CountBudget& budget) {
  const long p = prob.p;
  const long m = (long)prob.source_diag.size();
  const long d = prob.cmod[0];
  if (m < 3) throw BudgetExceeded("tier D: rank too small");
  if (d < 1) throw BudgetExceeded("tier D: depth too small");
  for (long j = 0; j < 3; ++j)
    if (prob.cmod[(size_t)j] != d)
      throw BudgetExceeded("tier D: nonuniform column moduli");
  for (long i = 0; i < 3; ++i)
    for (long j = i; j < 3; ++j) {
      long dv = prob.depth[(size_t)i][(size_t)j];
      if (depth_vacuous(dv) || dv != d)
        throw BudgetExceeded("tier D: nonuniform depths");
    }
  for (long k = 0; k < m; ++k) {
    if (val_p(p, prob.source_diag[(size_t)k]) != 0)
      throw BudgetExceeded("tier D: source not unimodular");
    for (long j = 0; j < 3; ++j)
      if (denom_exp(p, shift_of(prob, j, k)) != 0)
        throw BudgetExceeded("tier D: fractional shifts");
  }
  // Integral shifts translate columns by lattice vectors; at uniform depth
  // equal to the column modulus the count is a class count, so they drop out.
  for (long i = 0; i < 3; ++i)
    for (long j = i; j < 3; ++j)
      if (prob.target.at(i, j) != 0 && val_p(p, prob.target.at(i, j)) < 0)
        return Int(0);

  const long long P = pow_ll(p, d);
  if ((double)P * P * P > 2.5e7) throw BudgetExceeded("tier D: leaf too large");
  {
    double cost = 0;
    for (long e = 0; e <= d; ++e)
      cost += std::pow((double)p, (double)(d - e)) * (double)P * (double)P *
              std::pow((double)p, (double)(2 * e));
    if (cost > 60.0 * (double)budget.max_enumeration)
      throw BudgetExceeded("tier D: enumeration too large");
  }

  const long Q = d + 1;
  if (!pow_fits(p, Q)) throw BudgetExceeded("tier D: modulus overflow");
  std::vector<long long> units((size_t)m);
  for (long k = 0; k < m; ++k)
    units[(size_t)k] = rat_mod_ppow(prob.source_diag[(size_t)k], p, Q);
  PlaneSplit sp = split_plane(p, units, Q);
  std::vector<long long> rest((size_t)(m - 2));
  long long restprod = 1;
  for (size_t i = 0; i < rest.size(); ++i) {
    rest[i] = sp.rest_units[i] % P;
    restprod = (restprod * (sp.rest_units[i] % p)) % p;
  }
  int chi_rest = legendre(Int((long)restprod), p);
  OrbitData od = make_orbit_data(p, rest, true, d, m);
  PairTable& Trest = get_pair_table(p, m - 2, chi_rest, d);

  const long long inv2 = inv_mod_ppow(2, p, d);
  const long long tgt11 = rat_mod_ppow(prob.target.at(0, 0), p, d);
  const std::array<long long, 2> rhs = {
      rat_mod_ppow(2 * prob.target.at(0, 1), p, d),
      rat_mod_ppow(2 * prob.target.at(0, 2), p, d)};
  const long long t22 = rat_mod_ppow(prob.target.at(1, 1), p, d);
  const long long t23 = rat_mod_ppow(prob.target.at(1, 2), p, d);
  const long long t33 = rat_mod_ppow(prob.target.at(2, 2), p, d);

  // The first column v is decomposed by orbit (valuation e, primitive norm
  // av); in plane coordinates v ~ p^e (e + av f), so the linear conditions
  // t(v, w_j) = T_0j become y_j = cbase_j - av x_j mod p^{d-e} with p^e free
  // lifts each.  The leaf histogram collects the residual quadratic keys of
  // columns 2 and 3, folded against the rank-(m-2) pair table.
  std::vector<long long> hist((size_t)(P * P * P), 0);
  std::vector<long long> touched;
  Int grand = 0;
  const double log2p = std::log2((double)p);

  for (long e = 0; e <= d; ++e) {
    const long s = d - e;
    const long long Ps = pow_ll(p, s);
    const long long p2e = (2 * e >= d) ? 0 : pow_ll(p, 2 * e);
    const bool efree = (e >= d);
    const long long Pde = efree ? 1 : pow_ll(p, d - e);
    const long long Plift = efree ? P : pow_ll(p, e);
    // Fold entirely in int64 when every product fits: the leaf multiplicity
    // is at most p^{2d+2e} and a table entry at most p^{2(m-2)d}.
    const bool fold64 =
        Trest.is64 &&
        (double)(2 * d + 2 * e + 2 * (m - 2) * d) * log2p < 61.0;
    for (long long av = 0;; ++av) {
      if (s == 0 ? av > 0 : av >= Ps) break;
      Int N = (s == 0) ? Int(1) : od.prim[(size_t)s][(size_t)av];
      if (N == 0) continue;
      if (mulmod(p2e, av % P, P) != tgt11) continue;
      std::array<long long, 2> cbase = {0, 0};
      bool ok = true;
      for (int j = 0; j < 2 && ok; ++j) {
        if (!efree) {
          if (val_mod(rhs[(size_t)j], p, d) < e) {
            ok = false;
            break;
          }
          cbase[(size_t)j] = (rhs[(size_t)j] / pow_ll(p, e)) % Pde;
        } else if (rhs[(size_t)j] != 0) {
          ok = false;
        }
      }
      if (!ok) continue;

      const long long am = av % P;
      touched.clear();
      for (long long x2 = 0; x2 < P; ++x2) {
        long long y2b =
            efree ? 0 : submod(cbase[0], mulmod(am, x2 % Pde, Pde), Pde);
        for (long long l2 = 0; l2 < Plift; ++l2) {
          long long y2 = (y2b + Pde * l2) % P;
          long long r22 = submod(t22, mulmod(x2, y2, P), P);
          for (long long x3 = 0; x3 < P; ++x3) {
            long long y3b =
                efree ? 0 : submod(cbase[1], mulmod(am, x3 % Pde, Pde), Pde);
            for (long long l3 = 0; l3 < Plift; ++l3) {
              long long y3 = (y3b + Pde * l3) % P;
              long long r23 = submod(
                  t23,
                  mulmod(addmod(mulmod(x2, y3, P), mulmod(x3, y2, P), P), inv2,
                         P),
                  P);
              long long r33 = submod(t33, mulmod(x3, y3, P), P);
              size_t key = (size_t)((r22 * P + r23) * P + r33);
              if (hist[key] == 0) touched.push_back((long long)key);
              ++hist[key];
            }
          }
        }
      }
      if (fold64) {
        long long acc64 = 0;
        for (long long key : touched) {
          long long k22 = key / (P * P);
          long long k23 = (key / P) % P;
          long long k33 = key % P;
          acc64 += hist[(size_t)key] *
                   Trest.bins64[(size_t)((k22 * P + k23) * P + k33)];
          hist[(size_t)key] = 0;
        }
        if (acc64) grand += N * (long)acc64;
      } else {
        for (long long key : touched) {
          long long k22 = key / (P * P);
          long long k23 = (key / P) % P;
          long long k33 = key % P;
          grand += N * Int((long)hist[(size_t)key]) * Trest.at(k22, k23, k33);
          hist[(size_t)key] = 0;
        }
      }
    }
  }
  return grand;
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

Int generalized_count_dispatch(const GenCountProblem& prob,
                               const CountBudget& budget) {
  auto [m, n] = validate_problem(prob);
  bool all_vac = true;
  for (long i = 0; i < n && all_vac; ++i)
    for (long j = 0; j < n && all_vac; ++j)
      if (!depth_vacuous(prob.depth[(size_t)i][(size_t)j])) all_vac = false;
  if (all_vac) {
    long e = 0;
    for (long j = 0; j < n; ++j) e += m * prob.cmod[(size_t)j];
    return pow_int(prob.p, e);
  }
  try {
    if (n == 1) return tier_a(prob, budget);
    if (n == 2) return tier_b(prob, budget);
    if (n == 3) return tier_d(prob, budget);
  } catch (const BudgetExceeded&) {
    // fall through to the literal counter
  }
  return generalized_count_naive(prob, budget);
}

Int fast_count(const GramLattice& M, const GramLattice& L, long d,
               const CountBudget& budget) {
  if (d < 0) throw std::domain_error("count: negative depth");
  if (d == 0) return Int(1);
  return generalized_count_dispatch(problem_from_lattices(M, L, d), budget);
}

/// Primitive count via Moebius inversion over the span of the columns mod p.
/// Every subproblem stays in the same (diagonalized) coordinates, so the
/// result is consistent for fractional source forms as well.
Int fast_count_primitive(const GramLattice& M, const GramLattice& L, long d,
                         const CountBudget& budget) {
  if (d < 0) throw std::domain_error("count: negative depth");
  if (d == 0) return Int(0);
  const long p = M.p;
  const long n = L.rank();
  GenCountProblem base = problem_from_lattices(M, L, d);

  if (n == 1) {
    // primitive = all - divisible; v = p w turns val(q(v) - T) >= d into
    // val(q(w) - T/p^2) >= d - 2 with w ranging mod p^{d-1}.
    GenCountProblem div = base;
    div.target.at(0, 0) = base.target.at(0, 0) / Rat((long)p * p);
    div.depth[0][0] = d - 2;
    div.cmod[0] = d - 1;
    return generalized_count_dispatch(base, budget) -
           generalized_count_dispatch(div, budget);
  }

  if (n == 2) {
    // Over F_p the kernel of the column matrix is 0, a line, or everything;
    // inclusion-exclusion over the p + 1 lines with mu(line) = -1 and
    // mu(full) = p.  For a kernel line spanned by w, complete to a basis
    // (u, w): substituting columns (v_u, p v_w) rescales the target by
    // g = (u | w) and divides the mixed/kernel entries by p and p^2.
    Int total = generalized_count_dispatch(base, budget);
    std::vector<Mat> gs;
    for (long t = 0; t < p; ++t) {
      Mat g(2, 2);
      g.at(0, 0) = 0;
      g.at(1, 0) = 1;
      g.at(0, 1) = 1;
      g.at(1, 1) = t;
      gs.push_back(g);
    }
    {
      Mat g(2, 2);
      g.at(0, 0) = 1;
      g.at(1, 0) = 0;
      g.at(0, 1) = 0;
      g.at(1, 1) = 1;
      gs.push_back(g);
    }
    for (const Mat& g : gs) {
      Mat Tp = g.transpose().mul(base.target).mul(g);
      GenCountProblem line = base;
      line.target = Mat(2, 2);
      line.target.at(0, 0) = Tp.at(0, 0);
      line.target.at(0, 1) = Tp.at(0, 1) / Rat(p);
      line.target.at(1, 0) = Tp.at(1, 0) / Rat(p);
      line.target.at(1, 1) = Tp.at(1, 1) / Rat((long)p * p);
      line.depth = {{d, d - 1}, {d - 1, d - 2}};
      line.cmod = {d, d - 1};
      total -= generalized_count_dispatch(line, budget);
    }
    GenCountProblem dbl = base;
    dbl.target = Mat(2, 2);
    for (long i = 0; i < 2; ++i)
      for (long j = 0; j < 2; ++j)
        dbl.target.at(i, j) = base.target.at(i, j) / Rat((long)p * p);
    dbl.depth = {{d - 2, d - 2}, {d - 2, d - 2}};
    dbl.cmod = {d - 1, d - 1};
    total += Int(p) * generalized_count_dispatch(dbl, budget);
    return total;
  }

  return count_reps_naive_impl(M, L, d, true, budget);
}

// ---------------------------------------------------------------------------
// Density reports
// ---------------------------------------------------------------------------

RepCountReport density_report(const GramLattice& M, const GramLattice& L,
                              bool prim, const CountBudget& budget) {
  RepCountReport rep;
  rep.dim_rep = dim_rep(M.rank(), L.rank());
  const long floor = stabilization_floor(L);

  std::map<long, Int> memo;
  auto get = [&](long dd) -> Int {
    auto it = memo.find(dd);
    if (it != memo.end()) return it->second;
    Int cnt = prim ? fast_count_primitive(M, L, dd, budget)
                   : fast_count(M, L, dd, budget);
    memo.emplace(dd, cnt);
    rep.d_values.push_back(dd);
    rep.raw_counts.push_back(cnt);
    rep.normalized.push_back(Rat(cnt) * pow_rat(M.p, -dd * rep.dim_rep));
    return cnt;
  };

  for (long attempt = 0; attempt < 6; ++attempt) {
    long dd = floor + attempt;
    Rat r1 = Rat(get(dd)) * pow_rat(M.p, -dd * rep.dim_rep);
    Rat r2 = Rat(get(dd + 1)) * pow_rat(M.p, -(dd + 1) * rep.dim_rep);
    if (r1 == r2) {
      rep.stabilized_at = dd;
      rep.value = r1;
      return rep;
    }
  }
  throw PrecisionExhausted("density did not stabilize");
}

}  // namespace

// ---------------------------------------------------------------------------
// Public API
// ---------------------------------------------------------------------------

Int count_reps_naive(const GramLattice& M, const GramLattice& L, long d,
                     const CountBudget& budget) {
  return count_reps_naive_impl(M, L, d, false, budget);
}

Int count_reps_naive_primitive(const GramLattice& M, const GramLattice& L,
                               long d, const CountBudget& budget) {
  return count_reps_naive_impl(M, L, d, true, budget);
}

Int count_reps_fast(const GramLattice& M, const GramLattice& L, long d,
                    const CountBudget& budget) {
  return fast_count(M, L, d, budget);
}

Int count_vector_reps_diag(const GramLattice& M, const Rat& t, long d,
                           const CountBudget& budget) {
  if (d < 0) throw std::domain_error("count: negative depth");
  if (d == 0) return Int(1);
  GenCountProblem prob;
  prob.p = M.p;
  JordanDecomposition jd = jordan_decompose(M);
  for (const auto& blk : jd.blocks)
    for (long i = 0; i < blk.unimodular_gram.rows; ++i)
      prob.source_diag.push_back(blk.unimodular_gram.at(i, i) *
                                 pow_rat(M.p, blk.scale));
  prob.target = Mat(1, 1);
  prob.target.at(0, 0) = t;
  prob.depth = {{d}};
  prob.cmod = {d};
  return generalized_count_dispatch(prob, budget);
}

Int coset_gram_count(const GramLattice& L, const CosetSpec& spec, long d,
                     long cmod, const CountBudget& budget) {
  const long m = L.rank();
  const long n = (long)spec.mu.size();
  if (n < 1 || spec.T.rows != n || spec.T.cols != n)
    throw std::domain_error("coset_gram_count: inconsistent spec");
  for (long j = 0; j < n; ++j)
    if ((long)spec.mu[(size_t)j].size() != m)
      throw std::domain_error("coset_gram_count: shift vector length");
  long dmax = 0;
  for (long j = 0; j < n; ++j)
    for (long k = 0; k < m; ++k)
      dmax = std::max(dmax, denom_exp(L.p, spec.mu[(size_t)j][(size_t)k]));
  if (cmod < 0) cmod = d + dmax + 1;

  GenCountProblem prob;
  prob.p = L.p;
  JordanDecomposition jd = jordan_decompose(L);
  for (const auto& blk : jd.blocks)
    for (long i = 0; i < blk.unimodular_gram.rows; ++i)
      prob.source_diag.push_back(blk.unimodular_gram.at(i, i) *
                                 pow_rat(L.p, blk.scale));
  // Shifts are given in the coordinates of L; the diagonalizing basis change
  // is p-unimodular, so transporting them by its inverse matches coset
  // representative sets class by class.
  Mat Binv = jd.basis_change.inverse();
  prob.shifts.assign((size_t)n, std::vector<Rat>((size_t)m, Rat(0)));
  for (long j = 0; j < n; ++j)
    for (long i = 0; i < m; ++i) {
      Rat s = 0;
      for (long k = 0; k < m; ++k)
        s += Binv.at(i, k) * spec.mu[(size_t)j][(size_t)k];
      prob.shifts[(size_t)j][(size_t)i] = s;
    }
  prob.target = spec.T;
  prob.depth.assign((size_t)n, std::vector<long>((size_t)n, d));
  prob.cmod.assign((size_t)n, cmod);
  return generalized_count_dispatch(prob, budget);
}

long dim_rep(long m, long n) { return m * n - n * (n + 1) / 2; }

long stabilization_floor(const GramLattice& L) {
  Rat det = L.gram.det();
  if (det == 0)
    throw std::domain_error("stabilization_floor: degenerate target");
  long v = val_p(L.p, det);
  if (v < 0) v = -v;
  return std::max(1L, 2 * v + 3);
}

Int generalized_count(const GenCountProblem& prob, const CountBudget& budget) {
  return generalized_count_dispatch(prob, budget);
}

RepCountReport den_report(const GramLattice& M, const GramLattice& L,
                          const CountBudget& budget) {
  return density_report(M, L, false, budget);
}

Rat den(const GramLattice& M, const GramLattice& L, const CountBudget& budget) {
  return den_report(M, L, budget).value;
}

RepCountReport pden_report(const GramLattice& M, const GramLattice& L,
                           const CountBudget& budget) {
  return density_report(M, L, true, budget);
}

Rat pden(const GramLattice& M, const GramLattice& L,
         const CountBudget& budget) {
  return pden_report(M, L, budget).value;
}

namespace detail {

Int unimodular_value_count(long p, long rr, int chi_det, long s, long long g) {
  UniHist uh(p, rr, chi_det);
  long long Ps = pow_ll(p, std::max(s, 0L));
  return uh.h(s, ((g % Ps) + Ps) % Ps);
}

Int pair_table_value(long p, long r0, int chi_det, long Mt, long a, long b,
                     long c, long long k11, long long k12, long long k22) {
  PairTable& pt = get_pair_table(p, r0, chi_det, Mt);
  const std::vector<Int>& bins = pt.agg_pattern(a, b, c);
  long long Pa = pow_ll(p, a), Pb = pow_ll(p, b), Pc = pow_ll(p, c);
  size_t idx = (size_t)(((((k11 % Pa) + Pa) % Pa) * Pb +
                         (((k12 % Pb) + Pb) % Pb)) *
                            Pc +
                        (((k22 % Pc) + Pc) % Pc));
  return bins[idx];
}

Int pair_probe_value(long p, long r0, int chi_det, long Mt, long a, long b,
                     long c, long long k11, long long k12, long long k22) {
  long long Pa = pow_ll(p, a), Pb = pow_ll(p, b), Pc = pow_ll(p, c);
  double ops = 0;
  return pair_probe(p, r0, chi_det, Mt, a, b, c, (((k11 % Pa) + Pa) % Pa),
                    (((k12 % Pb) + Pb) % Pb), (((k22 % Pc) + Pc) % Pc), 1e15,
                    &ops);
}

}  // namespace detail

}  // namespace latdens
