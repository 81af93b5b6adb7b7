#include "latdens/lattice.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace latdens {

namespace {

bool is_odd_prime(long p) {
  if (p < 3 || p % 2 == 0) return false;
  for (long d = 3; d * d <= p; d += 2)
    if (p % d == 0) return false;
  return true;
}

/// Canonical representative of a rational with p-free denominator mod p^k:
/// the integer in [0, p^k) congruent to it (denominator inverted mod p^k).
Rat reduce_mod_ppow(long p, const Rat& x, long k) {
  if (k <= 0) return Rat(0);
  Int pk = pow_int(p, k);
  Int num = x.get_num(), den = x.get_den();
  if (val_p(p, den) != 0)
    throw std::domain_error("reduce_mod_ppow: p in denominator");
  Int dinv;
  if (mpz_invert(dinv.get_mpz_t(), den.get_mpz_t(), pk.get_mpz_t()) == 0)
    throw std::logic_error("reduce_mod_ppow: inversion failed");
  Int r = ((num * dinv) % pk + pk) % pk;
  return Rat(r);
}

/// Canonical representative of any rational mod p^k Z_p: negative-valuation
/// parts are kept exactly, the integral tail is reduced.
Rat canonical_mod(long p, const Rat& x, long k) {
  if (x == 0) return Rat(0);
  long v = val_p(p, x);
  if (v >= 0) return reduce_mod_ppow(p, x, k);
  Rat pa(pow_int(p, -v));
  Rat r = reduce_mod_ppow(p, x * pa, k - v) / pa;
  r.canonicalize();
  return r;
}

}  // namespace

GramLattice make_lattice(long p, Mat gram) {
  if (!is_odd_prime(p)) throw std::domain_error("make_lattice: p must be an odd prime");
  if (gram.rows != gram.cols || gram.rows == 0)
    throw std::domain_error("make_lattice: gram must be square and nonempty");
  for (long i = 0; i < gram.rows; ++i)
    for (long j = 0; j < i; ++j)
      if (gram.at(i, j) != gram.at(j, i))
        throw std::domain_error("make_lattice: gram must be symmetric");
  GramLattice L{p, std::move(gram)};
  if (L.gram.det() == 0)
    throw std::domain_error("make_lattice: gram must be nondegenerate");
  return L;
}

Rat square_class_rep(long p, const Rat& a) {
  if (a == 0) throw std::domain_error("square_class_rep of 0");
  long v = val_p(p, a);
  int c = chi(p, unit_part(p, a) * Rat(1));
  Rat rep = (c == 1) ? Rat(1) : Rat(least_nonresidue(p));
  if (v % 2 != 0) rep *= p;
  return rep;
}

SpaceInvariants invariants(const GramLattice& L) {
  SpaceInvariants inv;
  inv.dim = L.rank();
  long m = inv.dim;
  Rat disc = L.gram.det();
  if (((m * (m - 1) / 2) % 2) != 0) disc = -disc;
  inv.disc_class = square_class_rep(L.p, disc);
  inv.chi = chi(L.p, inv.disc_class);
  // Hasse invariant from a diagonalization d_1, ..., d_m.
  JordanDecomposition jd = jordan_decompose(L);
  std::vector<Rat> d;
  for (const auto& blk : jd.blocks) {
    Rat s(pow_int(L.p, blk.scale));
    for (long i = 0; i < blk.unimodular_gram.rows; ++i)
      d.push_back(s * blk.unimodular_gram.at(i, i));
  }
  int eps = 1;
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = i + 1; j < d.size(); ++j)
      eps *= hilbert_symbol(L.p, d[i], d[j]);
  inv.hasse = eps;
  return inv;
}

bool is_integral(const GramLattice& L) {
  for (const Rat& x : L.gram.a)
    if (x != 0 && val_p(L.p, x) < 0) return false;
  return true;
}

bool is_self_dual(const GramLattice& L) {
  return is_integral(L) && val_p(L.p, L.gram.det()) == 0;
}

std::pair<GramLattice, Mat> dual(const GramLattice& L) {
  if (is_self_dual(L)) return {L, Mat::identity(L.rank())};
  Mat inv = L.gram.inverse();
  // basis change B = gram^{-1}: B^T gram B = gram^{-1}, symmetric.
  return {GramLattice{L.p, inv}, inv};
}

JordanDecomposition jordan_decompose(const GramLattice& L) {
  const long m = L.rank();
  const long p = L.p;
  Mat W = L.gram;
  Mat B = Mat::identity(m);

  auto col_swap = [&](long i, long j) {
    if (i == j) return;
    for (long r = 0; r < m; ++r) std::swap(B.at(r, i), B.at(r, j));
    for (long r = 0; r < m; ++r) std::swap(W.at(r, i), W.at(r, j));
    for (long c = 0; c < m; ++c) std::swap(W.at(i, c), W.at(j, c));
  };
  // basis column i += coeff * basis column j
  auto col_addmul = [&](long i, long j, const Rat& coeff) {
    for (long r = 0; r < m; ++r) B.at(r, i) += coeff * B.at(r, j);
    for (long r = 0; r < m; ++r) W.at(r, i) += coeff * W.at(r, j);
    for (long c = 0; c < m; ++c) W.at(i, c) += coeff * W.at(j, c);
    for (auto& x : W.a) x.canonicalize();
    for (auto& x : B.a) x.canonicalize();
  };

  for (long k = 0; k < m; ++k) {
    // Locate a minimum-valuation entry in the trailing block, preferring
    // the diagonal.
    long best_i = -1, best_j = -1;
    long best_v = kValInfinity;
    for (long i = k; i < m; ++i) {
      if (W.at(i, i) != 0 && val_p(p, W.at(i, i)) < best_v) {
        best_v = val_p(p, W.at(i, i));
        best_i = best_j = i;
      }
    }
    for (long i = k; i < m; ++i)
      for (long j = i + 1; j < m; ++j) {
        if (W.at(i, j) != 0 && val_p(p, W.at(i, j)) < best_v) {
          best_v = val_p(p, W.at(i, j));
          best_i = i;
          best_j = j;
        }
      }
    if (best_i < 0) throw std::logic_error("jordan: degenerate block");
    if (best_i != best_j) {
      // Off-diagonal strictly minimal: q(b_i + b_j) attains the minimum
      // because val(t_ii + t_jj) > val(2 t_ij) for odd p.
      col_addmul(best_i, best_j, Rat(1));
    }
    col_swap(k, best_i);
    // Clear row/column k against the pivot.
    Rat piv = W.at(k, k);
    for (long r = k + 1; r < m; ++r) {
      if (W.at(k, r) == 0) continue;
      col_addmul(r, k, -W.at(k, r) / piv);
    }
  }

  // Sort the diagonal by valuation (stable) and group into blocks.
  std::vector<long> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::vector<long> vals(m);
  for (long i = 0; i < m; ++i) vals[i] = val_p(p, W.at(i, i));
  std::stable_sort(order.begin(), order.end(),
                   [&](long a, long b) { return vals[a] < vals[b]; });

  JordanDecomposition jd;
  jd.basis_change = Mat(m, m);
  for (long c = 0; c < m; ++c)
    for (long r = 0; r < m; ++r) jd.basis_change.at(r, c) = B.at(r, order[c]);

  long pos = 0;
  while (pos < m) {
    long scale = vals[order[pos]];
    long end = pos;
    while (end < m && vals[order[end]] == scale) ++end;
    JordanBlock blk;
    blk.scale = scale;
    blk.unimodular_gram = Mat(end - pos, end - pos);
    Rat ps(pow_int(p, std::abs(scale)));
    for (long i = pos; i < end; ++i) {
      Rat u = W.at(order[i], order[i]);
      blk.unimodular_gram.at(i - pos, i - pos) =
          scale >= 0 ? Rat(u / ps) : Rat(u * ps);
    }
    jd.blocks.push_back(std::move(blk));
    pos = end;
  }
  return jd;
}

JordanProfile jordan_profile(const GramLattice& L) {
  JordanProfile prof;
  for (const auto& blk : jordan_decompose(L).blocks) {
    Rat det(1);
    for (long i = 0; i < blk.unimodular_gram.rows; ++i)
      det *= blk.unimodular_gram.at(i, i);
    prof.push_back({blk.scale, blk.unimodular_gram.rows, chi(L.p, det)});
  }
  return prof;
}

bool is_isometric(const GramLattice& A, const GramLattice& B) {
  if (A.p != B.p) throw std::domain_error("is_isometric: different primes");
  return jordan_profile(A) == jordan_profile(B);
}

std::optional<SelfDualClass> classify_self_dual(const GramLattice& L) {
  if (!is_self_dual(L)) return std::nullopt;
  return SelfDualClass{L.rank(), invariants(L).chi};
}

GramLattice self_dual_lattice(long p, long m, int eps) {
  if (m < 1) throw std::domain_error("self_dual_lattice: m >= 1");
  if (eps != 1 && eps != -1)
    throw std::domain_error("self_dual_lattice: eps must be +-1");
  Mat g(m, m);
  for (long i = 0; i < m; ++i) g.at(i, i) = 1;
  // disc = (-1)^{m(m-1)/2} d with the last diagonal entry d in {1, u}.
  int sign_chi = ((m * (m - 1) / 2) % 2 == 0) ? 1 : chi(p, Rat(-1));
  if (sign_chi != eps) g.at(m - 1, m - 1) = least_nonresidue(p);
  return make_lattice(p, g);
}

Mat hyperbolic_plane_gram() {
  Mat g(2, 2);
  g.at(0, 1) = g.at(1, 0) = Rat(1, 2);
  return g;
}

GramLattice orthogonal_sum(const GramLattice& L1, const GramLattice& L2) {
  if (L1.p != L2.p) throw std::domain_error("orthogonal_sum: different primes");
  long m = L1.rank(), n = L2.rank();
  Mat g(m + n, m + n);
  for (long i = 0; i < m; ++i)
    for (long j = 0; j < m; ++j) g.at(i, j) = L1.gram.at(i, j);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) g.at(m + i, m + j) = L2.gram.at(i, j);
  return GramLattice{L1.p, std::move(g)};
}

GramLattice sublattice(const GramLattice& L, const Mat& basis) {
  Mat g = basis.transpose().mul(L.gram).mul(basis);
  return make_lattice(L.p, std::move(g));
}

CyclicStructure cyclic_structure(const GramLattice& L) {
  if (!is_integral(L))
    throw NotCyclic("cyclic_structure: lattice is not integral");
  JordanDecomposition jd = jordan_decompose(L);
  long l = 0;
  long positive_rank = 0;
  for (const auto& blk : jd.blocks)
    if (blk.scale > 0) {
      positive_rank += blk.unimodular_gram.rows;
      l = blk.scale;
    }
  if (positive_rank > 1)
    throw NotCyclic("cyclic_structure: dual quotient is not cyclic");

  const long m = L.rank();
  CyclicStructure cs;
  cs.order = l;
  // Jordan basis with the scaled line last (blocks are sorted ascending, so
  // the last basis vector spans it whenever l > 0).
  for (long i = 0; i <= l / 2; ++i) {
    Mat Bi = jd.basis_change;
    if (l > 0) {
      Rat f = Rat(1) / Rat(pow_int(L.p, i));
      for (long r = 0; r < m; ++r) Bi.at(r, m - 1) *= f;
    }
    cs.chain.push_back({sublattice(L, Bi), Bi});
    if (l == 0) break;
  }
  return cs;
}

std::vector<Rat> SelfDualEmbedding::r_map(long j) const {
  std::vector<Rat> v(static_cast<std::size_t>(L.rank()), Rat(0));
  for (long i = 0; i < L.rank(); ++i) {
    v[i] = r_of_mu0[i] * j;
    v[i].canonicalize();
  }
  return v;
}

SelfDualEmbedding embed_into_self_dual(const GramLattice& L) {
  if (!is_integral(L))
    throw NotCyclic("embed_into_self_dual: lattice is not integral");
  JordanDecomposition jd = jordan_decompose(L);
  long l = 0, positive_rank = 0;
  for (const auto& blk : jd.blocks)
    if (blk.scale > 0) {
      positive_rank += blk.unimodular_gram.rows;
      l = blk.scale;
    }
  if (positive_rank > 1)
    throw NotCyclic("embed_into_self_dual: dual quotient is not cyclic");
  if (l == 0)
    throw std::domain_error("embed_into_self_dual: lattice is self-dual");

  const long m = L.rank();
  const long p = L.p;
  // Diagonal Jordan gram: unimodular part then the scaled line w.
  Mat Ldiag(m, m);
  {
    long pos = 0;
    for (const auto& blk : jd.blocks) {
      Rat s(pow_int(p, blk.scale));
      for (long i = 0; i < blk.unimodular_gram.rows; ++i, ++pos)
        Ldiag.at(pos, pos) = s * blk.unimodular_gram.at(i, i);
    }
  }
  Rat c = Ldiag.at(m - 1, m - 1);  // q(w), valuation l
  Rat pl(pow_int(p, l));

  SelfDualEmbedding emb;
  emb.L = GramLattice{p, Ldiag};
  emb.L_basis_change = jd.basis_change;
  emb.l = l;
  emb.q_x0 = -c;

  // Lsharp basis: (u_1, ..., u_{m-1}, w, v) with q(v) = 0 and
  // (w, v)/2 = c / p^l.
  Mat gs(m + 1, m + 1);
  for (long i = 0; i + 1 < m; ++i) gs.at(i, i) = Ldiag.at(i, i);
  gs.at(m - 1, m - 1) = c;
  gs.at(m - 1, m) = gs.at(m, m - 1) = c / pl;
  gs.at(m, m) = 0;
  emb.Lsharp = make_lattice(p, gs);
  if (!is_self_dual(emb.Lsharp))
    throw std::logic_error("embed_into_self_dual: glue failed");

  emb.iota = Mat(m + 1, m);
  for (long i = 0; i < m; ++i) emb.iota.at(i, i) = 1;

  emb.x0.assign(static_cast<std::size_t>(m + 1), Rat(0));
  emb.x0[m - 1] = -1;
  emb.x0[m] = pl;

  emb.r_of_mu0.assign(static_cast<std::size_t>(m), Rat(0));
  emb.r_of_mu0[m - 1] = Rat(1) / pl;
  return emb;
}

long vertex_type(const GramLattice& L) {
  if (!is_integral(L))
    throw std::domain_error("vertex_type: lattice is not integral");
  long t = 0;
  for (const auto& e : jordan_profile(L)) {
    if (e.scale != 0 && e.scale != 1)
      throw std::domain_error(
          "vertex_type: p L_dual is not contained in L (a Jordan scale "
          "exceeds 1)");
    if (e.scale == 1) t += e.rank;
  }
  return t;
}

GramLattice space_with_invariants(long p, long dim, const Rat& disc_class,
                                  int hasse) {
  if (dim < 1) throw std::domain_error("space_with_invariants: dim >= 1");
  if (hasse != 1 && hasse != -1)
    throw std::domain_error("space_with_invariants: hasse must be +-1");
  if (disc_class == 0)
    throw std::domain_error("space_with_invariants: disc must be nonzero");
  long u = least_nonresidue(p);
  std::vector<Rat> units = {Rat(1), Rat(u), Rat(p), Rat(u * p)};
  std::vector<long> idx(dim, 0);
  Rat want = square_class_rep(p, disc_class);
  while (true) {
    Mat g(dim, dim);
    for (long i = 0; i < dim; ++i) g.at(i, i) = units[idx[i]];
    GramLattice cand{p, g};
    SpaceInvariants inv = invariants(cand);
    if (inv.disc_class == want && inv.hasse == hasse) return cand;
    long k = 0;
    while (k < dim && ++idx[k] == 4) idx[k++] = 0;
    if (k == dim) break;
  }
  throw std::domain_error(
      "space_with_invariants: no quadratic space has these invariants");
}

// ---------------------------------------------------------------------------
// Span utilities
// ---------------------------------------------------------------------------

Mat p_local_hnf(long p, const Mat& gens) {
  const long dim = gens.rows;
  Mat W = gens;
  long cols = W.cols;
  // Forward elimination with unit-normalized p-power pivots.
  std::vector<long> pivot_col;
  long cur = 0;
  for (long row = 0; row < dim; ++row) {
    long best = -1, best_v = kValInfinity;
    for (long c = cur; c < cols; ++c) {
      const Rat& x = W.at(row, c);
      if (x != 0 && val_p(p, x) < best_v) {
        best_v = val_p(p, x);
        best = c;
      }
    }
    if (best < 0)
      throw std::domain_error("p_local_hnf: generators not of full row rank");
    for (long r = 0; r < dim; ++r) std::swap(W.at(r, cur), W.at(r, best));
    // Normalize the pivot to p^{best_v} by a unit column scaling.
    Rat unit = W.at(row, cur) / pow_rat(p, best_v);
    for (long r = 0; r < dim; ++r) {
      W.at(r, cur) /= unit;
      W.at(r, cur).canonicalize();
    }
    // Clear the row to the right.
    for (long c = cur + 1; c < cols; ++c) {
      if (W.at(row, c) == 0) continue;
      Rat f = W.at(row, c) / W.at(row, cur);  // valuation >= 0
      for (long r = 0; r < dim; ++r) {
        W.at(r, c) -= f * W.at(r, cur);
        W.at(r, c).canonicalize();
      }
    }
    pivot_col.push_back(cur);
    ++cur;
  }
  // Back-reduce columns left of each pivot to canonical residues.
  Mat H(dim, dim);
  for (long c = 0; c < dim; ++c)
    for (long r = 0; r < dim; ++r) H.at(r, c) = W.at(r, c);
  for (long row = 0; row < dim; ++row) {
    long pc = row;
    long e = val_p(p, H.at(row, pc));
    for (long c = 0; c < pc; ++c) {
      if (H.at(row, c) == 0) continue;
      // Subtract an integral multiple so the entry becomes its canonical
      // representative mod p^e Z_p.
      Rat target = canonical_mod(p, H.at(row, c), e);
      Rat f = (H.at(row, c) - target) / H.at(row, pc);
      if (f != 0)
        for (long r = 0; r < dim; ++r) {
          H.at(r, c) -= f * H.at(r, pc);
          H.at(r, c).canonicalize();
        }
    }
  }
  return H;
}

std::string lattice_key(const LatticeSpan& L) {
  std::ostringstream os;
  for (const Rat& x : L.basis.a) os << x.get_str() << "|";
  return os.str();
}

LatticeSpan span_from_generators(long p, const Mat& gens) {
  return LatticeSpan{p_local_hnf(p, gens)};
}

bool span_contained(long p, const LatticeSpan& A, const LatticeSpan& B) {
  Mat X = B.basis.inverse().mul(A.basis);
  for (const Rat& x : X.a)
    if (x != 0 && val_p(p, x) < 0) return false;
  return true;
}

long index_exponent(long p, const LatticeSpan& A, const LatticeSpan& B) {
  Rat r = A.basis.det() / B.basis.det();
  long v = val_p(p, r);
  if (v < 0)
    throw std::domain_error("index_exponent: A not finer than B at p");
  return v;
}

Mat span_gram(const Mat& ambient_gram, const LatticeSpan& L) {
  return L.basis.transpose().mul(ambient_gram).mul(L.basis);
}

namespace {

/// p-local Smith normal form: returns diag exponents d_i and a basis
/// W_adapted of the coarse lattice such that the fine lattice is
/// W_adapted * diag(p^{d_i}).
struct SmithResult {
  std::vector<long> d;
  Mat w_adapted;
};

SmithResult smith_p_local(long p, const Mat& coarse_basis, const Mat& x) {
  // x = coarse^{-1} * fine, entries in Z_p.  Row ops act on the coarse
  // basis from the right by the inverse; column ops act on the fine basis
  // and are discarded.
  long n = x.rows;
  Mat M = x;
  Mat Wb = coarse_basis;
  for (long k = 0; k < n; ++k) {
    // Find the minimum valuation entry in the trailing block.
    long bi = -1, bj = -1, bv = kValInfinity;
    for (long i = k; i < n; ++i)
      for (long j = k; j < n; ++j)
        if (M.at(i, j) != 0 && val_p(p, M.at(i, j)) < bv) {
          bv = val_p(p, M.at(i, j));
          bi = i;
          bj = j;
        }
    if (bi < 0) throw std::logic_error("smith_p_local: singular");
    // Swap into place: row swap adjusts Wb columns, column swap is free.
    if (bi != k) {
      for (long j = 0; j < n; ++j) std::swap(M.at(bi, j), M.at(k, j));
      for (long r = 0; r < n; ++r) std::swap(Wb.at(r, bi), Wb.at(r, k));
    }
    if (bj != k)
      for (long i = 0; i < n; ++i) std::swap(M.at(i, bj), M.at(i, k));
    // Clear column k below and row k to the right; all entries have
    // valuation >= bv so the multipliers are integral.
    for (long i = k + 1; i < n; ++i) {
      if (M.at(i, k) == 0) continue;
      Rat f = M.at(i, k) / M.at(k, k);
      // Row_i -= f * Row_k  <=>  coarse column k += f * coarse column i.
      for (long j = 0; j < n; ++j) {
        M.at(i, j) -= f * M.at(k, j);
        M.at(i, j).canonicalize();
      }
      for (long r = 0; r < n; ++r) {
        Wb.at(r, k) += f * Wb.at(r, i);
        Wb.at(r, k).canonicalize();
      }
    }
    for (long j = k + 1; j < n; ++j) {
      if (M.at(k, j) == 0) continue;
      Rat f = M.at(k, j) / M.at(k, k);
      for (long i = 0; i < n; ++i) {
        M.at(i, j) -= f * M.at(i, k);
        M.at(i, j).canonicalize();
      }
    }
  }
  SmithResult sr;
  for (long k = 0; k < n; ++k) sr.d.push_back(val_p(p, M.at(k, k)));
  sr.w_adapted = Wb;
  return sr;
}

}  // namespace

std::vector<LatticeSpan> lattices_between(long p, const LatticeSpan& A,
                                          const LatticeSpan& W,
                                          long max_quotient) {
  if (!span_contained(p, A, W))
    throw std::domain_error("lattices_between: A not contained in W");
  long n = A.rank();
  Mat X = W.basis.inverse().mul(A.basis);
  SmithResult sr = smith_p_local(p, W.basis, X);

  // Quotient element representatives: sum c_i * w_i with c_i in [0, p^{d_i}).
  Int qsize(1);
  for (long d : sr.d) qsize *= pow_int(p, d);
  if (qsize > max_quotient)
    throw BudgetExceeded("lattices_between: quotient too large: " +
                         qsize.get_str());
  long total = static_cast<long>(qsize.get_si());

  std::vector<std::vector<Rat>> elems;
  std::vector<long> counter(n, 0);
  std::vector<long> caps(n);
  for (long i = 0; i < n; ++i)
    caps[i] = static_cast<long>(pow_int(p, sr.d[i]).get_si());
  for (long t = 0; t < total; ++t) {
    std::vector<Rat> v(n, Rat(0));
    bool nonzero = false;
    for (long i = 0; i < n; ++i) {
      if (counter[i] == 0) continue;
      nonzero = true;
      for (long r = 0; r < n; ++r)
        v[r] += Rat(counter[i]) * sr.w_adapted.at(r, i);
    }
    if (nonzero) {
      for (auto& x : v) x.canonicalize();
      elems.push_back(std::move(v));
    }
    long k = 0;
    while (k < n && ++counter[k] == caps[k]) counter[k++] = 0;
  }

  // Close subgroups upward: BFS over joins with single elements.
  std::map<std::string, LatticeSpan> found;
  LatticeSpan base = span_from_generators(p, A.basis);
  found.emplace(lattice_key(base), base);
  std::vector<LatticeSpan> frontier = {base};
  while (!frontier.empty()) {
    std::vector<LatticeSpan> next;
    for (const auto& S : frontier) {
      for (const auto& e : elems) {
        Mat gens(n, n + 1);
        for (long r = 0; r < n; ++r) {
          for (long c = 0; c < n; ++c) gens.at(r, c) = S.basis.at(r, c);
          gens.at(r, n) = e[r];
        }
        LatticeSpan S2 = span_from_generators(p, gens);
        std::string key = lattice_key(S2);
        if (found.emplace(key, S2).second) next.push_back(S2);
      }
    }
    frontier = std::move(next);
  }
  std::vector<LatticeSpan> out;
  out.reserve(found.size());
  for (auto& [k, v] : found) out.push_back(std::move(v));
  return out;
}

LatticeSpan maximal_integral_overlattice(long p, const Mat& ambient_gram,
                                         const LatticeSpan& L0) {
  long n = L0.rank();
  LatticeSpan cur = span_from_generators(p, L0.basis);
  {
    Mat g = span_gram(ambient_gram, cur);
    for (const Rat& x : g.a)
      if (x != 0 && val_p(p, x) < 0)
        throw std::domain_error(
            "maximal_integral_overlattice: start lattice not integral");
  }
  long guard = 0;
  const long guard_max = 200;
  while (true) {
    if (++guard > guard_max)
      throw std::domain_error(
          "maximal_integral_overlattice: growth did not terminate");
    bool grew = false;
    // Try all index-p overlattices cur + Z_p (cur * c / p).
    std::vector<long> c(n, 0);
    while (true) {
      long k = 0;
      while (k < n && ++c[k] == p) c[k++] = 0;
      if (k == n) break;
      Mat gens(n, n + 1);
      for (long r = 0; r < n; ++r) {
        for (long j = 0; j < n; ++j) gens.at(r, j) = cur.basis.at(r, j);
        Rat y(0);
        for (long j = 0; j < n; ++j)
          if (c[j] != 0) y += Rat(c[j]) * cur.basis.at(r, j);
        gens.at(r, n) = y / p;
        gens.at(r, n).canonicalize();
      }
      LatticeSpan cand = span_from_generators(p, gens);
      if (index_exponent(p, cur, cand) == 0) continue;  // same lattice
      Mat g = span_gram(ambient_gram, cand);
      bool ok = true;
      for (const Rat& x : g.a)
        if (x != 0 && val_p(p, x) < 0) {
          ok = false;
          break;
        }
      if (ok) {
        cur = cand;
        grew = true;
        break;
      }
    }
    if (!grew) break;
  }
  return cur;
}

std::vector<std::pair<GramLattice, Mat>> type1_overlattices(
    const GramLattice& L) {
  vertex_type(L);  // validates that L is a vertex lattice
  const long m = L.rank();
  const long p = L.p;
  // Every candidate sits between L and L_dual; enumerate and filter.
  LatticeSpan self{Mat::identity(m)};
  LatticeSpan dual_span{L.gram.inverse()};
  std::vector<std::pair<GramLattice, Mat>> out;
  for (const auto& cand : lattices_between(p, self, dual_span)) {
    GramLattice Lp{p, span_gram(L.gram, cand)};
    if (!is_integral(Lp)) continue;
    bool type_ok = false;
    try {
      type_ok = (vertex_type(Lp) == 1);
    } catch (const std::domain_error&) {
      type_ok = false;
    }
    if (type_ok) out.push_back({Lp, cand.basis});
  }
  return out;
}

Mat random_unimodular(long p, long n, long depth, Rng& rng) {
  long bound = static_cast<long>(pow_int(p, depth).get_si());
  while (true) {
    Mat m(n, n);
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j) m.at(i, j) = Rat(rng.uniform(-bound, bound));
    Rat d = m.det();
    if (d != 0 && val_p(p, d) == 0) return m;
  }
}

}  // namespace latdens
