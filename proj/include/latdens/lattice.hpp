#pragma once
/// \file lattice.hpp
/// Quadratic lattices over Z_p (p odd) presented by exact rational half-Gram
/// matrices: invariants, duals, Jordan decompositions, self-dual
/// classification, cyclic dual quotients, embeddings into self-dual
/// overlattices, vertex lattices, and enumeration of lattices between two
/// nested lattices.
///
/// Conventions.  A lattice is a free Z_p-module with basis e_1..e_m carrying
/// a quadratic form q; the stored matrix is the half-Gram t_ij =
/// (e_i, e_j)/2 where (x, y) = q(x+y) - q(x) - q(y), so t_ii = q(e_i).
/// The full bilinear Gram matrix is 2t.  Since p is odd, 2 is a unit and
/// the two matrices carry the same integrality information.

#include "latdens/basics.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace latdens {

/// A quadratic lattice over Z_p given by its half-Gram matrix in some basis.
struct GramLattice {
  long p = 3;
  Mat gram;  // symmetric, nondegenerate, rational

  long rank() const { return gram.rows; }
};

/// Construct with validation: p odd prime, gram square symmetric
/// nondegenerate.
GramLattice make_lattice(long p, Mat gram);

/// Isometry invariants of the ambient quadratic space L tensor Q_p.
struct SpaceInvariants {
  long dim = 0;
  Rat disc_class;  // canonical square-class representative of
                   // (-1)^{m(m-1)/2} det(half-Gram)
  int chi = 0;     // chi of disc_class: 0 iff its valuation is odd
  int hasse = 1;   // product of Hilbert symbols over a diagonalization
};

/// Canonical square-class representative: p^{v mod 2} * (1 or the least
/// positive nonresidue).
Rat square_class_rep(long p, const Rat& a);

SpaceInvariants invariants(const GramLattice& L);

/// Whether all q-values and pairings are in Z_p (half-Gram entries integral).
bool is_integral(const GramLattice& L);

/// Integral with unit determinant.
bool is_self_dual(const GramLattice& L);

/// The dual lattice {x : (x, L) in Z_p} in a new basis.  Returns the dual's
/// half-Gram and the basis change expressing the dual basis in L-coordinates
/// (columns).  For p odd the inverse half-Gram columns form a dual basis, so
/// dual(L).gram = gram^{-1}; self-dual inputs are returned unchanged with
/// the identity basis change.
std::pair<GramLattice, Mat> dual(const GramLattice& L);

/// One Jordan constituent: p^{scale} times a unimodular diagonal block.
struct JordanBlock {
  long scale = 0;
  Mat unimodular_gram;  // diagonal with unit entries
};

struct JordanDecomposition {
  std::vector<JordanBlock> blocks;  // ascending scale
  Mat basis_change;                 // B with B^T gram B = blockdiag(p^e U)
};

/// Exact Jordan splitting by symmetric elimination (p odd: the result is
/// diagonal, grouped by valuation).
JordanDecomposition jordan_decompose(const GramLattice& L);

/// Complete isometry invariant for p odd: per scale, the rank and the chi of
/// the unit determinant of that block.
struct JordanProfileEntry {
  long scale = 0;
  long rank = 0;
  int det_chi = 0;
  bool operator==(const JordanProfileEntry&) const = default;
};
using JordanProfile = std::vector<JordanProfileEntry>;

JordanProfile jordan_profile(const GramLattice& L);

/// Lattice isometry over Z_p (equal Jordan profiles).
bool is_isometric(const GramLattice& A, const GramLattice& B);

/// Self-dual lattices up to isometry are classified by (rank m, eps) where
/// eps = chi((-1)^{m(m-1)/2} det t).
struct SelfDualClass {
  long m = 0;
  int eps = 1;
};

std::optional<SelfDualClass> classify_self_dual(const GramLattice& L);

/// A self-dual lattice of rank m and sign eps, in diagonal form.
GramLattice self_dual_lattice(long p, long m, int eps);

/// The hyperbolic plane half-Gram [[0,1/2],[1/2,0]].
Mat hyperbolic_plane_gram();

/// L1 perp L2 as a block-diagonal half-Gram.
GramLattice orthogonal_sum(const GramLattice& L1, const GramLattice& L2);

/// The sublattice of L spanned by the columns of basis (in L-coordinates):
/// half-Gram basis^T gram basis.
GramLattice sublattice(const GramLattice& L, const Mat& basis);

/// Cyclic dual quotient L_dual/L isomorphic to Z/p^order, with the chain of
/// intermediate lattices L = L(0) subset L(1) subset ... subset L(floor/2):
/// L(i) = L + Z_p p^{-i} w where w spans the p^order-Jordan line.  Each chain
/// entry carries the basis change from its own coordinates into
/// L-coordinates.  Throws NotCyclic if L_dual/L is not cyclic or L is not
/// integral.
struct CyclicStructure {
  long order = 0;  // exponent: |L_dual/L| = p^order
  std::vector<std::pair<GramLattice, Mat>> chain;
};

CyclicStructure cyclic_structure(const GramLattice& L);

/// Embedding of an integral lattice L with cyclic dual quotient of order
/// p^l (l >= 1) into a self-dual lattice Lsharp of rank m+1, together with
/// the rank-one complement generator x0 and the glue map r.
///
/// Construction: split L = U perp <w> with q(w) = c of valuation l; set
/// q(x0) = -c and v = (w + x0)/p^l, which is isotropic and pairs
/// unimodularly against w; then Lsharp = (L perp <x0>) + Z_p v is self-dual
/// with basis (U-basis, w, v).  The glue map r: <x0>-dual/<x0> -> L-dual/L
/// sends the generator x0/p^l to g = w/p^l, because their sum v lies in
/// Lsharp.
struct SelfDualEmbedding {
  GramLattice L;       // the input, in its Jordan basis (U-part then w)
  Mat L_basis_change;  // Jordan basis of L in original input coordinates
  GramLattice Lsharp;  // self-dual, rank m+1
  Mat iota;            // (m+1) x m, image of L's Jordan basis in Lsharp
  std::vector<Rat> x0;       // in Lsharp coordinates
  Rat q_x0;                  // q(x0) = -c, valuation l
  long l = 0;                // cyclic order exponent
  std::vector<Rat> r_of_mu0; // r(x0/p^l) in L's Jordan coordinates: w/p^l

  /// r applied to the class of j * x0/p^l: the vector j * w/p^l in L's
  /// Jordan coordinates (well defined mod L).
  std::vector<Rat> r_map(long j) const;
};

SelfDualEmbedding embed_into_self_dual(const GramLattice& L);

/// Vertex type: for integral L with p L_dual inside L, the F_p-dimension of
/// L_dual/L.  Throws std::domain_error otherwise.
long vertex_type(const GramLattice& L);

/// A diagonal lattice whose space has the requested invariants, or a domain
/// error when no space does (rank 1 with hasse -1; rank 2 with disc in the
/// class of -1 and hasse -1).
GramLattice space_with_invariants(long p, long dim, const Rat& disc_class,
                                  int hasse);

/// All type-1 vertex lattices containing the vertex lattice L, each with the
/// basis change expressing it in L-coordinates.  These correspond to
/// Lagrangian-complement choices in L_dual/L: overlattices L' = L + Z_p y
/// with y spanning an isotropic subspace of the induced form, filtered to
/// vertex type exactly 1.
std::vector<std::pair<GramLattice, Mat>> type1_overlattices(
    const GramLattice& L);

// ---------------------------------------------------------------------------
// Lattice enumeration utilities
// ---------------------------------------------------------------------------

/// A full-rank lattice in an ambient rational coordinate space, presented by
/// a rational basis matrix (columns).  Two presentations are compared by
/// Hermite-canonical keys.
struct LatticeSpan {
  Mat basis;  // dim x rank, full column rank

  long rank() const { return basis.cols; }
};

/// Canonical key: the column-Hermite normal form of the basis scaled to a
/// common denominator, prefixed by that denominator.
std::string lattice_key(const LatticeSpan& L);

/// p-local column Hermite form of a generating matrix (dim x k rational,
/// full row rank): a square dim x dim basis with pivots p^{e_i} and
/// remaining entries canonical residues.  Two generating sets of the same
/// Z_p-span yield identical forms, so this is a canonical basis.
Mat p_local_hnf(long p, const Mat& gens);

/// The full-rank span generated by the columns of gens (dim x k).
LatticeSpan span_from_generators(long p, const Mat& gens);

/// Whether the column span of A is contained in the column span of B
/// (over Z_p localized at p: denominators prime to p are units and ignored).
bool span_contained(long p, const LatticeSpan& A, const LatticeSpan& B);

/// All lattices L with A subseteq L subseteq W, where A and W are full-rank
/// spans in the same coordinates with A subseteq W and [W : A] a p-power.
/// Enumerated by closing subgroups of W/A; throws BudgetExceeded if the
/// quotient has more than max_quotient elements.
std::vector<LatticeSpan> lattices_between(long p, const LatticeSpan& A,
                                          const LatticeSpan& W,
                                          long max_quotient = 100000);

/// The half-Gram of a span inside an ambient quadratic space with half-Gram
/// ambient_gram: basis^T ambient_gram basis.
Mat span_gram(const Mat& ambient_gram, const LatticeSpan& L);

/// Index [B : A] as a p-power exponent for nested full-rank spans A inside B
/// (p-part only; prime-to-p factors of the determinant ratio are units).
long index_exponent(long p, const LatticeSpan& A, const LatticeSpan& B);

/// The maximal integral lattice containing L0 in an anisotropic space:
/// repeatedly absorbs index-p overlattices that stay integral.  Terminates
/// because the discriminant valuation strictly drops.  Throws
/// std::domain_error if growth does not terminate within valuation bounds
/// (which would mean the space is isotropic in the searched directions).
LatticeSpan maximal_integral_overlattice(long p, const Mat& ambient_gram,
                                         const LatticeSpan& L0);

/// Random unimodular (det prime to p) integer matrix, entries in
/// [-p^depth, p^depth].
Mat random_unimodular(long p, long n, long depth, Rng& rng);

}  // namespace latdens
