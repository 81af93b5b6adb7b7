#pragma once
/// \file counting.hpp
/// Exact representation counting over Z/p^d and local representation
/// densities.
///
/// The fundamental count is
///   N_d(M, L) = #{ A in Mat_{m x n}(Z/p^d) : A^T G_M A = G_L mod p^d }
/// where G are full bilinear Gram matrices (twice the stored half-Gram),
/// m = rank M (the representing lattice), n = rank L (the represented one),
/// and the congruence is entrywise valuation >= d.  Matrix entries are
/// enumerated as integer representatives in [0, p^d); for integral M the
/// count only depends on residue classes.
///
/// The local density is the stabilized value of N_d / q^{d dim}, with
/// dim = mn - n(n+1)/2.
///
/// Two independent implementations are provided: a literal enumeration
/// (count_reps_naive) and a tiered fast engine (count_reps_fast) built on
/// coordinate convolutions and orbit-bucketed pair tables.  They must agree
/// everywhere.

#include "latdens/lattice.hpp"

namespace latdens {

struct CountBudget {
  long max_enumeration = 100000000;  // 10^8
};

/// Literal enumeration with hierarchical early exit (column by column).
/// Throws BudgetExceeded when p^{dmn} exceeds the budget.
Int count_reps_naive(const GramLattice& M, const GramLattice& L, long d,
                     const CountBudget& budget = {});

/// Same, restricted to primitive A (columns linearly independent mod p).
Int count_reps_naive_primitive(const GramLattice& M, const GramLattice& L,
                               long d, const CountBudget& budget = {});

/// Fast structured counter; agrees with count_reps_naive exactly.
/// Supports rank(L) <= 3 (rank 3 only for unimodular M).
Int count_reps_fast(const GramLattice& M, const GramLattice& L, long d,
                    const CountBudget& budget = {});

/// n = 1 specialization: #{v in (Z/p^d)^m : q(v) = t mod p^d} by
/// per-coordinate convolution of a diagonalization of M.
Int count_vector_reps_diag(const GramLattice& M, const Rat& t, long d,
                           const CountBudget& budget = {});

/// Coset-translated Gram count: columns v_j run over mu_j + (integer
/// representatives in [0, p^{cmod})^m) in the coordinates of L, and the
/// conditions are val(t(v_i, v_j) - T_ij) >= d.  When cmod < 0 it defaults
/// to d + (max denominator exponent of the shifts) + 1, which makes the
/// representatives well defined modulo the coset denominators.
struct CosetSpec {
  std::vector<std::vector<Rat>> mu;  // n columns, each an m-vector
  Mat T;                             // n x n half-Gram target
};

Int coset_gram_count(const GramLattice& L, const CosetSpec& spec, long d,
                     long cmod = -1, const CountBudget& budget = {});

/// mn - n(n+1)/2, the fiber dimension of the representation scheme.
long dim_rep(long m, long n);

/// Default stabilization depth 2 val_p(det 2 G_L) + 3 (at least 1) for the
/// target lattice L.
long stabilization_floor(const GramLattice& L);

struct RepCountReport {
  std::vector<long> d_values;
  std::vector<Int> raw_counts;
  std::vector<Rat> normalized;
  long dim_rep = 0;
  long stabilized_at = -1;
  Rat value;
};

/// Representation density Den(M, L): normalized count at the stabilization
/// depth, verified by an equal value at depth + 1 (depth grows on mismatch;
/// PrecisionExhausted after a few attempts).
RepCountReport den_report(const GramLattice& M, const GramLattice& L,
                          const CountBudget& budget = {});
Rat den(const GramLattice& M, const GramLattice& L,
        const CountBudget& budget = {});

/// Primitive representation density Pden(M, L): same normalization, count
/// restricted to primitive A.
RepCountReport pden_report(const GramLattice& M, const GramLattice& L,
                           const CountBudget& budget = {});
Rat pden(const GramLattice& M, const GramLattice& L,
         const CountBudget& budget = {});

// ---------------------------------------------------------------------------
// Generalized core (exposed for the coset-value and density modules)
// ---------------------------------------------------------------------------

/// Depth entries at or below this sentinel impose no condition.  All other
/// depth values are enforced literally, including 0 and small negative
/// values, which are genuine constraints when the form or the target has
/// denominators.
inline constexpr long kVacuousDepth = -1000000;

/// A fully general counting problem in diagonal source coordinates:
/// columns v_j = shift_j + x_j with x_j integer representatives in
/// [0, p^{cmod_j})^m, source form q(v) = sum source_diag_i v_i^2, and
/// conditions val(t(v_i, v_j) - target_ij) >= depth_ij for every entry
/// whose depth exceeds kVacuousDepth (upper triangle is authoritative).
struct GenCountProblem {
  long p = 3;
  std::vector<Rat> source_diag;
  std::vector<std::vector<Rat>> shifts;  // may be empty (all zero)
  Mat target;
  std::vector<std::vector<long>> depth;
  std::vector<long> cmod;
};

Int generalized_count(const GenCountProblem& prob,
                      const CountBudget& budget = {});

/// Literal nested-loop evaluation of the same problem (for cross-checks).
Int generalized_count_naive(const GenCountProblem& prob,
                            const CountBudget& budget = {});

// ---------------------------------------------------------------------------
// Internal cross-check hooks (used by the unit tests only)
// ---------------------------------------------------------------------------

namespace detail {

/// Closed-form #{ v in (Z/p^s)^rr : q(v) = g mod p^s } for the canonical
/// diagonal unimodular form of rank rr with chi(det) = chi_det.
Int unimodular_value_count(long p, long rr, int chi_det, long s, long long g);

/// One aggregated pair-distribution bin, read from the enumerated table:
/// #{ (v, w) in ((Z/p^Mt)^{r0})^2 : q(v) = k11 mod p^a,
///    t(v, w) = k12 mod p^b, q(w) = k22 mod p^c }.
Int pair_table_value(long p, long r0, int chi_det, long Mt, long a, long b,
                     long c, long long k11, long long k12, long long k22);

/// The same bin computed by the enumeration-free orbit probe.
Int pair_probe_value(long p, long r0, int chi_det, long Mt, long a, long b,
                     long c, long long k11, long long k12, long long k22);

}  // namespace detail

}  // namespace latdens
