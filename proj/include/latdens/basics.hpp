#pragma once
/// \file basics.hpp
/// Exact p-adic scalar arithmetic: valuations, quadratic characters, Hilbert
/// symbols, half-integral powers of q, and exact rational polynomials.
///
/// Everything is exact: integers are GMP mpz, rationals are GMP mpq.  The
/// residue field size q equals p throughout (p an odd prime), but the two
/// roles are kept separate in formulas: p is the uniformizer, q the count of
/// residues.

#include <gmpxx.h>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace latdens {

using Int = mpz_class;
using Rat = mpq_class;

/// Thrown when an enumeration would exceed the configured budget.
struct BudgetExceeded : std::runtime_error {
  explicit BudgetExceeded(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when a computation cannot reach the precision it needs.
struct PrecisionExhausted : std::runtime_error {
  explicit PrecisionExhausted(const std::string& what)
      : std::runtime_error(what) {}
};

/// Thrown when a polynomial degree bound is too small to fit the data.
struct DegreeBoundTooSmall : std::runtime_error {
  explicit DegreeBoundTooSmall(const std::string& what)
      : std::runtime_error(what) {}
};

/// Thrown when a torsion group that must be cyclic is not.
struct NotCyclic : std::runtime_error {
  explicit NotCyclic(const std::string& what) : std::runtime_error(what) {}
};

/// Ambient prime data.  q is the residue field size; for Z_p this is p.
struct PrimeContext {
  long p = 3;
  long q = 3;

  explicit PrimeContext(long prime) : p(prime), q(prime) {
    if (prime < 3 || prime % 2 == 0)
      throw std::domain_error("PrimeContext: p must be an odd prime >= 3");
  }
};

/// Sentinel for the valuation of zero (treated as +infinity).
inline constexpr long kValInfinity = 1L << 30;

/// p^e as an exact integer (e >= 0).
Int pow_int(long p, long e);

/// p^e as an exact rational, any sign of e.
Rat pow_rat(long p, long e);

/// p-adic valuation of a nonzero rational; val_p(0) = kValInfinity.
long val_p(long p, const Rat& x);
long val_p(long p, const Int& x);

/// The p-unit part x / p^{val_p(x)}; error on 0.
Rat unit_part(long p, const Rat& x);

/// Legendre symbol of an integer mod an odd prime: +1 / -1 / 0.
int legendre(const Int& a, long p);

/// Quadratic character of Q_p^* / squares: chi(a) = legendre of the unit
/// part when val_p(a) is even, 0 when val_p(a) is odd.  chi(0) is an error.
int chi(long p, const Rat& a);

/// Hilbert symbol (a, b)_p in {+1, -1} for nonzero rationals, p odd:
/// with a = p^alpha u, b = p^beta v it equals
/// chi(-1)^{alpha beta} chi(u)^beta chi(v)^alpha.
int hilbert_symbol(long p, const Rat& a, const Rat& b);

/// The least positive quadratic nonresidue mod p.
long least_nonresidue(long p);

/// Exact value r * q^{e/2} with e folded into {0, 1}: integral powers of q
/// are absorbed into the rational r, so the representation is canonical.
/// Values with e = 1 are irrational; addition across different e is only
/// defined when one side is zero.
struct QHalf {
  Rat r = 0;
  int half = 0;  // 0 or 1

  QHalf() = default;
  QHalf(Rat value, long half_q_exp, long q);  // canonicalizes the exponent
  static QHalf zero() { return QHalf{}; }
  static QHalf from_rat(const Rat& value) {
    QHalf v;
    v.r = value;
    v.r.canonicalize();
    return v;
  }
  /// scale * q^{e/2} for an arbitrary integer e.
  static QHalf q_power(long q, long e, const Rat& scale = 1) {
    return QHalf(scale, e, q);
  }

  bool is_zero() const { return r == 0; }
  QHalf mul(const QHalf& other, long q) const;
  QHalf add(const QHalf& other) const;  // error if mixed nonzero exponents
  QHalf scale(const Rat& c) const;
  bool operator==(const QHalf& other) const {
    if (is_zero() && other.is_zero()) return true;
    return r == other.r && half == other.half;
  }
  std::string to_string() const;
};

/// Dense exact polynomial in one variable X, coefficients low-to-high.
struct Poly {
  std::vector<Rat> coeffs;

  Poly() = default;
  explicit Poly(std::vector<Rat> c) : coeffs(std::move(c)) { trim(); }
  static Poly constant(const Rat& c) { return Poly({c}); }

  void trim();
  long degree() const;  // -1 for the zero polynomial
  Rat eval(const Rat& x) const;
  Poly derivative() const;
  Poly add(const Poly& other) const;
  Poly sub(const Poly& other) const;
  Poly mul(const Poly& other) const;
  Poly scale(const Rat& c) const;
  bool operator==(const Poly& other) const { return coeffs == other.coeffs; }
  std::string to_string() const;
};

/// Exact interpolation through distinct nodes (x_i, y_i); the result is the
/// unique polynomial of degree < #nodes through all of them.
Poly lagrange_interpolate(const std::vector<std::pair<Rat, Rat>>& nodes);

/// Small dense exact rational matrices, row-major.
struct Mat {
  long rows = 0, cols = 0;
  std::vector<Rat> a;

  Mat() = default;
  Mat(long r, long c) : rows(r), cols(c), a(r * c, Rat(0)) {}
  static Mat identity(long n);

  Rat& at(long i, long j) { return a[i * cols + j]; }
  const Rat& at(long i, long j) const { return a[i * cols + j]; }

  Mat transpose() const;
  Mat mul(const Mat& other) const;
  Mat add(const Mat& other) const;
  Mat scale(const Rat& c) const;
  Rat det() const;           // square only
  Mat inverse() const;       // square, nonsingular; exact Gauss-Jordan
  bool operator==(const Mat& other) const {
    return rows == other.rows && cols == other.cols && a == other.a;
  }
  std::string to_string() const;
};

/// Deterministic RNG for reproducible sampling.
struct Rng {
  std::mt19937_64 engine;
  explicit Rng(std::uint64_t seed) : engine(seed) {}
  /// Uniform integer in [lo, hi].
  long uniform(long lo, long hi);
};

}  // namespace latdens
