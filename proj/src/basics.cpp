#include "latdens/basics.hpp"

#include <sstream>

namespace latdens {

Int pow_int(long p, long e) {
  if (e < 0) throw std::domain_error("pow_int: negative exponent");
  Int r;
  mpz_ui_pow_ui(r.get_mpz_t(), static_cast<unsigned long>(p),
                static_cast<unsigned long>(e));
  return r;
}

Rat pow_rat(long p, long e) {
  if (e >= 0) return Rat(pow_int(p, e));
  return Rat(1) / Rat(pow_int(p, -e));
}

long val_p(long p, const Int& x) {
  if (x == 0) return kValInfinity;
  Int t = x;
  long v = 0;
  while (mpz_divisible_ui_p(t.get_mpz_t(), static_cast<unsigned long>(p))) {
    mpz_divexact_ui(t.get_mpz_t(), t.get_mpz_t(),
                    static_cast<unsigned long>(p));
    ++v;
  }
  return v;
}

long val_p(long p, const Rat& x) {
  if (x == 0) return kValInfinity;
  return val_p(p, x.get_num()) - val_p(p, x.get_den());
}

Rat unit_part(long p, const Rat& x) {
  if (x == 0) throw std::domain_error("unit_part of 0");
  long v = val_p(p, x);
  Rat r;
  if (v >= 0)
    r = x / Rat(pow_int(p, v));
  else
    r = x * Rat(pow_int(p, -v));
  r.canonicalize();
  return r;
}

int legendre(const Int& a, long p) {
  Int pp(p);
  int s = mpz_legendre(a.get_mpz_t(), pp.get_mpz_t());
  return s;
}

int chi(long p, const Rat& a) {
  if (a == 0) throw std::domain_error("chi of 0");
  long v = val_p(p, a);
  if (v % 2 != 0) return 0;
  Rat u = unit_part(p, a);
  // u = num/den with both prime to p; chi(u) = legendre(num * den) since
  // den^2 is a square.
  Int m = u.get_num() * u.get_den();
  return legendre(m, p);
}

int hilbert_symbol(long p, const Rat& a, const Rat& b) {
  if (a == 0 || b == 0) throw std::domain_error("hilbert_symbol of 0");
  long alpha = val_p(p, a), beta = val_p(p, b);
  Rat u = unit_part(p, a), v = unit_part(p, b);
  int chi_u = legendre(u.get_num() * u.get_den(), p);
  int chi_v = legendre(v.get_num() * v.get_den(), p);
  int chi_m1 = legendre(Int(-1), p);
  int s = 1;
  if ((alpha % 2 != 0) && (beta % 2 != 0)) s *= chi_m1;
  if (beta % 2 != 0) s *= chi_u;
  if (alpha % 2 != 0) s *= chi_v;
  return s;
}

long least_nonresidue(long p) {
  for (long u = 2; u < p; ++u)
    if (legendre(Int(u), p) == -1) return u;
  throw std::logic_error("no nonresidue found");
}

QHalf::QHalf(Rat value, long half_q_exp, long q) {
  r = std::move(value);
  if (r == 0) {
    half = 0;
    return;
  }
  // Fold integral powers of q into r: value * q^{e/2} with e = 2k + half.
  long k = (half_q_exp >= 0) ? half_q_exp / 2 : -((-half_q_exp + 1) / 2);
  half = static_cast<int>(half_q_exp - 2 * k);  // 0 or 1
  if (k >= 0)
    r *= Rat(pow_int(q, k));
  else
    r /= Rat(pow_int(q, -k));
  r.canonicalize();
}

QHalf QHalf::mul(const QHalf& other, long q) const {
  if (is_zero() || other.is_zero()) return QHalf::zero();
  return QHalf(r * other.r, half + other.half, q);
}

QHalf QHalf::add(const QHalf& other) const {
  if (is_zero()) return other;
  if (other.is_zero()) return *this;
  if (half != other.half)
    throw std::domain_error(
        "QHalf::add: mixed integral/half-integral q-exponents");
  QHalf v;
  v.r = r + other.r;
  v.r.canonicalize();
  v.half = v.r == 0 ? 0 : half;
  return v;
}

QHalf QHalf::scale(const Rat& c) const {
  if (c == 0) return QHalf::zero();
  QHalf v = *this;
  v.r *= c;
  v.r.canonicalize();
  if (v.r == 0) v.half = 0;
  return v;
}

std::string QHalf::to_string() const {
  std::ostringstream os;
  os << r.get_str();
  if (half != 0 && r != 0) os << "*q^(1/2)";
  return os.str();
}

void Poly::trim() {
  while (!coeffs.empty() && coeffs.back() == 0) coeffs.pop_back();
}

long Poly::degree() const { return static_cast<long>(coeffs.size()) - 1; }

Rat Poly::eval(const Rat& x) const {
  Rat acc = 0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it)
    acc = acc * x + *it;
  acc.canonicalize();
  return acc;
}

Poly Poly::derivative() const {
  if (coeffs.size() <= 1) return Poly();
  std::vector<Rat> d(coeffs.size() - 1);
  for (std::size_t i = 1; i < coeffs.size(); ++i)
    d[i - 1] = coeffs[i] * Rat(static_cast<long>(i));
  return Poly(std::move(d));
}

Poly Poly::add(const Poly& other) const {
  std::vector<Rat> c(std::max(coeffs.size(), other.coeffs.size()), Rat(0));
  for (std::size_t i = 0; i < coeffs.size(); ++i) c[i] += coeffs[i];
  for (std::size_t i = 0; i < other.coeffs.size(); ++i) c[i] += other.coeffs[i];
  return Poly(std::move(c));
}

Poly Poly::sub(const Poly& other) const {
  return add(other.scale(Rat(-1)));
}

Poly Poly::mul(const Poly& other) const {
  if (coeffs.empty() || other.coeffs.empty()) return Poly();
  std::vector<Rat> c(coeffs.size() + other.coeffs.size() - 1, Rat(0));
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    for (std::size_t j = 0; j < other.coeffs.size(); ++j)
      c[i + j] += coeffs[i] * other.coeffs[j];
  return Poly(std::move(c));
}

Poly Poly::scale(const Rat& c) const {
  std::vector<Rat> d = coeffs;
  for (auto& x : d) x *= c;
  return Poly(std::move(d));
}

std::string Poly::to_string() const {
  if (coeffs.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (coeffs[i] == 0) continue;
    if (!first) os << " + ";
    os << "(" << coeffs[i].get_str() << ")";
    if (i >= 1) os << "*X";
    if (i >= 2) os << "^" << i;
    first = false;
  }
  return os.str();
}

Poly lagrange_interpolate(const std::vector<std::pair<Rat, Rat>>& nodes) {
  // Newton's divided differences, then expansion: exact and O(k^2).
  const std::size_t k = nodes.size();
  if (k == 0) return Poly();
  std::vector<Rat> coef(k);
  for (std::size_t i = 0; i < k; ++i) coef[i] = nodes[i].second;
  for (std::size_t j = 1; j < k; ++j)
    for (std::size_t i = k - 1; i >= j; --i) {
      Rat dx = nodes[i].first - nodes[i - j].first;
      if (dx == 0)
        throw std::domain_error("lagrange_interpolate: repeated node");
      coef[i] = (coef[i] - coef[i - 1]) / dx;
      coef[i].canonicalize();
      if (i == j) break;
    }
  // Horner expansion of the Newton form.
  Poly result = Poly::constant(coef[k - 1]);
  for (std::size_t j = k - 1; j-- > 0;) {
    Poly x_minus({-nodes[j].first, Rat(1)});
    result = result.mul(x_minus).add(Poly::constant(coef[j]));
  }
  return result;
}

Mat Mat::identity(long n) {
  Mat m(n, n);
  for (long i = 0; i < n; ++i) m.at(i, i) = 1;
  return m;
}

Mat Mat::transpose() const {
  Mat m(cols, rows);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) m.at(j, i) = at(i, j);
  return m;
}

Mat Mat::mul(const Mat& other) const {
  if (cols != other.rows) throw std::domain_error("Mat::mul: shape mismatch");
  Mat m(rows, other.cols);
  for (long i = 0; i < rows; ++i)
    for (long k = 0; k < cols; ++k) {
      if (at(i, k) == 0) continue;
      for (long j = 0; j < other.cols; ++j)
        m.at(i, j) += at(i, k) * other.at(k, j);
    }
  for (auto& x : m.a) x.canonicalize();
  return m;
}

Mat Mat::add(const Mat& other) const {
  if (rows != other.rows || cols != other.cols)
    throw std::domain_error("Mat::add: shape mismatch");
  Mat m = *this;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m.a[i] += other.a[i];
    m.a[i].canonicalize();
  }
  return m;
}

Mat Mat::scale(const Rat& c) const {
  Mat m = *this;
  for (auto& x : m.a) {
    x *= c;
    x.canonicalize();
  }
  return m;
}

Rat Mat::det() const {
  if (rows != cols) throw std::domain_error("Mat::det: not square");
  Mat m = *this;
  Rat d = 1;
  for (long c = 0; c < cols; ++c) {
    long pivot = -1;
    for (long r = c; r < rows; ++r)
      if (m.at(r, c) != 0) {
        pivot = r;
        break;
      }
    if (pivot < 0) return Rat(0);
    if (pivot != c) {
      for (long j = 0; j < cols; ++j) std::swap(m.at(pivot, j), m.at(c, j));
      d = -d;
    }
    d *= m.at(c, c);
    Rat inv = 1 / m.at(c, c);
    for (long r = c + 1; r < rows; ++r) {
      if (m.at(r, c) == 0) continue;
      Rat f = m.at(r, c) * inv;
      for (long j = c; j < cols; ++j) m.at(r, j) -= f * m.at(c, j);
    }
  }
  d.canonicalize();
  return d;
}

Mat Mat::inverse() const {
  if (rows != cols) throw std::domain_error("Mat::inverse: not square");
  Mat m = *this;
  Mat inv = Mat::identity(rows);
  for (long c = 0; c < cols; ++c) {
    long pivot = -1;
    for (long r = c; r < rows; ++r)
      if (m.at(r, c) != 0) {
        pivot = r;
        break;
      }
    if (pivot < 0) throw std::domain_error("Mat::inverse: singular");
    if (pivot != c)
      for (long j = 0; j < cols; ++j) {
        std::swap(m.at(pivot, j), m.at(c, j));
        std::swap(inv.at(pivot, j), inv.at(c, j));
      }
    Rat piv_inv = 1 / m.at(c, c);
    for (long j = 0; j < cols; ++j) {
      m.at(c, j) *= piv_inv;
      inv.at(c, j) *= piv_inv;
    }
    for (long r = 0; r < rows; ++r) {
      if (r == c || m.at(r, c) == 0) continue;
      Rat f = m.at(r, c);
      for (long j = 0; j < cols; ++j) {
        m.at(r, j) -= f * m.at(c, j);
        inv.at(r, j) -= f * inv.at(c, j);
      }
    }
  }
  for (auto& x : inv.a) x.canonicalize();
  return inv;
}

std::string Mat::to_string() const {
  std::ostringstream os;
  os << "[";
  for (long i = 0; i < rows; ++i) {
    os << (i ? "; " : "");
    for (long j = 0; j < cols; ++j) os << (j ? "," : "") << at(i, j).get_str();
  }
  os << "]";
  return os.str();
}

long Rng::uniform(long lo, long hi) {
  std::uniform_int_distribution<long> dist(lo, hi);
  return dist(engine);
}

}  // namespace latdens
