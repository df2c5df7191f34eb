#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "freecircle/error.hpp"

namespace freecircle {

// Formal power series in one variable, truncated at z^K. Coefficient k is
// stored at index k, so a series of order K always holds K+1 scalars.
template <typename Scalar_>
class TruncatedSeries {
 public:
  using Scalar = Scalar_;
  using Coeffs = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit TruncatedSeries(int order) : coeffs_(Coeffs::Zero(check_order(order) + 1)) {}

  explicit TruncatedSeries(Coeffs coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.size() < 2) {
      throw Error(ErrorKind::OrderMismatch, "series needs at least two coefficients");
    }
  }

  // Coefficients listed from z^0 upward, zero-padded to `order`.
  TruncatedSeries(int order, std::initializer_list<Scalar> leading) : TruncatedSeries(order) {
    if (static_cast<int>(leading.size()) > order + 1) {
      throw Error(ErrorKind::OrderMismatch, "more coefficients than the truncation order allows");
    }
    int k = 0;
    for (const Scalar& c : leading) coeffs_[k++] = c;
  }

  static TruncatedSeries zero(int order) { return TruncatedSeries(order); }

  static TruncatedSeries constant(int order, Scalar c) {
    TruncatedSeries s(order);
    s.coeffs_[0] = c;
    return s;
  }

  static TruncatedSeries one(int order) { return constant(order, Scalar(1)); }

  // The series `z`.
  static TruncatedSeries identity(int order) {
    TruncatedSeries s(order);
    if (order >= 1) s.coeffs_[1] = Scalar(1);
    return s;
  }

  int order() const { return static_cast<int>(coeffs_.size()) - 1; }

  const Coeffs& coeffs() const { return coeffs_; }
  Coeffs& coeffs() { return coeffs_; }

  const Scalar& operator[](int k) const { return coeffs_[k]; }
  Scalar& operator[](int k) { return coeffs_[k]; }

  // Horner evaluation of the truncated polynomial.
  Scalar evaluate(const Scalar& z) const {
    Scalar acc = coeffs_[order()];
    for (int k = order() - 1; k >= 0; --k) acc = acc * z + coeffs_[k];
    return acc;
  }

  template <typename Other>
  TruncatedSeries<Other> cast() const {
    typename TruncatedSeries<Other>::Coeffs c(coeffs_.size());
    for (Eigen::Index k = 0; k < coeffs_.size(); ++k) c[k] = static_cast<Other>(coeffs_[k]);
    return TruncatedSeries<Other>(std::move(c));
  }

  // Same coefficients, truncated or zero-extended to `order`.
  TruncatedSeries with_order(int order) const {
    TruncatedSeries s(order);
    const int n = std::min(order, this->order()) + 1;
    s.coeffs_.head(n) = coeffs_.head(n);
    return s;
  }

 private:
  static int check_order(int order) {
    if (order < 1) throw Error(ErrorKind::OrderMismatch, "truncation order must be positive");
    return order;
  }

  Coeffs coeffs_;
};

using Series = TruncatedSeries<std::complex<double>>;

namespace detail {

template <typename Scalar>
void require_same_order(const TruncatedSeries<Scalar>& a, const TruncatedSeries<Scalar>& b,
                        const char* op) {
  if (a.order() != b.order()) {
    throw Error(ErrorKind::OrderMismatch,
                std::string(op) + ": order mismatch (" + std::to_string(a.order()) + " vs " +
                    std::to_string(b.order()) + ")");
  }
}

template <typename Scalar>
bool is_zero(const Scalar& x) {
  return x == Scalar(0);
}

}  // namespace detail

template <typename Scalar>
Scalar coeff(const TruncatedSeries<Scalar>& f, int k) {
  if (k < 0 || k > f.order()) {
    throw Error(ErrorKind::IndexOutOfRange,
                "coefficient index " + std::to_string(k) + " outside 0.." + std::to_string(f.order()));
  }
  return f[k];
}

template <typename Scalar>
TruncatedSeries<Scalar> add(const TruncatedSeries<Scalar>& a, const TruncatedSeries<Scalar>& b) {
  detail::require_same_order(a, b, "add");
  return TruncatedSeries<Scalar>(typename TruncatedSeries<Scalar>::Coeffs(a.coeffs() + b.coeffs()));
}

template <typename Scalar>
TruncatedSeries<Scalar> sub(const TruncatedSeries<Scalar>& a, const TruncatedSeries<Scalar>& b) {
  detail::require_same_order(a, b, "sub");
  return TruncatedSeries<Scalar>(typename TruncatedSeries<Scalar>::Coeffs(a.coeffs() - b.coeffs()));
}

template <typename Scalar>
TruncatedSeries<Scalar> scale(const TruncatedSeries<Scalar>& a, const Scalar& s) {
  return TruncatedSeries<Scalar>(typename TruncatedSeries<Scalar>::Coeffs(a.coeffs() * s));
}

// Cauchy product, dropping everything above z^K.
template <typename Scalar>
TruncatedSeries<Scalar> mul(const TruncatedSeries<Scalar>& a, const TruncatedSeries<Scalar>& b) {
  detail::require_same_order(a, b, "mul");
  const int K = a.order();
  TruncatedSeries<Scalar> r(K);
  for (int i = 0; i <= K; ++i) {
    if (detail::is_zero(a[i])) continue;
    for (int j = 0; i + j <= K; ++j) r[i + j] += a[i] * b[j];
  }
  return r;
}

template <typename Scalar>
TruncatedSeries<Scalar> reciprocal(const TruncatedSeries<Scalar>& a) {
  if (detail::is_zero(a[0])) {
    throw Error(ErrorKind::NotInvertible, "reciprocal: constant term is zero");
  }
  const int K = a.order();
  TruncatedSeries<Scalar> r(K);
  const Scalar inv0 = Scalar(1) / a[0];
  r[0] = inv0;
  for (int k = 1; k <= K; ++k) {
    Scalar acc(0);
    for (int j = 1; j <= k; ++j) acc += a[j] * r[k - j];
    r[k] = -acc * inv0;
  }
  return r;
}

// f(z) / z for f(0) = 0; the result is one order shorter.
template <typename Scalar>
TruncatedSeries<Scalar> divide_by_z(const TruncatedSeries<Scalar>& f) {
  if (!detail::is_zero(f[0])) {
    throw Error(ErrorKind::CompositionDomain, "divide_by_z: constant term is nonzero");
  }
  if (f.order() < 2) {
    TruncatedSeries<Scalar> r(1);
    r[0] = f[1];
    return r;
  }
  return TruncatedSeries<Scalar>(typename TruncatedSeries<Scalar>::Coeffs(f.coeffs().tail(f.order())));
}

// z * f(z), same order (the top coefficient of f falls off).
template <typename Scalar>
TruncatedSeries<Scalar> multiply_by_z(const TruncatedSeries<Scalar>& f) {
  TruncatedSeries<Scalar> r(f.order());
  r.coeffs().tail(f.order()) = f.coeffs().head(f.order());
  return r;
}

// f(g(z)) by Horner accumulation; needs g(0) = 0.
template <typename Scalar>
TruncatedSeries<Scalar> compose(const TruncatedSeries<Scalar>& f, const TruncatedSeries<Scalar>& g) {
  detail::require_same_order(f, g, "compose");
  if (!detail::is_zero(g[0])) {
    throw Error(ErrorKind::CompositionDomain, "compose: inner series has a nonzero constant term");
  }
  const int K = f.order();
  auto acc = TruncatedSeries<Scalar>::constant(K, f[K]);
  for (int k = K - 1; k >= 0; --k) {
    acc = mul(acc, g);
    acc[0] += f[k];
  }
  return acc;
}

// Compositional inverse through Lagrange's residue form:
//   g_k = (1/k) [z^{k-1}] (z / f(z))^k.
// Requires f(0) = 0 and f'(0) != 0; then g_1 = 1 / f_1.
template <typename Scalar>
TruncatedSeries<Scalar> revert(const TruncatedSeries<Scalar>& f) {
  if (!detail::is_zero(f[0])) {
    throw Error(ErrorKind::NotInvertible, "revert: constant term is nonzero");
  }
  if (detail::is_zero(f[1])) {
    throw Error(ErrorKind::NotInvertible, "revert: linear coefficient is zero");
  }
  const int K = f.order();
  // (z/f)^k only matters through z^{K-1}.
  const int M = std::max(K - 1, 1);
  const auto quotient = divide_by_z(f).with_order(M);
  const auto h = reciprocal(quotient);
  TruncatedSeries<Scalar> g(K);
  auto power = TruncatedSeries<Scalar>::one(M);
  for (int k = 1; k <= K; ++k) {
    power = mul(power, h);
    g[k] = power[k - 1] / Scalar(k);
  }
  return g;
}

template <typename Scalar>
TruncatedSeries<Scalar> operator+(const TruncatedSeries<Scalar>& a, const TruncatedSeries<Scalar>& b) {
  return add(a, b);
}

template <typename Scalar>
TruncatedSeries<Scalar> operator-(const TruncatedSeries<Scalar>& a, const TruncatedSeries<Scalar>& b) {
  return sub(a, b);
}

template <typename Scalar>
TruncatedSeries<Scalar> operator*(const TruncatedSeries<Scalar>& a, const TruncatedSeries<Scalar>& b) {
  return mul(a, b);
}

// Largest coefficient-wise absolute difference; orders must agree.
template <typename Scalar>
double max_abs_diff(const TruncatedSeries<Scalar>& a, const TruncatedSeries<Scalar>& b) {
  detail::require_same_order(a, b, "max_abs_diff");
  double worst = 0.0;
  for (int k = 0; k <= a.order(); ++k) {
    worst = std::max(worst, static_cast<double>(std::abs(a[k] - b[k])));
  }
  return worst;
}

}  // namespace freecircle
