#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ihoc/error.hpp"

namespace ihoc::ad {

/// Forward-mode dual number. An empty partial vector stands for a constant,
/// so constants never need to know the number of seeded variables. Nesting
/// Dual<Dual<double>> yields second derivatives.
template <typename T>
struct Dual {
  T v{};
  std::vector<T> d;

  Dual() = default;
  Dual(double c) : v(c) {}  // NOLINT(google-explicit-constructor)
  Dual(T value, std::vector<T> partials) : v(std::move(value)), d(std::move(partials)) {}
};

inline double value_of(double x) { return x; }
template <typename T>
double value_of(const Dual<T>& x) {
  return value_of(x.v);
}

inline bool has_partials(double) { return false; }
template <typename T>
bool has_partials(const Dual<T>& x) {
  return !x.d.empty();
}

namespace detail {

template <typename T>
Dual<T> chain(const Dual<T>& a, T value, const T& slope) {
  Dual<T> r{std::move(value), {}};
  r.d.reserve(a.d.size());
  for (const T& di : a.d) r.d.push_back(slope * di);
  return r;
}

template <typename T, typename F>
std::vector<T> combine(const std::vector<T>& a, const std::vector<T>& b, F op) {
  const std::size_t n = std::max(a.size(), b.size());
  std::vector<T> out;
  out.reserve(n);
  const T zero(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(op(i < a.size() ? a[i] : zero, i < b.size() ? b[i] : zero));
  }
  return out;
}

[[noreturn]] inline void domain(const char* what) { throw Error(ErrorKind::DomainError, what); }

}  // namespace detail

template <typename T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
  return {a.v + b.v, detail::combine(a.d, b.d, [](const T& x, const T& y) { return x + y; })};
}

template <typename T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
  return {a.v - b.v, detail::combine(a.d, b.d, [](const T& x, const T& y) { return x - y; })};
}

template <typename T>
Dual<T> operator-(const Dual<T>& a) {
  return detail::chain(a, T(-a.v), T(-1.0));
}

template <typename T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
  const T& av = a.v;
  const T& bv = b.v;
  return {a.v * b.v,
          detail::combine(a.d, b.d, [&](const T& x, const T& y) { return x * bv + av * y; })};
}

template <typename T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  if (value_of(b) == 0.0) detail::domain("division by zero");
  const T inv = T(1.0) / b.v;
  const T q = a.v * inv;
  return {q, detail::combine(a.d, b.d, [&](const T& x, const T& y) { return (x - q * y) * inv; })};
}

template <typename T>
Dual<T> sin(const Dual<T>& a) {
  using std::cos;
  using std::sin;
  return detail::chain(a, T(sin(a.v)), T(cos(a.v)));
}

template <typename T>
Dual<T> cos(const Dual<T>& a) {
  using std::cos;
  using std::sin;
  return detail::chain(a, T(cos(a.v)), T(-sin(a.v)));
}

template <typename T>
Dual<T> exp(const Dual<T>& a) {
  using std::exp;
  const T e = exp(a.v);
  return detail::chain(a, e, e);
}

template <typename T>
Dual<T> log(const Dual<T>& a) {
  using std::log;
  if (!(value_of(a) > 0.0)) detail::domain("ln of a non-positive argument");
  return detail::chain(a, T(log(a.v)), T(T(1.0) / a.v));
}

template <typename T>
Dual<T> sqrt(const Dual<T>& a) {
  using std::sqrt;
  const double av = value_of(a);
  if (av < 0.0) detail::domain("sqrt of a negative argument");
  if (av == 0.0 && has_partials(a)) detail::domain("sqrt is not differentiable at 0");
  const T s = sqrt(a.v);
  return detail::chain(a, s, T(T(0.5) / s));
}

template <typename T>
Dual<T> pow(const Dual<T>& a, const Dual<T>& b) {
  using std::log;
  using std::pow;
  const double av = value_of(a);
  const double bv = value_of(b);
  if (!has_partials(b)) {
    if (bv == 0.0) return Dual<T>{T(1.0), {}};
    const bool integral = bv == std::floor(bv);
    if (av < 0.0 && !integral) detail::domain("negative base with non-integer exponent");
    if (av == 0.0 && (bv < 0.0 || (bv < 1.0 && has_partials(a)))) {
      detail::domain("pow is singular at a zero base");
    }
    if (!has_partials(a)) return Dual<T>{T(pow(a.v, b.v)), {}};
    return detail::chain(a, T(pow(a.v, b.v)), T(b.v * pow(a.v, T(b.v - T(1.0)))));
  }
  if (!(av > 0.0)) detail::domain("pow with a variable exponent needs a positive base");
  return exp(b * log(a));
}

// Plain doubles share the entry points so the evaluator is written once.
inline double safe_div(double a, double b) {
  if (b == 0.0) detail::domain("division by zero");
  return a / b;
}
inline double safe_log(double a) {
  if (!(a > 0.0)) detail::domain("ln of a non-positive argument");
  return std::log(a);
}
inline double safe_sqrt(double a) {
  if (a < 0.0) detail::domain("sqrt of a negative argument");
  return std::sqrt(a);
}
inline double safe_pow(double a, double b) {
  if (a < 0.0 && b != std::floor(b)) detail::domain("negative base with non-integer exponent");
  if (a == 0.0 && b < 0.0) detail::domain("pow is singular at a zero base");
  return std::pow(a, b);
}
template <typename T>
Dual<T> safe_div(const Dual<T>& a, const Dual<T>& b) {
  return a / b;
}
template <typename T>
Dual<T> safe_log(const Dual<T>& a) {
  return log(a);
}
template <typename T>
Dual<T> safe_sqrt(const Dual<T>& a) {
  return sqrt(a);
}
template <typename T>
Dual<T> safe_pow(const Dual<T>& a, const Dual<T>& b) {
  return pow(a, b);
}

}  // namespace ihoc::ad
