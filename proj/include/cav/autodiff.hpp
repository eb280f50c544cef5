#pragma once

#include <cmath>

namespace cav {

// Forward-mode dual number carrying a 4-component gradient (x, y, theta, v).
// Nesting Dual4<Dual4<double>> yields exact second derivatives, which is how
// the second-order barrier terms are assembled without transcribing any
// hand-expanded formulas.
template <typename T>
struct Dual4 {
  T val{};
  T d[4]{};

  Dual4() = default;
  Dual4(const T& v) : val(v) {}  // NOLINT: implicit constant lift is the point

  static Dual4 var(const T& v, int i) {
    Dual4 r(v);
    r.d[i] = T(1.0);
    return r;
  }
};

template <typename T>
Dual4<T> operator+(const Dual4<T>& a, const Dual4<T>& b) {
  Dual4<T> r(a.val + b.val);
  for (int i = 0; i < 4; ++i) r.d[i] = a.d[i] + b.d[i];
  return r;
}

template <typename T>
Dual4<T> operator-(const Dual4<T>& a, const Dual4<T>& b) {
  Dual4<T> r(a.val - b.val);
  for (int i = 0; i < 4; ++i) r.d[i] = a.d[i] - b.d[i];
  return r;
}

template <typename T>
Dual4<T> operator-(const Dual4<T>& a) {
  Dual4<T> r(-a.val);
  for (int i = 0; i < 4; ++i) r.d[i] = -a.d[i];
  return r;
}

template <typename T>
Dual4<T> operator*(const Dual4<T>& a, const Dual4<T>& b) {
  Dual4<T> r(a.val * b.val);
  for (int i = 0; i < 4; ++i) r.d[i] = a.d[i] * b.val + a.val * b.d[i];
  return r;
}

template <typename T>
Dual4<T> operator/(const Dual4<T>& a, const Dual4<T>& b) {
  Dual4<T> r(a.val / b.val);
  for (int i = 0; i < 4; ++i) r.d[i] = (a.d[i] * b.val - a.val * b.d[i]) / (b.val * b.val);
  return r;
}

// Mixed scalar forms so plain double literals compose with nested duals.
template <typename T>
Dual4<T> operator+(const Dual4<T>& a, double s) {
  Dual4<T> r(a.val + T(s));
  for (int i = 0; i < 4; ++i) r.d[i] = a.d[i];
  return r;
}
template <typename T>
Dual4<T> operator+(double s, const Dual4<T>& a) { return a + s; }

template <typename T>
Dual4<T> operator-(const Dual4<T>& a, double s) { return a + (-s); }
template <typename T>
Dual4<T> operator-(double s, const Dual4<T>& a) { return -a + s; }

template <typename T>
Dual4<T> operator*(const Dual4<T>& a, double s) {
  Dual4<T> r(a.val * T(s));
  for (int i = 0; i < 4; ++i) r.d[i] = a.d[i] * T(s);
  return r;
}
template <typename T>
Dual4<T> operator*(double s, const Dual4<T>& a) { return a * s; }

template <typename T>
Dual4<T> operator/(const Dual4<T>& a, double s) { return a * (1.0 / s); }

using std::cos;
using std::sin;

template <typename T>
Dual4<T> cos(const Dual4<T>& a) {
  Dual4<T> r(cos(a.val));
  const T ms = -sin(a.val);
  for (int i = 0; i < 4; ++i) r.d[i] = ms * a.d[i];
  return r;
}

template <typename T>
Dual4<T> sin(const Dual4<T>& a) {
  Dual4<T> r(sin(a.val));
  const T c = cos(a.val);
  for (int i = 0; i < 4; ++i) r.d[i] = c * a.d[i];
  return r;
}

}  // namespace cav
