#pragma once

#include <cmath>

namespace dppp {

// Forward-mode dual number v + d*eps, eps^2 = 0. Used to push a directional
// derivative through the alpha-determinant evaluators.
struct Dual {
  double v = 0.0;
  double d = 0.0;

  constexpr Dual() = default;
  constexpr Dual(double value) : v(value) {}  // NOLINT: implicit from scalar
  constexpr Dual(double value, double deriv) : v(value), d(deriv) {}

  constexpr Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
  constexpr Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
  constexpr Dual& operator*=(const Dual& o) { d = d * o.v + v * o.d; v *= o.v; return *this; }
  constexpr Dual& operator/=(const Dual& o) {
    d = (d * o.v - v * o.d) / (o.v * o.v);
    v /= o.v;
    return *this;
  }

  friend constexpr Dual operator+(Dual a, const Dual& b) { return a += b; }
  friend constexpr Dual operator-(Dual a, const Dual& b) { return a -= b; }
  friend constexpr Dual operator*(Dual a, const Dual& b) { return a *= b; }
  friend constexpr Dual operator/(Dual a, const Dual& b) { return a /= b; }
  friend constexpr Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
};

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.v; }
inline double magnitude(double x) { return std::abs(x); }
inline double magnitude(const Dual& x) { return std::abs(x.v); }

}  // namespace dppp
