#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

#include "weyl/errors.hpp"

namespace weyl {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx iu{0.0, 1.0};

// Point in R^n with n <= 3.  Used for chart coordinates x and covector
// components xi alike.
struct VecN {
  int n = 3;
  std::array<double, 3> c{};

  VecN() = default;
  VecN(int dim) : n(dim) {}
  VecN(double a, double b) : n(2), c{a, b, 0.0} {}
  VecN(double a, double b, double d) : n(3), c{a, b, d} {}

  double& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return c[static_cast<std::size_t>(i)]; }

  double norm2() const {
    double s = 0;
    for (int i = 0; i < n; ++i) s += c[static_cast<std::size_t>(i)] * c[static_cast<std::size_t>(i)];
    return s;
  }
  double norm() const { return std::sqrt(norm2()); }

  friend VecN operator+(VecN a, const VecN& b) {
    for (int i = 0; i < a.n; ++i) a[i] += b[i];
    return a;
  }
  friend VecN operator-(VecN a, const VecN& b) {
    for (int i = 0; i < a.n; ++i) a[i] -= b[i];
    return a;
  }
  friend VecN operator*(double s, VecN a) {
    for (int i = 0; i < a.n; ++i) a[i] *= s;
    return a;
  }
};

inline double dot(const VecN& a, const VecN& b) {
  double s = 0;
  for (int i = 0; i < a.n; ++i) s += a[i] * b[i];
  return s;
}

// Integer wavevector on the 3-torus.
using Key3 = std::array<int, 3>;

inline Key3 operator+(const Key3& a, const Key3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Key3 operator-(const Key3& a) { return {-a[0], -a[1], -a[2]}; }
inline Key3 operator-(const Key3& a, const Key3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

// Flat 3-torus chart data.  Coordinates are cyclic with the given periods;
// the dual lattice carries frequencies 2*pi*k/period.
struct Torus3 {
  std::array<double, 3> periods{2 * pi, 2 * pi, 2 * pi};

  double volume() const { return periods[0] * periods[1] * periods[2]; }
  double frequency(int axis, int k) const { return 2 * pi * k / periods[static_cast<std::size_t>(axis)]; }
  VecN dual(const Key3& k) const {
    return VecN{frequency(0, k[0]), frequency(1, k[1]), frequency(2, k[2])};
  }
  bool operator==(const Torus3& o) const { return periods == o.periods; }
};

// Torus distance between chart points (used by the loop scan).
inline double torus_distance(const Torus3& torus, const VecN& a, const VecN& b) {
  double s = 0;
  for (int i = 0; i < 3; ++i) {
    const double p = torus.periods[static_cast<std::size_t>(i)];
    double d = std::fmod(std::fabs(a[i] - b[i]), p);
    d = std::min(d, p - d);
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace weyl
