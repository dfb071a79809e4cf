#pragma once

#include <memory>
#include <random>

#include "weyl/weyl.hpp"

namespace weyl::testutil {

inline Mat random_hermitian(std::mt19937& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Mat m(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = dist(rng);
    for (int j = i + 1; j < n; ++j) {
      const cplx z{dist(rng), dist(rng)};
      m(i, j) = z;
      m(j, i) = std::conj(z);
    }
  }
  return m;
}

// Rotation about a coordinate axis by the angle c + <k, x>; all entries are
// single trigonometric harmonics, so the field is an exact trig poly.
inline TrigPoly axis_rotation_field(int axis, Key3 k, double c, Torus3 torus = {}) {
  TrigPoly f(3, 3, torus);
  const int i = (axis + 1) % 3;
  const int j = (axis + 2) % 3;
  Mat base(3, 3);
  base(axis, axis) = 1.0;
  f.add(Key3{0, 0, 0}, base);
  // cos: (e^{i c} E+ + e^{-i c} E-)/2 at wavevectors +-k
  Mat plus(3, 3), minus(3, 3);
  const cplx ep = std::exp(iu * c);
  const cplx em = std::exp(-iu * c);
  plus(i, i) = 0.5 * ep;
  minus(i, i) = 0.5 * em;
  plus(j, j) = 0.5 * ep;
  minus(j, j) = 0.5 * em;
  // entry (i, j) carries -sin, entry (j, i) carries +sin
  plus(i, j) = 0.5 * iu * ep;
  minus(i, j) = -0.5 * iu * em;
  plus(j, i) = -0.5 * iu * ep;
  minus(j, i) = 0.5 * iu * em;
  f.add(k, plus);
  f.add(-k, minus);
  f.prune();
  return f;
}

inline Mat random_so3(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 2 * pi);
  auto rot = [&](int axis, double th) {
    Mat r(3, 3);
    const int i = (axis + 1) % 3, j = (axis + 2) % 3;
    r(axis, axis) = 1.0;
    r(i, i) = std::cos(th);
    r(j, j) = std::cos(th);
    r(i, j) = -std::sin(th);
    r(j, i) = std::sin(th);
    return r;
  };
  return rot(0, u(rng)) * rot(1, u(rng)) * rot(2, u(rng));
}

inline Key3 random_wave(std::mt19937& rng, int max_harm) {
  std::uniform_int_distribution<int> d(-max_harm, max_harm);
  return Key3{d(rng), d(rng), d(rng)};
}

// Orthonormal trig-poly frame from composed axis rotations; optionally a row
// swap for negative orientation and a constant scale for a non-unit metric.
inline TrigPoly random_frame_field(std::mt19937& rng, int max_harm = 2, bool negative_orientation = false,
                                   double scale = 1.0, Torus3 torus = {}) {
  std::uniform_int_distribution<int> axis_d(0, 2);
  std::uniform_real_distribution<double> phase_d(0.0, 2 * pi);
  TrigPoly f = axis_rotation_field(axis_d(rng), random_wave(rng, max_harm), phase_d(rng), torus);
  f = f * axis_rotation_field(axis_d(rng), random_wave(rng, max_harm), phase_d(rng), torus);
  f = transform_frame(f, random_so3(rng));
  if (scale != 1.0) {
    Mat s = Mat::identity(3);
    s *= scale;
    f = TrigPoly::constant(s, torus) * f;
  }
  if (negative_orientation) {
    // swap the first two rows
    TrigPoly swapped(3, 3, torus);
    for (const auto& [k, m] : f.coeffs()) {
      Mat sm(3, 3);
      for (int a = 0; a < 3; ++a) {
        sm(0, a) = m(1, a);
        sm(1, a) = m(0, a);
        sm(2, a) = m(2, a);
      }
      swapped.add(k, sm);
    }
    f = swapped;
  }
  f.prune();
  return f;
}

// Hermitian trig-poly matrix field with harmonics up to max_harm.
inline TrigPoly random_hermitian_field(std::mt19937& rng, int m, int max_harm, int terms = 3, double scale = 0.5,
                                       Torus3 torus = {}) {
  std::normal_distribution<double> dist(0.0, scale);
  TrigPoly f(m, m, torus);
  f.add(Key3{0, 0, 0}, random_hermitian(rng, m, scale));
  for (int t = 0; t < terms; ++t) {
    const Key3 k = random_wave(rng, max_harm);
    if (k == Key3{0, 0, 0}) continue;
    Mat c(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) c(i, j) = cplx{dist(rng), dist(rng)};
    f.add(k, c);
    f.add(-k, c.adjoint());
  }
  f.prune();
  return f;
}

inline TrigPoly random_spinor_field(std::mt19937& rng, int m = 2, int max_harm = 2, int terms = 4, Torus3 torus = {}) {
  std::normal_distribution<double> dist(0.0, 1.0);
  TrigPoly f(m, 1, torus);
  for (int t = 0; t < terms; ++t) {
    Mat c(m, 1);
    for (int i = 0; i < m; ++i) c(i, 0) = cplx{dist(rng), dist(rng)};
    f.add(random_wave(rng, max_harm), c);
  }
  return f;
}

inline Mat random_su2(std::mt19937& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  double q[4];
  double nn = 0;
  for (double& v : q) {
    v = dist(rng);
    nn += v * v;
  }
  nn = std::sqrt(nn);
  for (double& v : q) v /= nn;
  Mat r(2, 2);
  r(0, 0) = cplx{q[0], q[3]};
  r(0, 1) = cplx{q[2], q[1]};
  r(1, 0) = cplx{-q[2], q[1]};
  r(1, 1) = cplx{q[0], -q[3]};
  return r;
}

// SU(2)-valued trig-poly field: product of constant SU(2) matrices and
// diagonal phase fields diag(e^{i theta}, e^{-i theta}), theta = c + <k, x>.
inline TrigPoly random_su2_field(std::mt19937& rng, int max_harm = 1, Torus3 torus = {}) {
  std::uniform_real_distribution<double> phase_d(0.0, 2 * pi);
  auto diag_field = [&](Key3 k, double c) {
    TrigPoly f(2, 2, torus);
    Mat up(2, 2), dn(2, 2);
    up(0, 0) = std::exp(iu * c);
    dn(1, 1) = std::exp(-iu * c);
    f.add(k, up);
    f.add(-k, dn);
    return f;
  };
  TrigPoly f = TrigPoly::constant(random_su2(rng), torus);
  f = f * diag_field(random_wave(rng, max_harm), phase_d(rng));
  f = f * TrigPoly::constant(random_su2(rng), torus);
  return f;
}

// sigma . D as an OperatorSpec (constant standard Pauli coefficients).
inline OperatorSpec sigma_d_operator(Torus3 torus = {}) {
  OperatorSpec op = OperatorSpec::empty(2, torus);
  for (int a = 0; a < 3; ++a) op.coeff[static_cast<std::size_t>(a)].add(Key3{0, 0, 0}, pauli(a + 1));
  return op;
}

// Elliptic m = 3 pseudodifferential symbol with simple eigenvalues:
// A1 = |xi| (D + eps W(x, xi/|xi|)), D = diag(1, 2, -1).  The pair is
// specified through its invariant data (A1, A_sub); the degree-0 part is
// derived so the operator is formally self-adjoint,
// A0 = A_sub - (i/2) (A1)_{x xi}.
inline SymbolPair random_m3_symbol(std::mt19937& rng, double eps = 0.12) {
  auto base = std::make_shared<Mat>(Mat(3, 3));
  (*base)(0, 0) = 1.0;
  (*base)(1, 1) = 2.0;
  (*base)(2, 2) = -1.0;
  auto h1 = std::make_shared<Mat>(random_hermitian(rng, 3, 1.0));
  auto h2 = std::make_shared<Mat>(random_hermitian(rng, 3, 1.0));
  auto h0 = std::make_shared<Mat>(random_hermitian(rng, 3, 0.4));
  std::uniform_int_distribution<int> kd(-1, 1);
  const int k1 = kd(rng), k2 = kd(rng), k3 = kd(rng);
  const double s1 = eps / std::max(1.0, h1->max_abs());
  const double s2 = eps / std::max(1.0, h2->max_abs());

  SymbolPair sym;
  sym.n = 3;
  sym.m = 3;
  sym.a1 = [=](const VecN& x, const VecN& xi) {
    const double r = xi.norm();
    const VecN w = (1.0 / r) * xi;
    const double f1 = std::cos(k1 * x[0] + k2 * x[1]) * w[0];
    const double f2 = std::sin(k3 * x[2] - k1 * x[0]) * (w[1] * w[2]);
    Mat m = *base;
    m += (s1 * f1) * *h1;
    m += (s2 * f2) * *h2;
    m *= r;
    return m;
  };
  const auto asub = [=](const VecN& x, const VecN& xi) {
    const double r = xi.norm();
    const VecN w = (1.0 / r) * xi;
    Mat m = *h0;
    m *= std::cos(k2 * x[1]) + 0.3 * w[0];
    return m;
  };
  sym.asub = asub;
  SymbolPair core;  // principal part only, for the mixed-derivative stencil
  core.n = 3;
  core.m = 3;
  core.a1 = sym.a1;
  sym.a0 = [core, asub](const VecN& x, const VecN& xi) {
    Mat m = asub(x, xi);
    const CotangentPoint pt{x, xi};
    for (int a = 0; a < 3; ++a) m -= (0.5 * iu) * symbol_a1_dxdxi(core, a, a, pt);
    return m;
  };
  return sym;
}

// m = 2 differential family: random frame plus a random Hermitian potential.
inline OperatorSpec random_m2_operator(std::mt19937& rng, int max_harm = 1) {
  const FrameBundle bundle = FrameBundle::from_frame(random_frame_field(rng, max_harm));
  OperatorSpec op = build_dirac(bundle, true);
  op.zero += random_hermitian_field(rng, 2, max_harm, 2, 0.3);
  op.zero.prune();
  return op;
}

}  // namespace weyl::testutil
