#pragma once

#include <array>

#include "weyl/operator_spec.hpp"
#include "weyl/symbol.hpp"
#include "weyl/trigpoly.hpp"

namespace weyl {

namespace detail {

inline double real_field_defect(const TrigPoly& f) {
  TrigPoly d = f - f.conj_field();
  return d.coeff_abs_sum();
}

inline TrigPoly det3_field(const TrigPoly& m) {
  const auto e = [&](int i, int j) { return m.entry(i, j); };
  TrigPoly det = e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1));
  det -= e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0));
  det += e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0));
  det.prune();
  return det;
}

inline Mat invert3_real(const Mat& g) {
  std::array<std::array<double, 3>, 3> a{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = g(i, j).real();
  const double det = det3(a);
  if (std::fabs(det) < 1e-14) throw NotPositiveDefinite("metric is singular");
  Mat inv(3, 3);
  const auto cof = [&](int i, int j) {
    const int i1 = (i + 1) % 3, i2 = (i + 2) % 3, j1 = (j + 1) % 3, j2 = (j + 2) % 3;
    return a[static_cast<std::size_t>(i1)][static_cast<std::size_t>(j1)] *
               a[static_cast<std::size_t>(i2)][static_cast<std::size_t>(j2)] -
           a[static_cast<std::size_t>(i1)][static_cast<std::size_t>(j2)] *
               a[static_cast<std::size_t>(i2)][static_cast<std::size_t>(j1)];
  };
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) inv(j, i) = cof(i, j) / det;
  return inv;
}

}  // namespace detail

// Orthonormal frame data on the 3-torus: frame rows V_j^alpha as an exact
// 3x3 trig-poly field, induced contravariant metric g^{ab} = (V^T V)^{ab},
// coframe, determinant field and the orientation sign.
struct FrameBundle {
  Torus3 torus;
  TrigPoly V;          // (j, alpha)
  TrigPoly coV;        // (k, beta) = g_{beta gamma} V_k^gamma
  TrigPoly g_up;       // g^{alpha beta}
  TrigPoly g_down;     // g_{alpha beta}; fitted when the metric is not constant
  TrigPoly det_g_up;   // scalar polynomial det(g^{ab})
  int c = +1;          // sgn det V, constant over the torus
  bool orthonormalized = false;
  bool metric_constant = true;
  double metric_fit_residual = 0;

  double sqrt_det_g(const VecN& x) const {
    const double d = det_g_up.eval_scalar(x).real();
    if (!(d > 0)) throw NotPositiveDefinite("det g^{ab} must be positive");
    return 1.0 / std::sqrt(d);
  }

  static FrameBundle from_frame(const TrigPoly& frame, int grid = 12) {
    if (frame.rows() != 3 || frame.cols() != 3) throw DimensionMismatch("frame field must be 3x3");
    if (detail::real_field_defect(frame) > 1e-10) throw LinearlyDependentFrame("frame field must be real-valued");
    FrameBundle b;
    b.torus = frame.torus();
    b.V = frame;
    b.V.prune();

    TrigPoly det = detail::det3_field(b.V);
    int sign = 0;
    for (int i0 = 0; i0 < grid; ++i0)
      for (int i1 = 0; i1 < grid; ++i1)
        for (int i2 = 0; i2 < grid; ++i2) {
          VecN x{b.torus.periods[0] * i0 / grid, b.torus.periods[1] * i1 / grid, b.torus.periods[2] * i2 / grid};
          const double d = det.eval_scalar(x).real();
          if (std::fabs(d) < 1e-10) throw LinearlyDependentFrame("frame determinant vanishes on the torus");
          const int s = d > 0 ? 1 : -1;
          if (sign == 0) sign = s;
          else if (sign != s)
            throw InconsistentOrientation("frame determinant changes sign over the torus");
        }
    b.c = sign;

    b.g_up = b.V.transpose_field() * b.V;
    b.g_up.prune();
    b.det_g_up = detail::det3_field(b.g_up);

    if (b.g_up.max_coeff_abs_offset() <= 1e-12) {
      b.metric_constant = true;
      b.g_down = TrigPoly::constant(detail::invert3_real(b.g_up.coeff(Key3{0, 0, 0})), b.torus);
    } else {
      b.metric_constant = false;
      const int fit_grid = std::min(48, 4 * std::max(2, b.g_up.max_harmonic()) + 8);
      auto g_up_copy = b.g_up;
      auto inv_eval = [g_up_copy](const VecN& x) { return detail::invert3_real(g_up_copy.eval(x)); };
      b.g_down = TrigPoly::fit_from_grid(inv_eval, 3, 3, fit_grid, fit_grid / 2 - 1, b.torus);
      b.metric_fit_residual = b.g_down.fit_residual(inv_eval, 8);
      if (b.metric_fit_residual > 1e-7)
        throw NotPositiveDefinite("inverse metric is not numerically band-limited on the torus");
    }
    b.g_down.prune();
    b.coV = b.V * b.g_down;
    b.coV.prune();
    return b;
  }

  // Gram-Schmidt against the Euclidean metric applied pointwise, then
  // refit to coefficients; for frames that are independent but not
  // orthonormal.  The flag records that a correction occurred.
  static FrameBundle from_frame_gram_schmidt(const TrigPoly& frame, int fit_grid = 24) {
    auto frame_copy = frame;
    auto gs = [frame_copy](const VecN& x) {
      Mat v = frame_copy.eval(x);
      for (int j = 0; j < 3; ++j) {
        for (int k = 0; k < j; ++k) {
          cplx proj = 0;
          for (int a = 0; a < 3; ++a) proj += v(j, a) * std::conj(v(k, a));
          for (int a = 0; a < 3; ++a) v(j, a) -= proj * v(k, a);
        }
        double nn = 0;
        for (int a = 0; a < 3; ++a) nn += std::norm(v(j, a));
        if (nn < 1e-20) throw LinearlyDependentFrame("Gram-Schmidt hit a dependent frame vector");
        const double inv = 1.0 / std::sqrt(nn);
        for (int a = 0; a < 3; ++a) v(j, a) *= inv;
      }
      return v;
    };
    TrigPoly fitted = TrigPoly::fit_from_grid(gs, 3, 3, fit_grid, fit_grid / 2 - 1, frame.torus());
    const double residual = fitted.fit_residual(gs, 8);
    if (residual > 1e-8) throw LinearlyDependentFrame("orthonormalized frame is not numerically band-limited");
    fitted.prune(1e-13);
    FrameBundle b = from_frame(fitted);
    bool already = true;
    TrigPoly gram = frame_copy * frame_copy.transpose_field();
    gram.add(Key3{0, 0, 0}, cplx{-1, 0} * Mat::identity(3));
    if (gram.coeff_abs_sum() > 1e-10) already = false;
    b.orthonormalized = !already;
    return b;
  }

  // Pauli coefficient fields sigma^alpha = s^j V_j^alpha.
  std::array<TrigPoly, 3> sigma() const {
    std::array<TrigPoly, 3> out;
    for (int a = 0; a < 3; ++a) {
      TrigPoly acc(2, 2, torus);
      for (int j = 0; j < 3; ++j) {
        const TrigPoly comp = V.entry(j, a);
        for (const auto& [k, mval] : comp.coeffs()) acc.add(k, mval(0, 0) * pauli(j + 1));
      }
      acc.prune();
      out[static_cast<std::size_t>(a)] = acc;
    }
    return out;
  }

  OperatorSpec principal_operator() const {
    OperatorSpec op = OperatorSpec::empty(2, torus);
    op.coeff = sigma();
    return op;
  }
};

// Standard rotating-frame family on the unit torus: V_1, V_2 spin about the
// third axis with winding k3, V_3 fixed.
inline FrameBundle k3_frame(int k3, Torus3 torus = {}) {
  TrigPoly v(3, 3, torus);
  Mat c0(3, 3);  // constant part
  c0(2, 2) = 1.0;
  if (k3 == 0) {
    c0(0, 0) = 1.0;
    c0(1, 1) = 1.0;
    v.add(Key3{0, 0, 0}, c0);
  } else {
    v.add(Key3{0, 0, 0}, c0);
    Mat plus(3, 3), minus(3, 3);
    // cos = (e+ + e-)/2, sin = (e+ - e-)/(2i)
    plus(0, 0) = 0.5;
    minus(0, 0) = 0.5;
    plus(0, 1) = cplx{0, -0.5};
    minus(0, 1) = cplx{0, 0.5};
    plus(1, 0) = cplx{0, 0.5};
    minus(1, 0) = cplx{0, -0.5};
    plus(1, 1) = 0.5;
    minus(1, 1) = 0.5;
    v.add(Key3{0, 0, k3}, plus);
    v.add(Key3{0, 0, -k3}, minus);
  }
  return FrameBundle::from_frame(v);
}

// Recovers the contravariant metric at x from det A1 = -g^{ab} xi_a xi_b by
// polarization over basis covectors.
inline Mat metric_from_symbol(const std::array<TrigPoly, 3>& sigma, const VecN& x) {
  std::array<Mat, 3> s;
  for (int a = 0; a < 3; ++a) {
    s[static_cast<std::size_t>(a)] = sigma[static_cast<std::size_t>(a)].eval(x);
    if (std::abs(s[static_cast<std::size_t>(a)].trace()) > 1e-10)
      throw NotTraceFree("principal symbol must be trace-free");
  }
  const auto det_at = [&](const VecN& xi) {
    Mat a1(2, 2);
    for (int a = 0; a < 3; ++a) a1 += xi[a] * s[static_cast<std::size_t>(a)];
    return (a1(0, 0) * a1(1, 1) - a1(0, 1) * a1(1, 0)).real();
  };
  Mat g(3, 3);
  for (int a = 0; a < 3; ++a) {
    VecN ea;
    ea[a] = 1;
    g(a, a) = -det_at(ea);
  }
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b) {
      VecN eab;
      eab[a] = 1;
      eab[b] = 1;
      const cplx v = -0.5 * (det_at(eab) + g(a, a) + g(b, b));
      g(a, b) = v;
      g(b, a) = v;
    }
  // positive definiteness via leading principal minors
  const double m1 = g(0, 0).real();
  const double m2 = (g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0)).real();
  std::array<std::array<double, 3>, 3> gr{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) gr[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = g(i, j).real();
  if (!(m1 > 0 && m2 > 0 && det3(gr) > 0)) throw NotPositiveDefinite("metric from symbol is not positive definite");
  return g;
}

// V_1 = Re sigma_{12}, V_2 = -Im sigma_{12}, V_3 = sigma_{11}, per component.
inline TrigPoly frame_from_symbol(const std::array<TrigPoly, 3>& sigma) {
  const Torus3 torus = sigma[0].torus();
  TrigPoly v(3, 3, torus);
  for (int a = 0; a < 3; ++a) {
    const TrigPoly s12 = sigma[static_cast<std::size_t>(a)].entry(0, 1);
    const TrigPoly s11 = sigma[static_cast<std::size_t>(a)].entry(0, 0);
    const TrigPoly rows[3] = {s12.real_part(), cplx{-1, 0} * s12.imag_part(), s11.real_part()};
    for (int j = 0; j < 3; ++j)
      for (const auto& [k, mval] : rows[j].coeffs()) {
        Mat e(3, 3);
        e(j, a) = mval(0, 0);
        v.add(k, e);
      }
  }
  v.prune();
  return v;
}

inline std::array<TrigPoly, 3> symbol_from_frame(const TrigPoly& frame) {
  std::array<TrigPoly, 3> sigma;
  const Torus3 torus = frame.torus();
  for (int a = 0; a < 3; ++a) {
    TrigPoly acc(2, 2, torus);
    for (int j = 0; j < 3; ++j) {
      const TrigPoly comp = frame.entry(j, a);
      for (const auto& [k, mval] : comp.coeffs()) acc.add(k, mval(0, 0) * pauli(j + 1));
    }
    acc.prune();
    sigma[static_cast<std::size_t>(a)] = acc;
  }
  return sigma;
}

// Orientation of the principal symbol relative to the chart, via both the
// frame determinant and the trace formula
//   c = -(i/2) sqrt(det g_{ab}) tr((A1)_{xi_1} (A1)_{xi_2} (A1)_{xi_3});
// also verifies det g^{ab} = -(1/4) [tr(...)]^2.
inline int orientation_invariant(const FrameBundle& bundle, int grid = 8, double tol = 1e-10) {
  const auto sigma = bundle.sigma();
  for (int i0 = 0; i0 < grid; ++i0)
    for (int i1 = 0; i1 < grid; ++i1)
      for (int i2 = 0; i2 < grid; ++i2) {
        VecN x{bundle.torus.periods[0] * i0 / grid, bundle.torus.periods[1] * i1 / grid,
               bundle.torus.periods[2] * i2 / grid};
        const Mat s1 = sigma[0].eval(x), s2 = sigma[1].eval(x), s3 = sigma[2].eval(x);
        const cplx tr = (s1 * s2 * s3).trace();
        const double detg_up = bundle.det_g_up.eval_scalar(x).real();
        if (std::fabs(detg_up - (-0.25 * (tr * tr).real())) > tol * std::max(1.0, std::fabs(detg_up)) ||
            std::fabs((tr * tr).imag()) > tol)
          throw InconsistentOrientation("det g identity violated");
        const double sqrt_det_down = 1.0 / std::sqrt(detg_up);
        const cplx cval = -0.5 * iu * sqrt_det_down * tr;
        if (std::fabs(cval.imag()) > tol || std::fabs(std::fabs(cval.real()) - 1.0) > tol)
          throw InconsistentOrientation("orientation trace formula did not give +-1");
        const int c_here = cval.real() > 0 ? 1 : -1;
        if (c_here != bundle.c) throw InconsistentOrientation("frame and symbol orientations disagree");
      }
  return bundle.c;
}

struct TransportResult {
  VecN xi;
  double condition;  // rough condition number of the 3x3 system
};

// Teleparallel transport: the unique xi with A1(x, xi) = A1(y, eta),
// realized as the 3x3 real system V(x) xi = V(y) eta.
inline TransportResult teleparallel_transport(const FrameBundle& bundle, const VecN& y, const VecN& eta,
                                              const VecN& x) {
  const Mat vy = bundle.V.eval(y);
  const Mat vx = bundle.V.eval(x);
  std::array<double, 3> rhs{};
  for (int j = 0; j < 3; ++j) {
    cplx s = 0;
    for (int a = 0; a < 3; ++a) s += vy(j, a) * eta[a];
    rhs[static_cast<std::size_t>(j)] = s.real();
  }
  std::array<std::array<double, 3>, 3> mat{};
  for (int j = 0; j < 3; ++j)
    for (int a = 0; a < 3; ++a) mat[static_cast<std::size_t>(j)][static_cast<std::size_t>(a)] = vx(j, a).real();
  const auto sol = solve3(mat, rhs);
  TransportResult out;
  out.xi = VecN{sol[0], sol[1], sol[2]};
  double f2 = 0, inv2 = 0;
  const Mat vxi = detail::invert3_real(vx);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      f2 += std::norm(vx(i, j));
      inv2 += std::norm(vxi(i, j));
    }
  out.condition = std::sqrt(f2 * inv2) / 3.0;
  return out;
}

// Teleparallel connection, torsion, dual torsion and Levi-Civita symbols as
// exact polynomial fields (the sqrt(det g) factor of the dual torsion is
// applied pointwise at evaluation).
struct TeleparallelData {
  std::array<TrigPoly, 3> gamma;    // gamma[a] : (mu, beta) -> Gamma^a_{mu beta}
  std::array<TrigPoly, 3> torsion;  // torsion[a] : (beta, gamma) -> T^a_{beta gamma}
  TrigPoly star_flat;               // (a, b) -> (1/2) T^{a c d} eps_{c d b}
  std::array<TrigPoly, 3> christoffel;  // christoffel[b] : (a, g) -> {b over a g}
  const FrameBundle* bundle = nullptr;

  Mat star_torsion(const VecN& x) const {  // *T^a_b
    Mat out = star_flat.eval(x);
    out *= bundle->sqrt_det_g(x);
    return out;
  }
  double trace_star_torsion(const VecN& x) const { return star_torsion(x).trace().real(); }

  // Self-contained six-term expression for tr *T in coframe derivatives:
  //   sqrt(det g^{ab}) [ coV_{j1} d2 coV_{j3} + coV_{j2} d3 coV_{j1} + coV_{j3} d1 coV_{j2}
  //                    - coV_{j1} d3 coV_{j2} - coV_{j2} d1 coV_{j3} - coV_{j3} d2 coV_{j1} ]
  double trace_star_torsion_explicit(const VecN& x) const {
    const auto co = [&](int j, int b) { return bundle->coV.entry(j, b); };
    double sum = 0;
    for (int j = 0; j < 3; ++j) {
      const auto term = [&](int b1, int axis, int b2) {
        return (co(j, b1) * co(j, b2).derivative(axis)).eval_scalar(x).real();
      };
      sum += term(0, 1, 2) + term(1, 2, 0) + term(2, 0, 1);
      sum -= term(0, 2, 1) + term(1, 0, 2) + term(2, 1, 0);
    }
    const double detg_up = bundle->det_g_up.eval_scalar(x).real();
    return std::sqrt(detg_up) * sum;
  }

  // Curl-based dual route: *T^a_b = V_j^a (curl coV_j)_b.
  Mat star_torsion_curl_route(const VecN& x) const {
    const double sdg = bundle->sqrt_det_g(x);
    const Mat v = bundle->V.eval(x);
    const Mat gup = bundle->g_up.eval(x);
    Mat out(3, 3);
    static const int eps[3][3][3] = {{{0, 0, 0}, {0, 0, 1}, {0, -1, 0}},
                                     {{0, 0, -1}, {0, 0, 0}, {1, 0, 0}},
                                     {{0, 1, 0}, {-1, 0, 0}, {0, 0, 0}}};
    for (int j = 0; j < 3; ++j) {
      // dcov[g][d] = d_g coV_{j d}
      Mat dcov(3, 3);
      for (int g = 0; g < 3; ++g)
        for (int d = 0; d < 3; ++d) dcov(g, d) = bundle->coV.entry(j, d).derivative(g).eval_scalar(x);
      for (int b = 0; b < 3; ++b) {
        cplx curl_b = 0;
        for (int g = 0; g < 3; ++g)
          for (int d = 0; d < 3; ++d) {
            if (eps[g][d][b] == 0) continue;
            // raise both indices of (d coV)_{g' d'} = dcov(g', d') - dcov(d', g')
            cplx raised = 0;
            for (int gp = 0; gp < 3; ++gp)
              for (int dp = 0; dp < 3; ++dp) raised += gup(g, gp) * gup(d, dp) * (dcov(gp, dp) - dcov(dp, gp));
            curl_b += 0.5 * static_cast<double>(eps[g][d][b]) * raised * sdg;
          }
        for (int a = 0; a < 3; ++a) out(a, b) += v(j, a) * curl_b;
      }
    }
    return out;
  }
};

inline TeleparallelData teleparallel_tensors(const FrameBundle& bundle) {
  TeleparallelData out;
  out.bundle = &bundle;
  const Torus3 torus = bundle.torus;

  // Gamma^a_{mu b} = V_k^a d_mu coV_{k b} = (V^T d_mu coV)_{a b}
  std::array<TrigPoly, 3> m_mu;
  const TrigPoly vt = bundle.V.transpose_field();
  for (int mu = 0; mu < 3; ++mu) {
    m_mu[static_cast<std::size_t>(mu)] = vt * bundle.coV.derivative(mu);
    m_mu[static_cast<std::size_t>(mu)].prune();
  }
  for (int a = 0; a < 3; ++a) {
    TrigPoly gm(3, 3, torus);
    for (int mu = 0; mu < 3; ++mu)
      for (const auto& [key, mval] : m_mu[static_cast<std::size_t>(mu)].coeffs()) {
        if (mval(a, 0) == cplx{} && mval(a, 1) == cplx{} && mval(a, 2) == cplx{}) continue;
        Mat e(3, 3);
        for (int b = 0; b < 3; ++b) e(mu, b) = mval(a, b);
        gm.add(key, e);
      }
    gm.prune();
    out.gamma[static_cast<std::size_t>(a)] = gm;
  }

  // T^a_{b g} = Gamma^a_{b g} - Gamma^a_{g b}
  for (int a = 0; a < 3; ++a) {
    out.torsion[static_cast<std::size_t>(a)] =
        out.gamma[static_cast<std::size_t>(a)] - out.gamma[static_cast<std::size_t>(a)].transpose_field();
    out.torsion[static_cast<std::size_t>(a)].prune();
  }

  // (1/2) T^{a c d} eps_{c d b}; indices raised as g_up T^a g_up^T
  static const int eps[3][3][3] = {{{0, 0, 0}, {0, 0, 1}, {0, -1, 0}},
                                   {{0, 0, -1}, {0, 0, 0}, {1, 0, 0}},
                                   {{0, 1, 0}, {-1, 0, 0}, {0, 0, 0}}};
  TrigPoly star(3, 3, torus);
  for (int a = 0; a < 3; ++a) {
    TrigPoly raised = bundle.g_up * out.torsion[static_cast<std::size_t>(a)] * bundle.g_up;
    raised.prune();
    for (const auto& [key, mval] : raised.coeffs()) {
      Mat e(3, 3);
      bool nonzero = false;
      for (int b = 0; b < 3; ++b) {
        cplx acc = 0;
        for (int cdx = 0; cdx < 3; ++cdx)
          for (int d = 0; d < 3; ++d) {
            if (eps[cdx][d][b] == 0) continue;
            acc += 0.5 * static_cast<double>(eps[cdx][d][b]) * mval(cdx, d);
          }
        e(a, b) = acc;
        nonzero = nonzero || acc != cplx{};
      }
      if (nonzero) star.add(key, e);
    }
  }
  star.prune();
  out.star_flat = star;

  // Christoffel symbols {b over a g} = (1/2) g^{b d} (d_a g_{g d} + d_g g_{a d} - d_d g_{a g});
  // identically zero for a constant metric.
  for (int b = 0; b < 3; ++b) out.christoffel[static_cast<std::size_t>(b)] = TrigPoly(3, 3, torus);
  if (!bundle.metric_constant) {
    std::array<TrigPoly, 3> dg;
    for (int a = 0; a < 3; ++a) dg[static_cast<std::size_t>(a)] = bundle.g_down.derivative(a);
    for (int b = 0; b < 3; ++b) {
      TrigPoly ch(3, 3, torus);
      for (int a = 0; a < 3; ++a)
        for (int g = 0; g < 3; ++g) {
          TrigPoly acc(1, 1, torus);
          for (int d = 0; d < 3; ++d) {
            TrigPoly inner = dg[static_cast<std::size_t>(a)].entry(g, d);
            inner += dg[static_cast<std::size_t>(g)].entry(a, d);
            inner -= dg[static_cast<std::size_t>(d)].entry(a, g);
            acc += bundle.g_up.entry(b, d) * inner;
          }
          acc *= 0.5;
          acc.prune();
          for (const auto& [key, mval] : acc.coeffs()) {
            Mat e(3, 3);
            e(a, g) = mval(0, 0);
            ch.add(key, e);
          }
        }
      ch.prune();
      out.christoffel[static_cast<std::size_t>(b)] = ch;
    }
  }
  return out;
}

// | -i {[v^+]^*, v^+} - (c/2) *T^{ab} xi_a xi_b / (g^{mn} xi_m xi_n)^{3/2} |
inline double curvature_torsion_residual(const FrameBundle& bundle, const TeleparallelData& tele,
                                         const CotangentPoint& pt) {
  OperatorSpec op = bundle.principal_operator();
  SymbolPair sym = op.symbol();
  EigenJets jets = eigen_jets(sym, pt);
  const double lhs = u1_scalar_from_jets(jets, +1);

  const Mat star = tele.star_torsion(pt.x);  // *T^a_b
  const Mat gup = bundle.g_up.eval(pt.x);
  double quad = 0, norm2 = 0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      // *T^{a b} = *T^a_c g^{c b}
      double star_up = 0;
      for (int cdx = 0; cdx < 3; ++cdx) star_up += star(a, cdx).real() * gup(cdx, b).real();
      quad += star_up * pt.xi[a] * pt.xi[b];
      norm2 += gup(a, b).real() * pt.xi[a] * pt.xi[b];
    }
  const double rhs = 0.5 * bundle.c * quad / std::pow(norm2, 1.5);
  return std::fabs(lhs - rhs);
}

// O_j^k = (1/2) tr(s_j R s^k R^*): the double-cover map SU(2) -> SO(3).
inline Mat su2_to_so3(const Mat& r, double tol = 1e-10) {
  if (r.rows() != 2 || r.cols() != 2) throw DimensionMismatch("su2_to_so3 expects a 2x2 matrix");
  if ((r.adjoint() * r - Mat::identity(2)).max_abs() > tol) throw NotSpecialUnitary("matrix is not unitary");
  const cplx det = r(0, 0) * r(1, 1) - r(0, 1) * r(1, 0);
  if (std::abs(det - cplx{1, 0}) > tol) throw NotSpecialUnitary("matrix determinant is not +1");
  Mat o(3, 3);
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      const cplx val = 0.5 * (pauli(j + 1) * r * pauli(k + 1) * r.adjoint()).trace();
      if (std::fabs(val.imag()) > 1e-12) throw NotSpecialUnitary("rotation entries must be real");
      o(j, k) = val.real();
    }
  return o;
}

// Frame rotated by a constant special orthogonal matrix.
inline TrigPoly transform_frame(const TrigPoly& frame, const Mat& o) {
  TrigPoly out(3, 3, frame.torus());
  for (const auto& [k, m] : frame.coeffs()) out.add(k, o * m);
  return out;
}

}  // namespace weyl
