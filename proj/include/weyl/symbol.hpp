#pragma once

#include <functional>
#include <vector>

#include "weyl/common.hpp"
#include "weyl/linalg.hpp"

namespace weyl {

struct CotangentPoint {
  VecN x;
  VecN xi;
};

// Full symbol A = A1 + A0 of a first order self-adjoint operator, as
// callables on the punctured cotangent bundle.  A1 is positively homogeneous
// of degree 1 in xi, A0 of degree 0.  Analytic derivative callables override
// finite differences when supplied; `asub` short-circuits the subprincipal
// computation (exact for differential operators and transformed pairs).
struct SymbolPair {
  int n = 3;
  int m = 2;
  std::function<Mat(const VecN&, const VecN&)> a1;
  std::function<Mat(const VecN&, const VecN&)> a0;
  std::function<Mat(int, const VecN&, const VecN&)> a1_dx;          // d/dx^alpha
  std::function<Mat(int, const VecN&, const VecN&)> a1_dxi;         // d/dxi_alpha
  std::function<Mat(int, int, const VecN&, const VecN&)> a1_dxdxi;  // d2/dx^a dxi_b
  std::function<Mat(const VecN&, const VecN&)> asub;                // optional override

  double fd_step_rel = 1e-4;  // first-derivative step; mixed stencils use 10x
  double gap_tol = 1e-6;      // relative eigenvalue gap floor
  double ell_tol = 1e-9;      // relative ellipticity floor
};

// Eigen-data of the principal symbol at one cotangent point, with the signed
// index convention: j = 1..m_plus ascending over positive eigenvalues,
// j = -1..-m_minus descending over negative ones.
struct EigenSystem {
  int m_plus = 0;
  int m_minus = 0;
  std::vector<double> h;  // ascending
  std::vector<CVec> v;    // unit, gauge-fixed (largest component real positive)
  std::vector<Mat> P;     // rank-1 projectors v v^*

  int size() const { return static_cast<int>(h.size()); }
  int array_index(int signed_j) const {
    if (signed_j > 0 && signed_j <= m_plus) return m_minus + signed_j - 1;
    if (signed_j < 0 && -signed_j <= m_minus) return m_minus + signed_j;
    throw DimensionMismatch("signed eigenvalue index out of range");
  }
  double eigenvalue(int signed_j) const { return h[static_cast<std::size_t>(array_index(signed_j))]; }
  const CVec& vector(int signed_j) const { return v[static_cast<std::size_t>(array_index(signed_j))]; }
  const Mat& projector(int signed_j) const { return P[static_cast<std::size_t>(array_index(signed_j))]; }
  int signed_index(int array_idx) const { return array_idx >= m_minus ? array_idx - m_minus + 1 : array_idx - m_minus; }
};

namespace detail {

inline void fix_gauge(CVec& v) {
  std::size_t arg = 0;
  double best = -1;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]);
    if (a > best) {
      best = a;
      arg = i;
    }
  }
  if (best <= 0) return;
  const cplx ph = v[arg] / best;
  for (auto& z : v) z /= ph;
}

}  // namespace detail

inline EigenSystem principal_eigensystem(const SymbolPair& sym, const CotangentPoint& pt) {
  if (pt.xi.norm() == 0) throw EllipticityViolated("covector must be nonzero");
  const Mat a1 = sym.a1(pt.x, pt.xi);
  if (a1.rows() != sym.m || a1.cols() != sym.m) throw DimensionMismatch("principal symbol has wrong size");
  HermitianEigen eig = hermitian_eigensolve(a1);

  EigenSystem out;
  const int m = sym.m;
  double radius = 0;
  for (double hv : eig.values) radius = std::max(radius, std::fabs(hv));
  if (radius == 0) throw EllipticityViolated("principal symbol vanishes");
  for (double hv : eig.values)
    if (std::fabs(hv) < sym.ell_tol * radius) throw EllipticityViolated("eigenvalue of principal symbol too close to zero");
  for (int i = 0; i + 1 < m; ++i)
    if (eig.values[static_cast<std::size_t>(i + 1)] - eig.values[static_cast<std::size_t>(i)] < sym.gap_tol * radius)
      throw DegenerateEigenvalue("eigenvalues of principal symbol not simple at this point");

  out.h = eig.values;
  out.m_minus = 0;
  for (double hv : eig.values)
    if (hv < 0) ++out.m_minus;
  out.m_plus = m - out.m_minus;
  out.v.reserve(static_cast<std::size_t>(m));
  out.P.reserve(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    CVec vk = eig.vectors.col(k);
    detail::fix_gauge(vk);
    out.P.push_back(outer(vk, vk));
    out.v.push_back(std::move(vk));
  }
  return out;
}

namespace detail {

// Stencil offsets for a 4th-order central difference with one Richardson
// level: D = (16 D4(h/2) - D4(h)) / 15.
struct FdStencil {
  std::array<double, 6> offsets;  // multiples of h: -2, -1, -1/2, 1/2, 1, 2
  std::array<double, 6> weights;  // divided by h
  explicit FdStencil(double h) {
    offsets = {-2 * h, -h, -h / 2, h / 2, h, 2 * h};
    const double a = 1.0 / (12 * h);  // D4(h) weights: (1, -8, 8, -1)/(12h) at (-2h,-h,h,2h)
    const double b = 1.0 / (6 * h);   // D4(h/2) weights at (-h, -h/2, h/2, h)
    weights = {-a / 15.0,
               8.0 * a / 15.0 + 16.0 * b / 15.0,
               -128.0 * b / 15.0,
               128.0 * b / 15.0,
               -8.0 * a / 15.0 - 16.0 * b / 15.0,
               a / 15.0};
  }
};

inline void check_step(double h, double scale) {
  if (!(h > 1e-13 * std::max(1.0, scale))) throw StepUnderflow("finite-difference step below noise floor");
}

inline double fd_step_x(const SymbolPair& sym) { return sym.fd_step_rel; }
inline double fd_step_xi(const SymbolPair& sym, const VecN& xi) { return sym.fd_step_rel * std::max(1.0, xi.norm()); }

template <typename F>
auto fd_first(F&& f, double h) -> decltype(f(0.0)) {
  check_step(h, 1.0);
  const FdStencil st(h);
  auto acc = st.weights[0] * f(st.offsets[0]);
  for (int i = 1; i < 6; ++i) acc += st.weights[static_cast<std::size_t>(i)] * f(st.offsets[static_cast<std::size_t>(i)]);
  return acc;
}

// Plain 4th-order cross stencil for one mixed second derivative.
template <typename F>
auto fd_mixed(F&& f, double hu, double hv) -> decltype(f(0.0, 0.0)) {
  check_step(hu, 1.0);
  check_step(hv, 1.0);
  const std::array<double, 4> off{-2, -1, 1, 2};
  const std::array<double, 4> w{1.0 / 12, -8.0 / 12, 8.0 / 12, -1.0 / 12};
  auto acc = (w[0] * w[0] / (hu * hv)) * f(off[0] * hu, off[0] * hv);
  bool first = true;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      if (first) {
        first = false;
        continue;
      }
      acc += (w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j)] / (hu * hv)) *
             f(off[static_cast<std::size_t>(i)] * hu, off[static_cast<std::size_t>(j)] * hv);
    }
  return acc;
}

}  // namespace detail

// First derivatives (and mixed second derivatives on demand) of the
// principal symbol at a point.
struct SymbolJet {
  Mat value;
  std::vector<Mat> dx;   // n entries
  std::vector<Mat> dxi;  // n entries
};

inline Mat symbol_a1_dx(const SymbolPair& sym, int alpha, const CotangentPoint& pt) {
  if (sym.a1_dx) return sym.a1_dx(alpha, pt.x, pt.xi);
  return detail::fd_first(
      [&](double t) {
        VecN x = pt.x;
        x[alpha] += t;
        return sym.a1(x, pt.xi);
      },
      detail::fd_step_x(sym));
}

inline Mat symbol_a1_dxi(const SymbolPair& sym, int alpha, const CotangentPoint& pt) {
  if (sym.a1_dxi) return sym.a1_dxi(alpha, pt.x, pt.xi);
  return detail::fd_first(
      [&](double t) {
        VecN xi = pt.xi;
        xi[alpha] += t;
        return sym.a1(pt.x, xi);
      },
      detail::fd_step_xi(sym, pt.xi));
}

inline Mat symbol_a1_dxdxi(const SymbolPair& sym, int alpha, int beta, const CotangentPoint& pt) {
  if (sym.a1_dxdxi) return sym.a1_dxdxi(alpha, beta, pt.x, pt.xi);
  if (sym.a1_dxi) {
    // differentiate the analytic xi-derivative in x
    return detail::fd_first(
        [&](double t) {
          VecN x = pt.x;
          x[alpha] += t;
          return sym.a1_dxi(beta, x, pt.xi);
        },
        detail::fd_step_x(sym));
  }
  return detail::fd_mixed(
      [&](double tx, double txi) {
        VecN x = pt.x;
        VecN xi = pt.xi;
        x[alpha] += tx;
        xi[beta] += txi;
        return sym.a1(x, xi);
      },
      10 * detail::fd_step_x(sym), 10 * detail::fd_step_xi(sym, pt.xi));
}

inline SymbolJet symbol_jet(const SymbolPair& sym, const CotangentPoint& pt) {
  SymbolJet jet;
  jet.value = sym.a1(pt.x, pt.xi);
  jet.dx.reserve(static_cast<std::size_t>(sym.n));
  jet.dxi.reserve(static_cast<std::size_t>(sym.n));
  for (int a = 0; a < sym.n; ++a) {
    jet.dx.push_back(symbol_a1_dx(sym, a, pt));
    jet.dxi.push_back(symbol_a1_dxi(sym, a, pt));
  }
  return jet;
}

// Generic matrix field on T'M with optional analytic derivatives; the bracket
// operations consume these.
struct MatrixField {
  std::function<Mat(const CotangentPoint&)> eval;
  std::function<Mat(int, const CotangentPoint&)> dx;   // optional
  std::function<Mat(int, const CotangentPoint&)> dxi;  // optional
  double fd_step_rel = 1e-4;
};

inline MatrixField field_of_a1(const SymbolPair& sym) {
  MatrixField f;
  f.eval = [&sym](const CotangentPoint& pt) { return sym.a1(pt.x, pt.xi); };
  f.dx = [&sym](int a, const CotangentPoint& pt) { return symbol_a1_dx(sym, a, pt); };
  f.dxi = [&sym](int a, const CotangentPoint& pt) { return symbol_a1_dxi(sym, a, pt); };
  f.fd_step_rel = sym.fd_step_rel;
  return f;
}

inline Mat field_dx(const MatrixField& f, int alpha, const CotangentPoint& pt) {
  if (f.dx) return f.dx(alpha, pt);
  return detail::fd_first(
      [&](double t) {
        CotangentPoint q = pt;
        q.x[alpha] += t;
        return f.eval(q);
      },
      f.fd_step_rel);
}

inline Mat field_dxi(const MatrixField& f, int alpha, const CotangentPoint& pt) {
  if (f.dxi) return f.dxi(alpha, pt);
  return detail::fd_first(
      [&](double t) {
        CotangentPoint q = pt;
        q.xi[alpha] += t;
        return f.eval(q);
      },
      f.fd_step_rel * std::max(1.0, pt.xi.norm()));
}

// {P, R} = P_x R_xi - P_xi R_x, summed over chart axes.
inline Mat poisson_bracket(const MatrixField& pf, const MatrixField& rf, const CotangentPoint& pt, int n = 3) {
  Mat acc;
  for (int a = 0; a < n; ++a) {
    const Mat term = field_dx(pf, a, pt) * field_dxi(rf, a, pt) - field_dxi(pf, a, pt) * field_dx(rf, a, pt);
    if (acc.empty()) acc = term;
    else acc += term;
  }
  return acc;
}

// {P, Q, R} = P_x Q R_xi - P_xi Q R_x.
inline Mat generalized_bracket(const MatrixField& pf, const Mat& q, const MatrixField& rf, const CotangentPoint& pt,
                               int n = 3) {
  Mat acc;
  for (int a = 0; a < n; ++a) {
    const Mat term = field_dx(pf, a, pt) * q * field_dxi(rf, a, pt) - field_dxi(pf, a, pt) * q * field_dx(rf, a, pt);
    if (acc.empty()) acc = term;
    else acc += term;
  }
  return acc;
}

// A_sub = A0 + (i/2) (A1)_{x^a xi_a}.  Throws NotHermitian when the result
// has a material anti-Hermitian part, which signals a non-self-adjoint input.
inline Mat subprincipal_symbol(const SymbolPair& sym, const CotangentPoint& pt, double herm_tol = 1e-7) {
  Mat out;
  if (sym.asub) {
    out = sym.asub(pt.x, pt.xi);
  } else {
    out = sym.a0(pt.x, pt.xi);
    for (int a = 0; a < sym.n; ++a) out += (0.5 * iu) * symbol_a1_dxdxi(sym, a, a, pt);
  }
  if (out.hermitian_defect() > herm_tol * (1.0 + out.max_abs()))
    throw NotHermitian("subprincipal symbol is not Hermitian");
  return out;
}

// Derivatives of all eigen-bands at one point, from a shared stencil of
// perturbed eigensystems.  Projector and eigenvalue fields are smooth when
// the eigenvalues are simple; eigenvector derivatives use the phase-aligned
// local gauge (each stencil eigenvector is rotated to have a real positive
// inner product with the centre one).
struct EigenJets {
  EigenSystem center;
  int n = 3;
  // indexed [band][axis], bands in ascending (array) order
  std::vector<std::vector<Mat>> P_dx, P_dxi;
  std::vector<std::vector<double>> h_dx, h_dxi;
  std::vector<std::vector<CVec>> v_dx, v_dxi;  // aligned-gauge derivatives

  const Mat& p_dx(int signed_j, int axis) const {
    return P_dx[static_cast<std::size_t>(center.array_index(signed_j))][static_cast<std::size_t>(axis)];
  }
  const Mat& p_dxi(int signed_j, int axis) const {
    return P_dxi[static_cast<std::size_t>(center.array_index(signed_j))][static_cast<std::size_t>(axis)];
  }
};

inline EigenJets eigen_jets(const SymbolPair& sym, const CotangentPoint& pt, bool with_vectors = false) {
  EigenJets jets;
  jets.center = principal_eigensystem(sym, pt);
  jets.n = sym.n;
  const int m = sym.m;
  const int n = sym.n;

  const auto eval_at = [&](int axis, bool in_xi, double t) {
    CotangentPoint q = pt;
    if (in_xi) q.xi[axis] += t;
    else q.x[axis] += t;
    return principal_eigensystem(sym, q);
  };

  jets.P_dx.assign(static_cast<std::size_t>(m), std::vector<Mat>(static_cast<std::size_t>(n)));
  jets.P_dxi.assign(static_cast<std::size_t>(m), std::vector<Mat>(static_cast<std::size_t>(n)));
  jets.h_dx.assign(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(n), 0.0));
  jets.h_dxi.assign(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(n), 0.0));
  if (with_vectors) {
    jets.v_dx.assign(static_cast<std::size_t>(m), std::vector<CVec>(static_cast<std::size_t>(n)));
    jets.v_dxi.assign(static_cast<std::size_t>(m), std::vector<CVec>(static_cast<std::size_t>(n)));
  }

  for (int axis = 0; axis < n; ++axis) {
    for (int in_xi = 0; in_xi < 2; ++in_xi) {
      const double h = in_xi ? detail::fd_step_xi(sym, pt.xi) : detail::fd_step_x(sym);
      detail::check_step(h, 1.0);
      const detail::FdStencil st(h);
      std::array<EigenSystem, 6> samples;
      for (int s = 0; s < 6; ++s) samples[static_cast<std::size_t>(s)] = eval_at(axis, in_xi != 0, st.offsets[static_cast<std::size_t>(s)]);

      for (int band = 0; band < m; ++band) {
        Mat pacc(m, m);
        double hacc = 0;
        CVec vacc(static_cast<std::size_t>(m));
        const CVec& vc = jets.center.v[static_cast<std::size_t>(band)];
        for (int s = 0; s < 6; ++s) {
          const double w = st.weights[static_cast<std::size_t>(s)];
          const EigenSystem& es = samples[static_cast<std::size_t>(s)];
          pacc += w * es.P[static_cast<std::size_t>(band)];
          hacc += w * es.h[static_cast<std::size_t>(band)];
          if (with_vectors) {
            CVec vs = es.v[static_cast<std::size_t>(band)];
            cplx z = inner(vc, vs);
            const double az = std::abs(z);
            if (az < 0.5) throw DegenerateEigenvalue("eigenvector varies too fast across the stencil");
            z /= az;
            for (std::size_t i = 0; i < vs.size(); ++i) vacc[i] += w * (vs[i] / z);
          }
        }
        auto& pd = in_xi ? jets.P_dxi : jets.P_dx;
        auto& hd = in_xi ? jets.h_dxi : jets.h_dx;
        pd[static_cast<std::size_t>(band)][static_cast<std::size_t>(axis)] = pacc;
        hd[static_cast<std::size_t>(band)][static_cast<std::size_t>(axis)] = hacc;
        if (with_vectors) {
          auto& vd = in_xi ? jets.v_dxi : jets.v_dx;
          vd[static_cast<std::size_t>(band)][static_cast<std::size_t>(axis)] = vacc;
        }
      }
    }
  }
  return jets;
}

// Gauge-free scalar curvature of the U(1) eigenvector connection:
// -i {[v]^*, v} computed as -i tr(P {P, P}).
inline double u1_scalar_from_jets(const EigenJets& jets, int signed_j) {
  const int idx = jets.center.array_index(signed_j);
  const Mat& p = jets.center.P[static_cast<std::size_t>(idx)];
  Mat bracket;
  for (int a = 0; a < jets.n; ++a) {
    const Mat& px = jets.P_dx[static_cast<std::size_t>(idx)][static_cast<std::size_t>(a)];
    const Mat& pxi = jets.P_dxi[static_cast<std::size_t>(idx)][static_cast<std::size_t>(a)];
    const Mat term = px * pxi - pxi * px;
    if (bracket.empty()) bracket = term;
    else bracket += term;
  }
  return (cplx{0, -1} * (p * bracket).trace()).real();
}

// {[v]^*, A1 - h, v} evaluated gauge-free as
// tr(P_x (A1-h) P_xi - P_xi (A1-h) P_x); purely imaginary for Hermitian input.
inline cplx sandwich_bracket_from_jets(const SymbolPair& sym, const EigenJets& jets, int signed_j,
                                       const CotangentPoint& pt) {
  const int idx = jets.center.array_index(signed_j);
  const double hval = jets.center.h[static_cast<std::size_t>(idx)];
  Mat q = sym.a1(pt.x, pt.xi);
  for (int i = 0; i < sym.m; ++i) q(i, i) -= hval;
  cplx acc = 0;
  for (int a = 0; a < jets.n; ++a) {
    const Mat& px = jets.P_dx[static_cast<std::size_t>(idx)][static_cast<std::size_t>(a)];
    const Mat& pxi = jets.P_dxi[static_cast<std::size_t>(idx)][static_cast<std::size_t>(a)];
    acc += (px * q * pxi - pxi * q * px).trace();
  }
  return acc;
}

struct U1CurvatureData {
  double scalar = 0;                        // -i {[v]^*, v}
  std::vector<std::vector<double>> form;    // 2n x 2n antisymmetric, block layout (x | xi)
  std::vector<double> potential;            // (P_alpha, Q^gamma) under the stored global gauge
};

inline U1CurvatureData u1_curvature(const SymbolPair& sym, int signed_j, const CotangentPoint& pt) {
  EigenJets jets = eigen_jets(sym, pt, /*with_vectors=*/true);
  const int n = sym.n;
  const int idx = jets.center.array_index(signed_j);
  U1CurvatureData out;
  out.scalar = u1_scalar_from_jets(jets, signed_j);

  // Assemble all 2n eigenvector derivatives in the aligned gauge.
  std::vector<const CVec*> dv(static_cast<std::size_t>(2 * n));
  for (int a = 0; a < n; ++a) {
    dv[static_cast<std::size_t>(a)] = &jets.v_dx[static_cast<std::size_t>(idx)][static_cast<std::size_t>(a)];
    dv[static_cast<std::size_t>(n + a)] = &jets.v_dxi[static_cast<std::size_t>(idx)][static_cast<std::size_t>(a)];
  }
  out.form.assign(static_cast<std::size_t>(2 * n), std::vector<double>(static_cast<std::size_t>(2 * n), 0.0));
  for (int i = 0; i < 2 * n; ++i)
    for (int j = 0; j < 2 * n; ++j) {
      const cplx z = iu * (inner(*dv[static_cast<std::size_t>(j)], *dv[static_cast<std::size_t>(i)]) -
                           inner(*dv[static_cast<std::size_t>(i)], *dv[static_cast<std::size_t>(j)]));
      out.form[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = z.real();
    }

  // Covector potential i v^* dv under the library's global gauge convention
  // (largest eigenvector component real positive); gauge-dependent by nature.
  out.potential.assign(static_cast<std::size_t>(2 * n), 0.0);
  const CVec& vc = jets.center.v[static_cast<std::size_t>(idx)];
  for (int a = 0; a < 2 * n; ++a) {
    const bool in_xi = a >= n;
    const int axis = in_xi ? a - n : a;
    const double step = in_xi ? detail::fd_step_xi(sym, pt.xi) : detail::fd_step_x(sym);
    const CVec dvg = detail::fd_first(
        [&](double t) {
          CotangentPoint q = pt;
          if (in_xi) q.xi[axis] += t;
          else q.x[axis] += t;
          EigenSystem es = principal_eigensystem(sym, q);
          return es.v[static_cast<std::size_t>(idx)];
        },
        step);
    out.potential[static_cast<std::size_t>(a)] = (iu * inner(vc, dvg)).real();
  }
  return out;
}

// Subprincipal symbol of the propagator component U^{(j)}(t) at t = 0; its
// trace equals -i {[v^{(j)}]^*, v^{(j)}}.
inline Mat propagator_zero_subprincipal(const SymbolPair& sym, int signed_j, const CotangentPoint& pt) {
  EigenJets jets = eigen_jets(sym, pt);
  const EigenSystem& es = jets.center;
  const Mat asub = subprincipal_symbol(sym, pt);
  const SymbolJet a1jet = symbol_jet(sym, pt);
  const int m = sym.m;
  const int jdx = es.array_index(signed_j);

  // {A1 + h_band, P_band} with shared A1 jets
  const auto band_bracket = [&](int band) {
    Mat acc(m, m);
    for (int a = 0; a < sym.n; ++a) {
      Mat ax = a1jet.dx[static_cast<std::size_t>(a)];
      Mat axi = a1jet.dxi[static_cast<std::size_t>(a)];
      const double hx = jets.h_dx[static_cast<std::size_t>(band)][static_cast<std::size_t>(a)];
      const double hxi = jets.h_dxi[static_cast<std::size_t>(band)][static_cast<std::size_t>(a)];
      for (int i = 0; i < m; ++i) {
        ax(i, i) += hx;
        axi(i, i) += hxi;
      }
      acc += ax * jets.P_dxi[static_cast<std::size_t>(band)][static_cast<std::size_t>(a)] -
             axi * jets.P_dx[static_cast<std::size_t>(band)][static_cast<std::size_t>(a)];
    }
    return acc;
  };

  const Mat bj = band_bracket(jdx);
  const Mat& pj = es.P[static_cast<std::size_t>(jdx)];
  double radius = 0;
  for (double hv : es.h) radius = std::max(radius, std::fabs(hv));
  Mat out(m, m);
  for (int l = 0; l < m; ++l) {
    if (l == jdx) continue;
    const double denom = es.h[static_cast<std::size_t>(jdx)] - es.h[static_cast<std::size_t>(l)];
    if (std::fabs(denom) < sym.gap_tol * radius)
      throw DegenerateEigenvalue("propagator subprincipal: eigenvalue gap underflow");
    const Mat& pl = es.P[static_cast<std::size_t>(l)];
    const Mat bl = band_bracket(l);
    Mat num = pl * (2.0 * asub * pj + iu * bj) + pj * (2.0 * asub * pl + iu * bl);
    out += (1.0 / (2.0 * denom)) * num;
  }
  return out;
}

// Smooth map M -> U(m); derivative callable optional.
struct UnitaryMap {
  std::function<Mat(const VecN&)> eval;
  std::function<Mat(int, const VecN&)> dx;  // optional
  double fd_step = 1e-4;
};

inline Mat unitary_eval_checked(const UnitaryMap& r, const VecN& x, double tol = 1e-10) {
  Mat m = r.eval(x);
  const Mat gram = m.adjoint() * m;
  if ((gram - Mat::identity(m.rows())).max_abs() > tol) throw NotUnitary("matrix-function is not unitary");
  return m;
}

inline Mat unitary_dx(const UnitaryMap& r, int alpha, const VecN& x) {
  if (r.dx) return r.dx(alpha, x);
  return detail::fd_first(
      [&](double t) {
        VecN y = x;
        y[alpha] += t;
        return r.eval(y);
      },
      r.fd_step);
}

// A |-> R A R^*: principal symbol conjugates, the subprincipal symbol picks
// up the commutator-type derivative correction; the degree-0 part follows
// from the symbol composition rule.
inline SymbolPair transform_operator_unitary(const SymbolPair& sym, const UnitaryMap& r) {
  SymbolPair out;
  out.n = sym.n;
  out.m = sym.m;
  out.fd_step_rel = sym.fd_step_rel;
  out.gap_tol = sym.gap_tol;
  out.ell_tol = sym.ell_tol;
  const SymbolPair base = sym;  // copy keeps the returned pair self-contained
  const UnitaryMap rm = r;

  out.a1 = [base, rm](const VecN& x, const VecN& xi) {
    const Mat rr = unitary_eval_checked(rm, x);
    return rr * base.a1(x, xi) * rr.adjoint();
  };
  out.a1_dxi = [base, rm](int a, const VecN& x, const VecN& xi) {
    const Mat rr = unitary_eval_checked(rm, x);
    CotangentPoint pt{x, xi};
    return rr * symbol_a1_dxi(base, a, pt) * rr.adjoint();
  };
  out.a1_dx = [base, rm](int a, const VecN& x, const VecN& xi) {
    const Mat rr = unitary_eval_checked(rm, x);
    const Mat rd = unitary_dx(rm, a, x);
    CotangentPoint pt{x, xi};
    const Mat a1 = base.a1(x, xi);
    return rd * a1 * rr.adjoint() + rr * symbol_a1_dx(base, a, pt) * rr.adjoint() + rr * a1 * rd.adjoint();
  };
  out.a0 = [base, rm](const VecN& x, const VecN& xi) {
    const Mat rr = unitary_eval_checked(rm, x);
    CotangentPoint pt{x, xi};
    Mat acc = rr * base.a0(x, xi) * rr.adjoint();
    for (int a = 0; a < base.n; ++a)
      acc += cplx{0, -1} * (rr * symbol_a1_dxi(base, a, pt) * unitary_dx(rm, a, x).adjoint());
    return acc;
  };
  out.asub = [base, rm](const VecN& x, const VecN& xi) {
    const Mat rr = unitary_eval_checked(rm, x);
    CotangentPoint pt{x, xi};
    Mat acc = rr * subprincipal_symbol(base, pt) * rr.adjoint();
    for (int a = 0; a < base.n; ++a) {
      const Mat rd = unitary_dx(rm, a, x);
      const Mat a1xi = symbol_a1_dxi(base, a, pt);
      acc += (0.5 * iu) * (rd * a1xi * rr.adjoint() - rr * a1xi * rd.adjoint());
    }
    return acc;
  };
  return out;
}

}  // namespace weyl
