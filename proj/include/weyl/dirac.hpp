#pragma once

#include <optional>
#include <string>

#include "weyl/asymptotics.hpp"
#include "weyl/frame.hpp"
#include "weyl/operator_spec.hpp"

namespace weyl {

inline Mat metric_spinor() {
  Mat eps(2, 2);
  eps(0, 1) = -1.0;
  eps(1, 0) = 1.0;
  return eps;
}

// Assembles the massless Dirac (Weyl) operator of a frame,
//   W = -i sigma^a (d_a + (1/4) sigma_b (d_a sigma^b + {b over a g} sigma^g)),
// in exact coefficient space; with `half_density` the conjugation by
// (det g)^{+-1/4} is applied, which only contributes for non-constant
// metrics.
inline OperatorSpec build_dirac(const FrameBundle& bundle, bool half_density = true) {
  // orthonormality guard: V_j^a coV_{k a} = delta_jk pointwise; fitted
  // inverse metrics carry their recorded aliasing residual
  {
    TrigPoly gram = bundle.V * bundle.coV.transpose_field();
    gram.add(Key3{0, 0, 0}, cplx{-1, 0} * Mat::identity(3));
    const double tol = 1e-10 + 50.0 * bundle.metric_fit_residual;
    const int g = 5;
    for (int i0 = 0; i0 < g; ++i0)
      for (int i1 = 0; i1 < g; ++i1)
        for (int i2 = 0; i2 < g; ++i2) {
          const VecN x{bundle.torus.periods[0] * (i0 + 0.31) / g, bundle.torus.periods[1] * (i1 + 0.31) / g,
                       bundle.torus.periods[2] * (i2 + 0.31) / g};
          if (gram.eval(x).max_abs() > tol)
            throw LinearlyDependentFrame("frame/coframe failed the orthonormality check");
        }
  }

  const Torus3 torus = bundle.torus;
  const auto sigma = bundle.sigma();
  const TeleparallelData tele = teleparallel_tensors(bundle);

  std::array<TrigPoly, 3> sigma_low;
  for (int b = 0; b < 3; ++b) {
    TrigPoly acc(2, 2, torus);
    for (int d = 0; d < 3; ++d) acc += bundle.g_down.entry(b, d) * sigma[static_cast<std::size_t>(d)];
    acc.prune();
    sigma_low[static_cast<std::size_t>(b)] = acc;
  }

  TrigPoly zero(2, 2, torus);
  for (int a = 0; a < 3; ++a) {
    TrigPoly inner_sum(2, 2, torus);
    for (int b = 0; b < 3; ++b) {
      TrigPoly inner = sigma[static_cast<std::size_t>(b)].derivative(a);
      for (int g = 0; g < 3; ++g)
        inner += tele.christoffel[static_cast<std::size_t>(b)].entry(a, g) * sigma[static_cast<std::size_t>(g)];
      inner_sum += sigma_low[static_cast<std::size_t>(b)] * inner;
    }
    zero += sigma[static_cast<std::size_t>(a)] * inner_sum;
  }
  zero *= cplx{0, -0.25};

  if (half_density && !bundle.metric_constant) {
    // (det g)^{1/4} W (det g)^{-1/4} = W - (i/4) (d_a ln det g^{..}) sigma^a
    const TrigPoly detg = bundle.det_g_up;
    for (int a = 0; a < 3; ++a) {
      TrigPoly dlog_num = detg.derivative(a);
      auto detg_copy = detg;
      auto num_copy = dlog_num;
      auto f = [detg_copy, num_copy](const VecN& x) {
        Mat m(1, 1);
        m(0, 0) = num_copy.eval_scalar(x) / detg_copy.eval_scalar(x);
        return m;
      };
      const int fit_grid = std::min(48, 4 * std::max(2, detg.max_harmonic()) + 8);
      TrigPoly dlog = TrigPoly::fit_from_grid(f, 1, 1, fit_grid, fit_grid / 2 - 1, torus);
      if (dlog.fit_residual(f, 8) > 1e-8)
        throw NotPositiveDefinite("log-derivative of det g is not numerically band-limited");
      TrigPoly term = dlog * sigma[static_cast<std::size_t>(a)];
      term *= cplx{0, -0.25};
      zero += term;
    }
  }
  zero.prune();

  OperatorSpec op = OperatorSpec::empty(2, torus);
  op.coeff = sigma;
  op.zero = zero;
  op.half_density = half_density;
  return op;
}

// Closed form of the Dirac subprincipal symbol, (c/4) (tr *T) I, as a field.
inline TrigPoly dirac_subprincipal_closed(const FrameBundle& bundle, const TeleparallelData& tele) {
  if (!bundle.metric_constant)
    throw NotPositiveDefinite("closed subprincipal field requires a constant metric; use the pointwise evaluator");
  const double sdg = bundle.sqrt_det_g(VecN{});
  TrigPoly tr_star = tele.star_flat.trace_field();
  tr_star *= sdg;  // tr *T as an exact polynomial
  TrigPoly out(2, 2, bundle.torus);
  for (const auto& [k, m] : tr_star.coeffs()) {
    Mat e(2, 2);
    e(0, 0) = m(0, 0) * (bundle.c / 4.0);
    e(1, 1) = e(0, 0);
    out.add(k, e);
  }
  out.prune();
  return out;
}

inline Mat dirac_subprincipal_closed_at(const FrameBundle& bundle, const TeleparallelData& tele, const VecN& x) {
  const double val = bundle.c / 4.0 * tele.trace_star_torsion(x);
  Mat m = Mat::identity(2);
  m *= val;
  return m;
}

struct DiracDecision {
  bool is_dirac = false;
  enum class Condition { none, subprincipal_not_proportional, b_not_zero, reconstruction_mismatch };
  Condition failed = Condition::none;
  std::optional<FrameBundle> witness;
  double max_offdiag = 0;             // condition (a) residual, sup over grid
  double max_b = 0;                   // condition (b) residual, sup over grid
  double b_sample = 0;                // b(x) at the worst grid point
  double reconstruction_residual = 0;
};

// Theorem-level decision: op is a massless Dirac operator on half-densities
// iff (a) A_sub(x) is proportional to the identity and (b) b(x) vanishes,
// both at every point.  On success the frame witness is extracted and the
// operator rebuilt from it coefficient-exactly (the constructive converse).
inline DiracDecision is_massless_dirac(const OperatorSpec& op, int grid = 16) {
  if (op.m != 2) throw AssumptionViolated("system size must be 2");
  if (!op.trace_free_principal()) throw AssumptionViolated("principal symbol must be trace-free");
  for (const auto& c : op.coeff)
    if (c.hermitian_field_defect() > 1e-10) throw AssumptionViolated("derivative coefficients must be Hermitian fields");

  FrameBundle bundle = [&] {
    try {
      return FrameBundle::from_frame(frame_from_symbol(op.coeff));
    } catch (const LinearlyDependentFrame&) {
      throw AssumptionViolated("principal symbol is not elliptic");
    }
  }();
  // fitted (non-constant) metrics carry their recorded aliasing residual
  const double fit_slack = 100.0 * bundle.metric_fit_residual;

  const TrigPoly asub = op.subprincipal_field();
  if (asub.hermitian_field_defect() > 1e-10 + fit_slack)
    throw AssumptionViolated("operator is not formally self-adjoint (subprincipal symbol not Hermitian)");
  const TeleparallelData tele = teleparallel_tensors(bundle);

  DiracDecision out;
  double max_off = 0, max_b = 0, b_at_worst = 0, max_asub = 0;
  for (int i0 = 0; i0 < grid; ++i0)
    for (int i1 = 0; i1 < grid; ++i1)
      for (int i2 = 0; i2 < grid; ++i2) {
        const VecN x{op.torus.periods[0] * i0 / grid, op.torus.periods[1] * i1 / grid,
                     op.torus.periods[2] * i2 / grid};
        const Mat a = asub.eval(x);
        max_asub = std::max(max_asub, a.max_abs());
        Mat off = a;
        const cplx mean = 0.5 * a.trace();
        off(0, 0) -= mean;
        off(1, 1) -= mean;
        max_off = std::max(max_off, off.max_abs());
        const double bx = b_density_closed(bundle, tele, asub, x);
        const double ax = a_density_metric(bundle, x);
        if (std::fabs(bx) / (1.0 + ax) > max_b) {
          max_b = std::fabs(bx) / (1.0 + ax);
          b_at_worst = bx;
        }
      }
  out.max_offdiag = max_off;
  out.max_b = max_b;
  out.b_sample = b_at_worst;

  if (max_off > (1e-8 + fit_slack) * (1.0 + max_asub)) {
    out.failed = DiracDecision::Condition::subprincipal_not_proportional;
    return out;
  }
  if (max_b > 1e-8 + fit_slack) {
    out.failed = DiracDecision::Condition::b_not_zero;
    return out;
  }

  const OperatorSpec rebuilt = build_dirac(bundle, op.half_density);
  double scale = 1.0;
  for (const auto& c : op.coeff) scale = std::max(scale, c.coeff_abs_sum());
  out.reconstruction_residual = op.coefficient_distance(rebuilt);
  if (out.reconstruction_residual > (1e-10 + fit_slack) * scale) {
    out.failed = DiracDecision::Condition::reconstruction_mismatch;
    return out;
  }
  out.is_dirac = true;
  out.witness = std::move(bundle);
  return out;
}

// L^2 pairing of trig-poly spinor fields; the spinor form carries
// sqrt(det g), the half-density form is the plain dx pairing (Parseval).
inline cplx spinor_inner(const OperatorSpec& op, const FrameBundle* bundle, const TrigPoly& v, const TrigPoly& w) {
  if (op.half_density || bundle == nullptr) {
    cplx acc = 0;
    for (const auto& [k, mv] : v.coeffs()) {
      const Mat mw = w.coeff(k);
      for (int i = 0; i < v.rows(); ++i) acc += std::conj(mv(i, 0)) * mw(i, 0);
    }
    return acc * op.torus.volume();
  }
  // weighted pairing on a grid fine enough for the trig-poly factor
  const int g = std::max(8, 2 * (v.max_harmonic() + w.max_harmonic() + op.max_harmonic()) + 2);
  cplx acc = 0;
  for (int i0 = 0; i0 < g; ++i0)
    for (int i1 = 0; i1 < g; ++i1)
      for (int i2 = 0; i2 < g; ++i2) {
        const VecN x{op.torus.periods[0] * i0 / g, op.torus.periods[1] * i1 / g, op.torus.periods[2] * i2 / g};
        const Mat mv = v.eval(x);
        const Mat mw = w.eval(x);
        cplx dotv = 0;
        for (int i = 0; i < v.rows(); ++i) dotv += std::conj(mv(i, 0)) * mw(i, 0);
        acc += dotv * bundle->sqrt_det_g(x);
      }
  return acc * (op.torus.volume() / (static_cast<double>(g) * g * g));
}

// |<v, A w> - <A v, w>| for one trial pair.
inline double selfadjointness_residual(const OperatorSpec& op, const FrameBundle* bundle, const TrigPoly& v,
                                       const TrigPoly& w) {
  const TrigPoly av = op.apply(v);
  const TrigPoly aw = op.apply(w);
  const cplx lhs = spinor_inner(op, bundle, v, aw);
  const cplx rhs = spinor_inner(op, bundle, av, w);
  return std::abs(lhs - rhs);
}

// Charge conjugation C(v) = eps conj(v) on spinor fields.
inline TrigPoly charge_conjugate(const TrigPoly& spinor) {
  const TrigPoly conj = spinor.conj_field();
  TrigPoly out(2, 1, spinor.torus());
  const Mat eps = metric_spinor();
  for (const auto& [k, m] : conj.coeffs()) out.add(k, eps * m);
  return out;
}

// sup_x |C(A v) - A C(v)| over the grid, for one trial field.
inline double charge_conjugation_residual(const OperatorSpec& op, const TrigPoly& v, int grid = 8) {
  const TrigPoly lhs = charge_conjugate(op.apply(v));
  const TrigPoly rhs = op.apply(charge_conjugate(v));
  const TrigPoly diff = lhs - rhs;
  double sup = 0;
  for (int i0 = 0; i0 < grid; ++i0)
    for (int i1 = 0; i1 < grid; ++i1)
      for (int i2 = 0; i2 < grid; ++i2) {
        const VecN x{op.torus.periods[0] * i0 / grid, op.torus.periods[1] * i1 / grid,
                     op.torus.periods[2] * i2 / grid};
        sup = std::max(sup, diff.eval(x).max_abs());
      }
  return sup;
}

struct Su2Transform {
  OperatorSpec conjugated;  // R W R^*
  OperatorSpec rebuilt;     // Dirac operator of the conjugated Pauli field
  double coefficient_residual = 0;
};

// Property-4 transform: conjugating the operator by a smooth SU(2) field
// equals rebuilding the Dirac operator from the conjugated Pauli field.
inline Su2Transform transform_dirac_su2(const OperatorSpec& op, const TrigPoly& r_field) {
  if (r_field.rows() != 2 || r_field.cols() != 2) throw NotSpecialUnitary("SU(2) field must be 2x2");
  const TrigPoly r_adj = r_field.adjoint_field();
  {
    TrigPoly gram = r_field * r_adj;
    gram.add(Key3{0, 0, 0}, cplx{-1, 0} * Mat::identity(2));
    gram.prune(1e-15);
    if (gram.coeff_abs_sum() > 1e-10) throw NotSpecialUnitary("field is not unitary");
    TrigPoly det = r_field.entry(0, 0) * r_field.entry(1, 1) - r_field.entry(0, 1) * r_field.entry(1, 0);
    det.add(Key3{0, 0, 0}, cplx{-1, 0} * Mat::identity(1));
    det.prune(1e-15);
    if (det.coeff_abs_sum() > 1e-10) throw NotSpecialUnitary("field determinant is not +1");
  }

  Su2Transform out;
  out.conjugated = OperatorSpec::empty(2, op.torus);
  out.conjugated.half_density = op.half_density;
  for (int a = 0; a < 3; ++a) {
    out.conjugated.coeff[static_cast<std::size_t>(a)] = r_field * op.coeff[static_cast<std::size_t>(a)] * r_adj;
    out.conjugated.coeff[static_cast<std::size_t>(a)].prune();
  }
  TrigPoly zero = r_field * op.zero * r_adj;
  for (int a = 0; a < 3; ++a) {
    TrigPoly term = r_field * op.coeff[static_cast<std::size_t>(a)] * r_adj.derivative(a);
    term *= cplx{0, -1};
    zero += term;
  }
  zero.prune();
  out.conjugated.zero = zero;

  const FrameBundle tilde = FrameBundle::from_frame(frame_from_symbol(out.conjugated.coeff));
  out.rebuilt = build_dirac(tilde, op.half_density);
  out.coefficient_residual = out.conjugated.coefficient_distance(out.rebuilt);
  return out;
}

}  // namespace weyl
