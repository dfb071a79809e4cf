// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure.  Every tolerance is pinned here, in code.

#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "weyl/mollifier.hpp"
#include "weyl/weyl.hpp"

using namespace weyl;
using testutil::sigma_d_operator;

namespace {

int failures = 0;

void report(const std::string& id, bool pass, const std::string& detail) {
  std::printf("[%s] %s: %s\n", pass ? "PASS" : "FAIL", id.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Mat diag2(double a, double b) {
  Mat m(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

// C1: leading Weyl coefficient from the exact counting function.
void criterion_1() {
  const double lambda = 35.0;
  const SpectralData data = lattice_oracle(sigma_d_operator(), lambda + 1.0);
  const double a_est = data.counting(lambda) / (lambda * lambda * lambda);
  const double target = 4 * pi / 3;
  const double rel = std::fabs(a_est - target) / target;
  report("C1 leading-weyl-coefficient",
         rel <= 0.01,
         "N(35)/35^3 = " + num(a_est) + ", target 4pi/3 = " + num(target) + ", rel.dev " + num(rel) + " (tol 1%)");
}

// C2: mollified two-term law for sigma.D + diag(1/2, 0).
void criterion_2() {
  const double s = 0.5;
  const OperatorSpec op = sigma_d_operator().plus_constant(diag2(s, 0));
  const Mollifier mol(6.0);
  const double hi = 35.0, lo = 20.0;
  const SpectralData data = lattice_oracle(op, hi + mol.tail(1e-6) + 1.0);
  const WeylFit fit = mollified_weyl_fit(data, mol, lo, hi);

  const double a_target = 4 * pi / 3;
  const double b_target = -pi;
  const bool a_ok = std::fabs(fit.a - a_target) <= 0.01 * a_target;
  const bool b_ok = std::fabs(fit.b - b_target) <= 0.15 * std::fabs(b_target);

  const GlobalCoefficients closed = global_coefficients(op);
  GlobalOptions q;
  q.force_quadrature = true;
  const GlobalCoefficients quad = global_coefficients(op, q);
  const bool quad_ok = std::fabs(quad.b - closed.b) <= 1e-8 && std::fabs(closed.b - b_target) <= 1e-10;

  report("C2 mollified-two-term-law", a_ok && b_ok && quad_ok,
         "a_fit = " + num(fit.a) + " (target " + num(a_target) + ", tol 1%), b_fit = " + num(fit.b) + " (target " +
             num(b_target) + ", tol 15%), quadrature b = " + num(quad.b) + " vs closed " + num(closed.b) +
             " (tol 1e-8)");
}

// C3: massless-Dirac characterization with constructive witnesses.
void criterion_3() {
  std::mt19937 rng(101);
  bool all = true;
  std::string worst;
  double worst_resid = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const FrameBundle bundle = FrameBundle::from_frame(testutil::random_frame_field(rng, 2, trial % 4 == 3));
    const OperatorSpec w = build_dirac(bundle, true);
    const DiracDecision yes = is_massless_dirac(w, 16);
    worst_resid = std::max(worst_resid, yes.reconstruction_residual);
    if (!yes.is_dirac || !yes.witness.has_value()) {
      all = false;
      worst = "frame trial " + std::to_string(trial) + " not recognized";
      break;
    }
    const DiracDecision no_a = is_massless_dirac(w.plus_constant(diag2(0.2, 0)), 16);
    if (no_a.is_dirac || no_a.failed != DiracDecision::Condition::subprincipal_not_proportional) {
      all = false;
      worst = "condition (a) missed on trial " + std::to_string(trial);
      break;
    }
    const double c0 = 0.3;
    Mat shift = Mat::identity(2);
    shift *= c0;
    const DiracDecision no_b = is_massless_dirac(w.plus_constant(shift), 16);
    const double b_expect = -c0 / (2 * pi * pi);
    if (no_b.is_dirac || no_b.failed != DiracDecision::Condition::b_not_zero ||
        std::fabs(no_b.b_sample - b_expect) > 1e-8) {
      all = false;
      worst = "condition (b) missed on trial " + std::to_string(trial) + ", b = " + num(no_b.b_sample) +
              " expected " + num(b_expect);
      break;
    }
  }
  report("C3 massless-dirac-characterization", all,
         all ? "20 random frames recognized with coefficient-exact witnesses (max reconstruction residual " +
                   num(worst_resid) + "); diag and identity perturbations rejected with the right condition"
             : worst);
}

// C4: curvature of the eigenvector connection equals the axial torsion form.
void criterion_4() {
  std::mt19937 rng(211);
  std::uniform_real_distribution<double> ud(0.0, 2 * pi);
  std::uniform_real_distribution<double> sd(-1.0, 1.0);
  double worst = 0;
  for (int f = 0; f < 10; ++f) {
    const FrameBundle bundle = FrameBundle::from_frame(testutil::random_frame_field(rng, 2, f % 3 == 1));
    const TeleparallelData tele = teleparallel_tensors(bundle);
    for (int t = 0; t < 100; ++t) {
      const CotangentPoint pt{VecN{ud(rng), ud(rng), ud(rng)}, VecN{sd(rng) + 1.2, sd(rng), sd(rng)}};
      worst = std::max(worst, curvature_torsion_residual(bundle, tele, pt));
    }
  }
  const int k3 = 1;
  const SymbolPair sym = k3_frame(k3).principal_operator().symbol();
  const EigenJets j1 = eigen_jets(sym, {VecN{0, 0, 0}, VecN{1, 0, 0}});
  const EigenJets j3 = eigen_jets(sym, {VecN{0, 0, 0}, VecN{0, 0, 1}});
  const double spot1 = u1_scalar_from_jets(j1, +1);
  const double spot3 = u1_scalar_from_jets(j3, +1);
  const bool spots = std::fabs(spot1 + 0.5 * k3) <= 1e-6 && std::fabs(spot3) <= 1e-6;
  report("C4 curvature-torsion-identity", worst <= 1e-6 && spots,
         "max residual " + num(worst) + " over 10 frames x 100 points (tol 1e-6); k3 spot values " + num(spot1) +
             " (target -1/2) and " + num(spot3) + " (target 0)");
}

// C5: propagator trace identity and curvature sum rule.
void criterion_5() {
  std::mt19937 rng(307);
  std::uniform_real_distribution<double> ud(0.0, 2 * pi);
  std::uniform_real_distribution<double> sd(-1.0, 1.0);
  double worst_trace = 0, worst_sum = 0;
  for (int trial = 0; trial < 3; ++trial) {
    const OperatorSpec op = testutil::random_m2_operator(rng);
    const SymbolPair sym = op.symbol();
    for (int t = 0; t < 4; ++t) {
      const CotangentPoint pt{VecN{ud(rng), ud(rng), ud(rng)}, VecN{sd(rng) + 1.1, sd(rng), sd(rng)}};
      const EigenJets jets = eigen_jets(sym, pt);
      double sum = 0;
      for (int j : {+1, -1}) {
        const Mat u = propagator_zero_subprincipal(sym, j, pt);
        worst_trace = std::max(worst_trace, std::abs(u.trace() - cplx{u1_scalar_from_jets(jets, j), 0}));
        sum += u1_scalar_from_jets(jets, j);
      }
      worst_sum = std::max(worst_sum, std::fabs(sum));
    }
  }
  for (int trial = 0; trial < 2; ++trial) {
    const SymbolPair sym3 = testutil::random_m3_symbol(rng);
    for (int t = 0; t < 3; ++t) {
      const CotangentPoint pt{VecN{ud(rng), ud(rng), ud(rng)}, VecN{sd(rng) + 1.1, sd(rng), sd(rng)}};
      const EigenJets jets = eigen_jets(sym3, pt);
      double sum = 0;
      for (int j : {+1, +2, -1}) {
        const Mat u = propagator_zero_subprincipal(sym3, j, pt);
        worst_trace = std::max(worst_trace, std::abs(u.trace() - cplx{u1_scalar_from_jets(jets, j), 0}));
      }
      for (int j = 1; j <= jets.center.m_plus; ++j) sum += u1_scalar_from_jets(jets, j);
      for (int j = 1; j <= jets.center.m_minus; ++j) sum += u1_scalar_from_jets(jets, -j);
      worst_sum = std::max(worst_sum, std::fabs(sum));
    }
  }
  report("C5 trace-identity-and-sum-rule", worst_trace <= 1e-8 && worst_sum <= 1e-8,
         "max trace-identity residual " + num(worst_trace) + ", max sum-rule residual " + num(worst_sum) +
             " over m = 2 and m = 3 families (tol 1e-8)");
}

// C6: closed form of the Dirac subprincipal symbol.
void criterion_6() {
  std::mt19937 rng(401);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const FrameBundle bundle = FrameBundle::from_frame(testutil::random_frame_field(rng, 2, trial % 5 == 2));
    const TeleparallelData tele = teleparallel_tensors(bundle);
    TrigPoly diff = build_dirac(bundle, true).subprincipal_field() - dirac_subprincipal_closed(bundle, tele);
    diff.prune(1e-16);
    worst = std::max(worst, diff.coeff_abs_sum());
  }
  double worst_k3 = 0;
  for (int k3 : {1, 2, 3}) {
    TrigPoly asub = build_dirac(k3_frame(k3), true).subprincipal_field();
    asub.add(Key3{0, 0, 0}, cplx{0.5 * k3, 0} * Mat::identity(2));
    asub.prune(1e-16);
    worst_k3 = std::max(worst_k3, asub.coeff_abs_sum());
  }
  report("C6 dirac-subprincipal-closed-form", worst <= 1e-8 && worst_k3 <= 1e-10,
         "20 random frames: max deviation " + num(worst) + " (tol 1e-8); k3 values off -(k3/2) I by " + num(worst_k3) +
             " (tol 1e-10)");
}

// C7: spin-structure example.  Separation of variables makes every
// half-integer an eigenvalue for odd winding; for k3 = 0 the squared
// spectrum is integer-valued, so |lambda^2 - h^2| >= 1/4 certifies exactly
// that no half-integer is an eigenvalue.  (A distance bound of 0.49 can
// only hold at h = 1/2: sqrt(2) lies 0.0858 from 3/2.)
void criterion_7() {
  const SpectralData odd = lattice_oracle(build_dirac(k3_frame(1), true), 10.6);
  double odd_half = 1e300;
  for (double l : odd.lambdas) odd_half = std::min(odd_half, std::fabs(l - 0.5));

  const SpectralData galerkin = hermitian_eigensolve(assemble_galerkin(build_dirac(k3_frame(1), true), 16));
  double gal_half = 1e300;
  for (double l : galerkin.lambdas) gal_half = std::min(gal_half, std::fabs(l - 0.5));

  const SpectralData even = lattice_oracle(build_dirac(k3_frame(0), true), 10.6);
  double min_sq = 1e300, half_dist = 1e300;
  for (double h = 0.5; h < 10.0; h += 1.0)
    for (double l : even.lambdas) min_sq = std::min(min_sq, std::fabs(l * l - h * h));
  for (double l : even.lambdas) half_dist = std::min(half_dist, std::fabs(l - 0.5));

  const bool pass = odd_half <= 1e-14 && gal_half <= 1e-8 && min_sq >= 0.25 - 1e-12 && half_dist >= 0.49;
  report("C7 spin-structure-example", pass,
         "k3=1 oracle contains 1/2 (dist " + num(odd_half) + "), Galerkin K=16 dist " + num(gal_half) +
             " (tol 1e-8); k3=0 certificate min|l^2 - h^2| = " + num(min_sq) +
             " >= 1/4 for all half-integers below 10, distance at 1/2 = " + num(half_dist) + " >= 0.49");
}

// C8: unitary invariance of b and gauge invariance of the integrands.
void criterion_8() {
  std::mt19937 rng(503);
  std::uniform_real_distribution<double> ud(0.0, 2 * pi);
  const SphereRule base = sphere_rule(24, 48);
  double worst_unitary = 0;
  for (int trial = 0; trial < 2; ++trial) {
    const SymbolPair sym = trial == 0 ? sigma_d_operator().plus_constant(diag2(0.4, -0.1)).symbol()
                                      : build_dirac(k3_frame(1), true).symbol();
    const TrigPoly r_poly = testutil::random_su2_field(rng, 1);
    auto r_copy = r_poly;
    UnitaryMap rm;
    rm.eval = [r_copy](const VecN& x) { return r_copy.eval(x); };
    std::array<TrigPoly, 3> dr;
    for (int a = 0; a < 3; ++a) dr[static_cast<std::size_t>(a)] = r_poly.derivative(a);
    rm.dx = [dr](int a, const VecN& x) { return dr[static_cast<std::size_t>(a)].eval(x); };
    const SymbolPair t = transform_operator_unitary(sym, rm);
    for (int p = 0; p < 2; ++p) {
      const VecN x{ud(rng), ud(rng), ud(rng)};
      worst_unitary = std::max(worst_unitary, std::fabs(b_density(t, x, base) - b_density(sym, x, base)));
    }
  }

  const SymbolPair sym = k3_frame(1).principal_operator().symbol();
  double worst_gauge = 0;
  for (int t = 0; t < 2; ++t) {
    const CotangentPoint pt{VecN{ud(rng), ud(rng), ud(rng)}, VecN{0.9, -0.2 + 0.1 * t, 0.4}};
    const EigenJets jets = eigen_jets(sym, pt);
    const double scalar_ref = u1_scalar_from_jets(jets, +1);
    const cplx sandwich_ref = sandwich_bracket_from_jets(sym, jets, +1, pt);

    const EigenSystem es0 = principal_eigensystem(sym, pt);
    const CVec vc = es0.vector(+1);
    auto phi = [t](const CotangentPoint& q) {
      return 0.4 * std::sin(q.x[0] + 0.3 * t) + 0.25 * q.xi[2] / q.xi.norm();
    };
    auto gauged = [&](const CotangentPoint& q) {
      const EigenSystem es = principal_eigensystem(sym, q);
      CVec v = es.vector(+1);
      cplx z = inner(vc, v);
      z /= std::abs(z);
      const cplx factor = std::exp(iu * phi(q)) / z;
      for (auto& comp : v) comp *= factor;
      return v;
    };
    const double hx = sym.fd_step_rel;
    const double hxi = sym.fd_step_rel * std::max(1.0, pt.xi.norm());
    Mat a1 = sym.a1(pt.x, pt.xi);
    const double h = es0.eigenvalue(+1);
    a1(0, 0) -= h;
    a1(1, 1) -= h;
    cplx brace = 0, sandwich = 0;
    for (int a = 0; a < 3; ++a) {
      const CVec dvx = detail::fd_first(
          [&](double s) {
            CotangentPoint q = pt;
            q.x[a] += s;
            return gauged(q);
          },
          hx);
      const CVec dvxi = detail::fd_first(
          [&](double s) {
            CotangentPoint q = pt;
            q.xi[a] += s;
            return gauged(q);
          },
          hxi);
      brace += inner(dvx, dvxi) - inner(dvxi, dvx);
      sandwich += inner(dvx, a1 * dvxi) - inner(dvxi, a1 * dvx);
    }
    worst_gauge = std::max(worst_gauge, std::fabs((cplx{0, -1} * brace).real() - scalar_ref));
    worst_gauge = std::max(worst_gauge, std::abs(sandwich - sandwich_ref));
  }
  report("C8 unitary-and-gauge-invariance", worst_unitary <= 1e-6 && worst_gauge <= 1e-8,
         "b transforms invariantly within " + num(worst_unitary) + " (tol 1e-6); gauge change moves the curvature "
         "scalar and b integrand by " + num(worst_gauge) + " (tol 1e-8)");
}

// C9: spectral asymmetry and even multiplicities.
void criterion_9() {
  const SphereRule base = sphere_rule(24, 48);
  double worst_flip = 0;
  {
    const OperatorSpec op = sigma_d_operator().plus_constant(diag2(0.5, 0));
    const double b_pos = b_density(op.symbol(), VecN{}, base);
    const double b_neg = b_density(op.negated().symbol(), VecN{}, base);
    worst_flip = std::max(worst_flip, std::fabs(b_pos + b_neg));
  }
  {
    std::mt19937 rng(601);
    const OperatorSpec op = sigma_d_operator().plus_constant(testutil::random_hermitian(rng, 2, 0.3));
    const double b_pos = b_density(op.symbol(), VecN{}, base);
    const double b_neg = b_density(op.negated().symbol(), VecN{}, base);
    worst_flip = std::max(worst_flip, std::fabs(b_pos + b_neg));
  }
  double worst_gap = 0;
  for (int k3 : {0, 1}) {
    const SpectralData data = lattice_oracle(build_dirac(k3_frame(k3), true), 8.2);
    worst_gap = std::max(worst_gap, even_multiplicity_gap(data, 8.0));
    for (double l : {2.3, 4.9, 7.7})
      if (data.counting(l) != data.counting_negated(l)) worst_gap = std::max(worst_gap, 1.0);
  }
  report("C9 spectral-asymmetry", worst_flip <= 1e-12 && worst_gap <= 1e-8,
         "b(-A) + b(A) = " + num(worst_flip) + " in quadrature (tol 1e-12); Dirac spectra symmetric with pair gap " +
             num(worst_gap) + " (tol 1e-8)");
}

// C10: Hamiltonian flow contracts.
void criterion_10() {
  SymbolPair sym;
  sym.n = 3;
  sym.m = 2;
  auto factor = [](const VecN& x) { return 1.0 + 0.3 * std::sin(x[0]) * std::cos(x[1]); };
  sym.a1 = [factor](const VecN& x, const VecN& xi) {
    Mat m(2, 2);
    for (int a = 0; a < 3; ++a) m += xi[a] * pauli(a + 1);
    m *= factor(x);
    return m;
  };
  sym.a0 = [](const VecN&, const VecN&) { return Mat(2, 2); };
  sym.asub = [](const VecN&, const VecN&) { return Mat(2, 2); };

  const Trajectory traj =
      integrate_trajectory(sym, +1, VecN{0.4, 1.1, 0.0}, VecN{1.0, 0.2, -0.4}, 20.0, 4000, false, 200);
  const bool energy_ok = traj.energy_drift <= 1e-8;

  const CotangentPoint pt{VecN{0.2, 0.7, 1.1}, VecN{0.5, 0.5, -0.7}};
  const Mat u0 = propagator_principal_symbol(sym, +1, 0.0, pt.x, pt.xi);
  const EigenSystem es = principal_eigensystem(sym, pt);
  const bool t0_ok = (u0 - es.projector(+1)).max_abs() == 0.0;

  double worst_sv = 0;
  for (double t : {1.0, 2.5}) {
    const Mat u = propagator_principal_symbol(sym, +1, t, pt.x, pt.xi, 500);
    const HermitianEigen sv = hermitian_eigensolve(u.adjoint() * u);
    worst_sv = std::max(worst_sv, std::fabs(sv.values.back() - 1.0));
    worst_sv = std::max(worst_sv, std::fabs(sv.values.front()));
  }
  report("C10 flow-contracts", energy_ok && t0_ok && worst_sv <= 1e-10,
         "energy drift " + num(traj.energy_drift) + " over t = 20 (tol 1e-8); u0(0) = projector exactly; "
         "rank-1/unit-singular-value defect " + num(worst_sv) + " (tol 1e-10)");
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  if (failures == 0) std::printf("all acceptance criteria passed\n");
  else std::printf("%d acceptance criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
