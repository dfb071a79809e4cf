#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "weyl/asymptotics.hpp"
#include "weyl/symbol.hpp"

namespace weyl {

struct TrajectorySample {
  double t = 0;
  VecN x, xi;
  double h = 0;
  double phase = 0;  // int_0^t q dtau
  CVec w;            // transported eigenvector, unit norm
};

struct Trajectory {
  int signed_j = 1;
  std::vector<TrajectorySample> samples;
  double energy_drift = 0;  // max relative drift of h along the path
};

namespace detail {

struct FlowDerivs {
  VecN dx, dxi;
  double q = 0;
};

// One evaluation of the Hamiltonian vector field (and the phase integrand)
// at a state, from a shared eigen-jet stencil.
inline FlowDerivs flow_derivs(const SymbolPair& sym, int signed_j, const VecN& x, const VecN& xi, bool with_phase) {
  const CotangentPoint pt{x, xi};
  const EigenJets jets = eigen_jets(sym, pt);
  const int idx = jets.center.array_index(signed_j);
  FlowDerivs out;
  out.dx.n = sym.n;
  out.dxi.n = sym.n;
  for (int a = 0; a < sym.n; ++a) {
    out.dx[a] = jets.h_dxi[static_cast<std::size_t>(idx)][static_cast<std::size_t>(a)];
    out.dxi[a] = -jets.h_dx[static_cast<std::size_t>(idx)][static_cast<std::size_t>(a)];
  }
  if (with_phase) {
    const Mat asub = subprincipal_symbol(sym, pt);
    const BDensityTerms terms = b_density_terms(sym, jets, signed_j, pt, asub);
    // In the transported gauge i w^* dw/dt = 0, so the gauge-dependent term
    // of q drops and what remains is exactly these two gauge-free pieces.
    out.q = terms.subprincipal + terms.sandwich;
  }
  return out;
}

}  // namespace detail

// Classical 4th-order one-step integration of xdot = h_xi, xidot = -h_x,
// with the phase integral carried as an extra quadrature component and the
// eigenvector transported by projection onto the current eigenspace.
inline Trajectory integrate_trajectory(const SymbolPair& sym, int signed_j, const VecN& y, const VecN& eta,
                                       double t_end, int steps, bool with_phase = true, int save_every = 1) {
  Trajectory traj;
  traj.signed_j = signed_j;
  const double dt = steps > 0 ? t_end / steps : 0.0;

  VecN x = y, xi = eta;
  double phase = 0;
  EigenSystem es0 = principal_eigensystem(sym, CotangentPoint{y, eta});
  CVec w = es0.vector(signed_j);
  const double h0 = es0.eigenvalue(signed_j);

  const auto record = [&](int step_index, double t) {
    TrajectorySample s;
    s.t = t;
    s.x = x;
    s.xi = xi;
    s.phase = phase;
    s.w = w;
    const EigenSystem es = principal_eigensystem(sym, CotangentPoint{x, xi});
    s.h = es.eigenvalue(signed_j);
    traj.energy_drift = std::max(traj.energy_drift, std::fabs(s.h - h0) / std::fabs(h0));
    traj.samples.push_back(std::move(s));
    (void)step_index;
  };
  record(0, 0.0);

  for (int step = 0; step < steps; ++step) {
    const auto f = [&](const VecN& px, const VecN& pxi) {
      return detail::flow_derivs(sym, signed_j, px, pxi, with_phase);
    };
    const auto k1 = f(x, xi);
    const auto k2 = f(x + (0.5 * dt) * k1.dx, xi + (0.5 * dt) * k1.dxi);
    const auto k3 = f(x + (0.5 * dt) * k2.dx, xi + (0.5 * dt) * k2.dxi);
    const auto k4 = f(x + dt * k3.dx, xi + dt * k3.dxi);
    x = x + (dt / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
    xi = xi + (dt / 6.0) * (k1.dxi + 2.0 * k2.dxi + 2.0 * k3.dxi + k4.dxi);
    phase += (dt / 6.0) * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q);

    // parallel transport: project onto the eigenspace and renormalize,
    // which keeps w^* dw/dt = 0 step by step
    const EigenSystem es = principal_eigensystem(sym, CotangentPoint{x, xi});
    CVec pw = es.projector(signed_j) * w;
    const double nn = norm(pw);
    if (nn < 0.1) throw DegenerateEigenvalue("transported vector lost its band along the trajectory");
    for (auto& z : pw) z /= nn;
    w = std::move(pw);

    if ((step + 1) % save_every == 0 || step + 1 == steps) record(step + 1, dt * (step + 1));
  }
  return traj;
}

// u0(t; y, eta) = w(t) w(0)^* exp(-i phase): rank one, unit singular value,
// invariant under the initial gauge phase.
inline Mat propagator_principal_symbol(const SymbolPair& sym, int signed_j, double t, const VecN& y, const VecN& eta,
                                       int steps = 800) {
  if (t == 0.0) {
    const EigenSystem es = principal_eigensystem(sym, CotangentPoint{y, eta});
    return es.projector(signed_j);
  }
  const Trajectory traj = integrate_trajectory(sym, signed_j, y, eta, t, steps);
  const TrajectorySample& last = traj.samples.back();
  const TrajectorySample& first = traj.samples.front();
  Mat u0 = outer(last.w, first.w);
  u0 *= std::exp(cplx{0, -1} * last.phase);
  return u0;
}

// CSV serialization of a trajectory:
// t, x1..x3, xi1..xi3, h, phase_re, phase_im.
inline std::string trajectory_csv(const Trajectory& traj) {
  std::string csv = "t,x1,x2,x3,xi1,xi2,xi3,h,phase_re,phase_im\n";
  char buf[256];
  for (const TrajectorySample& s : traj.samples) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t, s.x[0],
                  s.x[1], s.x[2], s.xi[0], s.xi[1], s.xi[2], s.h, s.phase, 0.0);
    csv += buf;
  }
  return csv;
}

struct LoopHit {
  VecN direction;            // initial unit covector direction
  std::vector<double> times; // detected loop times (refined)
};

struct LoopReport {
  VecN base;
  double t_max = 0;
  double loop_tol = 0;
  std::vector<LoopHit> hits;
  // Smallest detected loop time; only a scanned lower-bound candidate for
  // the true shortest loop, not a verification of it.
  double scanned_lower_bound = 0;
};

// Forward scan for loops of the Hamiltonian flow through y: reports times
// where the trajectory returns to y in torus distance.
inline LoopReport loop_scan(const SymbolPair& sym, int signed_j, const Torus3& torus, const VecN& y, double t_max,
                            const std::vector<VecN>& directions, double loop_tol = 1e-3, double dt = 2e-3) {
  LoopReport rep;
  rep.base = y;
  rep.t_max = t_max;
  rep.loop_tol = loop_tol;
  double best = t_max;
  for (const VecN& dir : directions) {
    // normalize so that h(y, eta) = 1
    const EigenSystem es = principal_eigensystem(sym, CotangentPoint{y, dir});
    const double h = es.eigenvalue(signed_j);
    if (!(h > 0)) throw EllipticityViolated("loop scan needs a positive Hamiltonian");
    VecN eta = (1.0 / h) * dir;

    LoopHit hit;
    hit.direction = dir;
    VecN x = y, xi = eta;
    double prev2 = -1, prev1 = -1;
    double speed_est = 1.0;
    const int steps = static_cast<int>(std::ceil(t_max / dt));
    std::vector<double> dist_hist;
    dist_hist.reserve(static_cast<std::size_t>(steps) + 1);
    dist_hist.push_back(0.0);
    for (int step = 0; step < steps; ++step) {
      const auto f = [&](const VecN& px, const VecN& pxi) { return detail::flow_derivs(sym, signed_j, px, pxi, false); };
      const auto k1 = f(x, xi);
      const auto k2 = f(x + (0.5 * dt) * k1.dx, xi + (0.5 * dt) * k1.dxi);
      const auto k3 = f(x + (0.5 * dt) * k2.dx, xi + (0.5 * dt) * k2.dxi);
      const auto k4 = f(x + dt * k3.dx, xi + dt * k3.dxi);
      x = x + (dt / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
      xi = xi + (dt / 6.0) * (k1.dxi + 2.0 * k2.dxi + 2.0 * k3.dxi + k4.dxi);
      speed_est = std::max(1e-6, k1.dx.norm());
      const double d = torus_distance(torus, x, y);
      dist_hist.push_back(d);
      const double t_here = dt * (step + 1);
      // local minimum below threshold, away from the start
      if (prev1 >= 0 && prev2 >= 0 && prev1 <= prev2 && prev1 <= d && t_here > 4 * dt &&
          prev1 < loop_tol + 0.75 * dt * speed_est) {
        // parabolic refinement through the three samples
        const double denom = prev2 - 2 * prev1 + d;
        double shift = 0;
        if (std::fabs(denom) > 1e-300) shift = 0.5 * (prev2 - d) / denom;
        const double t_ref = t_here - dt + shift * dt;
        const double d_ref = prev1 - 0.25 * (prev2 - d) * shift;
        if (d_ref < loop_tol && (hit.times.empty() || t_ref - hit.times.back() > 10 * dt)) hit.times.push_back(t_ref);
      }
      prev2 = prev1;
      prev1 = d;
    }
    if (!hit.times.empty()) best = std::min(best, hit.times.front());
    rep.hits.push_back(std::move(hit));
  }
  rep.scanned_lower_bound = best;
  return rep;
}

}  // namespace weyl
