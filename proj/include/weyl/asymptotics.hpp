#pragma once

#include <vector>

#include "weyl/frame.hpp"
#include "weyl/operator_spec.hpp"
#include "weyl/quadrature.hpp"
#include "weyl/symbol.hpp"

namespace weyl {

struct AsymptoticDensities {
  double a = 0;
  double b = 0;
  std::vector<double> a_per_band;  // contribution of each positive band j = 1..m_plus
  std::vector<double> b_per_band;
};

// Leading Weyl density a(x) = sum_j vol{h^{(j)} < 1} (2 pi)^{-n}.
inline double a_density(const SymbolPair& sym, const VecN& x, const SphereRule& base) {
  int m_plus = 0;
  {
    const EigenSystem probe = principal_eigensystem(sym, CotangentPoint{x, base.nodes.front()});
    m_plus = probe.m_plus;
  }
  double total = 0;
  for (int j = 1; j <= m_plus; ++j) {
    const CosphereRule rule = cosphere_quadrature(sym, x, j, base);
    total += cosphere_integrate(rule, [](std::size_t, const VecN&) { return 1.0; });
  }
  return total;
}

// Closed form for 2x2 trace-free differential symbols: (2 pi)^{-n} omega_n sqrt(det g).
inline double a_density_metric(const FrameBundle& bundle, const VecN& x) {
  const double omega3 = 4.0 * pi / 3.0;
  return std::pow(2 * pi, -3) * omega3 * bundle.sqrt_det_g(x);
}

// Pointwise integrand data of the second Weyl density for one band.
struct BDensityTerms {
  double subprincipal = 0;  // tr(A_sub P)
  double sandwich = 0;      // -(i/2) {[v]^*, A1-h, v}
  double curvature = 0;     // (i/(n-1)) h {[v]^*, v}
  double total() const { return subprincipal + sandwich + curvature; }
};

inline BDensityTerms b_density_terms(const SymbolPair& sym, const EigenJets& jets, int signed_j,
                                     const CotangentPoint& pt, const Mat& asub) {
  BDensityTerms t;
  const int idx = jets.center.array_index(signed_j);
  const Mat& p = jets.center.P[static_cast<std::size_t>(idx)];
  t.subprincipal = (asub * p).trace().real();
  const cplx sandwich = sandwich_bracket_from_jets(sym, jets, signed_j, pt);
  t.sandwich = (cplx{0, -0.5} * sandwich).real();
  const double scalar = u1_scalar_from_jets(jets, signed_j);  // -i {[v]^*, v}
  const double h = jets.center.h[static_cast<std::size_t>(idx)];
  // (i/(n-1)) h {[v]^*, v} = -(1/(n-1)) h * scalar
  t.curvature = -h * scalar / (sym.n - 1);
  return t;
}

// Second Weyl density b(x): cosphere quadrature of the gauge-free integrand,
// summed over positive bands and scaled by -n.
inline double b_density(const SymbolPair& sym, const VecN& x, const SphereRule& base, int workers = 1) {
  int m_plus = 0;
  {
    const EigenSystem probe = principal_eigensystem(sym, CotangentPoint{x, base.nodes.front()});
    m_plus = probe.m_plus;
  }
  const std::size_t nodes = base.nodes.size();
  std::vector<double> slots(nodes, 0.0);
  parallel_for(nodes, workers, [&](std::size_t k) {
    const CotangentPoint pt{x, base.nodes[k]};
    const EigenJets jets = eigen_jets(sym, pt);
    const Mat asub = subprincipal_symbol(sym, pt);
    double acc = 0;
    for (int j = 1; j <= m_plus; ++j) {
      const double h = jets.center.eigenvalue(j);
      if (!(h > 0)) throw EllipticityViolated("nonpositive Hamiltonian on the cosphere");
      const double sn = std::pow(1.0 / h, sym.n);
      acc += sn * b_density_terms(sym, jets, j, pt, asub).total();
    }
    slots[k] = base.weights[k] * acc;
  });
  const double sum = pairwise_sum(slots);
  // -n * (2 pi)^{-n} (1/n) * sum
  return -std::pow(2 * pi, -sym.n) * sum;
}

// Per-band variant used by reports.
inline AsymptoticDensities densities(const SymbolPair& sym, const VecN& x, const SphereRule& base, int workers = 1) {
  AsymptoticDensities out;
  int m_plus = 0;
  {
    const EigenSystem probe = principal_eigensystem(sym, CotangentPoint{x, base.nodes.front()});
    m_plus = probe.m_plus;
  }
  out.a_per_band.assign(static_cast<std::size_t>(m_plus), 0.0);
  out.b_per_band.assign(static_cast<std::size_t>(m_plus), 0.0);
  const std::size_t nodes = base.nodes.size();
  std::vector<std::vector<double>> a_slots(static_cast<std::size_t>(m_plus), std::vector<double>(nodes, 0.0));
  std::vector<std::vector<double>> b_slots(static_cast<std::size_t>(m_plus), std::vector<double>(nodes, 0.0));
  parallel_for(nodes, workers, [&](std::size_t k) {
    const CotangentPoint pt{x, base.nodes[k]};
    const EigenJets jets = eigen_jets(sym, pt);
    const Mat asub = subprincipal_symbol(sym, pt);
    for (int j = 1; j <= m_plus; ++j) {
      const double h = jets.center.eigenvalue(j);
      const double sn = std::pow(1.0 / h, sym.n);
      a_slots[static_cast<std::size_t>(j - 1)][k] = base.weights[k] * sn;
      b_slots[static_cast<std::size_t>(j - 1)][k] =
          base.weights[k] * sn * b_density_terms(sym, jets, j, pt, asub).total();
    }
  });
  for (int j = 0; j < m_plus; ++j) {
    out.a_per_band[static_cast<std::size_t>(j)] =
        std::pow(2 * pi, -sym.n) * pairwise_sum(a_slots[static_cast<std::size_t>(j)]) / sym.n;
    out.b_per_band[static_cast<std::size_t>(j)] =
        -std::pow(2 * pi, -sym.n) * pairwise_sum(b_slots[static_cast<std::size_t>(j)]);
    out.a += out.a_per_band[static_cast<std::size_t>(j)];
    out.b += out.b_per_band[static_cast<std::size_t>(j)];
  }
  return out;
}

// Closed form of the second Weyl density for the 2x2 differential case:
//   b(x) = (1/(8 pi^2)) (c tr *T - 2 tr A_sub) sqrt(det g).
inline double b_density_closed(const FrameBundle& bundle, const TeleparallelData& tele, const TrigPoly& asub_field,
                               const VecN& x) {
  const double tr_star = tele.trace_star_torsion(x);
  const double tr_asub = asub_field.eval(x).trace().real();
  return (bundle.c * tr_star - 2.0 * tr_asub) * bundle.sqrt_det_g(x) / (8.0 * pi * pi);
}

struct GlobalCoefficients {
  double a = 0;
  double b = 0;
};

struct GlobalOptions {
  int grid = 16;       // torus grid per axis (trapezoidal rule)
  int polar = 32;      // quadrature orders for the cosphere route
  int azimuth = 64;
  int workers = 1;
  bool force_quadrature = false;  // bypass the closed-form route
};

// a = int a(x) dx, b = int b(x) dx over the torus.  For 2x2 trace-free
// differential operators the closed forms are used (exact coefficient
// algebra); the quadrature route serves as the independent cross-check and
// the general-m path.
inline GlobalCoefficients global_coefficients(const OperatorSpec& op, const GlobalOptions& opts = {}) {
  GlobalCoefficients out;
  const double vol = op.torus.volume();
  const bool closed_ok = !opts.force_quadrature && op.m == 2 && op.trace_free_principal();

  if (closed_ok) {
    const FrameBundle bundle = FrameBundle::from_frame(frame_from_symbol(op.coeff));
    const TeleparallelData tele = teleparallel_tensors(bundle);
    const TrigPoly asub = op.subprincipal_field();
    const int g = opts.grid;
    std::vector<double> a_slots(static_cast<std::size_t>(g) * g * g);
    std::vector<double> b_slots(static_cast<std::size_t>(g) * g * g);
    parallel_for(a_slots.size(), opts.workers, [&](std::size_t idx) {
      const int i0 = static_cast<int>(idx) / (g * g);
      const int i1 = (static_cast<int>(idx) / g) % g;
      const int i2 = static_cast<int>(idx) % g;
      const VecN x{op.torus.periods[0] * i0 / g, op.torus.periods[1] * i1 / g, op.torus.periods[2] * i2 / g};
      a_slots[idx] = a_density_metric(bundle, x);
      b_slots[idx] = b_density_closed(bundle, tele, asub, x);
    });
    out.a = pairwise_sum(a_slots) / static_cast<double>(a_slots.size()) * vol;
    out.b = pairwise_sum(b_slots) / static_cast<double>(b_slots.size()) * vol;
    return out;
  }

  const SymbolPair sym = op.symbol();
  const SphereRule base = default_sphere_rule(3, opts.polar, opts.azimuth);
  if (op.constant_coefficients()) {
    const VecN x{};
    out.a = a_density(sym, x, base) * vol;
    out.b = b_density(sym, x, base, opts.workers) * vol;
    return out;
  }
  const int g = opts.grid;
  std::vector<double> a_slots(static_cast<std::size_t>(g) * g * g);
  std::vector<double> b_slots(static_cast<std::size_t>(g) * g * g);
  parallel_for(a_slots.size(), opts.workers, [&](std::size_t idx) {
    const int i0 = static_cast<int>(idx) / (g * g);
    const int i1 = (static_cast<int>(idx) / g) % g;
    const int i2 = static_cast<int>(idx) % g;
    const VecN x{op.torus.periods[0] * i0 / g, op.torus.periods[1] * i1 / g, op.torus.periods[2] * i2 / g};
    a_slots[idx] = a_density(sym, x, base);
    b_slots[idx] = b_density(sym, x, base);
  });
  out.a = pairwise_sum(a_slots) / static_cast<double>(a_slots.size()) * vol;
  out.b = pairwise_sum(b_slots) / static_cast<double>(b_slots.size()) * vol;
  return out;
}

}  // namespace weyl
