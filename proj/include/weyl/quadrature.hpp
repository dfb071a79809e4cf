#pragma once

#include <functional>
#include <vector>

#include "weyl/common.hpp"
#include "weyl/parallel.hpp"
#include "weyl/symbol.hpp"

namespace weyl {

struct QuadRule1d {
  std::vector<double> nodes;    // in [-1, 1]
  std::vector<double> weights;  // sum = 2
};

// Gauss-Legendre nodes/weights by Newton iteration on P_n.
inline QuadRule1d gauss_legendre(int n) {
  QuadRule1d rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double pp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    rule.nodes[static_cast<std::size_t>(i)] = -x;
    rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    rule.weights[static_cast<std::size_t>(i)] = w;
    rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  return rule;
}

// Quadrature nodes on the unit Euclidean sphere S^{n-1}.  For n = 3 a
// product rule: Gauss-Legendre in cos(theta) times uniform azimuthal; for
// n = 2 a uniform circle rule.  Weights sum to the surface area.
struct SphereRule {
  int dim = 3;  // ambient n
  std::vector<VecN> nodes;
  std::vector<double> weights;
};

inline SphereRule sphere_rule(int n_polar, int n_azimuth) {
  SphereRule rule;
  rule.dim = 3;
  const QuadRule1d gl = gauss_legendre(n_polar);
  rule.nodes.reserve(static_cast<std::size_t>(n_polar) * n_azimuth);
  rule.weights.reserve(static_cast<std::size_t>(n_polar) * n_azimuth);
  for (int i = 0; i < n_polar; ++i) {
    const double c = gl.nodes[static_cast<std::size_t>(i)];
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    for (int j = 0; j < n_azimuth; ++j) {
      const double phi = 2 * pi * (j + 0.5) / n_azimuth;
      rule.nodes.push_back(VecN{s * std::cos(phi), s * std::sin(phi), c});
      rule.weights.push_back(gl.weights[static_cast<std::size_t>(i)] * 2 * pi / n_azimuth);
    }
  }
  return rule;
}

inline SphereRule circle_rule(int n_nodes) {
  SphereRule rule;
  rule.dim = 2;
  for (int j = 0; j < n_nodes; ++j) {
    const double phi = 2 * pi * (j + 0.5) / n_nodes;
    VecN node(2);
    node[0] = std::cos(phi);
    node[1] = std::sin(phi);
    rule.nodes.push_back(node);
    rule.weights.push_back(2 * pi / n_nodes);
  }
  return rule;
}

inline SphereRule default_sphere_rule(int n, int order_polar = 32, int order_azimuth = 64) {
  return n == 2 ? circle_rule(2 * order_azimuth) : sphere_rule(order_polar, order_azimuth);
}

// Radially rescaled sphere rule realizing integrals over {h^{(j)}(x, xi) < 1}
// of degree-0-homogeneous integrands:
//   int_{h<1} F dbar(xi) = (2 pi)^{-n} (1/n) sum_k w_k s_k^n F(x, omega_k),
// where s_k = 1 / h^{(j)}(x, omega_k).
struct CosphereRule {
  int n = 3;
  VecN x;
  std::vector<VecN> nodes;      // unit sphere directions
  std::vector<double> weights;  // Euclidean sphere weights
  std::vector<double> scale;    // s_k = 1/h at each node
};

inline CosphereRule cosphere_quadrature(const SymbolPair& sym, const VecN& x, int signed_j, const SphereRule& base) {
  if (signed_j <= 0) throw EllipticityViolated("cosphere rule expects a positive band index");
  CosphereRule rule;
  rule.n = sym.n;
  rule.x = x;
  rule.nodes = base.nodes;
  rule.weights = base.weights;
  rule.scale.resize(base.nodes.size());
  for (std::size_t k = 0; k < base.nodes.size(); ++k) {
    const EigenSystem es = principal_eigensystem(sym, CotangentPoint{x, base.nodes[k]});
    if (signed_j > es.m_plus) throw EllipticityViolated("band index exceeds number of positive eigenvalues");
    const double h = es.eigenvalue(signed_j);
    if (!(h > 0)) throw EllipticityViolated("nonpositive Hamiltonian on the cosphere");
    rule.scale[k] = 1.0 / h;
  }
  return rule;
}

// Integrates a degree-0 integrand F(x, omega) over {h^{(j)} < 1} against
// dbar(xi); deterministic pairwise reduction.
inline double cosphere_integrate(const CosphereRule& rule, const std::function<double(std::size_t, const VecN&)>& f,
                                 int workers = 1) {
  const std::size_t count = rule.nodes.size();
  std::vector<double> slots(count);
  parallel_for(count, workers, [&](std::size_t k) {
    const double sn = std::pow(rule.scale[k], rule.n);
    slots[k] = rule.weights[k] * sn * f(k, rule.nodes[k]);
  });
  const double sum = pairwise_sum(slots);
  return std::pow(2 * pi, -rule.n) * sum / rule.n;
}

}  // namespace weyl
