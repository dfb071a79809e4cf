#pragma once

#include <vector>

#include "weyl/quadrature.hpp"
#include "weyl/spectrum.hpp"

namespace weyl {

// Even Schwartz mollifier with compactly supported Fourier transform:
//   rho_hat(t) = exp(1 - 1/(1 - (t/T)^2)) on |t| < T, 0 outside,
// so rho_hat(0) = 1, rho_hat'(0) = 0 and supp rho_hat in (-T, T).
// rho and its antiderivative P_rho come from FFT-free quadrature of the
// inverse transform,
//   P_rho(s) = 1/2 + (1/pi) int_0^T rho_hat(t) sin(s t)/t dt,
// with P_rho tabulated once on a uniform grid (even symmetry halves it).
class Mollifier {
 public:
  explicit Mollifier(double support_T = 6.0, double table_step = 1.0 / 256.0) : T_(support_T), ds_(table_step) {
    if (!(T_ > 0)) throw Error("mollifier support must be positive");
    build_quadrature();
    double w = 4.0 * T_;
    while (w < 200.0 && std::fabs(cdf_direct(w) - 1.0) > 1e-11) w *= 1.25;
    w_ = w;
    const std::size_t count = static_cast<std::size_t>(std::ceil(w_ / ds_)) + 4;
    table_.resize(count + 1);
    for (std::size_t i = 0; i + 1 < table_.size(); ++i) table_[i + 1] = cdf_direct(static_cast<double>(i) * ds_);
    table_[0] = 1.0 - table_[2];  // sample at -ds via even symmetry of rho
  }

  double support() const { return T_; }

  double rho_hat(double t) const {
    const double u = t / T_;
    if (std::fabs(u) >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - u * u));
  }

  // rho(lambda) = (1/pi) int_0^T rho_hat(t) cos(lambda t) dt
  double rho(double lambda) const {
    double acc = 0;
    for (std::size_t i = 0; i < qt_.size(); ++i) acc += qw_[i] * std::cos(lambda * qt_[i]);
    return acc / pi;
  }

  // P_rho(s) = int_{-inf}^{s} rho
  double cdf(double s) const {
    if (s < 0) return 1.0 - cdf(-s);
    if (s >= w_) return 1.0;
    const double pos = s / ds_;
    std::size_t i = static_cast<std::size_t>(std::floor(pos)) + 1;  // table offset: [0] is s = -ds
    i = std::min(i, table_.size() - 3);
    const double u = pos - static_cast<double>(i - 1);
    const double p0 = table_[i - 1], p1 = table_[i], p2 = table_[i + 1], p3 = table_[i + 2];
    return p1 + 0.5 * u * (p2 - p0 + u * (2 * p0 - 5 * p1 + 4 * p2 - p3 + u * (3 * (p1 - p2) + p3 - p0)));
  }

  // Radius beyond which P_rho is within eps of its limits.
  double tail(double eps) const {
    double s = T_;
    while (s < w_ && std::fabs(cdf(s) - 1.0) > eps) s += 0.5;
    return s;
  }

  double integral() const { return cdf_direct(w_); }  // should be 1

 private:
  void build_quadrature() {
    // composite Gauss-Legendre rule reused for every evaluation
    const QuadRule1d gl = gauss_legendre(16);
    const int panels = 160;
    qt_.reserve(static_cast<std::size_t>(panels) * gl.nodes.size());
    qw_.reserve(static_cast<std::size_t>(panels) * gl.nodes.size());
    for (int p = 0; p < panels; ++p) {
      const double a = T_ * p / panels;
      const double b = T_ * (p + 1) / panels;
      for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double t = 0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[i];
        qt_.push_back(t);
        qw_.push_back(0.5 * (b - a) * gl.weights[i] * rho_hat(t));
      }
    }
    qsin_.resize(qt_.size());
    for (std::size_t i = 0; i < qt_.size(); ++i) qsin_[i] = qw_[i] / (pi * qt_[i]);
  }

  double cdf_direct(double s) const {
    double acc = 0;
    for (std::size_t i = 0; i < qt_.size(); ++i) acc += qsin_[i] * std::sin(s * qt_[i]);
    return 0.5 + acc;
  }

  double T_;
  double ds_;
  double w_ = 0;
  std::vector<double> qt_, qw_, qsin_;
  std::vector<double> table_;
};

// int N(lambda - mu) rho(mu) d mu = sum_{lambda_k > 0} P_rho(lambda - lambda_k).
// Eigenvalues beyond the trust window contribute at most the 1e-6 tail of
// P_rho each, which the precondition keeps far below the fit tolerances.
inline double mollified_counting(const SpectralData& data, const Mollifier& mol, double lambda) {
  const double reach = lambda + mol.tail(1e-6);
  if (reach > data.trust) throw OutsideTrustWindow("mollified counting needs eigenvalues beyond the trust window");
  std::vector<double> terms;
  terms.reserve(data.lambdas.size());
  for (double lk : data.lambdas) {
    if (!(lk > 0)) continue;
    terms.push_back(mol.cdf(lambda - lk));
  }
  return pairwise_sum(terms);
}

struct WeylFit {
  double a = 0, b = 0, c = 0;  // model a l^3 + b l^2 + c l
  double rms = 0;
  std::array<std::array<double, 3>, 3> covariance{};  // scaled by residual variance
  double window_lo = 0, window_hi = 0;
};

// Least-squares fit of the two-term counting model over a lambda window.
inline WeylFit fit_counting_model(const std::vector<double>& lambdas, const std::vector<double>& values) {
  if (lambdas.size() != values.size() || lambdas.size() < 4) throw Error("fit needs at least four samples");
  const double scale = *std::max_element(lambdas.begin(), lambdas.end());
  long double ata[3][3] = {};
  long double atb[3] = {};
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const long double l = lambdas[i] / scale;
    const long double row[3] = {l * l * l, l * l, l};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) ata[r][c] += row[r] * row[c];
      atb[r] += row[r] * values[i];
    }
  }
  long double aug[3][6] = {};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) aug[r][c] = ata[r][c];
    aug[r][3 + r] = 1.0L;
  }
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::fabs(static_cast<double>(aug[r][c])) > std::fabs(static_cast<double>(aug[piv][c]))) piv = r;
    for (int k = 0; k < 6; ++k) std::swap(aug[c][k], aug[piv][k]);
    if (aug[c][c] == 0.0L) throw Error("singular normal equations in counting fit");
    const long double d = aug[c][c];
    for (int k = 0; k < 6; ++k) aug[c][k] /= d;
    for (int r = 0; r < 3; ++r) {
      if (r == c) continue;
      const long double f = aug[r][c];
      for (int k = 0; k < 6; ++k) aug[r][k] -= f * aug[c][k];
    }
  }
  long double coef[3];
  for (int r = 0; r < 3; ++r) {
    long double s = 0;
    for (int c = 0; c < 3; ++c) s += aug[r][3 + c] * atb[c];
    coef[r] = s;
  }
  WeylFit fit;
  fit.a = static_cast<double>(coef[0]) / (scale * scale * scale);
  fit.b = static_cast<double>(coef[1]) / (scale * scale);
  fit.c = static_cast<double>(coef[2]) / scale;
  fit.window_lo = *std::min_element(lambdas.begin(), lambdas.end());
  fit.window_hi = *std::max_element(lambdas.begin(), lambdas.end());
  long double ss = 0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const double l = lambdas[i];
    const double model = fit.a * l * l * l + fit.b * l * l + fit.c * l;
    ss += (model - values[i]) * (model - values[i]);
  }
  const double dof = static_cast<double>(lambdas.size()) - 3.0;
  const double var = dof > 0 ? static_cast<double>(ss) / dof : 0.0;
  fit.rms = std::sqrt(static_cast<double>(ss) / static_cast<double>(lambdas.size()));
  const double unscale[3] = {1.0 / (scale * scale * scale), 1.0 / (scale * scale), 1.0 / scale};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      fit.covariance[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
          var * static_cast<double>(aug[r][3 + c]) * unscale[r] * unscale[c];
  return fit;
}

// Mollified two-term fit over [lo, hi].
inline WeylFit mollified_weyl_fit(const SpectralData& data, const Mollifier& mol, double lo, double hi,
                                  int samples = 61) {
  std::vector<double> xs, ys;
  xs.reserve(static_cast<std::size_t>(samples));
  ys.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    const double l = lo + (hi - lo) * i / (samples - 1);
    xs.push_back(l);
    ys.push_back(mollified_counting(data, mol, l));
  }
  return fit_counting_model(xs, ys);
}

struct AsymmetryReport {
  std::vector<double> lambdas;
  std::vector<int> counting_plus;   // N_A
  std::vector<int> counting_minus;  // N_{-A}
  WeylFit fit_plus, fit_minus;
};

// Tabulates N_A(lambda) and N_{-A}(lambda) and fits the mollified counting
// of both signs: a = a~ and b = -b~ up to fit error.
inline AsymmetryReport asymmetry_report(const SpectralData& data, const Mollifier& mol, double lo, double hi,
                                        int grid_points = 31) {
  AsymmetryReport rep;
  for (int i = 0; i < grid_points; ++i) {
    const double l = lo + (hi - lo) * i / (grid_points - 1);
    rep.lambdas.push_back(l);
    rep.counting_plus.push_back(data.counting(l));
    rep.counting_minus.push_back(data.counting_negated(l));
  }
  rep.fit_plus = mollified_weyl_fit(data, mol, lo, hi);
  rep.fit_minus = mollified_weyl_fit(data.negated(), mol, lo, hi);
  return rep;
}

// Largest in-pair gap when the sorted spectrum inside |lambda| <= cap is
// grouped in consecutive pairs; tiny iff all multiplicities are even.
inline double even_multiplicity_gap(const SpectralData& data, double lambda_cap) {
  std::vector<double> window;
  for (double l : data.lambdas)
    if (std::fabs(l) <= lambda_cap) window.push_back(l);
  double gap = 0;
  for (std::size_t i = 0; i + 1 < window.size(); i += 2) gap = std::max(gap, window[i + 1] - window[i]);
  if (window.size() % 2 != 0) gap = std::max(gap, 1.0);  // odd count cannot pair
  return gap;
}

}  // namespace weyl
