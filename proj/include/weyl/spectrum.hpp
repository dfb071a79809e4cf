#pragma once

#include <algorithm>
#include <vector>

#include "weyl/linalg.hpp"
#include "weyl/operator_spec.hpp"
#include "weyl/parallel.hpp"

namespace weyl {

// One eigenpair with its eigenvector stored as a sparse Fourier spinor
// against the orthonormal half-density basis vol^{-1/2} exp(i <xi, x>).
struct EigenPair {
  double lambda = 0;
  std::vector<std::pair<Key3, CVec>> modes;
};

struct SpectralData {
  Torus3 torus;
  int m = 2;
  double trust = 0;  // eigenvalue list complete/reliable for |lambda| <= trust
  std::vector<EigenPair> pairs;     // ascending in lambda
  std::vector<double> lambdas;      // cached, ascending

  void finalize() {
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const EigenPair& a, const EigenPair& b) { return a.lambda < b.lambda; });
    lambdas.resize(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) lambdas[i] = pairs[i].lambda;
  }

  bool trusted(double lambda) const { return std::fabs(lambda) <= trust; }

  // N(lambda) = #{k : 0 < lambda_k < lambda}, both inequalities strict.
  int counting(double lambda) const {
    const auto lo = std::upper_bound(lambdas.begin(), lambdas.end(), 0.0);
    const auto hi = std::lower_bound(lambdas.begin(), lambdas.end(), lambda);
    return static_cast<int>(std::max<std::ptrdiff_t>(0, hi - lo));
  }

  // Counting function of the sign-flipped operator, read off the same list:
  // N_{-A}(lambda) = #{k : -lambda < lambda_k < 0}.
  int counting_negated(double lambda) const {
    const auto lo = std::upper_bound(lambdas.begin(), lambdas.end(), -lambda);
    const auto hi = std::lower_bound(lambdas.begin(), lambdas.end(), 0.0);
    return static_cast<int>(std::max<std::ptrdiff_t>(0, hi - lo));
  }

  SpectralData negated() const {
    SpectralData out;
    out.torus = torus;
    out.m = m;
    out.trust = trust;
    out.pairs.reserve(pairs.size());
    for (auto it = pairs.rbegin(); it != pairs.rend(); ++it) {
      EigenPair p = *it;
      p.lambda = -p.lambda;
      out.pairs.push_back(std::move(p));
    }
    out.finalize();
    return out;
  }

  // e(lambda, x, x) = sum_{0 < lambda_k < lambda} |v_k(x)|^2.
  double spectral_function(double lambda, const VecN& x) const {
    const double inv_vol = 1.0 / torus.volume();
    double acc = 0;
    for (const EigenPair& p : pairs) {
      if (!(p.lambda > 0 && p.lambda < lambda)) continue;
      CVec value(static_cast<std::size_t>(m), cplx{});
      for (const auto& [key, comps] : p.modes) {
        double phase = 0;
        for (int a = 0; a < 3; ++a) phase += torus.frequency(a, key[static_cast<std::size_t>(a)]) * x[a];
        const cplx w = std::exp(iu * phase);
        for (int s = 0; s < m; ++s) value[static_cast<std::size_t>(s)] += w * comps[static_cast<std::size_t>(s)];
      }
      double n2 = 0;
      for (const cplx& z : value) n2 += std::norm(z);
      acc += n2 * inv_vol;
    }
    return acc;
  }
};

inline int counting_function(const SpectralData& data, double lambda) { return data.counting(lambda); }
inline double spectral_function(const SpectralData& data, double lambda, const VecN& x) {
  return data.spectral_function(lambda, x);
}

// Fourier-Galerkin projection of an operator onto modes with |k|_inf <= K.
struct GalerkinBlock {
  std::vector<Key3> modes;  // basis wavevectors; basis index = mode * m + spinor
  Mat h;
};

struct GalerkinSystem {
  enum class Path { per_mode, line_blocks, dense };
  Torus3 torus;
  int m = 2;
  int K = 0;
  Path path = Path::dense;
  int axis = -1;  // coupled axis for line_blocks
  std::vector<GalerkinBlock> blocks;
  double hermitian_defect = 0;
};

namespace detail {

inline Mat galerkin_entry(const OperatorSpec& op, const Key3& row, const Key3& col) {
  Mat entry = op.zero.coeff(row - col);
  const VecN xi = op.torus.dual(col);
  for (int a = 0; a < 3; ++a) {
    if (xi[a] == 0) continue;
    entry += xi[a] * op.coeff[static_cast<std::size_t>(a)].coeff(row - col);
  }
  return entry;
}

inline Mat assemble_block(const OperatorSpec& op, const std::vector<Key3>& modes) {
  const int m = op.m;
  const int dim = m * static_cast<int>(modes.size());
  Mat h(dim, dim);
  for (std::size_t i = 0; i < modes.size(); ++i)
    for (std::size_t j = 0; j < modes.size(); ++j) {
      const Mat e = galerkin_entry(op, modes[i], modes[j]);
      if (e.max_abs() == 0) continue;
      for (int si = 0; si < m; ++si)
        for (int sj = 0; sj < m; ++sj)
          h(static_cast<int>(i) * m + si, static_cast<int>(j) * m + sj) = e(si, sj);
    }
  return h;
}

}  // namespace detail

// Exact projected operator.  Detects constant coefficients (per-mode blocks)
// and single-coordinate coefficient dependence (decoupled line blocks of
// dimension m (2K+1)); everything else takes the dense path, which is kept
// at desk scale by capping K at 4.
inline GalerkinSystem assemble_galerkin(const OperatorSpec& op, int K) {
  if (K < 1 || K < op.max_harmonic())
    throw TruncationTooSmall("Galerkin truncation must reach the largest coefficient harmonic");

  GalerkinSystem sys;
  sys.torus = op.torus;
  sys.m = op.m;
  sys.K = K;

  std::array<bool, 3> coupled{false, false, false};
  for (int a = 0; a < 3; ++a) {
    const auto ca = op.coeff[static_cast<std::size_t>(a)].coupled_axes();
    for (int i = 0; i < 3; ++i) coupled[static_cast<std::size_t>(i)] = coupled[static_cast<std::size_t>(i)] || ca[static_cast<std::size_t>(i)];
  }
  {
    const auto cz = op.zero.coupled_axes();
    for (int i = 0; i < 3; ++i) coupled[static_cast<std::size_t>(i)] = coupled[static_cast<std::size_t>(i)] || cz[static_cast<std::size_t>(i)];
  }
  const int n_coupled = (coupled[0] ? 1 : 0) + (coupled[1] ? 1 : 0) + (coupled[2] ? 1 : 0);

  if (n_coupled == 0) {
    sys.path = GalerkinSystem::Path::per_mode;
    for (int k0 = -K; k0 <= K; ++k0)
      for (int k1 = -K; k1 <= K; ++k1)
        for (int k2 = -K; k2 <= K; ++k2) {
          GalerkinBlock blk;
          blk.modes = {Key3{k0, k1, k2}};
          blk.h = detail::assemble_block(op, blk.modes);
          sys.blocks.push_back(std::move(blk));
        }
  } else if (n_coupled == 1) {
    sys.path = GalerkinSystem::Path::line_blocks;
    sys.axis = coupled[0] ? 0 : (coupled[1] ? 1 : 2);
    const int t1 = (sys.axis + 1) % 3, t2 = (sys.axis + 2) % 3;
    for (int a1 = -K; a1 <= K; ++a1)
      for (int a2 = -K; a2 <= K; ++a2) {
        GalerkinBlock blk;
        blk.modes.reserve(static_cast<std::size_t>(2 * K + 1));
        for (int am = -K; am <= K; ++am) {
          Key3 key{0, 0, 0};
          key[static_cast<std::size_t>(sys.axis)] = am;
          key[static_cast<std::size_t>(t1)] = a1;
          key[static_cast<std::size_t>(t2)] = a2;
          blk.modes.push_back(key);
        }
        blk.h = detail::assemble_block(op, blk.modes);
        sys.blocks.push_back(std::move(blk));
      }
  } else {
    if (K > 4) throw TruncationTooSmall("dense Galerkin path is capped at K = 4; use a block-structured operator");
    sys.path = GalerkinSystem::Path::dense;
    GalerkinBlock blk;
    for (int k0 = -K; k0 <= K; ++k0)
      for (int k1 = -K; k1 <= K; ++k1)
        for (int k2 = -K; k2 <= K; ++k2) blk.modes.push_back(Key3{k0, k1, k2});
    blk.h = detail::assemble_block(op, blk.modes);
    sys.blocks.push_back(std::move(blk));
  }

  double defect = 0, scale = 1.0;
  for (const auto& blk : sys.blocks) {
    defect = std::max(defect, blk.h.hermitian_defect());
    scale = std::max(scale, blk.h.max_abs());
  }
  sys.hermitian_defect = defect;
  if (defect > 1e-12 * scale)
    throw NotHermitian("Galerkin matrix is not Hermitian; the operator is not formally self-adjoint");
  return sys;
}

// Dense eigen-decomposition of every block; residual and orthonormality
// contracts enforced; merged list sorted with a stable per-block tie-break.
inline SpectralData hermitian_eigensolve(const GalerkinSystem& sys, int workers = 1) {
  SpectralData data;
  data.torus = sys.torus;
  data.m = sys.m;
  double min_freq = 0;
  for (int a = 0; a < 3; ++a) {
    const double f = sys.torus.frequency(a, 1);
    min_freq = (a == 0) ? f : std::min(min_freq, f);
  }
  data.trust = 0.5 * sys.K * min_freq;

  std::vector<std::vector<EigenPair>> per_block(sys.blocks.size());
  parallel_for(sys.blocks.size(), workers, [&](std::size_t bi) {
    const GalerkinBlock& blk = sys.blocks[bi];
    const int dim = blk.h.rows();
    const HermitianEigen eig = hermitian_eigensolve(blk.h);
    const double hnorm = blk.h.frobenius();
    std::vector<EigenPair> pairs;
    pairs.reserve(static_cast<std::size_t>(dim));
    for (int c = 0; c < dim; ++c) {
      CVec col = eig.vectors.col(c);
      // residual contract
      CVec hv = blk.h * col;
      double res2 = 0;
      for (int r = 0; r < dim; ++r) res2 += std::norm(hv[static_cast<std::size_t>(r)] - eig.values[static_cast<std::size_t>(c)] * col[static_cast<std::size_t>(r)]);
      if (std::sqrt(res2) > 1e-8 * std::max(1.0, hnorm))
        throw ConvergenceFailure("eigenpair residual exceeds contract");
      detail::fix_gauge(col);
      EigenPair p;
      p.lambda = eig.values[static_cast<std::size_t>(c)];
      p.modes.reserve(blk.modes.size());
      for (std::size_t mi = 0; mi < blk.modes.size(); ++mi) {
        CVec comps(static_cast<std::size_t>(sys.m));
        double mag = 0;
        for (int s = 0; s < sys.m; ++s) {
          comps[static_cast<std::size_t>(s)] = col[mi * static_cast<std::size_t>(sys.m) + static_cast<std::size_t>(s)];
          mag += std::norm(comps[static_cast<std::size_t>(s)]);
        }
        if (mag > 1e-28) p.modes.emplace_back(blk.modes[mi], std::move(comps));
      }
      pairs.push_back(std::move(p));
    }
    // orthonormality contract (full for small blocks, sampled for large)
    const int check_cols = dim <= 128 ? dim : 16;
    for (int a = 0; a < check_cols; ++a)
      for (int b = a; b < check_cols; ++b) {
        const cplx g = inner(eig.vectors.col(a), eig.vectors.col(b));
        const double target = a == b ? 1.0 : 0.0;
        if (std::abs(g - target) > 1e-10) throw ConvergenceFailure("eigenvector orthonormality violated");
      }
    per_block[bi] = std::move(pairs);
  });
  for (auto& pairs : per_block)
    for (auto& p : pairs) data.pairs.push_back(std::move(p));
  data.finalize();
  return data;
}

// Exact per-mode diagonalization for the supported operator families:
//  - constant-coefficient operators (any m): one m x m block per wavevector;
//  - rotating k3-frame Dirac operators plus a constant diagonal shift:
//    2 x 2 blocks coupling third-axis modes mu and mu + k3.
// The returned list is complete below lambda_max.
inline SpectralData lattice_oracle_direct(const OperatorSpec& op, double lambda_max, int workers = 1) {
  SpectralData data;
  data.torus = op.torus;
  data.m = op.m;
  data.trust = lambda_max;

  if (op.constant_coefficients()) {
    std::array<Mat, 3> sig;
    for (int a = 0; a < 3; ++a) sig[static_cast<std::size_t>(a)] = op.coeff[static_cast<std::size_t>(a)].coeff(Key3{0, 0, 0});
    const Mat z0 = op.zero.coeff(Key3{0, 0, 0});
    // ellipticity constant over a direction sample
    double cmin = -1;
    const int dirs = 96;
    for (int i = 0; i < dirs; ++i) {
      const double th = std::acos(-1.0 + 2.0 * (i + 0.5) / dirs);
      const double ph = 2 * pi * std::fmod(0.61803398874989485 * i, 1.0);
      VecN w{std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
      Mat a1(op.m, op.m);
      for (int a = 0; a < 3; ++a) a1 += w[a] * sig[static_cast<std::size_t>(a)];
      const HermitianEigen eig = hermitian_eigensolve(a1);
      double mn = 1e300;
      for (double hv : eig.values) mn = std::min(mn, std::fabs(hv));
      cmin = cmin < 0 ? mn : std::min(cmin, mn);
    }
    if (!(cmin > 1e-10)) throw EllipticityViolated("constant-coefficient symbol fails ellipticity");
    const double shift = z0.frobenius();
    const double radius = (lambda_max + shift + 1.0) / cmin;
    std::array<int, 3> kmax{};
    for (int a = 0; a < 3; ++a)
      kmax[static_cast<std::size_t>(a)] = static_cast<int>(std::ceil(radius / op.torus.frequency(a, 1)));

    std::vector<std::vector<EigenPair>> rows(static_cast<std::size_t>(2 * kmax[0] + 1));
    parallel_for(rows.size(), workers, [&](std::size_t r) {
      const int k0 = static_cast<int>(r) - kmax[0];
      std::vector<EigenPair> local;
      for (int k1 = -kmax[1]; k1 <= kmax[1]; ++k1)
        for (int k2 = -kmax[2]; k2 <= kmax[2]; ++k2) {
          const Key3 key{k0, k1, k2};
          const VecN xi = op.torus.dual(key);
          if (xi.norm() * cmin > lambda_max + shift + 1.0) continue;
          Mat blockm = z0;
          for (int a = 0; a < 3; ++a) {
            if (xi[a] == 0) continue;
            blockm += xi[a] * sig[static_cast<std::size_t>(a)];
          }
          if (op.m == 2) {
            const double a00 = blockm(0, 0).real(), a11 = blockm(1, 1).real();
            const cplx b10 = blockm(1, 0);
            const auto evs = eig2_hermitian(a00, b10, a11);
            const double rad = 0.5 * (evs[1] - evs[0]);
            if (rad < 1e-14 * (1.0 + std::fabs(evs[0]))) {
              for (int s = 0; s < 2; ++s) {
                EigenPair p;
                p.lambda = evs[static_cast<std::size_t>(s)];
                CVec basis(2, cplx{});
                basis[static_cast<std::size_t>(s)] = 1.0;
                p.modes.emplace_back(key, basis);
                local.push_back(std::move(p));
              }
            } else {
              for (double ev : evs) {
                EigenPair p;
                p.lambda = ev;
                p.modes.emplace_back(key, eig2_vector(a00, b10, a11, ev));
                local.push_back(std::move(p));
              }
            }
          } else {
            const HermitianEigen eig = hermitian_eigensolve(blockm);
            for (int c = 0; c < op.m; ++c) {
              EigenPair p;
              p.lambda = eig.values[static_cast<std::size_t>(c)];
              CVec col = eig.vectors.col(c);
              detail::fix_gauge(col);
              p.modes.emplace_back(key, std::move(col));
              local.push_back(std::move(p));
            }
          }
        }
      rows[r] = std::move(local);
    });
    for (auto& row : rows)
      for (auto& p : row) data.pairs.push_back(std::move(p));
    data.finalize();
    return data;
  }

  // k3-frame family: principal coefficients must match the rotating-frame
  // Pauli field exactly, zero order must be the Dirac constant plus a
  // diagonal shift.
  const Torus3 def{};
  if (!(op.torus == def)) throw UnsupportedFamily("k3 separation oracle requires the unit 2 pi torus");
  if (op.m != 2) throw UnsupportedFamily("k3 separation oracle requires m = 2");
  int k3 = 0;
  for (const auto& [key, mval] : op.coeff[0].coeffs()) k3 = std::max(k3, std::abs(key[2]));
  if (k3 == 0 || op.max_harmonic() != k3) throw UnsupportedFamily("coefficients do not match the k3 frame family");
  if (op.zero.max_coeff_abs_offset() > 1e-14) throw UnsupportedFamily("zero-order term must be constant");
  {
    // sigma^1 = [[0, e^{i k3 x3}], [e^{-i k3 x3}, 0]], sigma^2 its quarter
    // turn, sigma^3 = s^3
    std::array<TrigPoly, 3> expect;
    for (auto& e : expect) e = TrigPoly(2, 2, op.torus);
    Mat up(2, 2), dn(2, 2);
    up(0, 1) = 1.0;
    dn(1, 0) = 1.0;
    expect[0].add(Key3{0, 0, k3}, up);
    expect[0].add(Key3{0, 0, -k3}, dn);
    up(0, 1) = cplx{0, -1};
    dn(1, 0) = cplx{0, 1};
    expect[1].add(Key3{0, 0, k3}, up);
    expect[1].add(Key3{0, 0, -k3}, dn);
    expect[2].add(Key3{0, 0, 0}, pauli(3));
    for (int a = 0; a < 3; ++a) {
      TrigPoly diff = op.coeff[static_cast<std::size_t>(a)] - expect[static_cast<std::size_t>(a)];
      diff.prune(1e-15);
      if (diff.coeff_abs_sum() > 1e-12) throw UnsupportedFamily("coefficients do not match the k3 frame family");
    }
  }

  const Mat z0 = op.zero.coeff(Key3{0, 0, 0});
  Mat d_shift = z0;
  d_shift(0, 0) += 0.5 * k3;
  d_shift(1, 1) += 0.5 * k3;
  if (std::abs(d_shift(0, 1)) > 1e-12 || std::abs(d_shift(1, 0)) > 1e-12)
    throw UnsupportedFamily("zero-order term must commute with the k3 block structure");
  const double d1 = d_shift(0, 0).real();
  const double d2 = d_shift(1, 1).real();

  const double shift = z0.frobenius() + 0.5 * k3 + 1.0;
  const int kmax = static_cast<int>(std::ceil(lambda_max + shift + k3));
  std::vector<std::vector<EigenPair>> rows(static_cast<std::size_t>(2 * kmax + 1));
  parallel_for(rows.size(), workers, [&](std::size_t r) {
    const int xi1 = static_cast<int>(r) - kmax;
    std::vector<EigenPair> local;
    for (int xi2 = -kmax; xi2 <= kmax; ++xi2)
      for (int mmode = -kmax; mmode <= kmax; ++mmode) {
        const double mu = mmode + 0.5 * k3;
        const cplx zeta{static_cast<double>(xi1), static_cast<double>(xi2)};
        if (std::sqrt(mu * mu + std::norm(zeta)) > lambda_max + shift) continue;
        // block [[mu + d1, conj(zeta)], [zeta, -mu + d2]] acting on modes
        // (xi1, xi2, mmode + k3) for the first spinor component and
        // (xi1, xi2, mmode) for the second.
        const double a00 = mu + d1;
        const double a11 = -mu + d2;
        const auto evs = eig2_hermitian(a00, zeta, a11);
        const double rad = 0.5 * (evs[1] - evs[0]);
        const Key3 key_up{xi1, xi2, mmode + k3};
        const Key3 key_dn{xi1, xi2, mmode};
        for (int s = 0; s < 2; ++s) {
          EigenPair p;
          p.lambda = evs[static_cast<std::size_t>(s)];
          CVec v;
          if (rad < 1e-14 * (1.0 + std::fabs(evs[0]))) {
            v = CVec(2, cplx{});
            v[static_cast<std::size_t>(s)] = 1.0;
          } else {
            v = eig2_vector(a00, zeta, a11, p.lambda);
          }
          p.modes.emplace_back(key_up, CVec{v[0], cplx{}});
          p.modes.emplace_back(key_dn, CVec{cplx{}, v[1]});
          local.push_back(std::move(p));
        }
      }
    rows[r] = std::move(local);
  });
  for (auto& row : rows)
    for (auto& p : row) data.pairs.push_back(std::move(p));
  data.finalize();
  return data;
}

// Sign-flipped operators are covered through spec(-A) = -spec(A).
inline SpectralData lattice_oracle(const OperatorSpec& op, double lambda_max, int workers = 1) {
  try {
    return lattice_oracle_direct(op, lambda_max, workers);
  } catch (const UnsupportedFamily&) {
    return lattice_oracle_direct(op.negated(), lambda_max, workers).negated();
  }
}

}  // namespace weyl
