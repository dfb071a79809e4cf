#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "weyl/weyl.hpp"

using namespace weyl;

namespace {

std::vector<VecN> grid_points(int g = 5) {
  std::vector<VecN> pts;
  for (int i0 = 0; i0 < g; ++i0)
    for (int i1 = 0; i1 < g; ++i1)
      for (int i2 = 0; i2 < g; ++i2) pts.push_back(VecN{2 * pi * i0 / g, 2 * pi * i1 / g, 2 * pi * i2 / g});
  return pts;
}

}  // namespace

TEST_CASE("metric from symbol: euclidean, scaled and rotating frames") {
  // standard pauli coefficients
  const auto sig_e = testutil::sigma_d_operator().coeff;
  const Mat g_e = metric_from_symbol(sig_e, VecN{0.1, 0.2, 0.3});
  CHECK((g_e - Mat::identity(3)).max_abs() <= 1e-13);

  // doubled frame: g^{ab} = 4 delta
  std::mt19937 rng(3);
  const FrameBundle doubled = FrameBundle::from_frame(testutil::random_frame_field(rng, 0, false, 2.0));
  const Mat g2 = metric_from_symbol(doubled.sigma(), VecN{0.4, 0.5, 0.6});
  Mat expect = Mat::identity(3);
  expect *= 4.0;
  CHECK((g2 - expect).max_abs() <= 1e-12);

  // rotations preserve the metric at every x
  const FrameBundle k3b = k3_frame(2);
  for (const VecN& x : {VecN{0, 0, 0}, VecN{0.3, 1.4, 2.2}}) {
    const Mat g = metric_from_symbol(k3b.sigma(), x);
    CHECK((g - Mat::identity(3)).max_abs() <= 1e-12);
  }

  // h^+ = sqrt(g^{ab} xi_a xi_b) matches the eigensystem
  const SymbolPair sym = k3b.principal_operator().symbol();
  const VecN x{1.1, 0.2, 0.8};
  const VecN xi{0.3, -0.7, 0.4};
  const Mat g = metric_from_symbol(k3b.sigma(), x);
  double q = 0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) q += g(a, b).real() * xi[a] * xi[b];
  const EigenSystem es = principal_eigensystem(sym, {x, xi});
  CHECK(std::sqrt(q) == doctest::Approx(es.eigenvalue(+1)).epsilon(1e-12));
}

TEST_CASE("metric from symbol: rejections") {
  // trace-ful symbol
  auto sig = testutil::sigma_d_operator().coeff;
  Mat shift = Mat::identity(2);
  sig[0].add(Key3{0, 0, 0}, shift);
  CHECK_THROWS_AS(metric_from_symbol(sig, VecN{}), NotTraceFree);

  // degenerate symbol: sigma^3 = 0 kills positive definiteness
  auto sig2 = testutil::sigma_d_operator().coeff;
  sig2[2] = TrigPoly(2, 2, Torus3{});
  CHECK_THROWS_AS(metric_from_symbol(sig2, VecN{}), NotPositiveDefinite);
}

TEST_CASE("frame <-> symbol round trip") {
  // standard paulis give the identity frame
  const TrigPoly v_std = frame_from_symbol(testutil::sigma_d_operator().coeff);
  TrigPoly expect = TrigPoly::constant(Mat::identity(3));
  TrigPoly diff = v_std - expect;
  diff.prune(1e-15);
  CHECK(diff.coeff_abs_sum() <= 1e-14);

  // k3 frame: harmonics confined to wavevectors (0, 0, +-k3)
  const int k3 = 2;
  const FrameBundle bundle = k3_frame(k3);
  const auto sigma = bundle.sigma();
  for (int a = 0; a < 2; ++a)
    for (const auto& [key, m] : sigma[static_cast<std::size_t>(a)].coeffs()) {
      CHECK(key[0] == 0);
      CHECK(key[1] == 0);
      CHECK(std::abs(key[2]) == k3);
    }

  // random frames: round trip exact on coefficients
  std::mt19937 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const TrigPoly v = testutil::random_frame_field(rng, 2, trial % 2 == 1);
    TrigPoly rt = frame_from_symbol(symbol_from_frame(v)) - v;
    rt.prune(1e-15);
    CHECK(rt.coeff_abs_sum() <= 1e-13);
  }

  // swapped rows: valid bundle with negative orientation
  const TrigPoly swapped = testutil::random_frame_field(rng, 1, true);
  const FrameBundle nb = FrameBundle::from_frame(swapped);
  CHECK(nb.c == -1);
}

TEST_CASE("orientation invariant: both definitions agree") {
  CHECK(orientation_invariant(k3_frame(1)) == 1);
  CHECK(orientation_invariant(k3_frame(0)) == 1);
  std::mt19937 rng(11);
  const FrameBundle neg = FrameBundle::from_frame(testutil::random_frame_field(rng, 1, true));
  CHECK(orientation_invariant(neg) == -1);
  const FrameBundle scaled = FrameBundle::from_frame(testutil::random_frame_field(rng, 1, false, 1.7));
  CHECK(orientation_invariant(scaled) == 1);
}

TEST_CASE("teleparallel transport: constant frame, rotation by pi/2, round trip, norm") {
  const FrameBundle id = k3_frame(0);
  const auto r0 = teleparallel_transport(id, VecN{0.1, 0.2, 0.3}, VecN{0.4, 0.5, 0.6}, VecN{1.0, 2.0, 3.0});
  CHECK(std::fabs(r0.xi[0] - 0.4) <= 1e-14);
  CHECK(std::fabs(r0.xi[1] - 0.5) <= 1e-14);
  CHECK(std::fabs(r0.xi[2] - 0.6) <= 1e-14);

  const int k3 = 1;
  const FrameBundle bundle = k3_frame(k3);
  const VecN y{0, 0, 0};
  const VecN x{0, 0, pi / (2.0 * k3)};
  const auto rot = teleparallel_transport(bundle, y, VecN{1, 0, 0}, x);
  CHECK(std::fabs(rot.xi[0]) <= 1e-13);
  CHECK(std::fabs(std::fabs(rot.xi[1]) - 1.0) <= 1e-13);
  CHECK(std::fabs(rot.xi[2]) <= 1e-13);
  CHECK(rot.condition >= 1.0);

  // two-leg round trip and norm preservation on a random frame
  std::mt19937 rng(13);
  const FrameBundle rnd = FrameBundle::from_frame(testutil::random_frame_field(rng, 2));
  const VecN eta{0.7, -0.3, 0.5};
  const VecN xx{1.3, 2.1, 0.4};
  const auto fwd = teleparallel_transport(rnd, y, eta, xx);
  const auto back = teleparallel_transport(rnd, xx, fwd.xi, y);
  for (int a = 0; a < 3; ++a) CHECK(back.xi[a] == doctest::Approx(eta[a]).epsilon(1e-12));
  const Mat gy = rnd.g_up.eval(y);
  const Mat gx = rnd.g_up.eval(xx);
  double ny = 0, nx = 0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      ny += gy(a, b).real() * eta[a] * eta[b];
      nx += gx(a, b).real() * fwd.xi[a] * fwd.xi[b];
    }
  CHECK(nx == doctest::Approx(ny).epsilon(1e-12));
}

TEST_CASE("teleparallel tensors: constant frame is flat and torsion-free") {
  const TeleparallelData tele = teleparallel_tensors(k3_frame(0));
  for (int a = 0; a < 3; ++a) {
    CHECK(tele.gamma[static_cast<std::size_t>(a)].coeff_abs_sum() <= 1e-14);
    CHECK(tele.torsion[static_cast<std::size_t>(a)].coeff_abs_sum() <= 1e-14);
  }
  CHECK(tele.star_flat.coeff_abs_sum() <= 1e-14);
}

TEST_CASE("teleparallel tensors: k3 frame axial trace and microrotation entries") {
  const int k3 = 1;
  const FrameBundle bundle = k3_frame(k3);
  const TeleparallelData tele = teleparallel_tensors(bundle);
  for (const VecN& x : {VecN{0, 0, 0}, VecN{0.4, 1.2, 2.5}}) {
    CHECK(tele.trace_star_torsion(x) == doctest::Approx(-2.0 * k3).epsilon(1e-12));
    CHECK(tele.trace_star_torsion_explicit(x) == doctest::Approx(-2.0 * k3).epsilon(1e-12));
  }
  // microrotation linearization at x = 0: *T_11 = *T_22 = -k3, *T_33 = 0
  const Mat star = tele.star_torsion(VecN{0, 0, 0});
  CHECK(star(0, 0).real() == doctest::Approx(-static_cast<double>(k3)).epsilon(1e-12));
  CHECK(star(1, 1).real() == doctest::Approx(-static_cast<double>(k3)).epsilon(1e-12));
  CHECK(std::fabs(star(2, 2).real()) <= 1e-12);
}

TEST_CASE("teleparallel tensors: torsion antisymmetry and dual-route consistency") {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 3; ++trial) {
    const FrameBundle bundle = FrameBundle::from_frame(testutil::random_frame_field(rng, 2, trial == 2));
    const TeleparallelData tele = teleparallel_tensors(bundle);
    std::uniform_real_distribution<double> d(0, 2 * pi);
    for (int t = 0; t < 4; ++t) {
      const VecN x{d(rng), d(rng), d(rng)};
      // antisymmetry in the last two indices
      for (int a = 0; a < 3; ++a) {
        const Mat tor = tele.torsion[static_cast<std::size_t>(a)].eval(x);
        CHECK((tor + tor.adjoint()).max_abs() <= 1e-11);
      }
      // curl route equals the epsilon-contraction route
      const Mat s1 = tele.star_torsion(x);
      const Mat s2 = tele.star_torsion_curl_route(x);
      CHECK((s1 - s2).max_abs() <= 1e-10);
      // six-term trace formula
      CHECK(tele.trace_star_torsion_explicit(x) == doctest::Approx(tele.trace_star_torsion(x)).epsilon(1e-10));
    }
  }
}

TEST_CASE("teleparallel connection: metric compatibility via finite differences") {
  std::mt19937 rng(19);
  const FrameBundle bundle = FrameBundle::from_frame(testutil::random_frame_field(rng, 2, false, 1.3));
  const TeleparallelData tele = teleparallel_tensors(bundle);
  std::uniform_real_distribution<double> d(0, 2 * pi);
  const double h = 1e-4;
  for (int t = 0; t < 3; ++t) {
    const VecN x{d(rng), d(rng), d(rng)};
    for (int mu = 0; mu < 3; ++mu) {
      // FD derivative of g_down along axis mu
      Mat dg(3, 3);
      for (int s = -2; s <= 2; ++s) {
        if (s == 0) continue;
        VecN xs = x;
        xs[mu] += s * h;
        const double w = (s == 1 ? 8 : s == -1 ? -8 : s == 2 ? -1 : 1) / (12 * h);
        dg += w * bundle.g_down.eval(xs);
      }
      const Mat gamma_mu = [&] {
        Mat g(3, 3);
        for (int a = 0; a < 3; ++a) {
          const Mat ga = tele.gamma[static_cast<std::size_t>(a)].eval(x);
          for (int b = 0; b < 3; ++b) g(a, b) = ga(mu, b);
        }
        return g;
      }();
      const Mat gd = bundle.g_down.eval(x);
      // nabla_mu g_{bg} = d_mu g_{bg} - Gamma^a_{mu b} g_{ag} - Gamma^a_{mu g} g_{ba}
      Mat nabla = dg;
      for (int b = 0; b < 3; ++b)
        for (int g = 0; g < 3; ++g) {
          cplx corr = 0;
          for (int a = 0; a < 3; ++a) corr += gamma_mu(a, b) * gd(a, g) + gamma_mu(a, g) * gd(b, a);
          nabla(b, g) -= corr;
        }
      CHECK(nabla.max_abs() <= 1e-8);
    }
  }
}

TEST_CASE("teleparallel connection: holonomy around small squares vanishes to high order") {
  const FrameBundle bundle = k3_frame(2);
  const TeleparallelData tele = teleparallel_tensors(bundle);
  // transport a covector around the x1-x3 coordinate square, integrating
  // d w_b / ds = dir Gamma^a_{mu b}(x(s)) w_a along each leg with RK4
  auto holonomy = [&](double h) {
    VecN x{0.3, 0.7, 1.1};
    std::array<double, 3> w{0.6, -0.2, 0.9};
    const int legs[4][2] = {{0, +1}, {2, +1}, {0, -1}, {2, -1}};
    const int substeps = 4;
    for (const auto& leg : legs) {
      const int mu = leg[0];
      const double dx = leg[1] * h / substeps;
      auto rhs = [&](const VecN& pos, const std::array<double, 3>& wv) {
        std::array<double, 3> dw{};
        for (int b = 0; b < 3; ++b) {
          double acc = 0;
          for (int a = 0; a < 3; ++a)
            acc += tele.gamma[static_cast<std::size_t>(a)].eval(pos)(mu, b).real() * wv[static_cast<std::size_t>(a)];
          dw[static_cast<std::size_t>(b)] = acc;
        }
        return dw;
      };
      auto advance = [&](const std::array<double, 3>& wv, const std::array<double, 3>& dw, double f) {
        std::array<double, 3> out{};
        for (int b = 0; b < 3; ++b) out[static_cast<std::size_t>(b)] = wv[static_cast<std::size_t>(b)] + f * dw[static_cast<std::size_t>(b)];
        return out;
      };
      for (int s = 0; s < substeps; ++s) {
        VecN xm = x, xe = x;
        xm[mu] += 0.5 * dx;
        xe[mu] += dx;
        const auto k1 = rhs(x, w);
        const auto k2 = rhs(xm, advance(w, k1, 0.5 * dx));
        const auto k3 = rhs(xm, advance(w, k2, 0.5 * dx));
        const auto k4 = rhs(xe, advance(w, k3, dx));
        for (int b = 0; b < 3; ++b)
          w[static_cast<std::size_t>(b)] += dx / 6.0 *
                                            (k1[static_cast<std::size_t>(b)] + 2 * k2[static_cast<std::size_t>(b)] +
                                             2 * k3[static_cast<std::size_t>(b)] + k4[static_cast<std::size_t>(b)]);
        x[mu] += dx;
      }
    }
    return std::hypot(w[0] - 0.6, std::hypot(w[1] + 0.2, w[2] - 0.9));
  };
  const double e1 = holonomy(0.4);
  const double e2 = holonomy(0.2);
  // zero curvature: only integrator noise remains, so the residual falls
  // much faster than the curvature-induced h^2 floor would
  CHECK(e2 <= e1 / 10.0);
  CHECK(e2 <= 1e-6);
}

TEST_CASE("curvature-torsion identity on k3 and random frames") {
  const int k3 = 1;
  const FrameBundle bundle = k3_frame(k3);
  const TeleparallelData tele = teleparallel_tensors(bundle);
  CHECK(curvature_torsion_residual(bundle, tele, {VecN{0, 0, 0}, VecN{1, 0, 0}}) <= 1e-6);
  CHECK(curvature_torsion_residual(bundle, tele, {VecN{0, 0, 0}, VecN{0, 0, 1}}) <= 1e-6);

  // spot values through the two routes separately
  const SymbolPair sym = bundle.principal_operator().symbol();
  const EigenJets jets1 = eigen_jets(sym, {VecN{0, 0, 0}, VecN{1, 0, 0}});
  CHECK(u1_scalar_from_jets(jets1, +1) == doctest::Approx(-0.5 * k3).epsilon(1e-7));
  const EigenJets jets3 = eigen_jets(sym, {VecN{0, 0, 0}, VecN{0, 0, 1}});
  CHECK(std::fabs(u1_scalar_from_jets(jets3, +1)) <= 1e-8);

  std::mt19937 rng(23);
  std::uniform_real_distribution<double> d(-1, 1);
  for (int trial = 0; trial < 3; ++trial) {
    const FrameBundle rb = FrameBundle::from_frame(testutil::random_frame_field(rng, 2, trial == 1));
    const TeleparallelData rt = teleparallel_tensors(rb);
    for (int t = 0; t < 5; ++t) {
      const CotangentPoint pt{VecN{pi * (d(rng) + 1), pi * (d(rng) + 1), pi * (d(rng) + 1)},
                              VecN{d(rng) + 1.2, d(rng), d(rng)}};
      CHECK(curvature_torsion_residual(rb, rt, pt) <= 1e-6);
    }
  }
}

TEST_CASE("orientation constant over the torus and metric definitions agree") {
  std::mt19937 rng(29);
  const FrameBundle bundle = FrameBundle::from_frame(testutil::random_frame_field(rng, 2));
  for (const VecN& x : grid_points(4)) {
    const Mat g_sym = metric_from_symbol(bundle.sigma(), x);
    const Mat g_frame = bundle.g_up.eval(x);
    CHECK((g_sym - g_frame).max_abs() <= 1e-12);
  }
  CHECK(orientation_invariant(bundle, 4) == bundle.c);
}

TEST_CASE("gram-schmidt path reports correction and reproduces orthonormal frames") {
  // an orthonormal input is recognized as already orthonormal
  const FrameBundle clean = FrameBundle::from_frame_gram_schmidt(k3_frame(1).V);
  CHECK(!clean.orthonormalized);

  // a sheared constant frame gets corrected
  Mat shear = Mat::identity(3);
  shear(0, 1) = 0.4;
  shear(2, 0) = -0.2;
  const TrigPoly sheared = TrigPoly::constant(shear);
  const FrameBundle fixed = FrameBundle::from_frame_gram_schmidt(sheared);
  CHECK(fixed.orthonormalized);
  const Mat v0 = fixed.V.eval(VecN{});
  CHECK((v0 * v0.adjoint() - Mat::identity(3)).max_abs() <= 1e-10);

  // dependent frames are rejected
  Mat dep = Mat::identity(3);
  dep(1, 0) = 1.0;
  dep(1, 1) = 0.0;
  dep(0, 0) = 1.0;
  dep(1, 2) = 0.0;
  // rows 0 and 1 both equal e1
  CHECK_THROWS_AS(FrameBundle::from_frame_gram_schmidt(TrigPoly::constant(dep)), LinearlyDependentFrame);
}

TEST_CASE("su2 double cover: identity, sign, axis rotation, frame consistency") {
  CHECK((su2_to_so3(Mat::identity(2)) - Mat::identity(3)).max_abs() <= 1e-14);
  Mat minus = Mat::identity(2);
  minus *= -1.0;
  CHECK((su2_to_so3(minus) - Mat::identity(3)).max_abs() <= 1e-14);

  // R = diag(e^{i theta/2}, e^{-i theta/2}) conjugates s^1 to
  // s^1 cos - s^2 sin, so the trace formula yields the axis-3 rotation
  // with O(0,1) = +sin(theta).
  const double theta = 0.77;
  Mat diag(2, 2);
  diag(0, 0) = std::exp(iu * (theta / 2));
  diag(1, 1) = std::exp(-iu * (theta / 2));
  const Mat o = su2_to_so3(diag);
  CHECK(o(0, 0).real() == doctest::Approx(std::cos(theta)).epsilon(1e-13));
  CHECK(o(0, 1).real() == doctest::Approx(std::sin(theta)).epsilon(1e-13));
  CHECK(o(1, 0).real() == doctest::Approx(-std::sin(theta)).epsilon(1e-13));
  CHECK(o(2, 2).real() == doctest::Approx(1.0).epsilon(1e-13));

  // orthogonality, determinant and the conjugated-Pauli relation
  std::mt19937 rng(31);
  const Mat r = testutil::random_su2(rng);
  const Mat oo = su2_to_so3(r);
  CHECK((oo * oo.adjoint() - Mat::identity(3)).max_abs() <= 1e-12);
  std::array<std::array<double, 3>, 3> om{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) om[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = oo(i, j).real();
  CHECK(det3(om) == doctest::Approx(1.0).epsilon(1e-12));

  const TrigPoly v = testutil::random_frame_field(rng, 1);
  const TrigPoly v_rot = transform_frame(v, oo);
  const auto sig = symbol_from_frame(v);
  const auto sig_rot = symbol_from_frame(v_rot);
  std::uniform_real_distribution<double> d(0, 2 * pi);
  for (int t = 0; t < 3; ++t) {
    const VecN x{d(rng), d(rng), d(rng)};
    for (int a = 0; a < 3; ++a) {
      const Mat lhs = sig_rot[static_cast<std::size_t>(a)].eval(x);
      const Mat rhs = r * sig[static_cast<std::size_t>(a)].eval(x) * r.adjoint();
      CHECK((lhs - rhs).max_abs() <= 1e-12);
    }
  }

  CHECK_THROWS_AS(su2_to_so3(pauli(1) + pauli(3)), NotSpecialUnitary);
}
