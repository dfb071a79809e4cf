// Batch front end: ingest operator specs, run geometry/spectrum analyses and
// the verification suite, emit CSV/JSON.  Exit codes: 0 pass, 1 verification
// failure, 2 input error.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "weyl/json_io.hpp"
#include "weyl/mollifier.hpp"
#include "weyl/weyl.hpp"

namespace fs = std::filesystem;
using namespace weyl;

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct RunConfig {
  std::string input_path;
  std::string preset;  // "k3=<int>"
  std::string out_dir = ".";
  int truncation_k = 0;          // 0: take from the input spec
  double lambda_max = 20.0;
  double mollifier_support = 0;  // 0: take from the input spec
  int workers = 1;
  int grid = 3;
  bool force_oracle = false;
  bool force_galerkin = false;
  bool with_asymmetry = false;
};

ProblemSpec load_problem(const RunConfig& cfg) {
  if (!cfg.preset.empty() && !cfg.input_path.empty())
    throw SchemaError("/", "give either --input or --preset, not both");
  if (!cfg.preset.empty()) {
    if (cfg.preset.rfind("k3=", 0) != 0) throw SchemaError("/preset", "expected k3=<integer>");
    json j;
    j["frame"] = {{"preset", "k3"}, {"k3", std::stoi(cfg.preset.substr(3))}};
    return parse_problem(j);
  }
  if (cfg.input_path.empty()) throw SchemaError("/", "an --input file or a --preset is required");
  std::ifstream in(cfg.input_path);
  if (!in) throw SchemaError("/", "cannot open input file " + cfg.input_path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw SchemaError("/", std::string("invalid JSON: ") + e.what());
  }
  return parse_problem(j);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// random trig-poly spinor fields for the verification trials
TrigPoly trial_spinor(std::mt19937& rng, const Torus3& torus) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::uniform_int_distribution<int> kd(-1, 1);
  TrigPoly f(2, 1, torus);
  for (int t = 0; t < 4; ++t) {
    Mat c(2, 1);
    c(0, 0) = cplx{dist(rng), dist(rng)};
    c(1, 0) = cplx{dist(rng), dist(rng)};
    f.add(Key3{kd(rng), kd(rng), kd(rng)}, c);
  }
  return f;
}

// ---------------------------------------------------------------------------
// analyze

int run_analyze(const RunConfig& cfg, const ProblemSpec& spec) {
  const FrameBundle& bundle = spec.bundle;
  const TeleparallelData tele = teleparallel_tensors(bundle);
  const TrigPoly asub = spec.op.subprincipal_field();
  const SymbolPair sym = spec.op.symbol();
  const SphereRule base = default_sphere_rule(3, spec.quad_polar, spec.quad_azimuth);

  const int g = cfg.grid;
  const auto grid_x = [&](int i0, int i1, int i2) {
    return VecN{bundle.torus.periods[0] * i0 / g, bundle.torus.periods[1] * i1 / g, bundle.torus.periods[2] * i2 / g};
  };

  json geometry;
  geometry["orientation"] = bundle.c;
  geometry["orientation_consistent"] = (orientation_invariant(bundle, 4) == bundle.c);
  {
    double tr_min = 1e300, tr_max = -1e300, tr_mean = 0;
    double off_max = 0, asub_max = 0, sdg_min = 1e300, sdg_max = -1e300;
    int count = 0;
    for (int i0 = 0; i0 < g; ++i0)
      for (int i1 = 0; i1 < g; ++i1)
        for (int i2 = 0; i2 < g; ++i2, ++count) {
          const VecN x = grid_x(i0, i1, i2);
          const double tr = tele.trace_star_torsion(x);
          tr_min = std::min(tr_min, tr);
          tr_max = std::max(tr_max, tr);
          tr_mean += tr;
          const Mat a = asub.eval(x);
          asub_max = std::max(asub_max, a.max_abs());
          Mat off = a;
          const cplx mean = 0.5 * a.trace();
          off(0, 0) -= mean;
          off(1, 1) -= mean;
          off_max = std::max(off_max, off.max_abs());
          sdg_min = std::min(sdg_min, bundle.sqrt_det_g(x));
          sdg_max = std::max(sdg_max, bundle.sqrt_det_g(x));
        }
    geometry["trace_star_torsion"] = {{"min", tr_min}, {"max", tr_max}, {"mean", tr_mean / count}};
    geometry["subprincipal"] = {{"max_norm", asub_max}, {"max_off_identity", off_max}};
    geometry["sqrt_det_g"] = {{"min", sdg_min}, {"max", sdg_max}};
  }
  {
    json metric;
    metric["constant"] = bundle.metric_constant;
    metric["fit_residual"] = bundle.metric_fit_residual;
    const Mat g0 = bundle.g_up.eval(VecN{});
    json rows = json::array();
    for (int i = 0; i < 3; ++i) {
      json row = json::array();
      for (int j2 = 0; j2 < 3; ++j2) row.push_back(g0(i, j2).real());
      rows.push_back(row);
    }
    metric["g_up_at_origin"] = rows;
    geometry["metric"] = metric;
  }
  write_json(fs::path(cfg.out_dir) / "geometry.json", geometry);

  {
    std::string csv = "x1,x2,x3,a,b,b_closed\n";
    std::vector<std::string> rows(static_cast<std::size_t>(g) * g * g);
    parallel_for(rows.size(), cfg.workers, [&](std::size_t idx) {
      const int i0 = static_cast<int>(idx) / (g * g);
      const int i1 = (static_cast<int>(idx) / g) % g;
      const int i2 = static_cast<int>(idx) % g;
      const VecN x = grid_x(i0, i1, i2);
      const double a_x = a_density_metric(bundle, x);
      const double b_x = b_density(sym, x, base);
      const double b_c = b_density_closed(bundle, tele, asub, x);
      rows[idx] = fmt17(x[0]) + "," + fmt17(x[1]) + "," + fmt17(x[2]) + "," + fmt17(a_x) + "," + fmt17(b_x) + "," +
                  fmt17(b_c) + "\n";
    });
    for (const auto& row : rows) csv += row;
    write_text(fs::path(cfg.out_dir) / "densities.csv", csv);
  }

  {
    GlobalOptions opts;
    opts.workers = cfg.workers;
    opts.polar = spec.quad_polar;
    opts.azimuth = spec.quad_azimuth;
    const GlobalCoefficients coeff = global_coefficients(spec.op, opts);
    json out;
    out["a"] = coeff.a;
    out["b"] = coeff.b;
    out["method"] = "closed_form_grid";
    out["grid"] = opts.grid;
    GlobalOptions quad = opts;
    quad.force_quadrature = true;
    quad.grid = 2;
    const GlobalCoefficients cross = global_coefficients(spec.op, quad);
    out["a_quadrature"] = cross.a;
    out["b_quadrature"] = cross.b;
    out["cross_check_tolerance"] = 1e-8;
    write_json(fs::path(cfg.out_dir) / "coefficients.json", out);
  }

  write_json(fs::path(cfg.out_dir) / "operator.json", operator_to_json(spec.op));
  return 0;
}

// ---------------------------------------------------------------------------
// spectrum

void write_eigenvalues_csv(const fs::path& path, const SpectralData& data) {
  // signed enumeration: k = 1, 2, ... ascending over positive eigenvalues,
  // k = 0, -1, ... descending over the rest
  std::string csv = "k,lambda\n";
  std::vector<double> nonpos, pos;
  for (double l : data.lambdas) (l > 0 ? pos : nonpos).push_back(l);
  for (std::size_t i = 0; i < nonpos.size(); ++i) {
    const double l = nonpos[nonpos.size() - 1 - i];
    csv += std::to_string(-static_cast<long>(i)) + "," + fmt17(l) + "\n";
  }
  for (std::size_t i = 0; i < pos.size(); ++i) csv += std::to_string(i + 1) + "," + fmt17(pos[i]) + "\n";
  write_text(path, csv);
}

int run_spectrum(const RunConfig& cfg, const ProblemSpec& spec) {
  const double support = cfg.mollifier_support > 0 ? cfg.mollifier_support : spec.mollifier_support;
  const Mollifier mol(support);
  const int k = cfg.truncation_k > 0 ? cfg.truncation_k : spec.truncation_k;

  SpectralData data;
  std::string source;
  if (cfg.force_galerkin) {
    data = hermitian_eigensolve(assemble_galerkin(spec.op, k), cfg.workers);
    source = "galerkin";
  } else {
    try {
      const double range = cfg.lambda_max + mol.tail(1e-6) + 1.0;
      data = lattice_oracle(spec.op, range, cfg.workers);
      source = "oracle";
    } catch (const UnsupportedFamily&) {
      if (cfg.force_oracle) throw;
      data = hermitian_eigensolve(assemble_galerkin(spec.op, k), cfg.workers);
      source = "galerkin";
    }
  }

  write_eigenvalues_csv(fs::path(cfg.out_dir) / "eigenvalues.csv", data);

  // fit window per the two-term model convention, shrunk so the mollified
  // values stay inside the trust window
  const double top = source == "oracle" ? cfg.lambda_max : data.trust;
  double hi = std::min(0.9 * top, data.trust - mol.tail(1e-6));
  double lo = top / 2.0;
  const bool mollified_fit = hi > lo + 1.0;
  WeylFit fit;
  if (mollified_fit) {
    fit = mollified_weyl_fit(data, mol, lo, hi);
  } else {
    hi = 0.9 * top;
    lo = top / 2.0;
    std::vector<double> xs, ys;
    for (int i = 0; i < 61; ++i) {
      const double l = lo + (hi - lo) * i / 60.0;
      xs.push_back(l);
      ys.push_back(static_cast<double>(data.counting(l)));
    }
    fit = fit_counting_model(xs, ys);
  }

  {
    std::string csv = "lambda,N,mollified_N,model,residual\n";
    const int samples = 120;
    for (int i = 1; i <= samples; ++i) {
      const double l = top * i / samples;
      const double n = data.counting(l);
      std::string mstr;
      const double model = fit.a * l * l * l + fit.b * l * l + fit.c * l;
      double resid = n - model;
      if (l + mol.tail(1e-6) <= data.trust) {
        const double m = mollified_counting(data, mol, l);
        mstr = fmt17(m);
        resid = m - model;
      }
      csv += fmt17(l) + "," + fmt17(n) + "," + mstr + "," + fmt17(model) + "," + fmt17(resid) + "\n";
    }
    write_text(fs::path(cfg.out_dir) / "counting.csv", csv);
  }

  json fj;
  fj["a_fit"] = fit.a;
  fj["b_fit"] = fit.b;
  fj["c_fit"] = fit.c;
  fj["rms"] = fit.rms;
  fj["window"] = {fit.window_lo, fit.window_hi};
  fj["basis"] = mollified_fit ? "mollified_counting" : "unmollified_counting";
  fj["mollifier_T"] = support;
  fj["source"] = source;
  fj["trust_window"] = data.trust;
  {
    json cov = json::array();
    for (int r = 0; r < 3; ++r) {
      json row = json::array();
      for (int c = 0; c < 3; ++c)
        row.push_back(fit.covariance[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
      cov.push_back(row);
    }
    fj["covariance"] = cov;
  }

  if (cfg.with_asymmetry) {
    std::string csv = "lambda,N_plus,N_minus,difference\n";
    const int samples = 60;
    for (int i = 1; i <= samples; ++i) {
      const double l = top * i / samples;
      const int np = data.counting(l);
      const int nm = data.counting_negated(l);
      csv += fmt17(l) + "," + std::to_string(np) + "," + std::to_string(nm) + "," + std::to_string(np - nm) + "\n";
    }
    write_text(fs::path(cfg.out_dir) / "asymmetry.csv", csv);
    if (mollified_fit) {
      const AsymmetryReport rep = asymmetry_report(data, mol, lo, hi, 31);
      fj["asymmetry"] = {{"a_plus", rep.fit_plus.a},
                         {"a_minus", rep.fit_minus.a},
                         {"b_plus", rep.fit_plus.b},
                         {"b_minus", rep.fit_minus.b}};
    }
  }
  write_json(fs::path(cfg.out_dir) / "fit.json", fj);
  return 0;
}

// ---------------------------------------------------------------------------
// verify

int run_verify(const RunConfig& cfg, const ProblemSpec& spec) {
  json entries = json::array();
  bool all_pass = true;
  const auto add_entry = [&](const std::string& name, bool pass, double residual, double tolerance,
                             const std::string& note = "") {
    json e;
    e["name"] = name;
    e["pass"] = pass;
    e["max_residual"] = residual;
    e["tolerance"] = tolerance;
    if (!note.empty()) e["note"] = note;
    entries.push_back(e);
    all_pass = all_pass && pass;
  };
  const auto tol = [&](const std::string& key, double fallback) {
    auto it = spec.tolerances.find(key);
    return it == spec.tolerances.end() ? fallback : it->second;
  };

  const SymbolPair sym = spec.op.symbol();
  std::mt19937 rng(20260808);
  std::uniform_real_distribution<double> ud(0.0, 2 * pi);
  std::uniform_real_distribution<double> sd(-1.0, 1.0);
  const auto random_point = [&] {
    VecN x{ud(rng), ud(rng), ud(rng)};
    VecN xi{sd(rng) + 1.1, sd(rng), sd(rng)};
    return CotangentPoint{x, xi};
  };

  {
    double worst = 0;
    std::string note;
    for (int t = 0; t < 3; ++t) {
      const TrigPoly v = trial_spinor(rng, spec.op.torus);
      const TrigPoly w = trial_spinor(rng, spec.op.torus);
      worst = std::max(worst, selfadjointness_residual(spec.op, nullptr, v, w));
    }
    add_entry("self_adjointness", worst <= tol("self_adjointness", 1e-9), worst, tol("self_adjointness", 1e-9), note);
  }

  {
    // Property-3 check on the Dirac operator of the input frame
    const OperatorSpec dirac = build_dirac(spec.bundle, true);
    double worst = 0;
    for (int t = 0; t < 2; ++t)
      worst = std::max(worst, charge_conjugation_residual(dirac, trial_spinor(rng, spec.op.torus)));
    add_entry("charge_conjugation", worst <= tol("charge_conjugation", 1e-10), worst,
              tol("charge_conjugation", 1e-10));
  }

  {
    const TeleparallelData tele = teleparallel_tensors(spec.bundle);
    double worst = 0;
    for (int t = 0; t < 20; ++t)
      worst = std::max(worst, curvature_torsion_residual(spec.bundle, tele, random_point()));
    add_entry("curvature_torsion", worst <= tol("curvature_torsion", 1e-6), worst, tol("curvature_torsion", 1e-6));
  }

  {
    double worst_trace = 0, worst_sum = 0;
    std::string note;
    bool ok = true;
    try {
      for (int t = 0; t < 6; ++t) {
        const CotangentPoint pt = random_point();
        const EigenJets jets = eigen_jets(sym, pt);
        for (int j : {+1, -1}) {
          const Mat u = propagator_zero_subprincipal(sym, j, pt);
          worst_trace = std::max(worst_trace, std::abs(u.trace() - cplx{u1_scalar_from_jets(jets, j), 0}));
        }
        double sum = 0;
        for (int j = 1; j <= jets.center.m_plus; ++j) sum += u1_scalar_from_jets(jets, j);
        for (int j = 1; j <= jets.center.m_minus; ++j) sum += u1_scalar_from_jets(jets, -j);
        worst_sum = std::max(worst_sum, std::fabs(sum));
      }
    } catch (const Error& e) {
      ok = false;
      note = e.what();
      worst_trace = 1e300;
      worst_sum = 1e300;
    }
    add_entry("trace_identity", ok && worst_trace <= tol("trace_identity", 1e-8), worst_trace,
              tol("trace_identity", 1e-8), note);
    add_entry("curvature_sum_rule", ok && worst_sum <= tol("curvature_sum_rule", 1e-8), worst_sum,
              tol("curvature_sum_rule", 1e-8), note);
  }

  {
    const SphereRule base = default_sphere_rule(3, 16, 32);
    std::string note;
    double worst = 0;
    bool ok = true;
    try {
      TrigPoly r_poly(2, 2, spec.op.torus);
      Mat up(2, 2), dn(2, 2);
      up(0, 0) = 1.0;
      dn(1, 1) = 1.0;
      r_poly.add(Key3{0, 0, 1}, up);
      r_poly.add(Key3{0, 0, -1}, dn);
      auto r_copy = r_poly;
      UnitaryMap rm;
      rm.eval = [r_copy](const VecN& x) { return r_copy.eval(x); };
      std::array<TrigPoly, 3> dr;
      for (int a = 0; a < 3; ++a) dr[static_cast<std::size_t>(a)] = r_poly.derivative(a);
      rm.dx = [dr](int a, const VecN& x) { return dr[static_cast<std::size_t>(a)].eval(x); };
      const SymbolPair transformed = transform_operator_unitary(sym, rm);
      for (int t = 0; t < 2; ++t) {
        const VecN x{ud(rng), ud(rng), ud(rng)};
        worst = std::max(worst, std::fabs(b_density(transformed, x, base) - b_density(sym, x, base)));
      }
    } catch (const Error& e) {
      ok = false;
      note = e.what();
      worst = 1e300;
    }
    add_entry("unitary_invariance_b", ok && worst <= tol("unitary_invariance_b", 1e-6), worst,
              tol("unitary_invariance_b", 1e-6), note);
  }

  {
    json e;
    e["name"] = "theorem_massless_dirac";
    bool ok = true;
    double resid = 0;
    try {
      const DiracDecision dec = is_massless_dirac(spec.op, 8);
      e["is_massless_dirac"] = dec.is_dirac;
      e["max_off_identity"] = dec.max_offdiag;
      e["max_relative_b"] = dec.max_b;
      if (dec.is_dirac) resid = dec.reconstruction_residual;
    } catch (const AssumptionViolated& ex) {
      ok = false;
      e["note"] = ex.what();
      resid = 1e300;
    }
    e["pass"] = ok;
    e["max_residual"] = resid;
    e["tolerance"] = tol("reconstruction", 1e-10);
    entries.push_back(e);
    all_pass = all_pass && ok;
  }

  json report;
  report["entries"] = entries;
  report["all_pass"] = all_pass;
  write_json(fs::path(cfg.out_dir) / "report.json", report);
  return all_pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// example-k3

int run_example_k3(const RunConfig& cfg) {
  json summary;
  bool pass = true;

  const OperatorSpec odd = build_dirac(k3_frame(1), true);
  const OperatorSpec even = build_dirac(k3_frame(0), true);
  const SpectralData odd_data = lattice_oracle(odd, 10.6, cfg.workers);
  const SpectralData even_data = lattice_oracle(even, 10.6, cfg.workers);
  write_eigenvalues_csv(fs::path(cfg.out_dir) / "eigenvalues_k3_1.csv", odd_data);
  write_eigenvalues_csv(fs::path(cfg.out_dir) / "eigenvalues_k3_0.csv", even_data);

  double odd_half = 1e300;
  for (double l : odd_data.lambdas) odd_half = std::min(odd_half, std::fabs(l - 0.5));
  summary["odd_distance_to_half"] = odd_half;
  pass = pass && odd_half <= 1e-14;

  const SpectralData galerkin = hermitian_eigensolve(assemble_galerkin(odd, 16), cfg.workers);
  double gal_half = 1e300;
  for (double l : galerkin.lambdas) gal_half = std::min(gal_half, std::fabs(l - 0.5));
  summary["galerkin_distance_to_half"] = gal_half;
  pass = pass && gal_half <= 1e-8;

  double min_sq = 1e300, half_dist = 1e300;
  for (double h = 0.5; h < 10.0; h += 1.0)
    for (double l : even_data.lambdas) {
      min_sq = std::min(min_sq, std::fabs(l * l - h * h));
      if (h == 0.5) half_dist = std::min(half_dist, std::fabs(l - h));
    }
  summary["even_min_squared_gap_to_half_integers"] = min_sq;
  summary["even_distance_to_one_half"] = half_dist;
  pass = pass && min_sq >= 0.25 - 1e-12 && half_dist >= 0.49;

  summary["pass"] = pass;
  write_json(fs::path(cfg.out_dir) / "example_summary.json", summary);
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weyl-law toolkit for first order systems on the flat 3-torus"};
  app.require_subcommand(1);

  RunConfig cfg;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--input", cfg.input_path, "operator description (JSON)");
    sub->add_option("--preset", cfg.preset, "built-in operator, e.g. k3=1");
    sub->add_option("--out", cfg.out_dir, "output directory");
    sub->add_option("-K,--truncation", cfg.truncation_k, "Galerkin truncation");
    sub->add_option("--lambda-max", cfg.lambda_max, "spectral range for oracle runs");
    sub->add_option("--mollifier-T", cfg.mollifier_support, "mollifier support");
    sub->add_option("--workers", cfg.workers, "worker threads");
    sub->add_option("--grid", cfg.grid, "torus grid per axis for density tables");
  };

  CLI::App* analyze = app.add_subcommand("analyze", "geometry, densities and global coefficients");
  add_common(analyze);
  CLI::App* spectrum = app.add_subcommand("spectrum", "eigenvalues, counting functions and two-term fits");
  add_common(spectrum);
  spectrum->add_flag("--oracle", cfg.force_oracle, "require the exact separation oracle");
  spectrum->add_flag("--galerkin", cfg.force_galerkin, "require the Fourier-Galerkin path");
  spectrum->add_flag("--asymmetry", cfg.with_asymmetry, "also tabulate the sign-flipped counting");
  CLI::App* verify = app.add_subcommand("verify", "identity suite with machine-readable report");
  add_common(verify);
  CLI::App* example = app.add_subcommand("example-k3", "spin-structure example: k3 = 1 versus k3 = 0");
  add_common(example);

  CLI11_PARSE(app, argc, argv);

  try {
    fs::create_directories(cfg.out_dir);
    if (example->parsed()) return run_example_k3(cfg);
    const ProblemSpec spec = load_problem(cfg);
    if (analyze->parsed()) return run_analyze(cfg, spec);
    if (spectrum->parsed()) return run_spectrum(cfg, spec);
    if (verify->parsed()) return run_verify(cfg, spec);
  } catch (const SchemaError& e) {
    std::fprintf(stderr, "input error at %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
