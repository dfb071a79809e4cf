#pragma once

#include <json.hpp>
#include <map>
#include <string>

#include "weyl/dirac.hpp"
#include "weyl/frame.hpp"
#include "weyl/operator_spec.hpp"

namespace weyl {

using json = nlohmann::json;

// Declarative operator description.  The frame is given either as the k3
// preset or as harmonics of the frame vector fields,
//   V_j^alpha += re cos<wave, x> + im sin<wave, x>;
// the operator is the half-density massless Dirac operator of that frame
// plus the potential.  Potential entries add z e^{i<wave,x>} E_{row,col}
// and the Hermitian mirror (skew entries subtract the mirror instead, which
// deliberately breaks self-adjointness for verification tests).
struct ProblemSpec {
  Torus3 torus;
  FrameBundle bundle;
  OperatorSpec op;
  int truncation_k = 8;
  int quad_polar = 32;
  int quad_azimuth = 64;
  double mollifier_support = 6.0;
  std::map<std::string, double> tolerances;
};

namespace detail {

inline const json& require_field(const json& j, const std::string& key, const std::string& pointer) {
  if (!j.contains(key)) throw SchemaError(pointer + "/" + key, "missing field");
  return j.at(key);
}

inline double number_at(const json& j, const std::string& pointer) {
  if (!j.is_number()) throw SchemaError(pointer, "expected a number");
  return j.get<double>();
}

inline int int_at(const json& j, const std::string& pointer) {
  if (!j.is_number_integer()) throw SchemaError(pointer, "expected an integer");
  return j.get<int>();
}

inline Key3 wave_at(const json& j, const std::string& pointer) {
  if (!j.is_array() || j.size() != 3) throw SchemaError(pointer, "expected a 3-component integer wavevector");
  Key3 k{};
  for (int a = 0; a < 3; ++a) k[static_cast<std::size_t>(a)] = int_at(j.at(static_cast<std::size_t>(a)), pointer);
  return k;
}

}  // namespace detail

inline ProblemSpec parse_problem(const json& root) {
  ProblemSpec spec;

  if (root.contains("manifold")) {
    const json& man = root.at("manifold");
    const std::string type = detail::require_field(man, "type", "/manifold").get<std::string>();
    if (type != "torus3") throw SchemaError("/manifold/type", "only torus3 is supported");
    if (man.contains("periods")) {
      const json& p = man.at("periods");
      if (!p.is_array() || p.size() != 3) throw SchemaError("/manifold/periods", "expected three periods");
      for (int a = 0; a < 3; ++a) {
        const double v = detail::number_at(p.at(static_cast<std::size_t>(a)), "/manifold/periods");
        if (!(v > 0)) throw SchemaError("/manifold/periods", "periods must be positive");
        spec.torus.periods[static_cast<std::size_t>(a)] = v;
      }
    }
  }

  const json& frame = detail::require_field(root, "frame", "");
  TrigPoly v(3, 3, spec.torus);
  if (frame.contains("preset")) {
    const std::string preset = frame.at("preset").get<std::string>();
    if (preset != "k3") throw SchemaError("/frame/preset", "unknown preset");
    const int k3 = detail::int_at(detail::require_field(frame, "k3", "/frame"), "/frame/k3");
    v = k3_frame(k3, spec.torus).V;
  } else if (frame.contains("harmonics")) {
    const json& entries = frame.at("harmonics");
    if (!entries.is_array() || entries.empty()) throw SchemaError("/frame/harmonics", "expected a nonempty array");
    for (std::size_t idx = 0; idx < entries.size(); ++idx) {
      const std::string pointer = "/frame/harmonics/" + std::to_string(idx);
      const json& e = entries.at(idx);
      const int j = detail::int_at(detail::require_field(e, "j", pointer), pointer + "/j");
      const int alpha = detail::int_at(detail::require_field(e, "alpha", pointer), pointer + "/alpha");
      if (j < 1 || j > 3) throw SchemaError(pointer + "/j", "frame index must be 1..3");
      if (alpha < 1 || alpha > 3) throw SchemaError(pointer + "/alpha", "tensor index must be 1..3");
      const Key3 wave = detail::wave_at(detail::require_field(e, "wave", pointer), pointer + "/wave");
      const double re = e.contains("re") ? detail::number_at(e.at("re"), pointer + "/re") : 0.0;
      const double im = e.contains("im") ? detail::number_at(e.at("im"), pointer + "/im") : 0.0;
      // re cos + im sin, split into the +-wave coefficients
      Mat plus(3, 3), minus(3, 3);
      plus(j - 1, alpha - 1) = 0.5 * cplx{re, -im};
      minus(j - 1, alpha - 1) = 0.5 * cplx{re, im};
      if (wave == Key3{0, 0, 0}) {
        Mat c(3, 3);
        c(j - 1, alpha - 1) = re;
        v.add(wave, c);
      } else {
        v.add(wave, plus);
        v.add(-wave, minus);
      }
    }
  } else {
    throw SchemaError("/frame", "expected either a preset or harmonics");
  }

  try {
    spec.bundle = FrameBundle::from_frame(v);
  } catch (const Error& err) {
    throw SchemaError("/frame", err.what());
  }
  const bool half_density = root.contains("half_density") ? root.at("half_density").get<bool>() : true;
  spec.op = build_dirac(spec.bundle, half_density);

  if (root.contains("potential")) {
    const json& pot = root.at("potential");
    const json& entries = detail::require_field(pot, "harmonics", "/potential");
    if (!entries.is_array()) throw SchemaError("/potential/harmonics", "expected an array");
    for (std::size_t idx = 0; idx < entries.size(); ++idx) {
      const std::string pointer = "/potential/harmonics/" + std::to_string(idx);
      const json& e = entries.at(idx);
      const int row = detail::int_at(detail::require_field(e, "row", pointer), pointer + "/row");
      const int col = detail::int_at(detail::require_field(e, "col", pointer), pointer + "/col");
      if (row < 1 || row > 2 || col < 1 || col > 2) throw SchemaError(pointer, "row/col must be 1..2");
      const Key3 wave = detail::wave_at(detail::require_field(e, "wave", pointer), pointer + "/wave");
      const double re = e.contains("re") ? detail::number_at(e.at("re"), pointer + "/re") : 0.0;
      const double im = e.contains("im") ? detail::number_at(e.at("im"), pointer + "/im") : 0.0;
      const bool skew = e.contains("skew") && e.at("skew").get<bool>();
      const cplx z{re, im};
      if (!skew && row == col && wave == Key3{0, 0, 0}) {
        if (im != 0.0) throw SchemaError(pointer + "/im", "diagonal constant entries must be real");
        Mat c(2, 2);
        c(row - 1, col - 1) = re;
        spec.op.zero.add(wave, c);
      } else {
        Mat direct(2, 2), mirror(2, 2);
        direct(row - 1, col - 1) = z;
        mirror(col - 1, row - 1) = skew ? -std::conj(z) : std::conj(z);
        spec.op.zero.add(wave, direct);
        spec.op.zero.add(-wave, mirror);
      }
    }
    spec.op.zero.prune();
  }

  if (root.contains("truncation"))
    spec.truncation_k = detail::int_at(detail::require_field(root.at("truncation"), "K", "/truncation"), "/truncation/K");
  if (spec.truncation_k < 1) throw SchemaError("/truncation/K", "K must be at least 1");
  if (root.contains("quadrature")) {
    const json& q = root.at("quadrature");
    if (q.contains("polar")) spec.quad_polar = detail::int_at(q.at("polar"), "/quadrature/polar");
    if (q.contains("azimuthal")) spec.quad_azimuth = detail::int_at(q.at("azimuthal"), "/quadrature/azimuthal");
  }
  if (root.contains("mollifier")) {
    spec.mollifier_support =
        detail::number_at(detail::require_field(root.at("mollifier"), "T", "/mollifier"), "/mollifier/T");
    if (!(spec.mollifier_support > 0)) throw SchemaError("/mollifier/T", "support must be positive");
  }
  if (root.contains("tolerances")) {
    for (const auto& [key, value] : root.at("tolerances").items())
      spec.tolerances[key] = detail::number_at(value, "/tolerances/" + key);
  }
  return spec;
}

// Raw coefficient serialization of an operator (wavevector -> matrix).
inline json operator_to_json(const OperatorSpec& op) {
  json out;
  out["m"] = op.m;
  out["half_density"] = op.half_density;
  out["periods"] = {op.torus.periods[0], op.torus.periods[1], op.torus.periods[2]};
  auto poly_to_json = [](const TrigPoly& f) {
    json arr = json::array();
    for (const auto& [k, mval] : f.coeffs()) {
      json entry;
      entry["wave"] = {k[0], k[1], k[2]};
      json rows = json::array();
      for (int i = 0; i < f.rows(); ++i) {
        json rowv = json::array();
        for (int j = 0; j < f.cols(); ++j) rowv.push_back({mval(i, j).real(), mval(i, j).imag()});
        rows.push_back(rowv);
      }
      entry["matrix"] = rows;
      arr.push_back(entry);
    }
    return arr;
  };
  out["derivative_coefficients"] = json::array();
  for (int a = 0; a < 3; ++a) out["derivative_coefficients"].push_back(poly_to_json(op.coeff[static_cast<std::size_t>(a)]));
  out["zero_order"] = poly_to_json(op.zero);
  return out;
}

}  // namespace weyl
