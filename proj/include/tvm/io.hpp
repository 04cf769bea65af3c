#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "bethe.hpp"
#include "chain.hpp"
#include "continuum.hpp"
#include "match.hpp"
#include "toda.hpp"

namespace tvm {

using json = nlohmann::json;

inline json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }
inline cplx json_cplx(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

inline json cplx_list(const std::vector<cplx>& v) {
  json a = json::array();
  for (auto z : v) a.push_back(cplx_json(z));
  return a;
}

inline json to_json(const BetheState& st) {
  json j;
  j["N"] = st.spec.N;
  j["gamma"] = st.spec.gamma;
  j["L"] = st.L;
  j["regime"] = to_string(st.regime);
  j["m"] = st.m;
  json roots = json::array();
  for (auto& lv : st.roots) roots.push_back(cplx_list(lv));
  j["roots"] = roots;
  j["branch_integers"] = st.branch;
  j["stagger"] = st.stagger;
  return j;
}

inline BetheState bethe_state_from_json(const json& j) {
  BetheState st;
  st.spec = ModelSpec(j.at("N").get<int>(), j.at("gamma").get<double>());
  st.L = j.at("L").get<int>();
  st.regime = regime_from_string(j.at("regime").get<std::string>());
  st.m = j.at("m").get<std::vector<int>>();
  for (auto& lv : j.at("roots")) {
    std::vector<cplx> v;
    for (auto& z : lv) v.push_back(json_cplx(z));
    st.roots.push_back(v);
  }
  if (j.contains("branch_integers")) st.branch = j.at("branch_integers").get<std::vector<std::vector<long long>>>();
  st.stagger = j.value("stagger", 0.0);
  if ((int)st.roots.size() != st.spec.n) throw Error(ErrorKind::invalid_argument, "root levels do not match N");
  for (int k = 0; k < st.spec.n; ++k)
    if ((int)st.roots[k].size() != st.m[k]) throw Error(ErrorKind::invalid_argument, "root count does not match m");
  return st;
}

inline json to_json(const SpectrumRecord& r) {
  return {{"N", r.N}, {"gamma", r.gamma}, {"L", r.L}, {"tag", r.tag}, {"x", cplx_json(r.x)},
          {"sign", r.sign}, {"sector", r.sector}, {"eigenvalues", cplx_list(r.eigenvalues)}};
}

inline json to_json(const StringReport& s) {
  return {{"strings", s.strings}, {"real", s.real}, {"shifted", s.shifted}, {"quarter", s.quarter},
          {"other", s.other}, {"strings_per_level", s.strings_per_level}, {"max_deviation", s.max_deviation},
          {"median_deviation", s.median_deviation}, {"central_deviation", s.central_deviation}};
}

inline json to_json(const Calibration& c) {
  json e = json::array();
  for (auto& m : c.entries)
    e.push_back({{"sector", m.sector}, {"raw", m.raw}, {"bethe", m.bethe}, {"exact", cplx_json(m.exact)}, {"distance", m.distance}});
  return {{"scale", c.scale}, {"shift", c.shift}, {"residual", c.residual}, {"fitted_scale", c.fitted_scale},
          {"fitted_shift", c.fitted_shift}, {"entries", e}};
}

inline json to_json(const FitResult& f) {
  return {{"c_estimate", f.c_estimate}, {"e_infinity", f.e_infinity}, {"v_F", f.v_F}, {"residual", f.residual},
          {"L", f.Ls}, {"c_effective", f.c_effective}, {"L_mid", f.L_mid}, {"quartic", f.quartic},
          {"extrapolated", f.extrapolated}};
}

inline json matrix_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    a.push_back(row);
  }
  return a;
}

inline json to_json(const CartanData& c) {
  return {{"series", to_string(c.series)}, {"n", c.n}, {"roots", matrix_json(c.roots)}, {"gram", matrix_json(c.gram)},
          {"weight_generators", matrix_json(c.weight_generators)}};
}

inline json to_json(const BosonContent& b) {
  return {{"compact", b.compact}, {"noncompact", b.noncompact}, {"majorana", b.majorana}, {"c", b.central_charge()}};
}

inline json nan_safe(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const TodaCosetData& d) {
  return {{"N", d.spec.N}, {"gamma", d.spec.gamma}, {"regime", to_string(d.regime)}, {"H", d.H},
          {"mass_ratios", d.mass_ratios}, {"staggering_exponent", nan_safe(d.staggering_exponent)},
          {"coupling_exponent", nan_safe(d.coupling_exponent)}, {"beta_sq_over_8pi", nan_safe(d.beta_sq_over_8pi)},
          {"bosons", to_json(d.bosons)}};
}

// 17 significant digits for CSV cells
inline std::string fmt17(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::invalid_argument, "cannot open " + path + " for writing");
  f << text;
}

}  // namespace tvm
