// tvm: command-line driver for the twisted vertex model library
#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "tvm/tvm.hpp"

using namespace tvm;

namespace {

struct JobConfig {
  std::string subcommand;
  int N = 3;
  double gamma = 0.5;
  std::string gamma_pi;  // "p/q" if given
  std::string regime;    // empty: classified from gamma and --sign
  int sign = -1;
  std::vector<int> L = {4};
  std::vector<int> sector;
  double tol = 0;  // 0: per-command default
  std::string output;
  std::string format = "json";
  unsigned seed = 12345;
  int threads = 1;
  // per command
  int samples = 5;
  int k = 6;
  std::string point = "hamiltonian";
  double x_re = 0.5, x_im = 0.0;
  int holes = 0;
  std::vector<int> dm;
  std::string input;
  double to_gamma = NAN;
  std::string method = "bethe";
  bool extrapolate = false, quartic = false;
  double omega_max = 20;
  int points = 81;
  std::string kind = "bare";
  std::string grid = "2..8";
  bool duality_grid = false;
  int gamma_points = 24;
};

json config_json(const JobConfig& c) {
  json j = {{"subcommand", c.subcommand}, {"N", c.N},         {"gamma", c.gamma},     {"sign", c.sign},
            {"L", c.L},                   {"format", c.format}, {"seed", c.seed},       {"threads", c.threads}};
  if (!c.gamma_pi.empty()) j["gamma_pi"] = c.gamma_pi;
  if (!c.regime.empty()) j["regime"] = c.regime;
  if (!c.sector.empty()) j["sector"] = c.sector;
  if (c.tol > 0) j["tol"] = c.tol;
  if (!c.output.empty()) j["output"] = c.output;
  const std::string& s = c.subcommand;
  if (s == "verify-algebra") j["samples"] = c.samples;
  if (s == "transfer") j.update({{"k", c.k}, {"point", c.point}, {"x", {c.x_re, c.x_im}}});
  if (s == "bethe" || s == "match") {
    j["holes"] = c.holes;
    if (!c.dm.empty()) j["dm"] = c.dm;
    if (!c.input.empty()) j["input"] = c.input;
    if (std::isfinite(c.to_gamma)) j["to_gamma"] = c.to_gamma;
  }
  if (s == "central-charge") j.update({{"method", c.method}, {"extrapolate", c.extrapolate}, {"quartic", c.quartic}});
  if (s == "density") j.update({{"omega_max", c.omega_max}, {"points", c.points}, {"kind", c.kind}});
  if (s == "coset") j.update({{"grid", c.grid}, {"duality_grid", c.duality_grid}});
  if (s == "regimes") j["gamma_points"] = c.gamma_points;
  return j;
}

bool given(const CLI::App& sub, const char* flag) {
  auto* o = sub.get_option_no_throw(flag);
  return o && o->count() > 0;
}

// keys of a JSON config file fill every option not given on the command line
void apply_config_file(JobConfig& c, const std::string& path, const CLI::App& sub) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::invalid_argument, "cannot read config " + path);
  json j = json::parse(f);
  auto take = [&](const char* key, const char* flag, auto& field) {
    if (j.contains(key) && !given(sub, flag)) j.at(key).get_to(field);
  };
  take("N", "--N", c.N);
  take("gamma", "--gamma", c.gamma);
  take("gamma_pi", "--gamma-pi", c.gamma_pi);
  take("regime", "--regime", c.regime);
  take("sign", "--sign", c.sign);
  take("L", "--L", c.L);
  take("sector", "--sector", c.sector);
  take("tol", "--tol", c.tol);
  take("output", "--output", c.output);
  take("format", "--format", c.format);
  take("seed", "--seed", c.seed);
  take("threads", "--threads", c.threads);
  take("samples", "--samples", c.samples);
  take("k", "--k", c.k);
  take("point", "--point", c.point);
  take("holes", "--holes", c.holes);
  take("dm", "--dm", c.dm);
  take("input", "--input", c.input);
  take("to_gamma", "--to-gamma", c.to_gamma);
  take("method", "--method", c.method);
  take("extrapolate", "--extrapolate", c.extrapolate);
  take("quartic", "--quartic", c.quartic);
  take("omega_max", "--omega-max", c.omega_max);
  take("points", "--points", c.points);
  take("kind", "--kind", c.kind);
  take("grid", "--duality-grid", c.grid);
  take("gamma_points", "--gamma-points", c.gamma_points);
  if (j.contains("x") && !given(sub, "--x")) {
    c.x_re = j["x"].at(0).get<double>();
    c.x_im = j["x"].at(1).get<double>();
  }
}

double parse_gamma_pi(const std::string& s) {
  auto slash = s.find('/');
  try {
    double p = std::stod(s.substr(0, slash));
    double q = slash == std::string::npos ? 1.0 : std::stod(s.substr(slash + 1));
    if (q == 0) throw Error(ErrorKind::invalid_argument, "zero denominator in --gamma-pi");
    return pi * p / q;
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::invalid_argument, "cannot parse --gamma-pi '" + s + "', expected p/q");
  }
}

std::pair<int, int> parse_range(const std::string& s) {
  auto dots = s.find("..");
  if (dots == std::string::npos) throw Error(ErrorKind::invalid_argument, "range must read a..b, got '" + s + "'");
  int a = std::stoi(s.substr(0, dots)), b = std::stoi(s.substr(dots + 2));
  if (a > b) throw Error(ErrorKind::invalid_argument, "empty range " + s);
  return {a, b};
}

struct Resolved {
  ModelSpec spec;
  Regime regime = Regime::I;
  RegimeSpec rs;
};

// validation against the regime window happens here, before any work
Resolved resolve(const JobConfig& c, bool need_window = true) {
  Resolved r;
  r.spec = ModelSpec(c.N, c.gamma);
  if (c.regime.empty()) {
    r.rs = classify_regime(r.spec, c.gamma, c.sign);
    r.regime = r.rs.label;
  } else {
    r.regime = regime_from_string(c.regime);
    r.rs = regime_spec(r.spec, r.regime);
    if (need_window && !in_window(r.rs, c.gamma))
      throw Error(ErrorKind::boundary, "gamma=" + fmt17(c.gamma) + " outside the regime " + c.regime + " window");
  }
  return r;
}

// runs f(i) for i < n on up to `threads` workers; results land in their own slots
template <class T, class F>
std::vector<T> parallel_map(int n, int threads, F f) {
  std::vector<T> out(n);
  std::vector<std::exception_ptr> err(n);
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i; (i = next++) < n;) {
      try {
        out[i] = f(i);
      } catch (...) {
        err[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::min(threads, n); ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : err)
    if (e) std::rethrow_exception(e);
  return out;
}

struct Report {
  json result;
  bool pass = true;
  // CSV rendering, header row first; empty when the command has no table form
  std::vector<std::vector<std::string>> table;
};

std::string cell(double v) { return fmt17(v); }
std::string cell(int v) { return std::to_string(v); }
std::string cell(const std::string& v) { return v; }

// ---------------------------------------------------------------------------------------------

Report verify_algebra(const JobConfig& c) {
  ModelSpec s(c.N, c.gamma);
  const double tol_bmw = c.tol > 0 ? c.tol : 1e-12, tol_ybe = c.tol > 0 ? c.tol : 1e-10;
  std::mt19937 gen(c.seed);
  std::uniform_real_distribution<double> u(0.2, 1.8);
  Report rep;
  auto bmw = check_bmw(s);
  auto proj = check_projectors(s);
  json samples = json::array();
  double y1 = 0, y2 = 0, dual = 0;
  rep.table.push_back({"x_re", "x_im", "y_re", "y_im", "ybe_so", "ybe_twisted", "dual"});
  for (int t = 0; t < c.samples; ++t) {
    double xr = u(gen), xi = u(gen) - 1, yr = u(gen), yi = u(gen) - 1;
    cplx x(xr, xi), y(yr, yi);
    double a = check_ybe(build_r1, s, x, y).residual, b = check_ybe(build_r2, s, x, y).residual, d = r2_dual_mismatch(s, x);
    y1 = std::max(y1, a), y2 = std::max(y2, b), dual = std::max(dual, d);
    samples.push_back({{"x", cplx_json(x)}, {"y", cplx_json(y)}, {"ybe_so", a}, {"ybe_twisted", b}, {"dual", d}});
    rep.table.push_back({cell(x.real()), cell(x.imag()), cell(y.real()), cell(y.imag()), cell(a), cell(b), cell(d)});
  }
  rep.result = {{"bmw", bmw.residuals},     {"bmw_max", bmw.max()},         {"projectors", proj.max()},
                {"ybe_so_max", y1},         {"ybe_twisted_max", y2},        {"dual_max", dual},
                {"samples", samples},       {"tolerances", {{"bmw", tol_bmw}, {"ybe", tol_ybe}, {"dual", tol_ybe}}}};
  rep.pass = bmw.max() < tol_bmw && y1 < tol_ybe && y2 < tol_ybe && dual < tol_ybe;
  return rep;
}

Report transfer_cmd(const JobConfig& c) {
  ModelSpec s(c.N, c.gamma);
  std::optional<Sector> sec;
  if (!c.sector.empty()) sec = c.sector;
  auto recs = parallel_map<SpectrumRecord>(int(c.L.size()), c.threads, [&](int i) {
    const int L = c.L[i];
    if (c.point == "hamiltonian") {
      auto H = hamiltonian(s, L, c.sign, sec);
      return spectrum(H, std::min<int>(c.k, H.dim()), KrylovOptions{.seed = c.seed});
    }
    cplx x(c.x_re, c.x_im);
    auto iso = isotropic_points(s);
    if (c.point == "x_plus") x = iso.first;
    else if (c.point == "x_minus") x = iso.second;
    else if (c.point != "x") throw Error(ErrorKind::invalid_argument, "--point must be hamiltonian, x, x_plus or x_minus");
    auto T = build_transfer(s, L, x, sec);
    auto r = spectrum(T, std::min<int>(c.k, T.dim()), KrylovOptions{.seed = c.seed});
    r.tag = c.point;
    return r;
  });
  Report rep;
  rep.result = json::array();
  rep.table.push_back({"L", "index", "re", "im"});
  for (auto& r : recs) {
    rep.result.push_back(to_json(r));
    for (size_t k = 0; k < r.eigenvalues.size(); ++k)
      rep.table.push_back({cell(r.L), cell(int(k)), cell(r.eigenvalues[k].real()), cell(r.eigenvalues[k].imag())});
  }
  return rep;
}

BetheState solve_one(const JobConfig& c, const Resolved& r, int L) {
  if (!c.dm.empty()) return solve(seed_roots_dm(r.spec, r.regime, L, c.dm));
  return solve_pattern(r.spec, r.regime, L, c.holes);
}

Report bethe_cmd(const JobConfig& c) {
  const double tol = c.tol > 0 ? c.tol : 1e-10;
  Report rep;
  std::vector<BetheState> states;
  if (!c.input.empty()) {
    std::ifstream f(c.input);
    if (!f) throw Error(ErrorKind::invalid_argument, "cannot read " + c.input);
    auto st = solve(bethe_state_from_json(json::parse(f)));
    if (std::isfinite(c.to_gamma)) st = continue_in_gamma(st, c.to_gamma);
    states.push_back(st);
  } else {
    auto r = resolve(c);
    if (c.dm.empty() && c.L.size() > 1) {
      states = solve_continued(r.spec, r.regime, c.L, c.holes);
    } else {
      states = parallel_map<BetheState>(int(c.L.size()), c.threads, [&](int i) { return solve_one(c, r, c.L[i]); });
    }
    if (std::isfinite(c.to_gamma))
      for (auto& st : states) st = continue_in_gamma(st, c.to_gamma);
  }
  rep.result = json::array();
  rep.table.push_back({"L", "gamma", "energy", "residual", "strings", "real"});
  for (auto& st : states) {
    const int sign = regime_spec(st.spec, st.regime).lattice_sign;
    double res = max_norm(residual(st));
    auto sr = classify_strings(st);
    json j = to_json(st);
    j["energy"] = bethe_energy(st, sign);
    j["residual"] = res;
    j["strings"] = to_json(sr);
    rep.result.push_back(j);
    rep.table.push_back({cell(st.L), cell(st.spec.gamma), cell(bethe_energy(st, sign)), cell(res), cell(sr.strings), cell(sr.real)});
    rep.pass = rep.pass && res < tol;
  }
  return rep;
}

Report match_cmd(const JobConfig& c) {
  auto r = resolve(c);
  const double tol = c.tol > 0 ? c.tol : 1e-8;
  auto cals = parallel_map<json>(int(c.L.size()), c.threads, [&](int i) {
    const int L = c.L[i];
    std::vector<BetheState> sts;
    if (!c.dm.empty()) sts.push_back(solve_one(c, r, L));
    else
      for (int h = 0; h <= std::max(2, c.holes); ++h) {
        try {
          sts.push_back(solve_pattern(r.spec, r.regime, L, h));
        } catch (const Error&) {
        }
      }
    if (sts.empty()) throw Error(ErrorKind::not_converged, "no Bethe state solved at L=" + std::to_string(L));
    json j = to_json(calibrate_energy(r.spec, L, r.rs.lattice_sign, sts));
    j["L"] = L;
    return j;
  });
  Report rep;
  rep.result = cals;
  rep.table.push_back({"L", "raw", "bethe", "exact_re", "exact_im", "distance"});
  for (auto& j : cals)
    for (auto& e : j["entries"]) {
      rep.table.push_back({cell(j["L"].get<int>()), cell(e["raw"].get<double>()), cell(e["bethe"].get<double>()),
                           cell(e["exact"][0].get<double>()), cell(e["exact"][1].get<double>()),
                           cell(e["distance"].get<double>())});
      rep.pass = rep.pass && e["distance"].get<double>() < tol;
    }
  return rep;
}

Report density_cmd(const JobConfig& c) {
  auto r = resolve(c);
  KernelKind kind = c.kind == "physical" ? KernelKind::physical : KernelKind::bare;
  if (c.kind != "bare" && c.kind != "physical") throw Error(ErrorKind::invalid_argument, "--kind must be bare or physical");
  auto d = kernel_catalog(r.spec, r.regime, kind);
  std::vector<HypExpr> cf;
  try {
    cf = ground_state_closed_form(r.spec, r.regime);
  } catch (const Error& e) {
    if (e.kind != ErrorKind::not_catalogued) throw;
  }
  std::optional<NumericDensity> nd;
  if (kind == KernelKind::bare) nd = solve_bare_numeric(d);
  const double tol = c.tol > 0 ? c.tol : 1e-8;
  Report rep;
  std::vector<std::string> head = {"omega"};
  for (int j = 0; j < d.dim; ++j) {
    head.push_back("rho" + std::to_string(j + 1));
    if (nd) head.push_back("rho" + std::to_string(j + 1) + "_numeric");
    if (!cf.empty() && j < int(cf.size())) head.push_back("rho" + std::to_string(j + 1) + "_closed");
  }
  rep.table.push_back(head);
  json rows = json::array();
  double worst = 0;
  const int P = std::max(2, c.points);
  for (int i = 0; i < P; ++i) {
    double w = c.omega_max * i / (P - 1);
    Eigen::VectorXcd rho = d.ground_state(w);
    std::vector<std::string> row = {cell(w)};
    json jr = {{"omega", w}};
    for (int j = 0; j < d.dim; ++j) {
      row.push_back(cell(rho(j).real()));
      jr["rho"].push_back(rho(j).real());
      if (nd) {
        double v = nd->at(j, w);
        row.push_back(cell(v));
        jr["rho_numeric"].push_back(v);
        worst = std::max(worst, std::abs(v - rho(j).real()));
      }
      if (!cf.empty() && j < int(cf.size())) {
        double v = cf[j](w);
        row.push_back(cell(v));
        jr["rho_closed"].push_back(v);
        worst = std::max(worst, std::abs(v - rho(j).real()));
      }
    }
    rep.table.push_back(row);
    rows.push_back(jr);
  }
  rep.result = {{"kernel", d.name}, {"kind", to_string(kind)}, {"dim", d.dim}, {"samples", rows},
                {"max_deviation", worst}, {"tolerance", tol}};
  if (kind == KernelKind::bare) rep.result["k_zero"] = matrix_json(k_zero(r.spec, r.regime));
  if (nd) rep.result["nystrom_residual"] = nd->residual;
  rep.pass = worst < tol;
  return rep;
}

Report central_charge_cmd(const JobConfig& c) {
  auto r = resolve(c);
  std::vector<SizeRecord> rec;
  if (c.method == "bethe") {
    for (auto& st : solve_continued(r.spec, r.regime, c.L, 0)) rec.push_back({st.L, bethe_energy(st, r.rs.lattice_sign)});
  } else if (c.method == "ed") {
    std::optional<Sector> sec;
    if (!c.sector.empty()) sec = c.sector;
    else sec = Sector(r.spec.n, 0);
    rec = parallel_map<SizeRecord>(int(c.L.size()), c.threads, [&](int i) {
      auto H = hamiltonian(r.spec, c.L[i], r.rs.lattice_sign, sec);
      return SizeRecord{c.L[i], spectrum(H, 1, KrylovOptions{.seed = c.seed}).eigenvalues[0].real()};
    });
  } else {
    throw Error(ErrorKind::invalid_argument, "--method must be bethe or ed");
  }
  double vF = fermi_velocity(r.spec, r.regime);
  auto fit = central_charge_fit(rec, vF, {.quartic = c.quartic, .extrapolate = c.extrapolate});
  Report rep;
  rep.result = to_json(fit);
  rep.result["method"] = c.method;
  rep.result["regime"] = to_string(r.regime);
  rep.result["expected_c"] = regime_central_charge(r.spec, r.regime);
  json e = json::array();
  rep.table.push_back({"L", "e_per_site", "c_effective"});
  for (size_t i = 0; i < rec.size(); ++i) {
    e.push_back({{"L", rec[i].L}, {"energy", rec[i].energy}});
    rep.table.push_back({cell(rec[i].L), cell(rec[i].energy / rec[i].L), i ? cell(fit.c_effective[i - 1]) : ""});
  }
  rep.result["energies"] = e;
  rep.pass = std::isfinite(fit.c_estimate);
  return rep;
}

Report toda_cmd(const JobConfig& c) {
  ModelSpec s(c.N, c.gamma);
  Report rep;
  rep.result = json::array();
  rep.table.push_back({"regime", "in_window", "H", "mass_ratios", "staggering_exponent", "coupling_exponent", "beta_sq_over_8pi", "c"});
  std::vector<Regime> regs;
  if (c.regime.empty()) regs = {Regime::I, Regime::II, Regime::III};
  else regs = {regime_from_string(c.regime)};
  for (Regime g : regs) {
    bool inside = in_window(regime_spec(s, g), c.gamma);
    if (!inside && !c.regime.empty()) throw Error(ErrorKind::boundary, "gamma outside the regime " + c.regime + " window");
    if (!inside) continue;
    auto d = toda_data(s, g);
    json j = to_json(d);
    if (g == Regime::I && s.N == 4) j["a3_mass_ratio_gk"] = a3_mass_ratio_gk(c.gamma);
    if (g == Regime::II && s.N == 3 && c.gamma > pi / 2) {
      auto b = breather_mass_ratio_a2_II(c.gamma);
      j["breather"] = {{"T", b.T}, {"ratio", b.ratio}, {"alternative", b.alternative}, {"degenerate", b.degenerate}};
    }
    rep.result.push_back(j);
    std::string masses;
    for (double m : d.mass_ratios) masses += (masses.empty() ? "" : ";") + fmt17(m);
    rep.table.push_back({to_string(g), "1", cell(d.H), masses, cell(d.staggering_exponent), cell(d.coupling_exponent),
                         cell(d.beta_sq_over_8pi), cell(d.bosons.central_charge())});
  }
  return rep;
}

Report coset_cmd(const JobConfig& c) {
  auto [a, b] = parse_range(c.grid);
  const double tol = c.tol > 0 ? c.tol : 1e-12;
  Report rep;
  json rows = json::array();
  rep.table.push_back({"N", "Nt", "coset_c", "gko_c", "difference", "gamma", "delta", "hole_weight_nh2"});
  double worst = 0;
  for (int N = a; N <= b; ++N)
    for (int Nt = a; Nt <= b; ++Nt) {
      if (N + Nt < 4 || N < 2) continue;
      double cc = coset_c(N, Nt), gk = gko_c(Nt, N - 1), diff = std::abs(cc - gk);
      worst = std::max(worst, diff);
      auto p = perturbation_weight(N, Nt);
      json row = {{"N", N}, {"Nt", Nt}, {"coset_c", cc}, {"gko_c", gk}, {"difference", diff}, {"gamma", p.gamma}, {"delta", p.delta}};
      std::string hw;
      if (N >= 3 && Nt >= 3) {
        double h = hole_weights_scalar(ModelSpec(N, p.gamma), Regime::III, 2);
        row["hole_weight_nh2"] = h;
        row["untwisted_sum"] = p.untwisted_sum;
        hw = fmt17(h);
      }
      rows.push_back(row);
      rep.table.push_back({cell(N), cell(Nt), cell(cc), cell(gk), cell(diff), cell(p.gamma), cell(p.delta), hw});
    }
  json cas = json::array();
  for (int n = 1; n <= 4; ++n) {
    std::vector<int> lam(n, 0);
    lam[0] = 2;
    for (char sr : {'b', 'd'}) {
      if (sr == 'd' && n < 2) continue;
      auto k = casimir(sr, n, lam);
      cas.push_back({{"series", std::string(1, sr)}, {"n", n}, {"N", k.N}, {"value", k.value}, {"normalized", k.normalized}});
    }
  }
  rep.result = {{"grid", rows}, {"max_difference", worst}, {"tolerance", tol}, {"casimir_2e1", cas}};
  rep.pass = worst < tol;
  return rep;
}

Report regimes_cmd(const JobConfig& c) {
  ModelSpec s0(c.N, 0.1);
  Report rep;
  rep.result = json::array();
  rep.table.push_back({"gamma", "sign_N", "regime", "lo", "hi", "central_charge"});
  const int P = std::max(2, c.gamma_points);
  for (int i = 1; i < P; ++i) {
    double g = pi * i / P;
    for (int sg : {-1, 1}) {
      ModelSpec s(c.N, g);
      json j = {{"gamma", g}, {"sign_N", sg}};
      std::vector<std::string> row = {cell(g), cell(sg)};
      try {
        auto rs = classify_regime(s, g, sg);
        j.update({{"regime", to_string(rs.label)}, {"lo", rs.lo}, {"hi", rs.hi}, {"c", regime_central_charge(s, rs.label)}});
        row.insert(row.end(), {to_string(rs.label), cell(rs.lo), cell(rs.hi), cell(regime_central_charge(s, rs.label))});
      } catch (const Error& e) {
        j["error"] = to_string(e.kind);
        row.insert(row.end(), {to_string(e.kind), "", "", ""});
      }
      rep.result.push_back(j);
      rep.table.push_back(row);
    }
  }
  return rep;
}

std::string render(const JobConfig& c, const Report& rep) {
  json cfg = config_json(c);
  if (c.format == "csv") {
    if (rep.table.empty()) throw Error(ErrorKind::invalid_argument, "no CSV form for " + c.subcommand);
    std::ostringstream os;
    os << "# tvm " << version << "\n# config " << cfg.dump() << "\n# pass " << (rep.pass ? "true" : "false") << "\n";
    for (auto& row : rep.table) {
      for (size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
      os << "\n";
    }
    return os.str();
  }
  json out = {{"tool", "tvm"}, {"version", version}, {"config", cfg}, {"pass", rep.pass}, {"result", rep.result}};
  return out.dump(2) + "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"twisted so(N) vertex models: algebra, spectra, Bethe ansatz, continuum limits"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("tvm ") + version);
  JobConfig c;
  std::string config_path;
  std::vector<double> x_parts;

  auto common = [&](CLI::App* s) {
    s->add_option("--N", c.N, "vector dimension N >= 3");
    auto* g = s->add_option("--gamma", c.gamma, "anisotropy gamma (decimal)");
    s->add_option("--gamma-pi", c.gamma_pi, "gamma as a rational multiple of pi, p/q")->excludes(g);
    s->add_option("--regime", c.regime, "I, II or III (default: classified from gamma and --sign)");
    s->add_option("--sign", c.sign, "sign of the energy normalisation, +1 or -1");
    s->add_option("--L", c.L, "comma-separated system sizes")->delimiter(',');
    s->add_option("--sector", c.sector, "comma-separated Cartan charges")->delimiter(',');
    s->add_option("--tol", c.tol, "override the command tolerance");
    s->add_option("--output", c.output, "write the artifact here instead of stdout");
    s->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    s->add_option("--seed", c.seed, "seed for random samples and Krylov start vectors");
    s->add_option("--threads", c.threads, "worker threads over the L grid")->check(CLI::PositiveNumber);
    s->add_option("--config", config_path, "JSON file with the same keys as the flags");
  };

  auto* va = app.add_subcommand("verify-algebra", "BMW relations, Yang-Baxter residuals and the dual construction");
  common(va);
  va->add_option("--samples", c.samples, "random (x, y) pairs");
  auto* tr = app.add_subcommand("transfer", "spectra of H or T(x) in a charge sector");
  common(tr);
  tr->add_option("--k", c.k, "number of eigenvalues");
  tr->add_option("--point", c.point, "hamiltonian, x, x_plus or x_minus");
  tr->add_option("--x", x_parts, "spectral parameter re im")->expected(2);
  auto* be = app.add_subcommand("bethe", "solve or continue Bethe states");
  common(be);
  be->add_option("--holes", c.holes, "holes in the ground-state pattern");
  be->add_option("--dm", c.dm, "root-count changes per level (regime I excitations)")->delimiter(',');
  be->add_option("--input", c.input, "BetheState JSON to re-solve");
  be->add_option("--to-gamma", c.to_gamma, "continue the solution in gamma");
  auto* ma = app.add_subcommand("match", "calibrate Bethe energies against exact sector spectra");
  common(ma);
  ma->add_option("--holes", c.holes, "largest hole count tried");
  ma->add_option("--dm", c.dm, "single excitation by root-count changes")->delimiter(',');
  auto* de = app.add_subcommand("density", "kernel and ground-state density dumps");
  common(de);
  de->add_option("--omega-max", c.omega_max, "largest frequency");
  de->add_option("--points", c.points, "frequency samples");
  de->add_option("--kind", c.kind, "bare or physical");
  auto* cc = app.add_subcommand("central-charge", "finite-size central-charge fit");
  common(cc);
  cc->add_option("--method", c.method, "bethe or ed");
  cc->add_flag("--extrapolate", c.extrapolate, "quadratic fit in 1/L of the effective central charge");
  cc->add_flag("--quartic", c.quartic, "add a 1/L^4 term");
  auto* to = app.add_subcommand("toda", "mass ratios, exponents and couplings");
  common(to);
  auto* co = app.add_subcommand("coset", "coset central charges, duality grid, Casimirs and perturbation weights");
  common(co);
  co->add_option("--duality-grid", c.grid, "range a..b of N and Nt");
  auto* rg = app.add_subcommand("regimes", "regime chart over gamma");
  common(rg);
  rg->add_option("--gamma-points", c.gamma_points, "gamma samples in (0, pi)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  CLI::App* sub = app.get_subcommands().front();
  c.subcommand = sub->get_name();
  c.duality_grid = given(*sub, "--duality-grid");
  // the duality grid is a table
  if (c.duality_grid && !given(*sub, "--format")) c.format = "csv";
  try {
    if (!config_path.empty()) apply_config_file(c, config_path, *sub);
    if (given(*sub, "--x")) c.x_re = x_parts[0], c.x_im = x_parts[1];
    if (!c.gamma_pi.empty()) c.gamma = parse_gamma_pi(c.gamma_pi);
    if (c.sign != 1 && c.sign != -1) throw Error(ErrorKind::invalid_argument, "--sign must be +1 or -1");
    (void)ModelSpec(c.N, c.gamma);
    for (int L : c.L)
      if (L < 2 || L % 2) throw Error(ErrorKind::invalid_argument, "system sizes must be even and >= 2");

    Report rep;
    const std::string& s = c.subcommand;
    if (s == "verify-algebra") rep = verify_algebra(c);
    else if (s == "transfer") rep = transfer_cmd(c);
    else if (s == "bethe") rep = bethe_cmd(c);
    else if (s == "match") rep = match_cmd(c);
    else if (s == "density") rep = density_cmd(c);
    else if (s == "central-charge") rep = central_charge_cmd(c);
    else if (s == "toda") rep = toda_cmd(c);
    else if (s == "coset") rep = coset_cmd(c);
    else if (s == "regimes") rep = regimes_cmd(c);

    std::string text = render(c, rep);
    if (c.output.empty()) std::cout << text;
    else write_text(c.output, text);
    return rep.pass ? 0 : 1;
  } catch (const Error& e) {
    json err = {{"tool", "tvm"}, {"version", version}, {"config", config_json(c)},
                {"error", {{"kind", to_string(e.kind)}, {"message", e.what()}}}};
    std::cerr << err.dump(2) << "\n";
    return 2;
  } catch (const std::exception& e) {
    json err = {{"tool", "tvm"}, {"version", version}, {"config", config_json(c)},
                {"error", {{"kind", "internal"}, {"message", e.what()}}}};
    std::cerr << err.dump(2) << "\n";
    return 2;
  }
}
