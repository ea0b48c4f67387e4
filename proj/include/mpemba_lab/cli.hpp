#pragma once

#include "evolution.hpp"
#include "lambertw.hpp"
#include "mpemba.hpp"
#include "observables.hpp"
#include "run_config.hpp"
#include "spectrum.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <exception>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace mpemba {

/// 17 significant digits, enough to round-trip a double.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::optional<double>& v) { return v ? fmt17(*v) : std::string(); }

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline ojson json_number(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? ojson(*v) : ojson(nullptr);
}

inline ojson to_json(const MpembaReport& r) {
  ojson j;
  j["observable"] = to_string(r.kind);
  j["region"] = to_string(r.region);
  j["method"] = to_string(r.method);
  j["count"] = r.count();
  j["classification"] = r.classification_label();
  j["parity"] = to_string(r.parity());
  j["crossings"] = r.crossings;
  ojson flags = ojson::array();
  for (bool b : r.flagged) flags.push_back(b);
  j["flagged"] = flags;
  if (r.method == Method::ClosedForm) {
    ojson cands = ojson::array();
    for (const auto& c : r.candidates)
      cands.push_back({{"label", c.label}, {"time", json_number(c.time)}, {"admitted", c.admitted}});
    j["candidates"] = cands;
  } else {
    j["degenerate"] = r.degenerate;
    j["horizon"] = r.horizon;
    j["grid_points"] = r.grid_points;
    j["lobe_peaks"] = r.lobe_peaks;
  }
  return j;
}

inline ojson lambdas_json(const std::array<cplx, 4>& l) {
  ojson a = ojson::array();
  for (const auto& v : l) a.push_back({{"re", v.real()}, {"im", v.imag()}});
  return a;
}

inline ojson cmd_classify(const RunConfig& cfg) {
  cfg.validate();
  const ControlParams p = cfg.post();
  const EigenvalueStructure es = eigenvalue_structure(p, cfg.ep_tol);
  const std::array<cplx, 4> lam{0.0, es.lambda[0], es.lambda[1], es.lambda[2]};
  double min_gap = std::numeric_limits<double>::infinity();
  double scale = 0.0;
  for (int a = 1; a < 4; ++a) {
    scale = std::max(scale, std::abs(lam[a]));
    for (int b = a + 1; b < 4; ++b) min_gap = std::min(min_gap, std::abs(lam[a] - lam[b]));
  }
  ojson diag;
  diag["normalized_discriminant"] = es.discriminant;
  diag["min_relative_gap"] = scale > 0.0 ? min_gap / scale : 0.0;
  diag["ep_tol"] = cfg.ep_tol;
  if (es.region == Region::B) {
    diag["gap_ratio"] = (lam[3].real() - lam[1].real()) / (lam[2].real() - lam[1].real());
  } else {
    diag["gap_ratio"] = nullptr;
  }
  ojson j;
  j["d_tilde"] = p.d_tilde;
  j["gamma_tilde"] = p.gamma_tilde;
  j["snap"] = to_string(cfg.snap);
  j["region"] = to_string(es.region);
  j["ambiguous_a1_a2"] = es.a1_a2_tie;
  j["lambdas"] = lambdas_json(lam);
  j["diagnostics"] = diag;
  return j;
}

/// Closed-form report for kind, or nullopt with the reason when none applies.
inline std::optional<MpembaReport> try_closed_form(const QuenchExperiment& exp, ObservableKind kind, std::string* why) {
  if (kind != ObservableKind::GroundPop && kind != ObservableKind::Energy) {
    if (why) *why = "no closed form for " + to_string(kind);
    return std::nullopt;
  }
  try {
    return closed_form_crossings(delta_coefficients(exp, kind));
  } catch (const WrongRegionError& e) {
    if (why) *why = e.what();
    return std::nullopt;
  }
}

struct QuenchResult {
  std::vector<std::string> columns;
  std::vector<std::vector<std::optional<double>>> rows;
  ojson report;
};

inline QuenchResult run_quench(const RunConfig& cfg) {
  cfg.validate();
  const QuenchExperiment exp = cfg.experiment();
  exp.validate();
  const SpectralData spec = eigensystem(exp.post, cfg.ep_tol);
  const double horizon = cfg.horizon ? *cfg.horizon : default_horizon(spec);
  const std::vector<double> ts = uniform_grid(horizon, cfg.grid_points);
  const DensityVector rho_ss = steady_state(exp.post);
  const ModeCoefficients mI = mode_coefficients(initial_condition(exp.pre_I), spec);
  const ModeCoefficients mII = mode_coefficients(initial_condition(exp.pre_II), spec);

  QuenchResult out;
  out.columns.push_back("t");
  for (auto k : cfg.observables) {
    const std::string n = to_string(k);
    out.columns.insert(out.columns.end(), {n + "_I", n + "_II", "delta_" + n});
  }
  for (double t : ts) {
    const DensityVector a = propagate_analytic(spec, mI, t);
    const DensityVector b = propagate_analytic(spec, mII, t);
    std::vector<std::optional<double>> row{t};
    for (auto k : cfg.observables) {
      const auto va = observable_value(k, a, exp.post, rho_ss);
      const auto vb = observable_value(k, b, exp.post, rho_ss);
      row.insert(row.end(), {va, vb, va && vb ? std::optional<double>(*va - *vb) : std::nullopt});
    }
    out.rows.push_back(std::move(row));
  }

  ojson reports = ojson::array();
  for (auto k : cfg.observables) {
    ojson r;
    r["observable"] = to_string(k);
    r["grid"] = to_json(find_crossings_grid(exp, k, horizon, cfg.grid_points));
    std::string why;
    if (auto cf = try_closed_form(exp, k, &why)) {
      r["closed_form"] = to_json(*cf);
    } else {
      if (cfg.closed_form) throw WrongRegionError(why);
      r["closed_form"] = nullptr;
      r["closed_form_note"] = why;
    }
    reports.push_back(r);
  }
  ojson rep;
  rep["config"] = to_json(cfg);
  rep["post"] = {{"d_tilde", exp.post.d_tilde}, {"gamma_tilde", exp.post.gamma_tilde}, {"region", to_string(spec.region)}};
  rep["pre_I"] = {{"d_tilde", exp.pre_I.d_tilde}, {"gamma_tilde", exp.pre_I.gamma_tilde}};
  rep["pre_II"] = {{"d_tilde", exp.pre_II.d_tilde}, {"gamma_tilde", exp.pre_II.gamma_tilde}};
  rep["lambdas"] = lambdas_json(spec.lambdas);
  rep["horizon"] = horizon;
  rep["reports"] = reports;
  out.report = rep;
  return out;
}

inline std::string to_csv(const std::vector<std::string>& columns,
                          const std::vector<std::vector<std::optional<double>>>& rows) {
  std::ostringstream os;
  for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << csv_quote(columns[c]);
  os << "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << csv_field(row[c]);
    os << "\n";
  }
  return os.str();
}

inline ojson series_json(const QuenchResult& q) {
  ojson cols;
  for (std::size_t c = 0; c < q.columns.size(); ++c) {
    ojson a = ojson::array();
    for (const auto& row : q.rows) a.push_back(json_number(row[c]));
    cols[q.columns[c]] = a;
  }
  return cols;
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("output: cannot write '" + path + "'");
  f << text;
}

/// Writes <output>.csv plus <output>.report.json, or <output>.json holding both.
inline std::vector<std::string> write_quench(const RunConfig& cfg, const QuenchResult& q) {
  if (cfg.output.empty()) throw ConfigError("output: a path prefix is required");
  if (cfg.format == "csv") {
    write_file(cfg.output + ".csv", to_csv(q.columns, q.rows));
    write_file(cfg.output + ".report.json", q.report.dump(2) + "\n");
    return {cfg.output + ".csv", cfg.output + ".report.json"};
  }
  ojson j;
  j["series"] = series_json(q);
  j["report"] = q.report;
  write_file(cfg.output + ".json", j.dump(2) + "\n");
  return {cfg.output + ".json"};
}

inline ojson cmd_crossings(const RunConfig& cfg) {
  cfg.validate();
  const QuenchExperiment exp = cfg.experiment();
  exp.validate();
  const SpectralData spec = eigensystem(exp.post, cfg.ep_tol);
  const double horizon = cfg.horizon ? *cfg.horizon : default_horizon(spec);
  ojson j;
  j["post"] = {{"d_tilde", exp.post.d_tilde}, {"gamma_tilde", exp.post.gamma_tilde}, {"region", to_string(spec.region)}};
  j["horizon"] = horizon;
  ojson reps = ojson::array();
  for (auto k : cfg.observables) {
    ojson r;
    r["observable"] = to_string(k);
    r["grid"] = to_json(find_crossings_grid(exp, k, horizon, cfg.grid_points));
    std::string why;
    if (auto cf = try_closed_form(exp, k, &why)) {
      r["closed_form"] = to_json(*cf);
    } else {
      if (cfg.closed_form) throw WrongRegionError(why);
      r["closed_form"] = nullptr;
      r["closed_form_note"] = why;
    }
    if (k == ObservableKind::GroundPop && (spec.region == Region::A1 || spec.region == Region::A2))
      r["oscillation_criterion"] = region_a1_criterion(delta_coefficients(exp, k), spec);
    reps.push_back(r);
  }
  j["reports"] = reps;
  return j;
}

/// Number of scan workers: hardware concurrency capped by MPEMBA_LAB_THREADS.
inline unsigned scan_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MPEMBA_LAB_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) n = std::min(n, static_cast<unsigned>(cap));
  }
  return n;
}

struct ScanRow {
  int i = 0;
  int j = 0;
  double d_I = 0.0;
  double d_II = 0.0;
  bool identical = false;
  MpembaReport closed;
  std::optional<MpembaReport> grid;
};

struct ScanResult {
  Region region = Region::D;
  ObservableKind kind = ObservableKind::GroundPop;
  double horizon = 0.0;
  std::vector<ScanRow> rows;
};

/// Closed-form crossings that fall inside the grid horizon.
inline std::size_t count_within(const MpembaReport& r, double horizon) {
  return static_cast<std::size_t>(
      std::count_if(r.crossings.begin(), r.crossings.end(), [&](double t) { return t <= horizon; }));
}

/// Closed-form classification over the (d_I, d_II) rectangle, row-major in d_I.
inline ScanResult run_scan(const RunConfig& cfg, unsigned threads = scan_threads()) {
  cfg.validate();
  const ControlParams post = cfg.post();
  const ObservableKind kind = cfg.observables.front();
  const SpectralData spec = eigensystem(post, cfg.ep_tol);
  if (spec.region != Region::D && spec.region != Region::B && spec.region != Region::E)
    throw WrongRegionError("scan needs a post-quench point in region D, B (m = 2 line) or E; got " +
                           to_string(spec.region));
  if (kind != ObservableKind::GroundPop && kind != ObservableKind::Energy)
    throw WrongRegionError("scan supports rho_gg and energy only");
  const double horizon = cfg.horizon ? *cfg.horizon : default_horizon(spec);

  ScanResult res;
  res.region = spec.region;
  res.kind = kind;
  res.horizon = horizon;
  const int ni = cfg.scan_d_I.n;
  const int nj = cfg.scan_d_II.n;
  res.rows.resize(static_cast<std::size_t>(ni) * nj);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t idx = next++; idx < res.rows.size(); idx = next++) {
      try {
        ScanRow& row = res.rows[idx];
        row.i = static_cast<int>(idx / nj);
        row.j = static_cast<int>(idx % nj);
        row.d_I = cfg.scan_d_I.at(row.i);
        row.d_II = cfg.scan_d_II.at(row.j);
        RunConfig c = cfg;
        c.pre_I.d_tilde = row.d_I;
        c.pre_II.d_tilde = row.d_II;
        const QuenchExperiment exp = c.experiment();
        const DensityVector a = initial_condition(exp.pre_I);
        const DensityVector b = initial_condition(exp.pre_II);
        row.identical = (a.as_vector() - b.as_vector()).cwiseAbs().maxCoeff() == 0.0;
        row.closed = closed_form_crossings(delta_coefficients(a, b, spec, kind));
        if (cfg.scan_verify) row.grid = find_crossings_grid(exp, kind, horizon, cfg.grid_points);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return res;
}

inline std::vector<std::string> scan_labels(Region r) {
  if (r == Region::D) return {"t_0", "t_-1"};
  return {"t_+", "t_-"};
}

inline std::string scan_csv(const ScanResult& s, bool verify) {
  const auto labels = scan_labels(s.region);
  std::vector<std::string> cols{"i", "j", "d_I", "d_II"};
  for (const auto& l : labels) cols.insert(cols.end(), {l, "admitted_" + l});
  cols.insert(cols.end(), {"count", "classification", "parity", "identical"});
  if (verify) cols.insert(cols.end(), {"grid_count", "grid_agrees"});
  std::ostringstream os;
  for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << csv_quote(cols[c]);
  os << "\n";
  for (const auto& row : s.rows) {
    os << row.i << "," << row.j << "," << fmt17(row.d_I) << "," << fmt17(row.d_II);
    for (const auto& l : labels) {
      const Candidate* c = nullptr;
      for (const auto& cand : row.closed.candidates)
        if (cand.label == l) c = &cand;
      os << "," << (c ? csv_field(c->time) : "") << "," << (c && c->admitted ? "true" : "false");
    }
    os << "," << row.closed.count() << "," << csv_quote(row.closed.classification_label()) << ","
       << to_string(row.closed.parity()) << "," << (row.identical ? "true" : "false");
    if (verify && row.grid)
      os << "," << row.grid->count() << "," << (row.grid->count() == count_within(row.closed, s.horizon) ? "true" : "false");
    os << "\n";
  }
  return os.str();
}

inline ojson scan_json(const ScanResult& s) {
  ojson rows = ojson::array();
  for (const auto& row : s.rows) {
    ojson r;
    r["i"] = row.i;
    r["j"] = row.j;
    r["d_I"] = row.d_I;
    r["d_II"] = row.d_II;
    r["identical"] = row.identical;
    r["closed_form"] = to_json(row.closed);
    if (row.grid) r["grid"] = to_json(*row.grid);
    rows.push_back(r);
  }
  return {{"region", to_string(s.region)}, {"observable", to_string(s.kind)}, {"horizon", s.horizon}, {"rows", rows}};
}

/// Golden regression checks; deterministic for a given seed.
inline ojson run_selftest(std::uint64_t seed) {
  ojson checks = ojson::array();
  bool all = true;
  auto check = [&](const std::string& name, bool pass, double value, double expected, double tol) {
    all = all && pass;
    checks.push_back({{"name", name}, {"pass", pass}, {"value", value}, {"expected", expected}, {"tolerance", tol}});
  };
  using K = ObservableKind;

  check("lambert_w0_at_e", std::abs(lambert_w(WBranch::W0, std::numbers::e) - 1.0) <= 1e-15,
        lambert_w(WBranch::W0, std::numbers::e), 1.0, 1e-15);
  check("lambert_wm1_at_branch_point", lambert_w(WBranch::Wm1, -detail::kInvE) == -1.0,
        lambert_w(WBranch::Wm1, -detail::kInvE), -1.0, 0.0);

  const SpectralData se = eigensystem(e_point());
  check("e_point_triple_eigenvalue", se.region == Region::E && std::abs(se.lambdas[1] - 4.0 * std::numbers::sqrt3) <= 1e-12,
        se.lambdas[1].real(), 4.0 * std::numbers::sqrt3, 1e-12);

  const double gd = region_d_gamma(4.0);
  const QuenchExperiment double_d{{10.0, gd}, {12.0, gd}, {4.0, gd}};
  for (auto k : {K::GroundPop, K::Energy}) {
    const MpembaReport cf = closed_form_crossings(delta_coefficients(double_d, k));
    const MpembaReport gr = find_crossings_grid(double_d, k);
    double worst = cf.count() == gr.count() ? 0.0 : 1.0;
    for (std::size_t i = 0; i < std::min(cf.count(), gr.count()); ++i)
      worst = std::max(worst, std::abs(cf.crossings[i] - gr.crossings[i]) / cf.crossings[i]);
    check("region_d_double_" + to_string(k), cf.count() == 2 && worst <= 1e-6, static_cast<double>(cf.count()), 2.0, 0.0);
    check("region_d_closed_vs_grid_" + to_string(k), worst <= 1e-6, worst, 0.0, 1e-6);
  }

  const double gb = region_b_m2_gamma(6.0);
  const QuenchExperiment gap_line{{16.3, gb}, {13.4, gb}, {6.0, gb}};
  const auto cb = delta_coefficients(gap_line, K::GroundPop);
  check("region_b_gap_ratio", std::abs(cb.gap_ratio - 2.0) <= 1e-9, cb.gap_ratio, 2.0, 1e-9);
  check("region_b_double_rho_gg", crossing_times_region_b(cb).count() == 2,
        static_cast<double>(crossing_times_region_b(cb).count()), 2.0, 0.0);

  const ControlParams ep = e_point();
  const QuenchExperiment third_order{{5.0, ep.gamma_tilde}, {7.0, ep.gamma_tilde}, ep};
  for (auto k : {K::GroundPop, K::Energy}) {
    const auto n = crossing_times_region_e(delta_coefficients(third_order, k)).count();
    check("region_e_double_" + to_string(k), n == 2, static_cast<double>(n), 2.0, 0.0);
  }

  const QuenchExperiment oscillatory{{2.1, 0.5}, {0.51, 0.5}, {2.5, 0.5}};
  const auto n6 = find_crossings_grid(oscillatory, K::GroundPop).count();
  check("region_a1_multiple_rho_gg", n6 >= 3, static_cast<double>(n6), 3.0, 0.0);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::array<ControlParams, 6> posts{ControlParams{3.0, 0.6}, ControlParams{0.8, 4.0}, ControlParams{6.0, gb},
                                           ControlParams{6.0, region_c_gamma(6.0)}, ControlParams{4.0, gd}, ep};
  double worst = 0.0;
  for (const auto& post : posts) {
    for (int s = 0; s < 3; ++s) {
      const double r = std::cbrt(unit(rng));
      const double th = std::acos(2.0 * unit(rng) - 1.0);
      const double ph = 2.0 * std::numbers::pi * unit(rng);
      const Eigen::Vector3d b(r * std::sin(th) * std::cos(ph), r * std::sin(th) * std::sin(ph), r * std::cos(th));
      const DensityVector rho0 =
          DensityVector::from_parts({0.5 * b(0), -0.5 * b(1)}, 0.5 * (1.0 + b(2)), 0.5 * (1.0 - b(2)));
      const Vector4 diff = propagate_analytic(rho0, post, 1.0).as_vector() - propagate_rk4(rho0, post, 1.0).as_vector();
      worst = std::max(worst, diff.cwiseAbs().maxCoeff());
    }
  }
  check("analytic_vs_rk4_sampled", worst <= 1e-8, worst, 0.0, 1e-8);

  return {{"seed", seed}, {"all_passed", all}, {"checks", checks}};
}

}  // namespace mpemba
