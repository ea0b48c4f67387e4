#pragma once

#include "lindblad_core.hpp"
#include "observables.hpp"
#include "spectrum.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpemba {

using ojson = nlohmann::ordered_json;

/// Malformed configuration; the message names the offending field.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Snap { None, DLine, CLine, M2Line, EPoint };

inline std::string to_string(Snap s) {
  switch (s) {
    case Snap::None: return "none";
    case Snap::DLine: return "d_line";
    case Snap::CLine: return "c_line";
    case Snap::M2Line: return "m2_line";
    case Snap::EPoint: return "e_point";
  }
  return "?";
}

inline Snap parse_snap(const std::string& s) {
  for (auto v : {Snap::None, Snap::DLine, Snap::CLine, Snap::M2Line, Snap::EPoint})
    if (s == to_string(v)) return v;
  throw ConfigError("snap: unknown value '" + s + "'");
}

/// Uniform axis lo..hi with n points.
struct AxisRange {
  double lo = 1.0;
  double hi = 20.0;
  int n = 50;

  double at(int i) const { return n == 1 ? lo : lo + (hi - lo) * i / (n - 1); }
};

/// Pre-quench point; a missing dissipation inherits the post-quench value.
struct PrePoint {
  double d_tilde = 0.0;
  std::optional<double> gamma_tilde;
};

struct RunConfig {
  double d_tilde = 0.0;
  double gamma_tilde = 0.0;
  Snap snap = Snap::None;
  PrePoint pre_I;
  PrePoint pre_II;
  std::vector<ObservableKind> observables{ObservableKind::GroundPop};
  std::optional<double> horizon;
  int grid_points = 2000;
  bool closed_form = false;
  double ep_tol = kDefaultEpTol;
  AxisRange scan_d_I;
  AxisRange scan_d_II;
  bool scan_verify = false;
  std::string output;
  std::string format = "csv";
  std::uint64_t seed = 20240601;

  /// Post-quench point with any snap applied.
  ControlParams post() const {
    switch (snap) {
      case Snap::None: return {d_tilde, gamma_tilde};
      case Snap::DLine: return {d_tilde, region_d_gamma(d_tilde)};
      case Snap::CLine: return {d_tilde, region_c_gamma(d_tilde)};
      case Snap::M2Line: return {d_tilde, region_b_m2_gamma(d_tilde)};
      case Snap::EPoint: return e_point();
    }
    return {d_tilde, gamma_tilde};
  }

  ControlParams resolve(const PrePoint& p) const { return {p.d_tilde, p.gamma_tilde.value_or(post().gamma_tilde)}; }

  QuenchExperiment experiment() const { return {resolve(pre_I), resolve(pre_II), post()}; }

  void validate() const {
    if (!std::isfinite(d_tilde)) throw ConfigError("d_tilde: must be finite");
    if (!std::isfinite(gamma_tilde) || gamma_tilde < 0.0) throw ConfigError("gamma_tilde: must be finite and >= 0");
    for (const auto* pp : {&pre_I, &pre_II}) {
      const char* name = pp == &pre_I ? "pre_I" : "pre_II";
      if (!std::isfinite(pp->d_tilde)) throw ConfigError(std::string(name) + ".d_tilde: must be finite");
      if (pp->gamma_tilde && (!std::isfinite(*pp->gamma_tilde) || *pp->gamma_tilde < 0.0))
        throw ConfigError(std::string(name) + ".gamma_tilde: must be finite and >= 0");
    }
    if (observables.empty()) throw ConfigError("observables: at least one observable is required");
    if (horizon && !(*horizon > 0.0)) throw ConfigError("horizon: must be positive");
    if (grid_points < 2) throw ConfigError("grid_points: must be at least 2");
    if (!(ep_tol > 0.0)) throw ConfigError("ep_tol: must be positive");
    if (format != "csv" && format != "json") throw ConfigError("format: must be 'csv' or 'json'");
    for (const auto* a : {&scan_d_I, &scan_d_II}) {
      const char* name = a == &scan_d_I ? "scan.d_I" : "scan.d_II";
      if (a->n < 1 || !std::isfinite(a->lo) || !std::isfinite(a->hi))
        throw ConfigError(std::string(name) + ": needs finite bounds and n >= 1");
    }
  }
};

inline ojson to_json(const RunConfig& c) {
  auto pre = [](const PrePoint& p) {
    ojson j;
    j["d_tilde"] = p.d_tilde;
    j["gamma_tilde"] = p.gamma_tilde ? ojson(*p.gamma_tilde) : ojson(nullptr);
    return j;
  };
  auto axis = [](const AxisRange& a) { return ojson{{"lo", a.lo}, {"hi", a.hi}, {"n", a.n}}; };
  ojson j;
  j["post"] = {{"d_tilde", c.d_tilde}, {"gamma_tilde", c.gamma_tilde}, {"snap", to_string(c.snap)}};
  j["pre_I"] = pre(c.pre_I);
  j["pre_II"] = pre(c.pre_II);
  ojson obs = ojson::array();
  for (auto k : c.observables) obs.push_back(to_string(k));
  j["observables"] = obs;
  j["horizon"] = c.horizon ? ojson(*c.horizon) : ojson(nullptr);
  j["grid_points"] = c.grid_points;
  j["closed_form"] = c.closed_form;
  j["ep_tol"] = c.ep_tol;
  j["scan"] = {{"d_I", axis(c.scan_d_I)}, {"d_II", axis(c.scan_d_II)}, {"verify", c.scan_verify}};
  j["output"] = c.output;
  j["format"] = c.format;
  j["seed"] = c.seed;
  return j;
}

namespace detail {

template <class T>
T get_field(const ojson& j, const char* key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path + key + ": missing or of the wrong type");
  }
}

template <class T>
void read_optional(const ojson& j, const char* key, const std::string& path, T& out) {
  if (j.contains(key)) out = get_field<T>(j, key, path);
}

inline PrePoint read_pre(const ojson& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": must be an object");
  PrePoint p;
  p.d_tilde = get_field<double>(j, "d_tilde", path + ".");
  if (j.contains("gamma_tilde") && !j.at("gamma_tilde").is_null())
    p.gamma_tilde = get_field<double>(j, "gamma_tilde", path + ".");
  return p;
}

inline AxisRange read_axis(const ojson& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": must be an object");
  return {get_field<double>(j, "lo", path + "."), get_field<double>(j, "hi", path + "."),
          get_field<int>(j, "n", path + ".")};
}

}  // namespace detail

/// Overlays the fields present in j onto base.
inline RunConfig from_json(const ojson& j, RunConfig base = {}) {
  using detail::get_field;
  using detail::read_optional;
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  RunConfig c = std::move(base);
  if (j.contains("post")) {
    const ojson& p = j.at("post");
    if (!p.is_object()) throw ConfigError("post: must be an object");
    read_optional(p, "d_tilde", "post.", c.d_tilde);
    read_optional(p, "gamma_tilde", "post.", c.gamma_tilde);
    if (p.contains("snap")) c.snap = parse_snap(get_field<std::string>(p, "snap", "post."));
  }
  if (j.contains("pre_I")) c.pre_I = detail::read_pre(j.at("pre_I"), "pre_I");
  if (j.contains("pre_II")) c.pre_II = detail::read_pre(j.at("pre_II"), "pre_II");
  if (j.contains("observables")) {
    const ojson& o = j.at("observables");
    if (!o.is_array()) throw ConfigError("observables: must be an array of names");
    c.observables.clear();
    for (const auto& e : o) {
      if (!e.is_string()) throw ConfigError("observables: entries must be strings");
      const auto k = parse_observable(e.get<std::string>());
      if (!k) throw ConfigError("observables: unknown observable '" + e.get<std::string>() + "'");
      c.observables.push_back(*k);
    }
  }
  if (j.contains("horizon")) {
    if (j.at("horizon").is_null()) {
      c.horizon.reset();
    } else {
      c.horizon = get_field<double>(j, "horizon", "");
    }
  }
  read_optional(j, "grid_points", "", c.grid_points);
  read_optional(j, "closed_form", "", c.closed_form);
  read_optional(j, "ep_tol", "", c.ep_tol);
  if (j.contains("scan")) {
    const ojson& s = j.at("scan");
    if (!s.is_object()) throw ConfigError("scan: must be an object");
    if (s.contains("d_I")) c.scan_d_I = detail::read_axis(s.at("d_I"), "scan.d_I");
    if (s.contains("d_II")) c.scan_d_II = detail::read_axis(s.at("d_II"), "scan.d_II");
    read_optional(s, "verify", "scan.", c.scan_verify);
  }
  read_optional(j, "output", "", c.output);
  read_optional(j, "format", "", c.format);
  read_optional(j, "seed", "", c.seed);
  return c;
}

inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  ojson j;
  try {
    j = ojson::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON (") + e.what() + ")");
  }
  return from_json(j, std::move(base));
}

}  // namespace mpemba
