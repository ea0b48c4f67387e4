#include "mpemba_lab/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

using mpemba::ConfigError;
using mpemba::RunConfig;

struct Flags {
  std::string config;
  double d = 0.0;
  double gamma = 0.0;
  bool snap_e = false;
  bool d_line = false;
  bool c_line = false;
  bool m2_line = false;
  double ep_tol = mpemba::kDefaultEpTol;
  double d_I = 0.0, gamma_I = 0.0, d_II = 0.0, gamma_II = 0.0;
  std::string observables;
  double horizon = 0.0;
  int grid_points = 0;
  bool closed_form = false;
  std::string output;
  std::string format;
  std::string range_I, range_II;
  bool verify = false;
  std::uint64_t seed = 0;
};

struct Options {
  CLI::Option* config = nullptr;
  CLI::Option* d = nullptr;
  CLI::Option* gamma = nullptr;
  CLI::Option* ep_tol = nullptr;
  CLI::Option* d_I = nullptr;
  CLI::Option* gamma_I = nullptr;
  CLI::Option* d_II = nullptr;
  CLI::Option* gamma_II = nullptr;
  CLI::Option* observables = nullptr;
  CLI::Option* horizon = nullptr;
  CLI::Option* grid_points = nullptr;
  CLI::Option* output = nullptr;
  CLI::Option* format = nullptr;
  CLI::Option* range_I = nullptr;
  CLI::Option* range_II = nullptr;
  CLI::Option* seed = nullptr;
};

bool given(const CLI::Option* o) { return o != nullptr && o->count() > 0; }

void add_point_options(CLI::App* sub, Flags& f, Options& o) {
  o.config = sub->add_option("--config", f.config, "JSON run configuration; flags override it");
  o.d = sub->add_option("--d", f.d, "post-quench drive d");
  o.gamma = sub->add_option("--gamma", f.gamma, "post-quench dissipation");
  auto* e = sub->add_flag("--snap-e", f.snap_e, "use the third-order point (2 sqrt 2, 6 sqrt 3)");
  auto* dl = sub->add_flag("--gamma-from-d-line", f.d_line, "dissipation on the line where the two slow rates merge");
  auto* cl = sub->add_flag("--gamma-from-c-line", f.c_line, "dissipation on the line where the two fast rates merge");
  auto* m2 = sub->add_flag("--gamma-from-m2-line", f.m2_line, "dissipation with equally spaced rates");
  e->excludes(dl, cl, m2);
  dl->excludes(cl, m2);
  cl->excludes(m2);
  o.ep_tol = sub->add_option("--ep-tol", f.ep_tol, "degeneracy tolerance on the normalized discriminant");
}

void add_experiment_options(CLI::App* sub, Flags& f, Options& o) {
  o.d_I = sub->add_option("--d-I", f.d_I, "pre-quench drive of copy I");
  o.gamma_I = sub->add_option("--gamma-I", f.gamma_I, "pre-quench dissipation of copy I (default: post value)");
  o.d_II = sub->add_option("--d-II", f.d_II, "pre-quench drive of copy II");
  o.gamma_II = sub->add_option("--gamma-II", f.gamma_II, "pre-quench dissipation of copy II (default: post value)");
  o.observables = sub->add_option("--observables", f.observables,
                                  "comma list of rho_gg, energy, entropy, temperature, kl, kl_speed");
  o.horizon = sub->add_option("--horizon", f.horizon, "time horizon (default 20 / lambda_slow)");
  o.grid_points = sub->add_option("--grid-points", f.grid_points, "uniform grid size (default 2000)");
  sub->add_flag("--closed-form", f.closed_form, "require closed-form crossing times (exit 2 where none apply)");
}

RunConfig build_config(const Flags& f, const Options& o) {
  RunConfig c;
  if (given(o.config)) c = mpemba::load_config(f.config);
  if (given(o.d)) c.d_tilde = f.d;
  if (given(o.gamma)) {
    c.gamma_tilde = f.gamma;
    c.snap = mpemba::Snap::None;
  }
  if (f.snap_e) c.snap = mpemba::Snap::EPoint;
  if (f.d_line) c.snap = mpemba::Snap::DLine;
  if (f.c_line) c.snap = mpemba::Snap::CLine;
  if (f.m2_line) c.snap = mpemba::Snap::M2Line;
  if (given(o.ep_tol)) c.ep_tol = f.ep_tol;
  if (given(o.d_I)) c.pre_I.d_tilde = f.d_I;
  if (given(o.gamma_I)) c.pre_I.gamma_tilde = f.gamma_I;
  if (given(o.d_II)) c.pre_II.d_tilde = f.d_II;
  if (given(o.gamma_II)) c.pre_II.gamma_tilde = f.gamma_II;
  if (given(o.observables)) {
    c.observables.clear();
    std::stringstream ss(f.observables);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto k = mpemba::parse_observable(item);
      if (!k) throw ConfigError("observables: unknown observable '" + item + "'");
      c.observables.push_back(*k);
    }
  }
  if (given(o.horizon)) c.horizon = f.horizon;
  if (given(o.grid_points)) c.grid_points = f.grid_points;
  if (f.closed_form) c.closed_form = true;
  if (given(o.output)) c.output = f.output;
  if (given(o.format)) c.format = f.format;
  auto parse_range = [](const std::string& s, const char* field) {
    mpemba::AxisRange a;
    char c1 = 0, c2 = 0;
    std::istringstream in(s);
    if (!(in >> a.lo >> c1 >> a.hi >> c2 >> a.n) || c1 != ':' || c2 != ':')
      throw ConfigError(std::string(field) + ": expected lo:hi:n");
    return a;
  };
  if (given(o.range_I)) c.scan_d_I = parse_range(f.range_I, "scan.d_I");
  if (given(o.range_II)) c.scan_d_II = parse_range(f.range_II, "scan.d_II");
  if (f.verify) c.scan_verify = true;
  if (given(o.seed)) c.seed = f.seed;
  c.validate();
  return c;
}

void emit(const RunConfig& c, const std::string& text, const std::string& suffix) {
  if (c.output.empty()) {
    std::cout << text;
  } else {
    mpemba::write_file(c.output + suffix, text);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mpemba crossings in the driven-dissipative two-level system"};
  app.require_subcommand(1);
  Flags f;

  Options oc, oq, os, ox, ot;
  auto* classify = app.add_subcommand("classify", "region, eigenvalues and degeneracy diagnostics of a point");
  add_point_options(classify, f, oc);

  auto* quench = app.add_subcommand("quench", "trajectories of both copies plus crossing reports");
  add_point_options(quench, f, oq);
  add_experiment_options(quench, f, oq);
  oq.output = quench->add_option("--output", f.output, "output path prefix");
  oq.format = quench->add_option("--format", f.format, "csv or json");

  auto* scan = app.add_subcommand("scan", "closed-form classification over a (d_I, d_II) grid");
  add_point_options(scan, f, os);
  add_experiment_options(scan, f, os);
  os.range_I = scan->add_option("--d-I-range", f.range_I, "lo:hi:n");
  os.range_II = scan->add_option("--d-II-range", f.range_II, "lo:hi:n");
  scan->add_flag("--verify", f.verify, "cross-check every cell with the grid oracle");
  os.output = scan->add_option("--output", f.output, "output path prefix (stdout when omitted)");
  os.format = scan->add_option("--format", f.format, "csv or json");

  auto* crossings = app.add_subcommand("crossings", "crossing reports for one experiment");
  add_point_options(crossings, f, ox);
  add_experiment_options(crossings, f, ox);
  ox.output = crossings->add_option("--output", f.output, "output path prefix (stdout when omitted)");

  auto* selftest = app.add_subcommand("selftest", "golden-data regression checks");
  ot.config = selftest->add_option("--config", f.config, "JSON run configuration");
  ot.seed = selftest->add_option("--seed", f.seed, "seed for sampled checks");
  ot.output = selftest->add_option("--output", f.output, "output path prefix (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (classify->parsed()) {
      const RunConfig c = build_config(f, oc);
      std::cout << mpemba::cmd_classify(c).dump(2) << "\n";
    } else if (quench->parsed()) {
      const RunConfig c = build_config(f, oq);
      for (const auto& path : mpemba::write_quench(c, mpemba::run_quench(c))) std::cerr << "wrote " << path << "\n";
    } else if (scan->parsed()) {
      const RunConfig c = build_config(f, os);
      const auto res = mpemba::run_scan(c);
      if (c.format == "json") {
        emit(c, mpemba::scan_json(res).dump(2) + "\n", ".json");
      } else {
        emit(c, mpemba::scan_csv(res, c.scan_verify), ".csv");
      }
    } else if (crossings->parsed()) {
      const RunConfig c = build_config(f, ox);
      emit(c, mpemba::cmd_crossings(c).dump(2) + "\n", ".json");
    } else if (selftest->parsed()) {
      const RunConfig c = build_config(f, ot);
      const auto j = mpemba::run_selftest(c.seed);
      emit(c, j.dump(2) + "\n", ".json");
      return j["all_passed"].get<bool>() ? 0 : 2;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const mpemba::WrongRegionError& e) {
    std::cerr << "wrong region: " << e.what() << "\n";
    return 2;
  } catch (const mpemba::DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
