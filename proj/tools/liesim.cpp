// Command-line front end: simulate drivers, apply random gauge
// transformations, run the deterministic Levy invariance checker and the
// Monte Carlo law-comparison experiments, and replay the canned demos.
//
// Exit codes: 0 success/pass, 2 a verdict failed, 1 configuration or I/O
// error. Reports are byte-stable for a fixed config and seed.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "liesim/config.hpp"

namespace fs = std::filesystem;
using namespace liesim;

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  int threads = 0;
  std::string out_dir;
};

Json load_config(const CommonArgs& args) {
  Json j;
  if (args.config_path.empty()) {
    j = Json::object();
  } else {
    std::ifstream in(args.config_path);
    if (!in) throw std::runtime_error("cannot open config: " + args.config_path);
    try {
      j = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("/", std::string("invalid JSON: ") + e.what());
    }
  }
  if (args.seed_override) j["seed"] = *args.seed_override;
  if (args.threads > 0) j["threads"] = args.threads;
  return j;
}

fs::path resolve_out_dir(const CommonArgs& args, const Json& config) {
  std::string dir = args.out_dir;
  if (dir.empty()) {
    if (const Json* out = cfg::find(config, "output")) {
      dir = cfg::text(*out, "/output", "dir", ".");
    }
  }
  if (dir.empty()) {
    if (const char* env = std::getenv("LIESIM_OUT")) dir = env;
  }
  if (dir.empty()) dir = ".";
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

void write_report(const fs::path& dir, const std::string& name, const Json& j) {
  const fs::path p = dir / name;
  std::ofstream out(p);
  out << j.dump(2) << "\n";
  std::cout << "wrote " << p.string() << "\n";
}

std::uint64_t seed_of(const Json& config) {
  return static_cast<std::uint64_t>(cfg::integer(config, "", "seed", 0));
}

int threads_of(const Json& config) {
  return static_cast<int>(cfg::integer(config, "", "threads", 0));
}

struct Grid {
  double T = 1.0;
  double h = 1.0 / 1024;
};

Grid grid_of(const Json& config) {
  Grid g;
  if (const Json* gj = cfg::find(config, "grid")) {
    g.T = cfg::positive(*gj, "/grid", "T", 1.0);
    g.h = cfg::positive(*gj, "/grid", "h", 1.0 / 1024);
  }
  if (g.h > g.T) throw ConfigError("/grid/h", "h must not exceed T");
  const double m = g.T / g.h;
  if (std::abs(m - std::llround(m)) > 1e-9)
    throw ConfigError("/grid/h", "h must divide T exactly");
  return g;
}

int cmd_simulate(const CommonArgs& args) {
  const Json config = load_config(args);
  const Json* dj = cfg::find(config, "driver");
  if (!dj) throw ConfigError("/driver", "missing driver spec");
  const DriverSpec driver = make_driver(*dj);
  const Grid grid = grid_of(config);
  const auto n_paths = static_cast<std::size_t>(
      cfg::integer(config, "", "paths", 16));
  const std::uint64_t seed = seed_of(config);
  const fs::path dir = resolve_out_dir(args, config);

  std::string csv_name = "paths.csv";
  if (const Json* out = cfg::find(config, "output"))
    csv_name = cfg::text(*out, "/output", "csv", csv_name);
  std::ofstream csv(dir / csv_name);
  write_csv_header(csv, driver.group->algebra_dim());

  double jump_mean = 0.0;
  std::size_t node_count = 0;
  for (std::size_t i = 0; i < n_paths; ++i) {
    const CadlagPath p = simulate_driver(driver, grid.T, grid.h, seed, i);
    p.validate();
    write_csv_rows(csv, p, i);
    jump_mean += static_cast<double>(p.jumps.size());
    node_count = p.nodes.size();
  }
  jump_mean /= static_cast<double>(n_paths);

  Json summary{{"driver", driver.name},
               {"group", driver.group->name()},
               {"paths", n_paths},
               {"T", grid.T},
               {"h", grid.h},
               {"last_node_count", node_count},
               {"mean_jump_count", jump_mean},
               {"seed", seed},
               {"csv", csv_name}};

  if (const Json* est_flag = cfg::find(config, "estimate");
      est_flag && est_flag->is_boolean() && est_flag->get<bool>()) {
    if (n_paths < 100)
      throw ConfigError("/paths", "estimation needs at least 100 paths");
    const auto est = estimate_characteristics(
        [&](std::size_t i) {
          return simulate_driver(driver, grid.T, grid.h, seed, i);
        },
        n_paths, driver.group, {}, threads_of(config));
    write_report(dir, "triplet.json", to_json(est));
    std::ofstream hist(dir / "histogram.csv");
    write_histogram_csv(hist, est.histogram);
    summary["triplet"] = "triplet.json";
    summary["histogram"] = "histogram.csv";
  }

  if (const Json* sj = cfg::find(config, "sde")) {
    const SdePreset preset = make_sde_preset(sj->get<std::string>());
    if (preset.sde.driver_group->name() != driver.group->name())
      throw ConfigError("/sde", "preset expects driver group " +
                                    preset.sde.driver_group->name());
    std::ofstream scsv(dir / ("states_" + csv_name));
    double mean_final = 0.0;
    for (std::size_t i = 0; i < n_paths; ++i) {
      const CadlagPath p = simulate_driver(driver, grid.T, grid.h, seed, i);
      const auto sol = integrate_jump_map(
          preset.sde, PredictableControl::constant(Vector::Zero(0)), p,
          preset.x0);
      for (std::size_t k = 0; k < sol.times.size(); ++k) {
        scsv << i << "," << sol.times[k];
        for (int c = 0; c < sol.states[k].size(); ++c)
          scsv << "," << sol.states[k](c);
        scsv << "\n";
      }
      mean_final += sol.final_state()(0);
    }
    summary["sde"] = *sj;
    summary["mean_final_state0"] = mean_final / static_cast<double>(n_paths);
  }
  write_report(dir, "summary.json", summary);
  return 0;
}

int cmd_transform(const CommonArgs& args) {
  const Json config = load_config(args);
  const Json* dj = cfg::find(config, "driver");
  if (!dj) throw ConfigError("/driver", "missing driver spec");
  const DriverSpec driver = make_driver(*dj);
  const GaugeAction action =
      make_action(cfg::text(config, "", "action"), driver.group);
  const Json* gp = cfg::find(config, "gauge_process");
  if (!gp) throw ConfigError("/gauge_process", "missing gauge process");
  const GaugeProcess gauge = make_gauge_process(*gp, action);
  const Grid grid = grid_of(config);
  const auto n_paths =
      static_cast<std::size_t>(cfg::integer(config, "", "paths", 16));
  const std::uint64_t seed = seed_of(config);
  double tol = 1e-10;
  if (const Json* t = cfg::find(config, "tolerances"))
    tol = cfg::positive(*t, "/tolerances", "round_trip", tol);
  const fs::path dir = resolve_out_dir(args, config);

  std::ofstream csv(dir / "transformed.csv");
  write_csv_header(csv, driver.group->algebra_dim());
  double worst = 0.0;
  for (std::size_t i = 0; i < n_paths; ++i) {
    const CadlagPath z = simulate_driver(driver, grid.T, grid.h, seed, i);
    std::vector<Vector> applied;
    const CadlagPath zt = random_transform(action, gauge, z, &applied);
    write_csv_rows(csv, zt, i);
    const CadlagPath back =
        invert_transform(action, GaugeProcess::recorded(applied), zt);
    for (std::size_t k = 0; k < z.nodes.size(); ++k)
      worst = std::max(worst,
                       (back.nodes[k] - z.nodes[k]).cwiseAbs().maxCoeff());
  }
  const bool pass = worst <= tol;
  write_report(dir, "report.json",
               Json{{"command", "transform"},
                    {"paths", n_paths},
                    {"round_trip_residual", worst},
                    {"tolerance", tol},
                    {"verdict", pass ? "pass" : "fail"}});
  return pass ? 0 : 2;
}

int cmd_check_levy(const CommonArgs& args) {
  const Json config = load_config(args);
  const Json* dj = cfg::find(config, "driver");
  if (!dj) throw ConfigError("/driver", "missing driver spec");
  const DriverSpec driver = make_driver(*dj);
  const GaugeAction action =
      make_action(cfg::text(config, "", "action"), driver.group);
  LevyCheckOptions opts;
  opts.seed = seed_of(config);
  opts.n_gauge_samples =
      static_cast<int>(cfg::integer(config, "", "gauge_samples", 32));
  opts.measure_draws =
      static_cast<int>(cfg::integer(config, "", "measure_draws", 32768));
  const CharTriplet triplet = levy_triplet_of(driver, opts.measure_draws,
                                              opts.seed);
  const InvarianceReport rep = check_levy_invariance(triplet, action, {}, {},
                                                     opts);
  const fs::path dir = resolve_out_dir(args, config);
  Json out = to_json(rep);
  out["command"] = "check-levy";
  out["driver"] = driver.name;
  out["action"] = action.name;
  write_report(dir, "report.json", out);
  return rep.verdict ? 0 : 2;
}

int cmd_test_invariance(const CommonArgs& args) {
  const Json config = load_config(args);
  const Json* dj = cfg::find(config, "driver");
  if (!dj) throw ConfigError("/driver", "missing driver spec");
  ExperimentSpec spec;
  spec.driver = make_driver(*dj);
  spec.action = make_action(cfg::text(config, "", "action"), spec.driver.group);
  const Json* gp = cfg::find(config, "gauge_process");
  if (!gp) throw ConfigError("/gauge_process", "missing gauge process");
  spec.gauge = make_gauge_process(*gp, spec.action);
  const Grid grid = grid_of(config);
  spec.T = grid.T;
  spec.h = grid.h;
  spec.n_paths = static_cast<int>(cfg::integer(config, "", "paths", 5000));
  spec.seed = seed_of(config);
  spec.threads = threads_of(config);
  spec.p_min = cfg::number(config, "", "p_min", 0.01);
  spec.tso.n_permutations =
      static_cast<int>(cfg::integer(config, "", "permutations", 1000));
  if (const Json* ot = cfg::find(config, "obs_times")) {
    spec.obs_times.clear();
    for (const auto& t : *ot) spec.obs_times.push_back(t.get<double>());
  }
  if (const Json* qv = cfg::find(config, "qv")) {
    const Json* e = cfg::find(*qv, "expected");
    if (e && e->is_string() && e->get<std::string>() == "identity") {
      const int n = spec.driver.group->algebra_dim();
      spec.qv_expected = Matrix::Identity(n, n) * spec.T;
    } else if (e) {
      spec.qv_expected = cfg::matrix(*qv, "/qv", "expected");
    }
    spec.qv_tol = cfg::positive(*qv, "/qv", "tol", 0.05);
  }
  const ExperimentReport rep = invariance_experiment(spec);
  const fs::path dir = resolve_out_dir(args, config);
  Json out = to_json(rep);
  out["command"] = "test-invariance";
  out["driver"] = spec.driver.name;
  out["action"] = spec.action.name;
  write_report(dir, "report.json", out);
  return rep.verdict ? 0 : 2;
}

int cmd_demo(const CommonArgs& args, const std::string& name) {
  Json config = load_config(args);
  const std::uint64_t seed = seed_of(config);
  const int threads = threads_of(config);
  const fs::path dir = resolve_out_dir(args, config);

  if (name == "bm-rotation") {
    ExperimentSpec spec;
    spec.driver = DriverSpec::brownian(2);
    spec.action = rotation_action(spec.driver.group);
    spec.gauge = GaugeProcess::of_transformed(
        [](std::size_t, const DriverView& past) {
          return detail::flatten(
              rotation2(past.coords(past.size() - 1)(0) + 1.5707963267948966));
        });
    spec.n_paths = 4000;
    spec.seed = seed;
    spec.threads = threads;
    spec.qv_expected = Matrix::Identity(2, 2);
    const ExperimentReport rep = invariance_experiment(spec);
    Json out = to_json(rep);
    out["demo"] = name;
    write_report(dir, "report.json", out);
    return rep.verdict ? 0 : 2;
  }
  if (name == "bessel") {
    BesselOptions opts;
    opts.n_paths = 4000;
    opts.seed = seed;
    opts.threads = threads;
    const BesselReport free_case = bessel_reduction_demo(opts);
    opts.radial_drift = [](double r) { return -r / (1.0 + r); };
    const BesselReport drift_case = bessel_reduction_demo(opts);
    Json out{{"demo", name},
             {"besq2", to_json(free_case)},
             {"radial_drift", to_json(drift_case)}};
    const bool pass = free_case.verdict && drift_case.verdict;
    out["verdict"] = pass ? "pass" : "fail";
    write_report(dir, "report.json", out);
    return pass ? 0 : 2;
  }
  if (name == "nonmarkovian") {
    NonMarkovianOptions opts;
    opts.n_paths = 4000;
    opts.seed = seed;
    opts.threads = threads;
    const NonMarkovianReport rep = nonmarkovian_demo(opts);
    Json out = to_json(rep);
    out["demo"] = name;
    write_report(dir, "report.json", out);
    return rep.verdict ? 0 : 2;
  }
  if (name == "discrete") {
    DiscreteCheckOptions opts;
    opts.seed = seed;
    opts.threads = threads;
    Json cases = Json::array();
    bool pass = true;
    for (const auto& c : shipped_discrete_cases()) {
      const DiscreteCheckReport rep = discrete_gauge_check(c, opts);
      pass = pass && rep.verdict;
      cases.push_back(to_json(rep));
    }
    write_report(dir, "report.json",
                 Json{{"demo", name},
                      {"cases", std::move(cases)},
                      {"verdict", pass ? "pass" : "fail"}});
    return pass ? 0 : 2;
  }
  if (name == "alpha-stable") {
    auto group = LieGroup::additive(2);
    LevyTriplet t;
    t.b0 = Vector::Zero(2);
    t.A0 = Matrix::Zero(2, 2);
    t.jumps = truncated_stable_jumps(group, 1.5, 1.0, 0.01);
    const DriverSpec driver = DriverSpec::levy(group, t, "stable");
    LevyCheckOptions opts;
    opts.seed = seed;
    const CharTriplet triplet =
        levy_triplet_of(driver, opts.measure_draws, opts.seed);
    const InvarianceReport rep =
        check_levy_invariance(triplet, rotation_action(group), {}, {}, opts);
    Json out = to_json(rep);
    out["demo"] = name;
    write_report(dir, "report.json", out);
    return rep.verdict ? 0 : 2;
  }
  throw ConfigError("/demo", "unknown demo '" + name + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "liesim: simulation and verification of gauge symmetries of "
      "semimartingales on matrix Lie groups"};
  app.require_subcommand(1);
  app.fallthrough();  // common flags may follow the subcommand

  CommonArgs args;
  app.add_option("--config,-c", args.config_path, "JSON config file")
      ->expected(1);
  std::uint64_t seed_val = 0;
  bool seed_set = false;
  app.add_option_function<std::uint64_t>(
         "--seed",
         [&](const std::uint64_t& v) {
           seed_val = v;
           seed_set = true;
         },
         "override the config seed");
  app.add_option("--threads", args.threads,
                 "cap worker threads (does not change results)");
  app.add_option("--out", args.out_dir,
                 "output directory (default: config, then $LIESIM_OUT, then .)");

  auto* sim = app.add_subcommand("simulate", "simulate driver paths to CSV");
  auto* trans = app.add_subcommand(
      "transform", "apply a random gauge transformation and verify inversion");
  auto* levy = app.add_subcommand(
      "check-levy", "deterministic Levy invariance conditions");
  auto* testinv = app.add_subcommand(
      "test-invariance", "Monte Carlo law-comparison experiment");
  auto* demo = app.add_subcommand("demo", "canned experiments");
  std::string demo_name;
  demo->add_option("name", demo_name,
                   "bm-rotation | bessel | nonmarkovian | discrete | "
                   "alpha-stable")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // command-line errors share the config-error exit code
  }
  if (seed_set) args.seed_override = seed_val;

  try {
    if (sim->parsed()) return cmd_simulate(args);
    if (trans->parsed()) return cmd_transform(args);
    if (levy->parsed()) return cmd_check_levy(args);
    if (testinv->parsed()) return cmd_test_invariance(args);
    if (demo->parsed()) return cmd_demo(args, demo_name);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
