#include "srflab/cli.hpp"

#include "srflab/catalog.hpp"
#include "srflab/export.hpp"
#include "srflab/suites.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#ifndef SRFLAB_VERSION
#define SRFLAB_VERSION "unknown"
#endif

namespace srflab {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::uint64_t kDefaultSeed = 42;

json without(json j, std::initializer_list<const char*> keys) {
  for (const char* k : keys) j.erase(k);
  return j;
}

json section(const json& j, const char* key) { return j.is_object() && j.contains(key) ? j.at(key) : json(); }

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (j.is_null()) return;
  require(j.is_object(), ErrorKind::invalid_input, where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    require(known, ErrorKind::invalid_input, "unknown key " + (where.empty() ? key : where + "." + key));
  }
}

struct ExportConfig {
  bool matrices = true;
  bool plans = true;
  int ensemble_paths = 100;
};

ExportConfig export_config(const json& j) {
  check_keys(j, "export", {"matrices", "plans", "ensemble_paths"});
  ExportConfig e;
  try {
    if (j.is_object()) {
      e.matrices = j.value("matrices", e.matrices);
      e.plans = j.value("plans", e.plans);
      e.ensemble_paths = j.value("ensemble_paths", e.ensemble_paths);
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::invalid_input, std::string("export: ") + ex.what());
  }
  require(e.ensemble_paths >= 0, ErrorKind::invalid_input, "export.ensemble_paths must be non-negative");
  return e;
}

json to_json(const ExportConfig& e) {
  return {{"matrices", e.matrices}, {"plans", e.plans}, {"ensemble_paths", e.ensemble_paths}};
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::invalid_input, "cannot read config " + path);
  json config;
  try {
    config = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::invalid_input, "config " + path + ": " + e.what());
  }
  check_keys(config, "", {"space", "times", "checks", "rng", "export"});
  require(config.is_object() && config.contains("space"), ErrorKind::invalid_input, "config needs a space section");
  check_keys(section(config, "checks"), "checks",
             {"tolerance", "heat", "gradient", "transport", "bochner", "convexity", "coupling"});
  check_keys(section(config, "rng"), "rng", {"seed"});
  return config;
}

std::string exponent_tag(double p) {
  if (std::isinf(p)) return "inf";
  std::ostringstream s;
  s << p;
  return s.str();
}

struct Flags {
  std::string config;
  std::string out = "results";
  std::optional<std::uint64_t> seed;
  double tol_scale = 1.0;
  int refine = 0;
};

using Exporter = std::function<void(const DynamicSpace& space, const fs::path& dir)>;

struct Job {
  std::string suite;
  bool uses_tolerance = false;
  json echo;
  SuiteRunner run;
  Exporter exports;
};

Job make_job(const std::string& command, const json& config, std::uint64_t seed) {
  const json times = section(config, "times");
  const json checks = section(config, "checks");
  const ExportConfig ex = export_config(section(config, "export"));
  Job job;
  if (command == "check-heat") {
    const auto c = heat_config(times, section(checks, "heat"));
    job.suite = "heat";
    job.echo = to_json(c);
    job.run = [c, seed](const DynamicSpace& space, const MeshTolerance&) { return heat_suite(space, c, seed); };
    if (ex.matrices) {
      job.exports = [c](const DynamicSpace& space, const fs::path& dir) {
        write_propagator_csv(dir / "propagator.csv", propagator_matrix(space, c.s, c.t, c.steps));
        write_kernel_csv(dir / "kernel.csv", heat_kernel(space, c.s, c.t, c.steps), c.steps);
      };
    }
  } else if (command == "check-gradient") {
    const auto c = gradient_config(times, section(checks, "gradient"));
    job.suite = "gradient";
    job.uses_tolerance = true;
    job.echo = to_json(c);
    job.run = [c, seed](const DynamicSpace& space, const MeshTolerance& tol) {
      return gradient_suite(space, c, tol, seed);
    };
  } else if (command == "check-transport") {
    const auto c = transport_config(times, section(checks, "transport"));
    job.suite = "transport";
    job.echo = to_json(c);
    job.run = [c, seed](const DynamicSpace& space, const MeshTolerance&) { return transport_suite(space, c, seed); };
    if (ex.plans && c.pairs > 0) {
      job.exports = [c, seed](const DynamicSpace& space, const fs::path& dir) {
        const auto [mu, nu] = transport_measure_pair(space, c, seed, 0);
        const Matrix d = distance_at(space, c.t);
        for (double p : c.ps) {
          write_plan_csv(dir / ("plan_p" + exponent_tag(p) + ".csv"), wasserstein(d, p, mu, nu).plan,
                         kFeasibilityDust);
        }
      };
    }
  } else if (command == "check-bochner") {
    const auto c = bochner_config(times, section(checks, "bochner"));
    job.suite = "bochner";
    job.uses_tolerance = true;
    job.echo = to_json(c);
    job.run = [c, seed](const DynamicSpace& space, const MeshTolerance& tol) {
      return bochner_suite(space, c, tol, seed);
    };
  } else if (command == "check-convexity") {
    const auto c = convexity_config(times, section(checks, "convexity"));
    job.suite = "convexity";
    job.uses_tolerance = true;
    job.echo = to_json(c);
    job.run = [c, seed](const DynamicSpace& space, const MeshTolerance& tol) {
      return convexity_suite(space, c, tol, seed);
    };
  } else {
    const auto c = coupling_config(times, section(checks, "coupling"));
    job.suite = "coupling";
    job.echo = to_json(c);
    job.run = [c, seed](const DynamicSpace& space, const MeshTolerance&) { return coupling_suite(space, c, seed); };
    if (ex.ensemble_paths > 0) {
      job.exports = [c, seed, n = ex.ensemble_paths](const DynamicSpace& space, const fs::path& dir) {
        CouplingOptions opts;
        opts.mode = c.mode;
        opts.p = c.p;
        opts.steps = c.steps;
        const auto times = dyadic_times(space, c.t, c.level);
        write_ensemble_csv(dir / "ensemble.csv", sample_coupled_bm(space, vertex_at(space, c.x), vertex_at(space, c.y),
                                                                   c.t, c.level, times, n, seed, opts));
      };
    }
  }
  return job;
}

json to_json(const Calibration& c) {
  return {{"spacing", c.spacing}, {"defect", c.defect}, {"floor", c.floor}, {"constant", c.constant}};
}

json write_tables(const std::vector<Table>& tables, const fs::path& dir, const fs::path& root) {
  json files = json::array();
  for (const auto& t : tables) {
    const fs::path path = dir / (t.name + ".csv");
    write_table_csv(path, t);
    files.push_back(fs::relative(path, root).string());
  }
  return files;
}

void print_result(std::ostream& out, const std::string& label, const SuiteResult& r) {
  out << label << ": " << (r.pass ? "PASS" : "FAIL") << ' ' << r.summary.dump() << '\n';
}

int run_check(const std::string& command, const Flags& flags, std::ostream& out) {
  const json config = load_config(flags.config);
  const json space_config = complete_space_config(config.at("space"));
  const json rng = section(config, "rng");
  std::uint64_t seed = kDefaultSeed;
  if (rng.is_object() && rng.contains("seed")) {
    require(rng.at("seed").is_number_unsigned(), ErrorKind::invalid_input, "rng.seed must be a non-negative integer");
    seed = rng.at("seed").get<std::uint64_t>();
  }
  if (flags.seed) seed = *flags.seed;
  require(flags.tol_scale > 0.0, ErrorKind::invalid_input, "--tol-scale must be positive");
  require(flags.refine >= 0, ErrorKind::invalid_input, "--refine must be non-negative");

  const json times = section(config, "times");
  const json checks = section(config, "checks");
  CalibrationConfig calibration = calibration_config(times, section(checks, "tolerance"));
  const Job job = make_job(command, config, seed);
  if (!job.uses_tolerance) {
    calibration.gradient_trials = 0;
    calibration.bochner_trials = 0;
  }

  const fs::path root(flags.out);
  fs::create_directories(root);
  json report = {{"command", command},
                 {"suite", job.suite},
                 {"version", version_string()},
                 {"seed", seed},
                 {"tol_scale", flags.tol_scale},
                 {"refine", flags.refine},
                 {"config",
                  {{"space", space_config},
                   {"times", times.is_null() ? json::object() : times},
                   {"checks", {{"tolerance", to_json(calibration)}, {job.suite, job.echo}}},
                   {"rng", {{"seed", seed}}},
                   {"export", to_json(export_config(section(config, "export")))}}}};

  bool pass = true;
  if (flags.refine > 0) {
    const auto rr = run_refinement(space_config, flags.refine, calibration, flags.tol_scale, seed, job.run);
    json levels = json::array();
    for (std::size_t k = 0; k < rr.levels.size(); ++k) {
      const fs::path dir = root / ("level" + std::to_string(k));
      json level = to_json(rr.levels[k]);
      level["files"] = write_tables(rr.levels[k].tables, dir, root);
      levels.push_back(std::move(level));
      print_result(out, command + " level " + std::to_string(k), rr.levels[k]);
    }
    if (job.exports) job.exports(make_space(space_config), root / "level0");
    report["levels"] = levels;
    report["tolerance_order"] = std::isfinite(rr.tolerance_order) ? json(rr.tolerance_order) : json(nullptr);
    report["trend"] = write_tables({rr.trend}, root, root);
    pass = rr.pass;
    out << command << " tolerance order " << report["tolerance_order"].dump() << '\n';
  } else {
    const DynamicSpace space = make_space(space_config);
    Calibration cal;
    if (space.is_grid() && job.uses_tolerance && space_config.contains("n")) {
      cal = calibrate_mesh_constant(make_space(flat_companion(space_config)), calibration, seed);
    } else if (space.is_grid() && job.uses_tolerance && space.static_weight()) {
      cal = calibrate_mesh_constant(space, calibration, seed);
    } else {
      cal.spacing = space.is_grid() ? space.spacing() : 1.0;
      cal.floor = calibration.c_floor;
      cal.constant = calibration.c_floor;
    }
    const MeshTolerance tol{cal.constant, flags.tol_scale};
    const SuiteResult result = job.run(space, tol);
    report["calibration"] = to_json(cal);
    report["mesh_tolerance"] = tol.at(cal.spacing);
    report["result"] = to_json(result);
    report["files"] = write_tables(result.tables, root, root);
    if (job.exports) job.exports(space, root);
    pass = result.pass;
    print_result(out, command, result);
  }
  report["pass"] = pass;
  const fs::path path = root / (command + ".json");
  std::ofstream file(path);
  require(file.good(), ErrorKind::invalid_input, "cannot write " + path.string());
  file << std::setw(2) << report << '\n';
  return pass ? 0 : 1;
}

int run_init(const std::string& path, const std::string& space, std::ostream& out) {
  const json config = default_config(space);
  if (path.empty()) {
    out << std::setw(2) << config << '\n';
    return 0;
  }
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream file(p);
  require(file.good(), ErrorKind::invalid_input, "cannot write " + path);
  file << std::setw(2) << config << '\n';
  return 0;
}

int run_report(const std::string& dir, std::ostream& out, std::ostream& err) {
  if (!fs::is_directory(dir)) {
    err << "report: no results directory " << dir << '\n';
    return 2;
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<json> reports;
  for (const auto& f : files) {
    std::ifstream in(f);
    const json j = json::parse(in, nullptr, false);
    if (j.is_object() && j.contains("command") && j.contains("pass")) reports.push_back(j);
  }
  if (reports.empty()) {
    err << "report: no reports in " << dir << '\n';
    return 2;
  }
  bool pass = true;
  for (const auto& r : reports) {
    const bool ok = r.at("pass").get<bool>();
    pass = pass && ok;
    const json& space = r.at("config").at("space");
    out << std::left << std::setw(18) << r.at("command").get<std::string>() << ' ' << (ok ? "PASS" : "FAIL") << "  "
        << space.value("name", "?") << "  seed " << r.value("seed", 0ULL) << "  " << r.value("version", "")
        << '\n';
    const auto print_checks = [&](const json& result, const std::string& indent) {
      out << indent << "summary " << result.at("summary").dump() << '\n';
      for (const auto& c : result.at("checks")) {
        if (!c.is_object()) continue;
        const bool enforced = c.value("enforced", true);
        out << indent << "  " << std::left << std::setw(34) << c.value("name", "?")
            << (enforced ? (c.value("pass", false) ? "pass" : "FAIL") : "info") << '\n';
      }
    };
    if (r.contains("result")) print_checks(r.at("result"), "  ");
    if (r.contains("levels")) {
      for (std::size_t k = 0; k < r.at("levels").size(); ++k) {
        out << "  level " << k << '\n';
        print_checks(r.at("levels")[k], "    ");
      }
      out << "  tolerance order " << r.at("tolerance_order").dump() << '\n';
    }
  }
  out << (pass ? "all reports pass" : "some reports fail") << '\n';
  return pass ? 0 : 1;
}

}  // namespace

std::string version_string() { return SRFLAB_VERSION; }

json default_config(const std::string& space_name) {
  const json times = {{"s", 0.1}, {"t", 0.5}, {"steps", 32}};
  const json none = json::object();
  // Two atoms have no diffusive regime, so moment scaling is off there.
  const json coupling = space_name == "two_point" ? json{{"scaling", false}} : none;
  return {{"space", complete_space_config({{"name", space_name}})},
          {"times", times},
          {"checks",
           {{"tolerance", without(to_json(calibration_config(times, none)), {"s", "t", "steps"})},
            {"heat", without(to_json(heat_config(times, none)), {"s", "t", "steps"})},
            {"gradient", to_json(gradient_config(times, none))},
            {"transport", without(to_json(transport_config(times, none)), {"s", "t", "steps"})},
            {"bochner", without(to_json(bochner_config(times, none)), {"t"})},
            {"convexity", without(to_json(convexity_config(times, none)), {"t"})},
            {"coupling", to_json(coupling_config(times, coupling))}}},
          {"rng", {{"seed", kDefaultSeed}}},
          {"export", to_json(ExportConfig{})}};
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Discrete super-Ricci flow checks"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1, 1);

  std::string init_path;
  std::string init_space = "homothetic";
  auto* init = app.add_subcommand("init", "Write a config template with every default");
  init->add_option("--config", init_path, "Output path (stdout if omitted)");
  init->add_option("--space", init_space, "Space factory name")->check(CLI::IsMember(space_names()));

  Flags flags;
  std::uint64_t seed = 0;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"check-heat", "Chapman-Kolmogorov, Markov property, duality, energy estimate"},
      {"check-gradient", "Gradient estimates over exponents and time pairs"},
      {"check-transport", "Transport estimates over exponents and measure pairs"},
      {"check-bochner", "Dynamic Bochner scan"},
      {"check-convexity", "Dynamic convexity of the entropy (1D grids)"},
      {"simulate-coupling", "Coupled backward Brownian motions: contraction, scaling, marginals"}};
  std::vector<CLI::App*> checks;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "Config file (JSON)")->required();
    sub->add_option("--out", flags.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", seed, "RNG seed (overrides rng.seed)");
    sub->add_option("--tol-scale", flags.tol_scale, "Multiplier on the mesh tolerance")->capture_default_str();
    sub->add_option("--refine", flags.refine, "Run at K successive grid refinements")->capture_default_str();
    checks.push_back(sub);
  }

  std::string report_dir = "results";
  auto* report = app.add_subcommand("report", "Summarize the JSON reports in a results directory");
  report->add_option("dir", report_dir, "Results directory");
  report->add_option("--out", report_dir, "Results directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (init->parsed()) return run_init(init_path, init_space, out);
    if (report->parsed()) return run_report(report_dir, out, err);
    for (auto* sub : checks) {
      if (!sub->parsed()) continue;
      if (sub->count("--seed") > 0) flags.seed = seed;
      return run_check(sub->get_name(), flags, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace srflab
