#include "srflab/suites.hpp"

#include "srflab/catalog.hpp"
#include "srflab/flows.hpp"
#include "srflab/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace srflab {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json exponent_json(double p) { return std::isinf(p) ? json("inf") : json(p); }

double exponent_from(const json& v) {
  if (v.is_string()) {
    require(v.get<std::string>() == "inf", ErrorKind::invalid_input, "exponent must be a number or \"inf\"");
    return kInfiniteExponent;
  }
  return v.get<double>();
}

double spacing_of(const DynamicSpace& space) { return space.is_grid() ? space.spacing() : 1.0; }

// Typed access to a config section; finish() rejects keys that were never read.
class Reader {
 public:
  Reader(const json& section, std::string name) : section_(section), name_(std::move(name)) {
    require(section_.is_null() || section_.is_object(), ErrorKind::invalid_input, name_ + " must be an object");
  }

  template <typename T>
  Reader& get(const char* key, T& target) {
    known_.emplace_back(key);
    if (section_.is_object() && section_.contains(key)) {
      try {
        target = section_.at(key).get<T>();
      } catch (const json::exception& e) {
        throw Error(ErrorKind::invalid_input, name_ + "." + key + ": " + e.what());
      }
    }
    return *this;
  }

  Reader& exponent(const char* key, double& target) {
    known_.emplace_back(key);
    if (section_.is_object() && section_.contains(key)) target = exponent_from(section_.at(key));
    return *this;
  }

  Reader& exponents(const char* key, std::vector<double>& target) {
    known_.emplace_back(key);
    if (section_.is_object() && section_.contains(key)) {
      require(section_.at(key).is_array(), ErrorKind::invalid_input, name_ + "." + key + " must be an array");
      target.clear();
      for (const auto& v : section_.at(key)) target.push_back(exponent_from(v));
    }
    return *this;
  }

  void finish() const {
    if (!section_.is_object()) return;
    for (const auto& [key, value] : section_.items()) {
      require(std::find(known_.begin(), known_.end(), key) != known_.end(), ErrorKind::invalid_input,
              "unknown key " + name_ + "." + key);
    }
  }

 private:
  const json& section_;
  std::string name_;
  std::vector<std::string> known_;
};

struct Times {
  double s = 0.1;
  double t = 0.5;
  int steps = 32;
};

Times read_times(const json& times) {
  Times out;
  Reader(times, "times").get("s", out.s).get("t", out.t).get("steps", out.steps).finish();
  return out;
}

CheckReport record(std::string name, double slack, double tolerance, double scale, json params = json::object()) {
  CheckReport r;
  r.name = std::move(name);
  r.slack = slack;
  r.tolerance = tolerance;
  r.scale = scale;
  r.params = std::move(params);
  r.pass = slack >= -tolerance;
  return r;
}

double estimate_L(const DynamicSpace& space) {
  const auto report = check_assumptions(space, std::numeric_limits<double>::infinity(),
                                        std::numeric_limits<double>::infinity(), AssumptionSample::uniform(space, 16));
  return std::max(report.f_lip_time, report.d_log_lip);
}

}  // namespace

std::size_t vertex_at(const DynamicSpace& space, double coordinate) {
  if (!space.is_grid()) {
    require(coordinate >= 0.0 && coordinate < static_cast<double>(space.size()), ErrorKind::invalid_input,
            "vertex index out of range");
    return static_cast<std::size_t>(coordinate);
  }
  const auto& xs = space.coordinates();
  std::size_t best = 0;
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (std::abs(xs[i] - coordinate) < std::abs(xs[best] - coordinate)) best = i;
  return best;
}

void SuiteResult::add(const CheckReport& report) {
  checks.push_back(srflab::to_json(report));
  pass = pass && report.pass;
}

void SuiteResult::add_record(json record, bool enforced) {
  record["enforced"] = enforced;
  if (enforced) pass = pass && record.value("pass", false);
  checks.push_back(std::move(record));
}

json to_json(const SuiteResult& result) {
  json tables = json::array();
  for (const auto& t : result.tables) tables.push_back(t.name);
  return {{"suite", result.name}, {"pass", result.pass}, {"summary", result.summary}, {"checks", result.checks},
          {"tables", tables}};
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), ErrorKind::invalid_size, "log_log_slope: size mismatch");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  const double denom = n * sxx - sx * sx;
  if (n < 2 || std::abs(denom) <= 1e-300) return kNaN;
  return (n * sxy - sx * sy) / denom;
}

Calibration calibrate_mesh_constant(const DynamicSpace& flat, const CalibrationConfig& config, std::uint64_t seed) {
  require(flat.is_grid(), ErrorKind::unsupported_space, "calibration needs a grid");
  require(config.c_floor > 0.0, ErrorKind::invalid_parameter, "calibration floor must be positive");
  Calibration out;
  out.spacing = flat.spacing();
  out.floor = config.c_floor;
  double worst = 0.0;
  for (int i = 0; i < config.gradient_trials; ++i) {
    const double eps = 0.05 * std::pow(4.0, i % 4);
    const Field u = random_smooth_field(flat, config.s, seed, static_cast<std::uint64_t>(i), eps);
    for (double alpha : {0.5, 1.0}) {
      const auto r = gradient_estimate_check(flat, u, config.s, config.t, alpha, config.steps);
      worst = std::min(worst, r.normalized_slack());
    }
  }
  if (config.bochner_trials > 0) {
    const auto scan = bochner_scan(flat, config.t, config.bochner_trials, seed, 1e-4);
    worst = std::min(worst, scan.normalized_slack());
  }
  out.defect = -worst;
  out.constant = std::max(out.floor, out.defect / out.spacing);
  return out;
}

SuiteResult heat_suite(const DynamicSpace& space, const HeatSuiteConfig& c, std::uint64_t seed) {
  SuiteResult out;
  out.name = "heat";
  const double r = c.s;
  const double t = c.t;
  const double mid = 0.5 * (r + t);

  const Matrix whole = propagator_matrix(space, r, t, 2 * c.steps).matrix;
  const Matrix upper = propagator_matrix(space, mid, t, c.steps).matrix;
  const Matrix lower = propagator_matrix(space, r, mid, c.steps).matrix;
  const double nested = (whole - upper * lower).cwiseAbs().maxCoeff();
  out.add(record("chapman_kolmogorov_nested", -nested, c.ck_tol, 1.0,
                 {{"deviation", nested}, {"steps_whole", 2 * c.steps}, {"steps_halves", c.steps}}));

  // Halves with 3N/2 + N/2 steps do not share the node set of the 2N-step grid.
  const int a = std::max(1, (3 * c.steps) / 2);
  const int b = std::max(1, c.steps / 2);
  const Matrix coarse = propagator_matrix(space, mid, t, a).matrix * propagator_matrix(space, r, mid, b).matrix;
  const double non_nested = (whole - coarse).cwiseAbs().maxCoeff();
  out.add_record({{"name", "chapman_kolmogorov_non_nested"}, {"deviation", non_nested}, {"steps_upper", a},
                  {"steps_lower", b}},
                 false);

  const double rows = (whole.rowwise().sum().array() - 1.0).abs().maxCoeff();
  out.add(record("conservation_of_constants", -rows, 1e-10, 1.0, {{"max_row_sum_error", rows}}));
  const double negative = std::min(0.0, whole.minCoeff());
  out.add(record("kernel_nonnegativity", negative, 1e-12, 1.0, {{"min_entry", whole.minCoeff()}}));

  const HeatKernel kernel = heat_kernel(space, r, t, 2 * c.steps);
  const Vector m_r = measure_at(space, r).masses;
  const Vector m_t = measure_at(space, t).masses;
  const double markov = ((kernel.values * m_r).array() - 1.0).abs().maxCoeff();
  out.add(record("kernel_markov_normalization", -markov, c.markov_tol, 1.0, {{"deviation", markov}}));

  double duality = 0.0;
  double adjoint = 0.0;
  double adjoint_scale = 0.0;
  double ibp = 0.0;
  double ibp_scale = 0.0;
  double max_principle = 0.0;
  for (int i = 0; i < c.trials; ++i) {
    const auto idx = static_cast<std::uint64_t>(i);
    const Field g = random_nonnegative_field(space, t, seed, idx);
    const Field u = random_smooth_field(space, r, seed, idx);
    const Field v = random_smooth_field(space, r, seed, idx + 1000);

    const Vector gm = g.values.cwiseProduct(m_t);
    const Measure mu(gm / gm.sum(), true);
    const Vector lhs = dual_propagate(space, mu, t, r, 2 * c.steps).masses;
    const Vector pstar = adjoint_propagate(space, g, t, r, 2 * c.steps).values;
    const Vector rhs = pstar.cwiseProduct(m_r) / gm.sum();
    duality = std::max(duality, (lhs - rhs).cwiseAbs().maxCoeff() / std::max(rhs.cwiseAbs().maxCoeff(), 1e-300));

    const Vector pu = whole * u.values;
    const double left = weighted_inner(pu, g.values, m_t);
    const double right = weighted_inner(u.values, pstar, m_r);
    adjoint = std::max(adjoint, std::abs(left - right));
    adjoint_scale = std::max(adjoint_scale, std::abs(left) + std::abs(right));

    for (double at : {r, t}) {
      const Vector m = measure_at(space, at).masses;
      const double lap = weighted_inner(laplacian_at(space, at, u).values, v.values, m);
      const double gam = gamma_at(space, at, u, v).values.dot(m);
      ibp = std::max(ibp, std::abs(lap + gam));
      ibp_scale = std::max(ibp_scale, gamma_at(space, at, u, u).values.dot(m) + gamma_at(space, at, v, v).values.dot(m));
    }

    const double lo = u.values.minCoeff();
    const double hi = u.values.maxCoeff();
    max_principle = std::min({max_principle, pu.minCoeff() - lo, hi - pu.maxCoeff()});
  }
  out.add(record("duality_dual_vs_adjoint", -duality, c.duality_tol, 1.0, {{"relative_deviation", duality}}));
  out.add(record("adjointness", -adjoint, c.duality_tol * std::max(1.0, adjoint_scale), std::max(1.0, adjoint_scale),
                 {{"deviation", adjoint}}));
  out.add(record("integration_by_parts", -ibp, c.ibp_tol * std::max(1.0, ibp_scale), std::max(1.0, ibp_scale),
                 {{"deviation", ibp}}));
  out.add(record("maximum_principle", max_principle, 1e-12, 1.0));

  const double L = c.energy_L >= 0.0 ? c.energy_L : estimate_L(space);
  double energy_worst = std::numeric_limits<double>::infinity();
  double energy_scale = 1.0;
  Table energy_table{"heat_energy", {"trial", "lhs", "rhs", "slack"}, {}};
  for (int i = 0; i < c.trials; ++i) {
    const Field u = random_smooth_field(space, r, seed, static_cast<std::uint64_t>(i) + 2000);
    const auto e = energy_estimate_check(space, u, r, t, L, c.energy_steps);
    energy_table.add({i, e.lhs, e.rhs, e.slack});
    if (e.slack / std::max(e.rhs, 1e-300) < energy_worst / energy_scale) {
      energy_worst = e.slack;
      energy_scale = std::max(e.rhs, 1e-300);
    }
  }
  out.add(record("energy_estimate", energy_worst, c.energy_tol * energy_scale, energy_scale,
                 {{"L", L}, {"steps", c.energy_steps}}));
  out.tables.push_back(std::move(energy_table));

  if (!c.pstar_h.empty() && t - *std::max_element(c.pstar_h.begin(), c.pstar_h.end()) >= space.horizon().begin) {
    const Field u = random_smooth_field(space, t, seed, 3000);
    const Field g = random_nonnegative_field(space, t, seed, 3001);
    const auto p = pstar_limit_check(space, u, g, t, c.pstar_h, 4);
    Table table{"heat_pstar_limit", {"h", "quotient", "error"}, {}};
    for (std::size_t k = 0; k < p.h_values.size(); ++k) table.add({p.h_values[k], p.quotients[k], p.errors[k]});
    out.tables.push_back(std::move(table));
    out.add_record({{"name", "pstar_limit"}, {"target", p.target}, {"order", number_or_null(p.order)}}, false);
  }

  out.summary = {{"chapman_kolmogorov_nested", nested},
                 {"chapman_kolmogorov_non_nested", non_nested},
                 {"markov", markov},
                 {"duality", duality},
                 {"integration_by_parts", ibp},
                 {"energy_L", L}};
  return out;
}

SuiteResult gradient_suite(const DynamicSpace& space, const GradientSuiteConfig& c, const MeshTolerance& tol,
                           std::uint64_t seed) {
  SuiteResult out;
  out.name = "gradient";
  CheckOptions opts;
  opts.tolerance.relative = tol.at(spacing_of(space));
  Table table{"gradient_slack", {"alpha", "s", "t", "trial", "slack", "normalized_slack", "tolerance", "pass"}, {}};
  double worst = std::numeric_limits<double>::infinity();
  int failures = 0;
  json worst_report;
  for (const auto& [s, t] : c.intervals) {
    for (int i = 0; i < c.trials; ++i) {
      const double eps = c.eps * std::pow(4.0, i % 4);
      const Field u = random_smooth_field(space, s, seed, static_cast<std::uint64_t>(i), eps);
      for (double alpha : c.alphas) {
        auto r = gradient_estimate_check(space, u, s, t, alpha, c.steps, opts);
        r.location.trial = i;
        table.add({alpha, s, t, i, r.slack, r.normalized_slack(), r.tolerance, r.pass});
        if (!r.pass) ++failures;
        if (r.normalized_slack() < worst) {
          worst = r.normalized_slack();
          worst_report = to_json(r);
        }
        out.pass = out.pass && r.pass;
      }
    }
  }
  out.checks.push_back(worst_report);
  out.summary = {{"worst_normalized_slack", worst},
                 {"relative_tolerance", opts.tolerance.relative},
                 {"failures", failures},
                 {"checks", table.rows.size()}};
  out.tables.push_back(std::move(table));
  return out;
}

std::pair<Measure, Measure> transport_measure_pair(const DynamicSpace& space, const TransportSuiteConfig& c,
                                                   std::uint64_t seed, int i) {
  const auto a = 2 * static_cast<std::uint64_t>(i);
  if (c.family == "noise") return {random_measure(space, c.t, seed, a, c.eps), random_measure(space, c.t, seed, a + 1, c.eps)};
  if (i % 2 == 0 && space.is_grid()) {
    return {random_gaussian_measure(space, c.t, seed, a, c.eps), random_gaussian_measure(space, c.t, seed, a + 1, c.eps)};
  }
  auto engine = stream_engine(seed, a, 5);
  std::uniform_int_distribution<std::size_t> pick(0, space.size() - 1);
  const std::size_t x = pick(engine);
  std::size_t y = pick(engine);
  while (y == x) y = pick(engine);
  return {Measure::dirac(space.size(), x), Measure::dirac(space.size(), y)};
}

SuiteResult transport_suite(const DynamicSpace& space, const TransportSuiteConfig& c, std::uint64_t seed) {
  SuiteResult out;
  out.name = "transport";
  CheckOptions opts;
  opts.tolerance.relative = c.relative;
  Table table{"transport_slack", {"p", "pair", "w_t", "w_s", "slack", "normalized_slack", "pass"}, {}};
  double worst = std::numeric_limits<double>::infinity();
  json worst_report;
  int failures = 0;
  for (int i = 0; i < c.pairs; ++i) {
    const auto [mu, nu] = transport_measure_pair(space, c, seed, i);
    for (double p : c.ps) {
      auto r = transport_estimate_check(space, mu, nu, c.s, c.t, p, c.steps, opts);
      r.location.trial = i;
      table.add({exponent_json(p), i, r.params.value("w_t", kNaN), r.params.value("w_s", kNaN), r.slack,
                 r.normalized_slack(), r.pass});
      if (!r.pass) ++failures;
      if (r.normalized_slack() < worst) {
        worst = r.normalized_slack();
        worst_report = to_json(r);
      }
      out.pass = out.pass && r.pass;
    }
  }
  out.checks.push_back(worst_report);
  out.summary = {{"worst_normalized_slack", worst}, {"relative_tolerance", c.relative}, {"failures", failures}};
  out.tables.push_back(std::move(table));
  return out;
}

SuiteResult bochner_suite(const DynamicSpace& space, const BochnerSuiteConfig& c, const MeshTolerance& tol,
                          std::uint64_t seed) {
  SuiteResult out;
  out.name = "bochner";
  CheckOptions opts;
  opts.tolerance.relative = tol.at(spacing_of(space));
  const auto scan = bochner_scan(space, c.t, c.trials, seed, c.delta, opts, c.eps);
  out.add(scan);

  if (scan.params.contains("witness")) {
    const auto& w = scan.params.at("witness");
    Table table{"bochner_witness", {"vertex", "coordinate", "u", "g"}, {}};
    const auto u = w.at("u").get<std::vector<double>>();
    const auto g = w.at("g").get<std::vector<double>>();
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double x = space.is_grid() ? space.coordinates()[i] : static_cast<double>(i);
      table.add({i, x, u[i], g[i]});
    }
    out.tables.push_back(std::move(table));
  }

  double self_worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < c.self_improvement_trials; ++i) {
    const Field u = random_smooth_field(space, c.t, seed, static_cast<std::uint64_t>(i) + 5000,
                                        c.eps * std::pow(4.0, i % 4), 8);
    const auto r = self_improvement_check(space, c.t, u, c.delta, opts);
    self_worst = std::min(self_worst, r.normalized_slack());
  }
  if (c.self_improvement_trials > 0) {
    out.add_record({{"name", "self_improvement"}, {"worst_normalized_slack", self_worst}}, false);
  }
  out.summary = {{"worst_normalized_slack", scan.normalized_slack()},
                 {"relative_tolerance", opts.tolerance.relative},
                 {"trials", c.trials}};
  return out;
}

SuiteResult convexity_suite(const DynamicSpace& space, const ConvexitySuiteConfig& c, const MeshTolerance& tol,
                            std::uint64_t seed) {
  require(!c.dt_steps.empty(), ErrorKind::invalid_parameter, "convexity suite needs at least one dt_step");
  SuiteResult out;
  out.name = "convexity";
  const double mesh = tol.scale * tol.constant * (spacing_of(space) + c.da);
  Table table{"convexity_sensitivity",
              {"pair", "da", "dt_step", "entropy_gap", "w2_backward_derivative", "w2", "slack", "tolerance", "pass"},
              {}};
  double worst = std::numeric_limits<double>::infinity();
  int inconclusive = 0;
  bool pass_all = true;
  for (int i = 0; i < c.pairs; ++i) {
    const Measure mu0 = random_gaussian_measure(space, c.t, seed, 2 * static_cast<std::uint64_t>(i), c.eps);
    const Measure mu1 = random_gaussian_measure(space, c.t, seed, 2 * static_cast<std::uint64_t>(i) + 1, c.eps);
    for (std::size_t k = 0; k < c.dt_steps.size(); ++k) {
      const auto r = dynamic_convexity_check(space, mu0, mu1, c.t, c.da, c.dt_steps[k]);
      if (r.inconclusive) {
        ++inconclusive;
        table.add({i, c.da, c.dt_steps[k], nullptr, nullptr, nullptr, nullptr, nullptr, "inconclusive"});
        continue;
      }
      const double threshold = mesh * (1.0 + r.w2_at_t * r.w2_at_t);
      const bool pass = r.slack >= -threshold;
      table.add({i, c.da, c.dt_steps[k], r.entropy_derivative_gap, r.w2_backward_derivative, r.w2_at_t, r.slack,
                 threshold, pass});
      if (k == 0) {
        pass_all = pass_all && pass;
        worst = std::min(worst, r.slack / (1.0 + r.w2_at_t * r.w2_at_t));
      }
    }
  }
  out.summary = {{"worst_scaled_slack", number_or_null(worst)},
                 {"tolerance_per_unit", mesh},
                 {"mesh_constant", tol.constant},
                 {"da", c.da},
                 {"dt_step", c.dt_steps.front()},
                 {"inconclusive", inconclusive}};
  out.add_record({{"name", "dynamic-convexity"},
                  {"worst_scaled_slack", number_or_null(worst)},
                  {"tolerance_per_unit", mesh},
                  {"pairs", c.pairs},
                  {"inconclusive", inconclusive},
                  {"pass", pass_all}},
                 true);
  out.tables.push_back(std::move(table));
  return out;
}

SuiteResult coupling_suite(const DynamicSpace& space, const CouplingSuiteConfig& c, std::uint64_t seed) {
  SuiteResult out;
  out.name = "coupling";
  const std::size_t x = vertex_at(space, c.x);
  const std::size_t y = vertex_at(space, c.y);
  const double margin = c.margin_cells * spacing_of(space);
  const auto times = dyadic_times(space, c.t, c.level);
  CouplingOptions opts;
  opts.mode = c.mode;
  opts.p = c.p;
  opts.steps = c.steps;
  const auto paths = sample_coupled_bm(space, x, y, c.t, c.level, times, c.paths, seed, opts);
  const auto stats = contraction_stats(paths, space, margin);
  Table table{"coupling_contraction", {"time", "violation_fraction", "mean_excess", "max_excess"}, {}};
  for (std::size_t k = 0; k < stats.times.size(); ++k) {
    table.add({stats.times[k], stats.violation_fraction[k], stats.mean_excess[k], stats.max_excess[k]});
  }
  out.tables.push_back(std::move(table));
  const bool contraction_pass = stats.overall_violation_fraction <= c.max_violation;
  out.add_record({{"name", "contraction"},
                  {"mode", to_string(c.mode)},
                  {"x", x},
                  {"y", y},
                  {"reference_distance", stats.reference_distance},
                  {"margin", margin},
                  {"violation_fraction", stats.overall_violation_fraction},
                  {"max_excess", stats.overall_max_excess},
                  {"threshold", c.max_violation},
                  {"pass", contraction_pass}},
                 true);
  out.summary["violation_fraction"] = stats.overall_violation_fraction;

  if (c.control && c.mode != CouplingMode::independent) {
    CouplingOptions control = opts;
    control.mode = CouplingMode::independent;
    const auto ind = sample_coupled_bm(space, x, y, c.t, c.level, times, c.paths, seed, control);
    const double fraction = contraction_stats(ind, space, margin).overall_violation_fraction;
    // Both zero: the space admits no violation at this margin, so the control says nothing.
    const bool inconclusive = fraction == 0.0 && stats.overall_violation_fraction == 0.0;
    const bool pass = fraction >= c.control_ratio * stats.overall_violation_fraction && fraction > 0.0;
    out.add_record({{"name", "independent_control"},
                    {"inconclusive", inconclusive},
                    {"violation_fraction", fraction},
                    {"ratio", stats.overall_violation_fraction > 0.0
                                  ? json(fraction / stats.overall_violation_fraction)
                                  : json(nullptr)},
                    {"required_ratio", c.control_ratio},
                    {"pass", pass}},
                   !inconclusive);
    out.summary["control_violation_fraction"] = fraction;
  }

  if (c.scaling || c.marginal) {
    std::vector<double> grid{c.scaling_t};
    for (double g : c.gaps) grid.push_back(grid.back() - g);
    const std::size_t start = vertex_at(space, c.scaling_start);
    const Measure terminal = Measure::dirac(space.size(), start);
    const auto single = sample_backward_bm(space, terminal, grid, c.paths, c.steps, seed + 1);
    if (c.scaling) {
      Table scaling{"kolmogorov_scaling", {"p", "gap", "moment"}, {}};
      for (double p : c.scaling_p) {
        const auto r = kolmogorov_scaling(single, space, p);
        for (std::size_t k = 0; k < r.gaps.size(); ++k) scaling.add({p, r.gaps[k], r.moments[k]});
        const bool pass = !r.degenerate && r.relative_error <= c.scaling_tolerance;
        out.add_record({{"name", "kolmogorov_scaling"},
                        {"p", p},
                        {"slope", number_or_null(r.slope)},
                        {"target", r.target},
                        {"relative_error", number_or_null(r.relative_error)},
                        {"tolerance", c.scaling_tolerance},
                        {"pass", pass}},
                       true);
      }
      out.tables.push_back(std::move(scaling));
    }
    if (c.marginal) {
      Table marginal{"marginal_tv", {"time", "tv", "bound"}, {}};
      const double bound = 3.0 * std::sqrt(static_cast<double>(space.size()) / c.paths);
      Measure law = terminal;
      double worst = 0.0;
      for (std::size_t k = 1; k < grid.size(); ++k) {
        law = dual_propagate(space, law, grid[k - 1], grid[k], c.steps);
        const double tv = total_variation(empirical_law(single, space.size(), static_cast<Eigen::Index>(k)), law);
        marginal.add({grid[k], tv, bound});
        worst = std::max(worst, tv);
      }
      out.add_record({{"name", "marginal_consistency"}, {"worst_tv", worst}, {"bound", bound}, {"pass", worst <= bound}},
                     true);
      out.tables.push_back(std::move(marginal));
    }
  }
  return out;
}

RefinementResult run_refinement(const json& space_config, int count, const CalibrationConfig& calibration,
                                double tol_scale, std::uint64_t seed, const SuiteRunner& runner) {
  require(count >= 1, ErrorKind::invalid_parameter, "refinement needs at least one level");
  RefinementResult out;
  out.trend = Table{"refinement_trend",
                    {"level", "n", "spacing", "mesh_constant", "flat_defect", "tolerance", "worst_normalized_slack",
                     "pass"},
                    {}};
  std::vector<double> dx;
  std::vector<double> tols;
  for (int level = 0; level < count; ++level) {
    const json config = refine_space_config(space_config, level);
    const DynamicSpace space = make_space(config);
    require(space.is_grid(), ErrorKind::unsupported_space, "refinement needs a grid space");
    const DynamicSpace flat = make_space(flat_companion(config));
    const auto cal = calibrate_mesh_constant(flat, calibration, seed);
    const MeshTolerance tol{cal.constant, tol_scale};
    auto result = runner(space, tol);
    const double worst = result.summary.value("worst_normalized_slack", kNaN);
    out.trend.add({level, space.size(), space.spacing(), cal.constant, cal.defect, tol.at(space.spacing()),
                   number_or_null(worst), result.pass});
    dx.push_back(space.spacing());
    tols.push_back(tol.at(space.spacing()));
    out.pass = out.pass && result.pass;
    out.levels.push_back(std::move(result));
  }
  out.tolerance_order = count >= 2 ? log_log_slope(dx, tols) : kNaN;
  if (count >= 2) out.pass = out.pass && out.tolerance_order >= 1.0 - 1e-9;
  return out;
}

HeatSuiteConfig heat_config(const json& times, const json& section) {
  const Times tm = read_times(times);
  HeatSuiteConfig c;
  c.s = tm.s;
  c.t = tm.t;
  c.steps = tm.steps;
  Reader(section, "checks.heat")
      .get("trials", c.trials)
      .get("energy_L", c.energy_L)
      .get("energy_steps", c.energy_steps)
      .get("pstar_h", c.pstar_h)
      .get("ck_tol", c.ck_tol)
      .get("markov_tol", c.markov_tol)
      .get("duality_tol", c.duality_tol)
      .get("ibp_tol", c.ibp_tol)
      .get("energy_tol", c.energy_tol)
      .finish();
  return c;
}

GradientSuiteConfig gradient_config(const json& times, const json& section) {
  const Times tm = read_times(times);
  GradientSuiteConfig c;
  c.intervals = {{tm.s, tm.t}, {tm.s, tm.s + 0.25 * (tm.t - tm.s)}};
  c.steps = tm.steps;
  Reader(section, "checks.gradient")
      .get("alphas", c.alphas)
      .get("intervals", c.intervals)
      .get("trials", c.trials)
      .get("steps", c.steps)
      .get("eps", c.eps)
      .finish();
  return c;
}

TransportSuiteConfig transport_config(const json& times, const json& section) {
  const Times tm = read_times(times);
  TransportSuiteConfig c;
  c.s = tm.s;
  c.t = tm.t;
  c.steps = tm.steps;
  Reader(section, "checks.transport")
      .exponents("ps", c.ps)
      .get("pairs", c.pairs)
      .get("relative", c.relative)
      .get("eps", c.eps)
      .get("family", c.family)
      .finish();
  require(c.family == "mixed" || c.family == "noise", ErrorKind::invalid_input,
          "checks.transport.family must be mixed or noise");
  return c;
}

BochnerSuiteConfig bochner_config(const json& times, const json& section) {
  BochnerSuiteConfig c;
  c.t = read_times(times).t;
  Reader(section, "checks.bochner")
      .get("trials", c.trials)
      .get("delta", c.delta)
      .get("eps", c.eps)
      .get("self_improvement_trials", c.self_improvement_trials)
      .finish();
  return c;
}

ConvexitySuiteConfig convexity_config(const json& times, const json& section) {
  ConvexitySuiteConfig c;
  c.t = read_times(times).t;
  Reader(section, "checks.convexity")
      .get("da", c.da)
      .get("dt_steps", c.dt_steps)
      .get("pairs", c.pairs)
      .get("eps", c.eps)
      .finish();
  return c;
}

CouplingSuiteConfig coupling_config(const json& times, const json& section) {
  CouplingSuiteConfig c;
  c.t = read_times(times).t;
  c.scaling_t = c.t;
  std::string mode = to_string(c.mode);
  Reader(section, "checks.coupling")
      .get("x", c.x)
      .get("y", c.y)
      .get("t", c.t)
      .get("level", c.level)
      .get("paths", c.paths)
      .get("mode", mode)
      .exponent("p", c.p)
      .get("steps", c.steps)
      .get("margin_cells", c.margin_cells)
      .get("max_violation", c.max_violation)
      .get("control", c.control)
      .get("control_ratio", c.control_ratio)
      .get("scaling", c.scaling)
      .get("scaling_t", c.scaling_t)
      .get("scaling_start", c.scaling_start)
      .exponents("scaling_p", c.scaling_p)
      .get("gaps", c.gaps)
      .get("scaling_tolerance", c.scaling_tolerance)
      .get("marginal", c.marginal)
      .finish();
  if (mode == "winf") {
    c.mode = CouplingMode::winf;
  } else if (mode == "wp") {
    c.mode = CouplingMode::wp;
  } else if (mode == "independent") {
    c.mode = CouplingMode::independent;
  } else {
    throw Error(ErrorKind::invalid_input, "checks.coupling.mode must be winf, wp or independent");
  }
  return c;
}

CalibrationConfig calibration_config(const json& times, const json& section) {
  const Times tm = read_times(times);
  CalibrationConfig c;
  c.s = tm.s;
  c.t = tm.t;
  c.steps = tm.steps;
  Reader(section, "checks.tolerance")
      .get("c_floor", c.c_floor)
      .get("gradient_trials", c.gradient_trials)
      .get("bochner_trials", c.bochner_trials)
      .finish();
  return c;
}

json to_json(const HeatSuiteConfig& c) {
  return {{"s", c.s},
          {"t", c.t},
          {"steps", c.steps},
          {"trials", c.trials},
          {"energy_L", c.energy_L},
          {"energy_steps", c.energy_steps},
          {"pstar_h", c.pstar_h},
          {"ck_tol", c.ck_tol},
          {"markov_tol", c.markov_tol},
          {"duality_tol", c.duality_tol},
          {"ibp_tol", c.ibp_tol},
          {"energy_tol", c.energy_tol}};
}

json to_json(const GradientSuiteConfig& c) {
  return {{"alphas", c.alphas}, {"intervals", c.intervals}, {"trials", c.trials}, {"steps", c.steps}, {"eps", c.eps}};
}

json to_json(const TransportSuiteConfig& c) {
  json ps = json::array();
  for (double p : c.ps) ps.push_back(exponent_json(p));
  return {{"ps", ps},           {"pairs", c.pairs}, {"s", c.s},    {"t", c.t},
          {"steps", c.steps}, {"relative", c.relative}, {"eps", c.eps}, {"family", c.family}};
}

json to_json(const BochnerSuiteConfig& c) {
  return {{"t", c.t},
          {"trials", c.trials},
          {"delta", c.delta},
          {"eps", c.eps},
          {"self_improvement_trials", c.self_improvement_trials}};
}

json to_json(const ConvexitySuiteConfig& c) {
  return {{"t", c.t}, {"da", c.da}, {"dt_steps", c.dt_steps}, {"pairs", c.pairs}, {"eps", c.eps}};
}

json to_json(const CouplingSuiteConfig& c) {
  json sp = json::array();
  for (double p : c.scaling_p) sp.push_back(exponent_json(p));
  return {{"x", c.x},
          {"y", c.y},
          {"t", c.t},
          {"level", c.level},
          {"paths", c.paths},
          {"mode", to_string(c.mode)},
          {"p", exponent_json(c.p)},
          {"steps", c.steps},
          {"margin_cells", c.margin_cells},
          {"max_violation", c.max_violation},
          {"control", c.control},
          {"control_ratio", c.control_ratio},
          {"scaling", c.scaling},
          {"scaling_t", c.scaling_t},
          {"scaling_start", c.scaling_start},
          {"scaling_p", sp},
          {"gaps", c.gaps},
          {"scaling_tolerance", c.scaling_tolerance},
          {"marginal", c.marginal}};
}

json to_json(const CalibrationConfig& c) {
  return {{"c_floor", c.c_floor},
          {"gradient_trials", c.gradient_trials},
          {"bochner_trials", c.bochner_trials},
          {"s", c.s},
          {"t", c.t},
          {"steps", c.steps}};
}

}  // namespace srflab
