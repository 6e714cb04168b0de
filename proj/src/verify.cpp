#include "srflab/verify.hpp"

#include "srflab/random.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace srflab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

nlohmann::json exponent_json(double p) { return std::isinf(p) ? nlohmann::json("inf") : nlohmann::json(p); }

std::vector<double> to_vector(const Vector& v) { return {v.data(), v.data() + v.size()}; }

void require_field(const DynamicSpace& space, const Field& u, const char* what) {
  require(u.size() == space.size(), ErrorKind::invalid_size, std::string(what) + ": field size mismatch");
  require(u.finite(), ErrorKind::invalid_input, std::string(what) + ": field has non-finite entries");
}

// Minimum over vertices, split into interior and boundary parts.
void apply_vertex_slack(const DynamicSpace& space, const Vector& slack, const CheckOptions& options,
                        CheckReport& report) {
  const auto& boundary = space.boundary_mask();
  double interior = kInf;
  double edge = kInf;
  long at = -1;
  for (Eigen::Index x = 0; x < slack.size(); ++x) {
    if (options.exclude_boundary && boundary[x]) {
      edge = std::min(edge, slack[x]);
    } else if (slack[x] < interior) {
      interior = slack[x];
      at = static_cast<long>(x);
    }
  }
  report.slack = interior == kInf ? 0.0 : interior;
  report.location.vertex = at;
  report.boundary_slack = edge == kInf ? std::numeric_limits<double>::quiet_NaN() : edge;
}

void finish(CheckReport& report, const CheckOptions& options) {
  report.tolerance = options.tolerance.at(report.scale);
  report.pass = report.slack >= -report.tolerance;
  report.params["exclude_boundary"] = options.exclude_boundary;
  report.params["tolerance_absolute"] = options.tolerance.absolute;
  report.params["tolerance_relative"] = options.tolerance.relative;
}

double l1_norm(const Vector& g, const Vector& mass) { return g.cwiseAbs().dot(mass); }

}  // namespace

nlohmann::json to_json(const CheckReport& report) {
  nlohmann::json loc;
  loc["vertex"] = report.location.vertex;
  loc["other"] = report.location.other;
  loc["time"] = number_or_null(report.location.time);
  loc["trial"] = report.location.trial;
  return {{"name", report.name},
          {"slack", report.slack},
          {"normalized_slack", report.normalized_slack()},
          {"location", loc},
          {"tolerance", report.tolerance},
          {"scale", report.scale},
          {"params", report.params},
          {"pass", report.pass},
          {"boundary_slack", number_or_null(report.boundary_slack)}};
}

CheckReport gradient_estimate_check(const DynamicSpace& space, const Field& u, double s, double t,
                                    double alpha, int steps, const CheckOptions& options) {
  require(alpha >= 0.5 && alpha <= 1.0, ErrorKind::invalid_parameter, "gradient estimate needs alpha in [1/2, 1]");
  require_field(space, u, "gradient_estimate_check");
  const auto start = snapshot_at(space, s);
  Matrix columns(static_cast<Eigen::Index>(space.size()), 2);
  columns.col(0) = u.values;
  columns.col(1) = gamma(space, start, u.values, u.values).array().pow(alpha);
  const Matrix moved = propagate_columns(space, columns, s, t, steps);
  const auto end = snapshot_at(space, t);
  const Vector lhs = gamma(space, end, moved.col(0), moved.col(0)).array().pow(alpha);
  const Vector rhs = moved.col(1);

  CheckReport report;
  report.name = "gradient-estimate";
  report.scale = rhs.cwiseAbs().maxCoeff();
  apply_vertex_slack(space, rhs - lhs, options, report);
  report.location.time = t;
  report.params = {{"alpha", alpha}, {"s", s}, {"t", t}, {"steps", steps}};
  finish(report, options);
  return report;
}

CheckReport transport_estimate_check(const DynamicSpace& space, const Measure& mu, const Measure& nu, double s,
                                     double t, double p, int steps, const CheckOptions& options) {
  require(mu.size() == space.size() && nu.size() == space.size(), ErrorKind::invalid_size,
          "transport_estimate_check: measure size mismatch");
  require(std::abs(mu.total() - nu.total()) <= 1e-9, ErrorKind::unbalanced_input,
          "transport_estimate_check: measures carry different mass");
  const double later = wasserstein(distance_at(space, t), p, mu, nu).value;
  const Measure mu_s = dual_propagate(space, mu, t, s, steps);
  const Measure nu_s = dual_propagate(space, nu, t, s, steps);
  const double earlier = wasserstein(distance_at(space, s), p, mu_s, nu_s).value;

  CheckReport report;
  report.name = "transport-estimate";
  report.slack = later - earlier;
  report.scale = later;
  report.location.time = s;
  report.params = {{"p", exponent_json(p)}, {"s", s},      {"t", t},
                   {"steps", steps},        {"w_t", later}, {"w_s", earlier}};
  finish(report, options);
  return report;
}

Field hessian(const DynamicSpace& space, double t, const Field& u, const Field& g, const Field& h) {
  require_field(space, u, "hessian");
  require_field(space, g, "hessian");
  require_field(space, h, "hessian");
  const auto form = snapshot_at(space, t);
  const Vector uh = gamma(space, form, u.values, h.values);
  const Vector ug = gamma(space, form, u.values, g.values);
  const Vector gh = gamma(space, form, g.values, h.values);
  const Vector out = 0.5 * (gamma(space, form, g.values, uh) + gamma(space, form, h.values, ug) -
                            gamma(space, form, u.values, gh));
  return Field(out, t);
}

double gamma2(const DynamicSpace& space, double t, const Field& u, const Field& g) {
  require_field(space, u, "gamma2");
  require_field(space, g, "gamma2");
  const auto form = snapshot_at(space, t);
  const Vector gu = gamma(space, form, u.values, u.values);
  const Vector lap = laplacian(space, form, u.values);
  const Vector density = -0.5 * gamma(space, form, gu, g.values) + g.values.cwiseProduct(lap.cwiseProduct(lap)) +
                         gamma(space, form, g.values, u.values).cwiseProduct(lap);
  return density.dot(form.mass);
}

double gamma2_by_parts(const DynamicSpace& space, double t, const Field& u, const Field& g) {
  require_field(space, u, "gamma2");
  require_field(space, g, "gamma2");
  const auto form = snapshot_at(space, t);
  const Vector gu = gamma(space, form, u.values, u.values);
  const Vector lap = laplacian(space, form, u.values);
  const Vector density = 0.5 * gu.cwiseProduct(laplacian(space, form, g.values)) +
                         lap.cwiseProduct(lap).cwiseProduct(g.values) +
                         gamma(space, form, u.values, g.values).cwiseProduct(lap);
  return density.dot(form.mass);
}

Field gamma2_density(const DynamicSpace& space, double t, const Field& u) {
  require_field(space, u, "gamma2_density");
  const auto form = snapshot_at(space, t);
  const Vector gu = gamma(space, form, u.values, u.values);
  const Vector lap = laplacian(space, form, u.values);
  return Field(0.5 * laplacian(space, form, gu) - gamma(space, form, u.values, lap), t);
}

CheckReport bochner_check(const DynamicSpace& space, double t, const Field& u, const Field& g, double delta,
                          const CheckOptions& options) {
  require_field(space, u, "bochner_check");
  require_field(space, g, "bochner_check");
  require(g.values.minCoeff() >= 0.0, ErrorKind::invalid_test_function, "bochner_check: g must be nonnegative");
  const auto form = snapshot_at(space, t);
  const double lhs = gamma2_by_parts(space, t, u, g);
  const auto derivative = dt_gamma(space, t, u, delta);
  const double rhs = 0.5 * derivative.central.values.cwiseProduct(g.values).dot(form.mass);

  CheckReport report;
  report.name = "bochner";
  report.slack = lhs - rhs;
  report.scale = l1_norm(g.values, form.mass) * gamma(space, form, u.values, u.values).maxCoeff();
  report.location.time = t;
  report.params = {{"t", t},
                   {"delta", delta},
                   {"gamma2", lhs},
                   {"half_dt_gamma", rhs},
                   {"g_l1", l1_norm(g.values, form.mass)}};
  finish(report, options);
  return report;
}

CheckReport bochner_scan(const DynamicSpace& space, double t, int trials, std::uint64_t seed, double delta,
                         const CheckOptions& options, double eps) {
  require(trials > 0, ErrorKind::invalid_parameter, "bochner_scan: trials must be positive");
  require(eps > 0.0, ErrorKind::invalid_parameter, "bochner_scan: eps must be positive");
  CheckReport worst;
  double worst_normalized = kInf;
  Field worst_u;
  Field worst_g;
  for (int i = 0; i < trials; ++i) {
    const double scale = eps * std::pow(4.0, i % 4);
    const Field u = random_smooth_field(space, t, seed, static_cast<std::uint64_t>(i), scale, 8);
    const Field g = random_nonnegative_field(space, t, seed, static_cast<std::uint64_t>(i));
    CheckReport r = bochner_check(space, t, u, g, delta, options);
    if (r.normalized_slack() < worst_normalized) {
      worst_normalized = r.normalized_slack();
      worst = std::move(r);
      worst.location.trial = i;
      worst_u = u;
      worst_g = g;
    }
  }
  worst.name = "bochner-scan";
  worst.params["trials"] = trials;
  worst.params["seed"] = seed;
  worst.params["eps"] = eps;
  worst.params["witness"] = {{"trial", worst.location.trial},
                             {"u", to_vector(worst_u.values)},
                             {"g", to_vector(worst_g.values)}};
  return worst;
}

CheckReport self_improvement_check(const DynamicSpace& space, double t, const Field& u, double delta,
                                   const CheckOptions& options) {
  require_field(space, u, "self_improvement_check");
  const auto form = snapshot_at(space, t);
  const Vector gu = gamma(space, form, u.values, u.values);
  const Vector g2 = gamma2_density(space, t, u).values;
  const Vector dt = dt_gamma(space, t, u, delta).central.values;
  const Vector right = 4.0 * (g2 - 0.5 * dt).cwiseProduct(gu);
  const Vector left = gamma(space, form, gu, gu);

  CheckReport report;
  report.name = "self-improvement";
  report.scale = std::max(right.cwiseAbs().maxCoeff(), left.cwiseAbs().maxCoeff());
  apply_vertex_slack(space, right - left, options, report);
  report.location.time = t;
  report.params = {{"t", t}, {"delta", delta}};
  finish(report, options);
  return report;
}

CheckReport gamma_scaling_check(const DynamicSpace& space, const Field& u, double s, double t,
                                const CheckOptions& options) {
  require_field(space, u, "gamma_scaling_check");
  require(space.static_weight(), ErrorKind::inapplicable,
          "gamma_scaling_check: the weight depends on time, so Γ mixes measure and metric scaling");
  space.require_in_horizon(s, "gamma_scaling_check");
  space.require_in_horizon(t, "gamma_scaling_check");
  const Vector gs = gamma_at(space, s, u, u).values;
  const Vector gt = gamma_at(space, t, u, u).values;
  Vector deviation(gs.size());
  for (Eigen::Index x = 0; x < gs.size(); ++x) {
    const double factor =
        std::exp(-2.0 * space.integrated_local_log_derivative(s, t, static_cast<std::size_t>(x)));
    deviation[x] = std::abs(gt[x] - gs[x] * factor);
  }
  CheckReport report;
  report.name = "gamma-scaling";
  report.scale = gs.maxCoeff();
  // Every vertex counts here: the identity is exact, boundary or not.
  Eigen::Index at = 0;
  report.slack = -deviation.maxCoeff(&at);
  report.location.vertex = static_cast<long>(at);
  report.location.time = t;
  report.params = {{"s", s}, {"t", t}, {"max_deviation", -report.slack}};
  finish(report, options);
  return report;
}

CheckReport kuwada_cross_check(const DynamicSpace& space, double s, double t, double p, double beta, int trials,
                               std::uint64_t seed, const KuwadaOptions& options) {
  require(p >= 1.0 && beta >= 1.0, ErrorKind::invalid_parameter, "kuwada_cross_check: need p, beta >= 1");
  const double conjugacy = (std::isinf(p) ? 0.0 : 1.0 / p) + (std::isinf(beta) ? 0.0 : 1.0 / beta);
  require(std::abs(conjugacy - 1.0) <= 1e-12, ErrorKind::invalid_parameter,
          "kuwada_cross_check: p and beta must be Hölder conjugate");
  const double alpha = beta / 2.0;
  require(alpha >= 0.5 && alpha <= 1.0, ErrorKind::invalid_parameter,
          "kuwada_cross_check: beta must lie in [1, 2], i.e. p >= 2");
  require(trials > 0, ErrorKind::invalid_parameter, "kuwada_cross_check: trials must be positive");

  double worst_gradient = kInf;
  double worst_transport = kInf;
  int gradient_failures = 0;
  int transport_failures = 0;
  int implication_failures = 0;
  long worst_trial = -1;
  for (int i = 0; i < trials; ++i) {
    const auto idx = static_cast<std::uint64_t>(i);
    const Field u = random_smooth_field(space, s, seed, idx);
    const auto g = gradient_estimate_check(space, u, s, t, alpha, options.steps, options.gradient);
    const Measure mu = random_measure(space, t, seed, 2 * idx);
    const Measure nu = random_measure(space, t, seed, 2 * idx + 1);
    const auto w = transport_estimate_check(space, mu, nu, s, t, p, options.steps, options.transport);
    worst_gradient = std::min(worst_gradient, g.normalized_slack());
    if (w.normalized_slack() < worst_transport) {
      worst_transport = w.normalized_slack();
      worst_trial = i;
    }
    gradient_failures += g.pass ? 0 : 1;
    transport_failures += w.pass ? 0 : 1;
    implication_failures += (g.pass && !w.pass) ? 1 : 0;
  }

  CheckReport report;
  report.name = "kuwada-cross-check";
  report.slack = -static_cast<double>(implication_failures);
  report.scale = 1.0;
  report.location.trial = worst_trial;
  report.params = {{"s", s},
                   {"t", t},
                   {"p", exponent_json(p)},
                   {"beta", exponent_json(beta)},
                   {"alpha", alpha},
                   {"trials", trials},
                   {"seed", seed},
                   {"steps", options.steps},
                   {"gradient_min_normalized_slack", worst_gradient},
                   {"transport_min_normalized_slack", worst_transport},
                   {"gradient_failures", gradient_failures},
                   {"transport_failures", transport_failures},
                   {"implication_failures", implication_failures}};
  report.tolerance = 0.0;
  report.pass = implication_failures == 0;
  return report;
}

}  // namespace srflab
