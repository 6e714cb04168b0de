#include "srflab/flows.hpp"

#include <algorithm>
#include <cmath>

namespace srflab {

namespace {

double zero_h(double, std::size_t, std::size_t) { return 0.0; }
double zero_local(double, std::size_t) { return 0.0; }

GridOptions static_options(const char* name, Horizon horizon) {
  GridOptions opts;
  opts.name = name;
  opts.horizon = horizon;
  opts.reference_time = horizon.begin;
  opts.log_derivative_bound = 0.0;
  opts.pair_independent_log_derivative = true;
  opts.static_weight = true;
  return opts;
}

}  // namespace

DynamicSpace flat_grid(double lo, double hi, std::size_t n, Horizon horizon) {
  return make_grid_space(
      lo, hi, n, [](double, std::size_t) { return 0.0; }, zero_h, zero_local,
      static_options("flat-grid", horizon));
}

DynamicSpace two_point_space(Horizon horizon) {
  return make_grid_space(
      0.0, 1.0, 2, [](double, std::size_t) { return 0.0; }, zero_h, zero_local,
      static_options("two-point", horizon));
}

DynamicSpace gaussian_grid(double R, std::size_t n, double kappa, Horizon horizon) {
  require(R > 0.0, ErrorKind::invalid_parameter, "gaussian_grid: R must be positive");
  require(n >= 2, ErrorKind::invalid_size, "gaussian_grid: n must be at least 2");
  const double dx = 2.0 * R / static_cast<double>(n - 1);
  auto f = [kappa, R, dx](double, std::size_t x) {
    const double c = -R + dx * static_cast<double>(x);
    return 0.5 * kappa * c * c;
  };
  return make_grid_space(-R, R, n, f, zero_h, zero_local, static_options("gaussian-grid", horizon));
}

DynamicSpace static_space(const DynamicSpace& base) {
  SpaceDefinition def = base.definition();
  def.name = "static(" + base.name() + ")";
  const auto& original = base.definition().weight;
  const double t0 = base.reference_time();
  // A distance matrix at t0 that already carries a time dependence is kept as the frozen metric.
  def.base_distance = distance_at(base, t0);
  if (!base.static_weight()) {
    def.weight = [original, t0](double, std::size_t x) { return original(t0, x); };
  }
  def.log_derivative = zero_h;
  def.local_log_derivative = zero_local;
  def.log_derivative_bound = 0.0;
  def.pair_independent_log_derivative = true;
  def.static_weight = true;
  return DynamicSpace(std::move(def));
}

DynamicSpace wandering_gaussian(CoefficientFn alpha, CoefficientFn beta, CoefficientFn gamma, double R,
                                std::size_t n, double T) {
  require(n >= 2, ErrorKind::invalid_size, "wandering_gaussian: n must be at least 2");
  require(R > 0.0 && T > 0.0, ErrorKind::invalid_parameter, "wandering_gaussian: R and T must be positive");
  require(alpha && beta && gamma, ErrorKind::invalid_evaluator, "wandering_gaussian: coefficients must be set");
  const double dx = 2.0 * R / static_cast<double>(n - 1);
  auto f = [alpha, beta, gamma, R, dx](double t, std::size_t x) {
    const double c = -R + dx * static_cast<double>(x);
    const double a = c * alpha(t);
    return a * a + c * beta(t) + gamma(t);
  };
  GridOptions opts = static_options("wandering-gaussian", {0.0, T});
  opts.static_weight = false;
  return make_grid_space(-R, R, n, f, zero_h, zero_local, opts);
}

double homothetic_factor(double K, double t) { return std::sqrt(1.0 - 2.0 * K * t); }

DynamicSpace homothetic(const DynamicSpace& base, double K, double margin) {
  require(base.static_weight() && base.log_derivative_bound() == 0.0, ErrorKind::invalid_input,
          "homothetic: base space must be static");
  require(margin > 0.0 && margin < 1.0, ErrorKind::invalid_parameter, "homothetic: margin must lie in (0,1)");
  if (K == 0.0) return static_space(base);

  SpaceDefinition def = base.definition();
  def.name = "homothetic(" + base.name() + ")";
  if (K > 0.0) def.horizon.end = std::min(def.horizon.end, (1.0 - margin) / (2.0 * K));
  require(def.horizon.begin < def.horizon.end && def.reference_time < def.horizon.end,
          ErrorKind::invalid_horizon, "homothetic: horizon is empty after trimming");
  require(1.0 - 2.0 * K * def.horizon.begin > 0.0, ErrorKind::invalid_horizon,
          "homothetic: metric degenerates at the start of the horizon");
  def.log_derivative = [K](double r, std::size_t, std::size_t) { return -K / (1.0 - 2.0 * K * r); };
  def.local_log_derivative = [K](double r, std::size_t) { return -K / (1.0 - 2.0 * K * r); };
  const double worst = K > 0.0 ? def.horizon.end : def.horizon.begin;
  def.log_derivative_bound = std::abs(K) / (1.0 - 2.0 * K * worst);
  def.pair_independent_log_derivative = true;
  return DynamicSpace(std::move(def));
}

DynamicSpace constant_log_derivative(const DynamicSpace& base, double c) {
  require(base.static_weight() && base.log_derivative_bound() == 0.0, ErrorKind::invalid_input,
          "constant_log_derivative: base space must be static");
  SpaceDefinition def = base.definition();
  def.name = "constant-h(" + base.name() + ")";
  def.log_derivative = [c](double, std::size_t, std::size_t) { return c; };
  def.local_log_derivative = [c](double, std::size_t) { return c; };
  def.log_derivative_bound = std::abs(c);
  def.pair_independent_log_derivative = true;
  return DynamicSpace(std::move(def));
}

DynamicSpace violating_flow(double R, std::size_t n, double c, double T) {
  require(c > 0.0, ErrorKind::invalid_parameter, "violating_flow: c must be positive");
  require(n >= 2, ErrorKind::invalid_size, "violating_flow: n must be at least 2");
  require(R > 0.0 && T > 0.0, ErrorKind::invalid_parameter, "violating_flow: R and T must be positive");
  const double dx = 2.0 * R / static_cast<double>(n - 1);
  auto f = [c, R, dx](double, std::size_t x) {
    const double p = -R + dx * static_cast<double>(x);
    return -c * p * p;
  };
  return make_grid_space(-R, R, n, f, zero_h, zero_local, static_options("violating-flow", {0.0, T}));
}

}  // namespace srflab
