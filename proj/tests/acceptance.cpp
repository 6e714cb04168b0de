// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "srflab/catalog.hpp"
#include "srflab/flows.hpp"
#include "srflab/random.hpp"
#include "srflab/stochastic.hpp"
#include "srflab/suites.hpp"
#include "srflab/transport.hpp"
#include "srflab/verify.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace srflab;
using nlohmann::json;

namespace {

constexpr std::uint64_t kSeed = 42;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

bool run_criterion(int id, const std::string& title, double budget, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << "[exception: " << e.what() << "] ";
  }
  const double elapsed = seconds_since(start);
  if (budget > 0.0 && elapsed > budget) {
    o.pass = false;
    o.detail << "[over time budget " << budget << " s] ";
  }
  std::printf("criterion %2d %s  %s: %s(%.1f s)\n", id, o.pass ? "PASS" : "FAIL", title.c_str(),
              o.detail.str().c_str(), elapsed);
  std::fflush(stdout);
  return o.pass;
}

double mesh_constant(const json& space_config) {
  const json times = {{"s", 0.1}, {"t", 0.5}, {"steps", 32}};
  return calibrate_mesh_constant(make_space(flat_companion(space_config)), calibration_config(times, {}), kSeed)
      .constant;
}

// Two-point space, unit masses and conductance: P = ½[[1+e, 1-e], [1-e, 1+e]], e = e^{-2τ}.
Matrix two_point_exact(double tau) {
  const double e = std::exp(-2.0 * tau);
  Matrix m(2, 2);
  m << 0.5 * (1 + e), 0.5 * (1 - e), 0.5 * (1 - e), 0.5 * (1 + e);
  return m;
}

void heat_algebra(Outcome& o) {
  const auto space = make_space({{"name", "wandering_gaussian"}, {"n", 50}});
  const double s = 0.1;
  const double t = 0.5;
  const double mid = 0.3;
  const int steps = 32;

  const Matrix whole = propagator_matrix(space, s, t, 2 * steps).matrix;
  const double nested =
      (whole - propagator_matrix(space, mid, t, steps).matrix * propagator_matrix(space, s, mid, steps).matrix)
          .cwiseAbs()
          .maxCoeff();
  const double loose =
      (propagator_matrix(space, s, t, 48).matrix -
       propagator_matrix(space, 0.37, t, 21).matrix * propagator_matrix(space, s, 0.37, 27).matrix)
          .cwiseAbs()
          .maxCoeff();

  const HeatKernel k = heat_kernel(space, s, t, steps);
  const Vector ms = measure_at(space, s).masses;
  const Vector mt = measure_at(space, t).masses;
  const double markov = ((k.values * ms).array() - 1.0).abs().maxCoeff();

  double duality = 0.0;
  double ibp = 0.0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    Vector g = random_nonnegative_field(space, t, kSeed, i).values.array() + 0.1;
    g /= g.dot(mt);
    const Vector lhs = dual_propagate(space, Measure(g.cwiseProduct(mt), true), t, s, steps).masses;
    const Vector rhs = adjoint_propagate(space, Field(g), t, s, steps).values.cwiseProduct(ms);
    duality = std::max(duality, (lhs - rhs).cwiseAbs().maxCoeff() / rhs.cwiseAbs().maxCoeff());

    const Field u = random_smooth_field(space, t, kSeed, 100 + i);
    const Field v = random_smooth_field(space, t, kSeed, 200 + i);
    const double by_parts = laplacian_at(space, t, u).values.cwiseProduct(v.values).dot(mt);
    const double e = energy_at(space, t, u, v);
    ibp = std::max(ibp, std::abs(by_parts + e) / std::max(1.0, std::abs(e)));
  }
  o.detail << "n=" << space.size() << " CK nested " << nested << " (non-nested " << loose << ", reported) markov "
           << markov << " duality " << duality << " ibp " << ibp << ' ';
  o.expect(nested <= 1e-8, "Chapman-Kolmogorov");
  o.expect(markov <= 1e-10, "Markov normalization");
  o.expect(duality <= 1e-10, "duality");
  o.expect(ibp <= 1e-12, "integration by parts");

  const auto suite = heat_suite(space, heat_config({{"s", s}, {"t", t}, {"steps", steps}}, {}), kSeed);
  o.expect(suite.pass, "heat suite");
}

void propagator_accuracy(Outcome& o) {
  const auto tp = two_point_space({0.0, 2.0});
  const double s = 0.25;
  const double t = 1.25;
  const Matrix exact = two_point_exact(t - s);
  const double err4096 = (propagator_matrix(tp, s, t, 4096).matrix - exact).cwiseAbs().maxCoeff();
  o.detail << "error@4096 " << err4096 << ' ';
  o.expect(err4096 <= 1e-3, "4096-step error");

  const std::vector<double> ladder{16, 32, 64, 128};
  for (Scheme scheme : {Scheme::implicit_euler, Scheme::crank_nicolson}) {
    std::vector<double> errors;
    for (double n : ladder)
      errors.push_back((propagator_matrix(tp, s, t, static_cast<int>(n), scheme).matrix - exact).cwiseAbs().maxCoeff());
    const double order = -log_log_slope(ladder, errors);
    const double need = scheme == Scheme::implicit_euler ? 0.9 : 1.8;
    o.detail << to_string(scheme) << " order " << order << ' ';
    o.expect(order >= need, std::string(to_string(scheme)) + " order");
  }
}

void transport_solver(Outcome& o) {
  std::mt19937_64 rng(kSeed);
  double worst_gap = 0.0;
  double worst_monotone = 0.0;
  double worst_w64 = 0.0;
  for (int pair = 0; pair < 10; ++pair) {
    const Matrix d = oracles::random_metric(rng, 20);
    const Measure mu = oracles::random_probability(rng, 20, 0.2);
    const Measure nu = oracles::random_probability(rng, 20, 0.2);
    for (double p : {1.0, 2.0, 4.0}) {
      const auto sol = solve_transportation(d.array().pow(p).matrix(), mu.masses, nu.masses);
      worst_gap = std::max(worst_gap, std::abs(sol.primal - sol.dual) / std::max(sol.primal, 1e-300));
    }
    double previous = 0.0;
    for (double p : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0}) {
      const double w = wasserstein_p(d, p, mu, nu, TransportSolver::network).value;
      worst_monotone = std::max(worst_monotone, previous - w);
      previous = w;
    }
    const double winf = wasserstein_inf(d, mu, nu, TransportSolver::network).value;
    worst_monotone = std::max(worst_monotone, previous - winf);
    worst_w64 = std::max(worst_w64, std::abs(winf - previous) / winf);
  }

  double worst_brute = 0.0;
  int instances = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const Matrix d = oracles::random_metric(rng, 3);
    const Measure mu = oracles::random_probability(rng, 3, trial % 4 == 0 ? 0.3 : 0.0);
    const Measure nu = oracles::random_probability(rng, 3, trial % 4 == 1 ? 0.3 : 0.0);
    for (double p : {1.0, 2.0, 3.0}) {
      const double brute = oracles::polytope_minimum(d.array().pow(p).matrix(), mu.masses, nu.masses);
      const double w = wasserstein_p(d, p, mu, nu, TransportSolver::network).value;
      worst_brute = std::max(worst_brute, std::abs(std::pow(w, p) - brute));
      ++instances;
    }
  }
  o.detail << "relative gap " << worst_gap << " brute-force " << worst_brute << " over " << instances
           << " instances, monotone violation " << worst_monotone << " |Winf-W64|/Winf " << worst_w64 << ' ';
  o.expect(worst_gap <= 1e-9, "duality gap");
  o.expect(worst_brute <= 1e-10, "3-point brute force");
  o.expect(worst_monotone <= 1e-10, "monotone in p");
  o.expect(worst_w64 <= 0.05, "W_inf vs W_64");
}

void positive_suite(Outcome& o) {
  const json times = {{"s", 0.1}, {"t", 0.5}, {"steps", 32}};
  for (const json& config : {json{{"name", "wandering_gaussian"}, {"n", 201}, {"R", 4.0}},
                             json{{"name", "homothetic"}, {"n", 200}}}) {
    const json full = complete_space_config(config);
    const auto space = make_space(full);
    const MeshTolerance tol{mesh_constant(full), 1.0};
    const auto gradient = gradient_suite(space, gradient_config(times, {}), tol, kSeed);
    const auto transport = transport_suite(space, transport_config(times, {}), kSeed);
    const auto bochner = bochner_suite(space, bochner_config(times, {}), tol, kSeed);
    o.detail << full.at("name").get<std::string>() << ": tol " << tol.at(space.spacing()) << " gradient "
             << gradient.summary.at("worst_normalized_slack") << " transport "
             << transport.summary.at("worst_normalized_slack") << " bochner "
             << bochner.summary.value("worst_normalized_slack", json(nullptr)) << "; ";
    o.expect(gradient.pass, full.at("name").get<std::string>() + " gradient");
    o.expect(transport.pass, full.at("name").get<std::string>() + " transport");
    o.expect(bochner.pass, full.at("name").get<std::string>() + " bochner");

    const auto bc = bochner_config(times, {{"trials", 50}});
    const auto rr = run_refinement(full, 3, calibration_config(times, {}), 1.0, kSeed,
                                   [bc](const DynamicSpace& sp, const MeshTolerance& t) {
                                     return bochner_suite(sp, bc, t, kSeed);
                                   });
    o.detail << "refine-3 tolerance order " << rr.tolerance_order << "; ";
    o.expect(rr.pass, full.at("name").get<std::string>() + " refinement levels");
    o.expect(rr.tolerance_order >= 1.0 - 1e-9, full.at("name").get<std::string>() + " tolerance order");
  }
}

void negative_control(Outcome& o) {
  const json full = complete_space_config({{"name", "violating"}, {"n", 201}, {"c", 1.0}});
  const auto bad = make_space(full);
  Vector x(static_cast<Eigen::Index>(bad.size()));
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    x[i] = bad.coordinates()[static_cast<std::size_t>(i)];
    g[i] = std::exp(-20.0 * x[i] * x[i]);
  }
  const double l1 = g.dot(measure_at(bad, 0.5).masses);
  const auto witness = bochner_check(bad, 0.5, Field(x), Field(g), 1e-3);
  o.detail << "witness slack " << witness.slack << " vs -0.01|g|_1 = " << -0.01 * l1 << ' ';
  o.expect(witness.slack < -0.01 * l1, "bochner witness");

  const MeshTolerance tol{mesh_constant(full), 1.0};
  CheckOptions opts;
  opts.tolerance.relative = tol.at(bad.spacing());
  int found = -1;
  for (int i = 0; i < 100 && found < 0; ++i) {
    const Field u = random_smooth_field(bad, 0.1, kSeed, static_cast<std::uint64_t>(i), 0.05 * std::pow(4.0, i % 4));
    if (!gradient_estimate_check(bad, u, 0.1, 0.9, 1.0, 32, opts).pass) found = i;
  }
  o.detail << "first gradient failure at trial " << found << ' ';
  o.expect(found >= 0, "gradient failure within 100 trials");

  const json times = {{"s", 0.1}, {"t", 0.5}, {"steps", 32}};
  const auto scan = bochner_suite(bad, bochner_config(times, {{"trials", 50}}), tol, kSeed);
  o.expect(!scan.pass, "bochner suite must fail");
}

void scaling_identities(Outcome& o) {
  double worst_gamma = 0.0;
  double worst_distance = 0.0;
  const auto hom = make_space({{"name", "homothetic"}, {"n", 200}});
  const double K = default_space_config("homothetic").at("K").get<double>();
  const auto clog = make_space(default_space_config("constant_log_derivative"));
  for (const auto* space : {&hom, &clog}) {
    for (std::uint64_t i = 0; i < 10; ++i) {
      const Field u = random_smooth_field(*space, 0.1, kSeed, i);
      for (auto [s, t] : {std::pair{0.1, 0.5}, std::pair{0.0, 0.9}, std::pair{0.3, 0.35}})
        worst_gamma = std::max(worst_gamma, -gamma_scaling_check(*space, u, s, t).slack);
    }
  }
  for (double t : {0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 0.94}) {
    const Matrix expected = hom.base_distance() * std::sqrt(1.0 - 2.0 * K * t);
    worst_distance = std::max(worst_distance, (distance_at(hom, t) - expected).cwiseAbs().maxCoeff());
  }
  o.detail << "worst gamma-scaling defect " << worst_gamma << " distance error " << worst_distance << ' ';
  o.expect(worst_gamma <= 1e-10, "gamma scaling");
  o.expect(worst_distance <= 1e-10, "homothetic distance");
}

void coupling_contraction(Outcome& o) {
  std::vector<double> fractions;
  for (int n : {50, 100, 200}) {
    const auto space = make_space({{"name", "homothetic"}, {"n", n}});
    const double t = 0.5;
    const int level = 6;
    const auto times = dyadic_times(space, t, level);
    const std::size_t x = vertex_at(space, -1.5);
    const std::size_t y = vertex_at(space, 1.5);
    const double margin = 2.0 * space.spacing();
    CouplingOptions winf;
    const auto paths = sample_coupled_bm(space, x, y, t, level, times, 10000, kSeed, winf);
    const double f = contraction_stats(paths, space, margin).overall_violation_fraction;
    CouplingOptions ind;
    ind.mode = CouplingMode::independent;
    const double control =
        contraction_stats(sample_coupled_bm(space, x, y, t, level, times, 10000, kSeed, ind), space, margin)
            .overall_violation_fraction;
    o.detail << "n=" << n << " violation " << f << " control " << control << "; ";
    o.expect(f <= 0.01, "violation at most 1% at n=" + std::to_string(n));
    o.expect(control > 0.0 && control >= 10.0 * f, "control ratio at n=" + std::to_string(n));
    fractions.push_back(f);
  }
  o.expect(fractions[0] > fractions[1] && fractions[1] > fractions[2], "strictly decreasing in n");
}

void moment_scaling(Outcome& o) {
  const auto flat = make_space({{"name", "flat"}, {"lo", -8.0}, {"hi", 8.0}, {"n", 401}, {"T", 2.0}});
  std::vector<double> grid{1.0};
  for (double gap : {0.32, 0.16, 0.08, 0.04, 0.02}) grid.push_back(grid.back() - gap);
  const auto paths = sample_backward_bm(flat, Measure::dirac(401, 200), grid, 10000, 4, kSeed);
  for (double p : {2.0, 4.0}) {
    const auto r = kolmogorov_scaling(paths, flat, p);
    o.detail << "p=" << p << " slope " << r.slope << " (target " << r.target << ") ";
    o.expect(!r.degenerate && std::abs(r.slope - p / 2.0) <= 0.15 * p / 2.0, "slope for p=" + std::to_string(p));
  }
}

void marginal_consistency(Outcome& o) {
  const int n_paths = 10000;
  for (const json& config : {json{{"name", "flat"}}, json{{"name", "wandering_gaussian"}},
                             json{{"name", "homothetic"}}}) {
    const auto space = make_space(config);
    const std::vector<double> grid{0.9, 0.7, 0.5, 0.3, 0.1};
    const std::size_t start = vertex_at(space, 0.5);
    const auto paths = sample_backward_bm(space, Measure::dirac(space.size(), start), grid, n_paths, 8, kSeed);
    Measure law = Measure::dirac(space.size(), start);
    double worst = 0.0;
    for (std::size_t k = 1; k < grid.size(); ++k) {
      law = dual_propagate(space, law, grid[k - 1], grid[k], 8);
      worst = std::max(worst, total_variation(empirical_law(paths, space.size(), static_cast<Eigen::Index>(k)), law));
    }
    const double bound = 3.0 * std::sqrt(static_cast<double>(space.size()) / n_paths);
    o.detail << config.at("name").get<std::string>() << " TV " << worst << " <= " << bound << "; ";
    o.expect(worst <= bound, config.at("name").get<std::string>() + " TV");
  }
}

void dynamic_convexity(Outcome& o) {
  const json times = {{"s", 0.1}, {"t", 0.5}, {"steps", 32}};
  for (const json& config : {json{{"name", "flat"}}, json{{"name", "homothetic"}}}) {
    const json full = complete_space_config(config);
    const auto space = make_space(full);
    const MeshTolerance tol{mesh_constant(full), 1.0};
    const auto c = convexity_config(times, {});
    const auto r = convexity_suite(space, c, tol, kSeed);
    std::size_t rows = 0;
    for (const auto& t : r.tables)
      if (t.name == "convexity_sensitivity") rows = t.rows.size();
    o.detail << full.at("name").get<std::string>() << " worst scaled slack " << r.summary.at("worst_scaled_slack")
             << " da " << c.da << " sensitivity rows " << rows << "; ";
    o.expect(r.pass, full.at("name").get<std::string>() + " convexity");
    o.expect(rows == c.dt_steps.size() * static_cast<std::size_t>(c.pairs), "sensitivity table");
  }
}

}  // namespace

int main() {
  bool all = true;
  all &= run_criterion(1, "heat-flow algebra", 5.0, heat_algebra);
  all &= run_criterion(2, "propagator accuracy", 0.0, propagator_accuracy);
  all &= run_criterion(3, "optimal transport solver", 0.0, transport_solver);
  all &= run_criterion(4, "super-Ricci positive suite", 180.0, positive_suite);
  all &= run_criterion(5, "negative control", 0.0, negative_control);
  all &= run_criterion(6, "exact scaling identities", 0.0, scaling_identities);
  all &= run_criterion(7, "coupled Brownian contraction", 120.0, coupling_contraction);
  all &= run_criterion(8, "Kolmogorov moment scaling", 0.0, moment_scaling);
  all &= run_criterion(9, "marginal law consistency", 0.0, marginal_consistency);
  all &= run_criterion(10, "dynamic convexity", 0.0, dynamic_convexity);
  std::printf("acceptance %s\n", all ? "PASS" : "FAIL");
  return all ? 0 : 1;
}
