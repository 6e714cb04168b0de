#include "srflab/flows.hpp"
#include "srflab/heat.hpp"
#include "srflab/random.hpp"

#include <doctest.h>

#include <cmath>

using namespace srflab;

namespace {

// exp(-A) for the two-point generator A = [[1,-1],[-1,1]] · rate.
Matrix two_point_exact(double duration) {
  const double e = std::exp(-2.0 * duration);
  Matrix m(2, 2);
  m << (1 + e) / 2, (1 - e) / 2, (1 - e) / 2, (1 + e) / 2;
  return m;
}

DynamicSpace wandering(std::size_t n) {
  return wandering_gaussian([](double t) { return 1.0 + 0.5 * t; }, [](double t) { return std::sin(t); },
                            [](double) { return 0.0; }, 4.0, n);
}

double max_abs(const Vector& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("laplacian and carre du champ on two points") {
  const auto tp = two_point_space();
  const Field u(Vector::Unit(2, 0));
  const Field lap = laplacian_at(tp, 0.5, u);
  CHECK(lap.values[0] == doctest::Approx(-1.0));
  CHECK(lap.values[1] == doctest::Approx(1.0));
  const Field g = gamma_at(tp, 0.5, u, u);
  CHECK(g.values[0] == doctest::Approx(0.5));
  CHECK(g.values[1] == doctest::Approx(0.5));
  CHECK(energy_at(tp, 0.5, u, u) == doctest::Approx(1.0));
}

TEST_CASE("constants are annihilated") {
  const auto w = wandering(51);
  const Field one = Field::constant(w.size(), 3.0);
  const Field u = random_smooth_field(w, 0.3, 7, 0);
  CHECK(max_abs(laplacian_at(w, 0.3, one).values) <= 1e-12);
  CHECK(max_abs(gamma_at(w, 0.3, one, u).values) == 0.0);
}

TEST_CASE("energy identity and integration by parts") {
  const auto w = wandering(101);
  const Field u = random_smooth_field(w, 0.4, 3, 1);
  const Field v = random_smooth_field(w, 0.4, 3, 2);
  const Vector m = measure_at(w, 0.4).masses;
  CHECK(gamma_at(w, 0.4, u, u).values.dot(m) == doctest::Approx(energy_at(w, 0.4, u, u)).epsilon(1e-13));
  const double lhs = weighted_inner(laplacian_at(w, 0.4, u).values, v.values, m);
  const double rhs = -gamma_at(w, 0.4, u, v).values.dot(m);
  CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
  // Polarization Γ(u,v) = ¼(Γ(u+v) - Γ(u-v)).
  const Field sum(u.values + v.values);
  const Field diff(u.values - v.values);
  const Vector polar = 0.25 * (gamma_at(w, 0.4, sum, sum).values - gamma_at(w, 0.4, diff, diff).values);
  CHECK(max_abs(polar - gamma_at(w, 0.4, u, v).values) <= 1e-12);
}

TEST_CASE("finite-difference consistency of the flat laplacian") {
  for (std::size_t n : {41, 81, 161}) {
    const auto flat = flat_grid(-1.0, 1.0, n);
    Vector x2(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) x2[static_cast<Eigen::Index>(i)] = std::pow(flat.coordinates()[i], 2);
    const Vector lap = laplacian_at(flat, 0.5, Field(x2)).values;
    CHECK(max_abs(lap.segment(1, static_cast<Eigen::Index>(n) - 2).array() - 2.0) <= 1e-8);
  }
}

TEST_CASE("dt_gamma") {
  const auto g = gaussian_grid(2.0, 21, 1.0);
  const Field u = random_smooth_field(g, 0.5, 1, 0);
  const auto stat = dt_gamma(g, 0.5, u, 0.01);
  CHECK(max_abs(stat.central.values) == 0.0);
  CHECK(max_abs(stat.analytic.values) == 0.0);

  const double K = 0.5;
  const auto hom = homothetic(gaussian_grid(2.0, 21, 1.0), K);
  const double t = 0.4;
  const Vector gam = gamma_at(hom, t, u, u).values;
  const Vector exact = 2.0 * K / (1.0 - 2.0 * K * t) * gam;
  const auto d = dt_gamma(hom, t, u, 1e-3);
  CHECK(max_abs(d.analytic.values - exact) <= 1e-8 * std::max(1.0, max_abs(exact)));

  // Central difference error shrinks by four per halving of δ.
  double previous = 0.0;
  for (double delta : {0.08, 0.04, 0.02}) {
    const double err = max_abs(dt_gamma(hom, t, u, delta).central.values - exact);
    if (previous > 0.0) CHECK(previous / err == doctest::Approx(4.0).epsilon(0.05));
    previous = err;
  }
}

TEST_CASE("two-point propagator against the matrix exponential") {
  const auto tp = two_point_space({0.0, 2.0});
  const Field u(Vector::Unit(2, 0));
  const Field out = propagate(tp, u, 0.25, 1.25, 4096);
  CHECK(std::abs(out.values[0] - (1 + std::exp(-2.0)) / 2) <= 1e-3);
  CHECK(std::abs(out.values[1] - (1 - std::exp(-2.0)) / 2) <= 1e-3);

  const HeatKernel k = heat_kernel(tp, 0.25, 1.25, 4096);
  CHECK((k.values - two_point_exact(1.0)).cwiseAbs().maxCoeff() <= 1e-3);
}

TEST_CASE("propagate preserves constants, positivity and the maximum principle") {
  const auto w = wandering(101);
  const Field c = Field::constant(w.size(), 2.5);
  CHECK(max_abs(propagate(w, c, 0.1, 0.6, 7).values.array() - 2.5) <= 1e-12);
  const Field g = random_nonnegative_field(w, 0.1, 5, 0);
  const Field pg = propagate(w, g, 0.1, 0.6, 16);
  CHECK(pg.values.minCoeff() >= -1e-15);
  const Field u = random_smooth_field(w, 0.1, 5, 3);
  const Field pu = propagate(w, u, 0.1, 0.6, 16);
  CHECK(pu.values.minCoeff() >= u.values.minCoeff() - 1e-12);
  CHECK(pu.values.maxCoeff() <= u.values.maxCoeff() + 1e-12);
  CHECK_THROWS_AS(propagate(w, u, 0.6, 0.1, 4), Error);
}

TEST_CASE("propagator matrix identities") {
  const auto w = wandering(51);
  const Matrix id = propagator_matrix(w, 0.3, 0.3, 4).matrix;
  CHECK((id - Matrix::Identity(51, 51)).cwiseAbs().maxCoeff() == 0.0);

  const Matrix whole = propagator_matrix(w, 0.1, 0.5, 32).matrix;
  const Matrix upper = propagator_matrix(w, 0.3, 0.5, 16).matrix;
  const Matrix lower = propagator_matrix(w, 0.1, 0.3, 16).matrix;
  CHECK((whole - upper * lower).cwiseAbs().maxCoeff() <= 1e-13);
  CHECK(max_abs(whole.rowwise().sum().array() - 1.0) <= 1e-10);
  CHECK(whole.minCoeff() >= -1e-12);

  const HeatKernel k = heat_kernel(w, 0.1, 0.5, 32);
  const Vector ms = measure_at(w, 0.1).masses;
  CHECK(max_abs((k.values * ms).array() - 1.0) <= 1e-10);
  const HeatKernel ku = heat_kernel(w, 0.3, 0.5, 16);
  const HeatKernel kl = heat_kernel(w, 0.1, 0.3, 16);
  const Matrix composed = ku.values * measure_at(w, 0.3).masses.asDiagonal() * kl.values;
  CHECK((composed - k.values).cwiseAbs().maxCoeff() <= 1e-8 * k.values.cwiseAbs().maxCoeff());
}

TEST_CASE("Markov normalization on the wandering Gaussian at n = 101") {
  const auto w = wandering(101);
  const HeatKernel k = heat_kernel(w, 0.2, 0.7, 64);
  CHECK(max_abs((k.values * measure_at(w, 0.2).masses).array() - 1.0) <= 1e-10);
}

TEST_CASE("convergence order under step halving") {
  const auto w = wandering(51);
  const Field u = random_smooth_field(w, 0.1, 2, 0);
  const Field ref_ie = propagate(w, u, 0.1, 0.6, 4096);
  const Field ref_cn = propagate(w, u, 0.1, 0.6, 4096, Scheme::crank_nicolson);
  std::vector<double> err_ie;
  std::vector<double> err_cn;
  for (int steps : {16, 32, 64, 128}) {
    err_ie.push_back(max_abs(propagate(w, u, 0.1, 0.6, steps).values - ref_ie.values));
    err_cn.push_back(max_abs(propagate(w, u, 0.1, 0.6, steps, Scheme::crank_nicolson).values - ref_cn.values));
  }
  // Least-squares slope of log2 error against the halving index.
  const auto order = [](const std::vector<double>& e) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      const double x = static_cast<double>(i) - 0.5 * static_cast<double>(e.size() - 1);
      num += x * std::log2(e[i]);
      den += x * x;
    }
    return -num / den;
  };
  CHECK(order(err_ie) >= 0.9);
  CHECK(order(err_cn) >= 1.8);
  CHECK(std::log2(err_ie[2] / err_ie[3]) >= 0.9);
}

TEST_CASE("adjoint and dual flows") {
  const auto w = wandering(51);
  const double s = 0.2;
  const double t = 0.6;
  const int steps = 24;
  const HeatKernel k = heat_kernel(w, s, t, steps);
  const Vector mt = measure_at(w, t).masses;
  const Vector ms = measure_at(w, s).masses;

  const Field one = Field::constant(w.size(), 1.0);
  const Vector direct = k.values.transpose() * mt;
  CHECK(max_abs(adjoint_propagate(w, one, t, s, steps).values - direct) <= 1e-10 * max_abs(direct));

  const Field g = random_nonnegative_field(w, t, 4, 1);
  const Field u = random_smooth_field(w, s, 4, 2);
  const Vector pstar = adjoint_propagate(w, g, t, s, steps).values;
  const double left = weighted_inner(propagate(w, u, s, t, steps).values, g.values, mt);
  const double right = weighted_inner(u.values, pstar, ms);
  CHECK(std::abs(left - right) <= 1e-10 * std::max(1.0, std::abs(left)));

  const Measure dx = Measure::dirac(w.size(), 20);
  const Vector row = k.values.row(20).transpose().cwiseProduct(ms);
  const Measure moved = dual_propagate(w, dx, t, s, steps);
  CHECK(max_abs(moved.masses - row) <= 1e-12);
  CHECK(std::abs(moved.total() - 1.0) <= 1e-12);
  CHECK(moved.masses.minCoeff() >= 0.0);

  const Vector gm = g.values.cwiseProduct(mt);
  const Measure mu(gm / gm.sum(), true);
  const Vector rhs = pstar.cwiseProduct(ms) / gm.sum();
  CHECK(max_abs(dual_propagate(w, mu, t, s, steps).masses - rhs) <= 1e-10 * max_abs(rhs));

  CHECK_THROWS_AS(dual_propagate(w, Measure(Vector::Constant(51, 0.01), false), t, s, steps), Error);
}

TEST_CASE("adjoint equals forward flow on static unweighted spaces") {
  const auto flat = flat_grid(0.0, 1.0, 21);
  const Field g = random_nonnegative_field(flat, 0.5, 9, 1);
  const Vector forward = propagate(flat, g, 0.2, 0.5, 16).values;
  const Vector adjoint = adjoint_propagate(flat, g, 0.5, 0.2, 16).values;
  CHECK(max_abs(forward - adjoint) <= 1e-10);
}

TEST_CASE("stationarity of the uniform measure on a flat grid") {
  const auto flat = flat_grid(0.0, 1.0, 21);
  const Measure uniform = Measure::probability(Vector::Ones(21));
  CHECK(max_abs(dual_propagate(flat, uniform, 0.8, 0.1, 16).masses - uniform.masses) <= 1e-14);
}

TEST_CASE("one implicit step is self-adjoint at frozen time") {
  const auto w = wandering(31);
  const Field u = random_smooth_field(w, 0.5, 6, 0);
  const Field v = random_smooth_field(w, 0.5, 6, 1);
  const Vector m = measure_at(w, 0.5).masses;
  const double left = weighted_inner(frozen_smooth(w, 0.5, u, 0.05, 1).values, v.values, m);
  const double right = weighted_inner(u.values, frozen_smooth(w, 0.5, v, 0.05, 1).values, m);
  CHECK(std::abs(left - right) <= 1e-13 * std::max(1.0, std::abs(left)));
}

TEST_CASE("P* limit") {
  const auto tp = two_point_space();
  const Field c = Field::constant(2, 1.0);
  const Field g(Vector::Unit(2, 0));
  const auto zero = pstar_limit_check(tp, c, g, 0.5, {0.1, 0.05});
  for (double q : zero.quotients) CHECK(std::abs(q) <= 1e-12);
  CHECK(zero.target == 0.0);

  // ∫Γ(u, g) dm with u = (1, 0), g = (1, 0): ½ at each of the two unit-mass points.
  const Field u(Vector::Unit(2, 0));
  const auto r = pstar_limit_check(tp, u, g, 0.5, {0.08, 0.04, 0.02, 0.01}, 64);
  CHECK(r.target == doctest::Approx(1.0));
  CHECK(r.order == doctest::Approx(1.0).epsilon(0.1));
  for (std::size_t i = 1; i < r.errors.size(); ++i) CHECK(r.errors[i] < r.errors[i - 1]);

  const auto w = wandering(101);
  const Field f = random_smooth_field(w, 0.5, 8, 0);
  const auto self = pstar_limit_check(w, f, f, 0.5, {0.02, 0.01, 0.005}, 8);
  CHECK(self.target == doctest::Approx(gamma_at(w, 0.5, f, f).values.dot(measure_at(w, 0.5).masses)));
  CHECK(self.errors.back() < 0.05 * std::abs(self.target));
}

TEST_CASE("energy estimate") {
  const auto g = gaussian_grid(3.0, 61, 1.0);
  const Field c = Field::constant(g.size(), 1.0);
  const auto zero = energy_estimate_check(g, c, 0.1, 0.5, 0.0, 32);
  CHECK(std::abs(zero.lhs) <= 1e-20);
  CHECK(zero.rhs == 0.0);
  CHECK(std::abs(zero.slack) <= 1e-20);

  const Field u = random_smooth_field(g, 0.1, 3, 0);
  const auto still = energy_estimate_check(g, u, 0.1, 0.5, 0.0, 128);
  CHECK(still.slack >= -1e-8);

  const auto w = wandering(201);
  const auto report = check_assumptions(w, 1e9, 1e9, AssumptionSample::uniform(w, 16));
  const double L = std::max(report.f_lip_time, report.d_log_lip);
  for (std::uint64_t i = 0; i < 50; ++i) {
    const Field v = random_smooth_field(w, 0.1, 11, i);
    const auto e = energy_estimate_check(w, v, 0.1, 0.5, L, 64);
    CHECK(e.slack >= -1e-6 * std::max(1.0, e.rhs));
  }
}
