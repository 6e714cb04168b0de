#include "srflab/flows.hpp"
#include "srflab/space.hpp"

#include <doctest.h>

#include <cmath>

using namespace srflab;

namespace {

double zero_f(double, std::size_t) { return 0.0; }
double zero_h(double, std::size_t, std::size_t) { return 0.0; }
double zero_local(double, std::size_t) { return 0.0; }

}  // namespace

TEST_CASE("grid construction") {
  const auto g3 = make_grid_space(-1.0, 1.0, 3, zero_f, zero_h, zero_local);
  CHECK(g3.size() == 3);
  CHECK(g3.coordinates()[0] == doctest::Approx(-1.0));
  CHECK(g3.coordinates()[1] == doctest::Approx(0.0));
  CHECK(g3.coordinates()[2] == doctest::Approx(1.0));
  CHECK(g3.base_distance()(0, 2) == doctest::Approx(2.0));
  CHECK(g3.edges().size() == 2);

  const auto g2 = make_grid_space(0.0, 1.0, 2, zero_f, zero_h, zero_local);
  CHECK(g2.size() == 2);
  CHECK(g2.base_distance()(0, 1) == doctest::Approx(1.0));

  const auto w = wandering_gaussian([](double t) { return 1.0 + 0.5 * t; }, [](double t) { return std::sin(t); },
                                    [](double) { return 0.0; }, 4.0, 201);
  CHECK(w.spacing() == doctest::Approx(0.04));
}

TEST_CASE("grid construction errors") {
  CHECK_THROWS_AS(make_grid_space(0.0, 1.0, 1, zero_f, zero_h, zero_local), Error);
  try {
    make_grid_space(0.0, 1.0, 1, zero_f, zero_h, zero_local);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_size);
  }
  try {
    (void)make_grid_space(
        0.0, 1.0, 4, [](double, std::size_t x) { return x == 2 ? std::nan("") : 0.0; }, zero_h, zero_local);
    FAIL("expected invalid_evaluator");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_evaluator);
  }
}

TEST_CASE("distance_at") {
  const auto flat = flat_grid(-1.0, 1.0, 5);
  CHECK((distance_at(flat, 0.7) - flat.base_distance()).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(distance_at(flat, 1.5), Error);

  const double K = 0.4;
  const auto hom = homothetic(gaussian_grid(2.0, 21, 2.0 * K), K);
  for (double t : {0.0, 0.1, 0.5, 0.9}) {
    const Matrix d = distance_at(hom, t);
    const double err = (d - hom.base_distance() * std::sqrt(1.0 - 2.0 * K * t)).cwiseAbs().maxCoeff();
    CHECK(err <= 1e-10);
  }

  const double c = 0.7;
  const auto clog = constant_log_derivative(flat_grid(0.0, 1.0, 6), c);
  for (double t : {0.2, 0.55, 0.95}) {
    const Matrix d = distance_at(clog, t);
    const double expect = std::exp(c * (t - clog.reference_time()));
    CHECK((d - clog.base_distance() * expect).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("distance_at splits over time for quadratic h") {
  // h_r = 1 + r - r²: Simpson integrates it exactly, so the two routes agree.
  auto h = [](double r, std::size_t, std::size_t) { return 1.0 + r - r * r; };
  auto H = [](double r, std::size_t) { return 1.0 + r - r * r; };
  GridOptions opts;
  opts.pair_independent_log_derivative = true;
  opts.log_derivative_bound = 1.25;
  const auto space = make_grid_space(0.0, 1.0, 5, zero_f, h, H, opts);
  const double s = 0.3;
  const double t = 0.8;
  const double direct = space.integrated_log_derivative(0.0, t, 0, 1);
  const double split = space.integrated_log_derivative(0.0, s, 0, 1) + space.integrated_log_derivative(s, t, 0, 1);
  CHECK(std::abs(direct - split) <= 1e-10);
  const double exact = t + t * t / 2.0 - t * t * t / 3.0;
  CHECK(std::abs(direct - exact) <= 1e-12);
  CHECK(distance_at(space, t)(0, 1) == doctest::Approx(0.25 * std::exp(exact)).epsilon(1e-12));
}

TEST_CASE("measure_at") {
  const auto flat = flat_grid(0.0, 1.0, 4);
  CHECK((measure_at(flat, 0.5).masses - flat.base_measure()).cwiseAbs().maxCoeff() == 0.0);

  const auto halved = make_grid_space(
      0.0, 1.0, 4, [](double, std::size_t) { return std::log(2.0); }, zero_h, zero_local);
  CHECK((measure_at(halved, 0.3).masses - 0.5 * halved.base_measure()).cwiseAbs().maxCoeff() <= 1e-15);

  // α_t = 1, β = γ = 0 at x = 1 gives f = 1.
  const auto w = wandering_gaussian([](double) { return 1.0; }, [](double) { return 0.0; }, [](double) { return 0.0; },
                                    4.0, 201);
  const std::size_t x = 125;  // -4 + 125 · 0.04 = 1
  CHECK(w.coordinates()[x] == doctest::Approx(1.0));
  CHECK(measure_at(w, 0.5).masses[static_cast<Eigen::Index>(x)] ==
        doctest::Approx(w.base_measure()[static_cast<Eigen::Index>(x)] * std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("conductance_at") {
  const double dx = 0.25;
  const auto flat = flat_grid(0.0, 1.0, 5);
  const auto c = conductance_at(flat, 0.5);
  CHECK(c.coeff(1, 2) == doctest::Approx(1.0 / (dx * dx)));
  CHECK(c.coeff(2, 1) == doctest::Approx(1.0 / (dx * dx)));
  CHECK(c.coeff(0, 2) == 0.0);

  const double K = 0.3;
  const auto hom = homothetic(gaussian_grid(2.0, 11, 2.0 * K), K);
  const double t0 = 0.0;
  const double t = 0.7;
  const auto c0 = conductance_at(hom, t0);
  const auto ct = conductance_at(hom, t);
  const double ratio = std::pow(distance_at(hom, t0)(3, 4) / distance_at(hom, t)(3, 4), 2);
  CHECK(ct.coeff(3, 4) == doctest::Approx(c0.coeff(3, 4) * ratio).epsilon(1e-12));
  CHECK(ratio == doctest::Approx((1.0 - 2.0 * K * t0) / (1.0 - 2.0 * K * t)).epsilon(1e-10));

  const auto quarter = make_grid_space(
      0.0, 1.0, 5, [](double, std::size_t) { return std::log(4.0); }, zero_h, zero_local);
  CHECK(conductance_at(quarter, 0.5).coeff(0, 1) == doctest::Approx(0.25 / (dx * dx)));
}

TEST_CASE("check_assumptions") {
  const auto g = static_space(gaussian_grid(4.0, 41, 1.0));
  const auto sample = AssumptionSample::uniform(g, 8);
  const auto r = check_assumptions(g, 100.0, 0.1, sample);
  CHECK(r.pass());
  CHECK(r.f_lip_time == 0.0);
  CHECK(r.d_log_lip == 0.0);
  CHECK(r.h_bound == 0.0);

  // α_t = 1 + t/2, β_t = sin t on [-4, 4]: |f| ≤ 1.5² · 16 + 4 sin 1 ≈ 39.4 over t < 1
  // and |∂_t f| ≤ 2 · 16 · 1.5 · 0.5 + 4 = 28.
  const auto w = wandering_gaussian([](double t) { return 1.0 + 0.5 * t; }, [](double t) { return std::sin(t); },
                                    [](double) { return 0.0; }, 4.0, 201);
  const auto ws = AssumptionSample::uniform(w, 16);
  double f_sup = 0.0;
  for (double t : ws.times)
    for (std::size_t x = 0; x < w.size(); ++x) f_sup = std::max(f_sup, std::abs(w.weight(t, x)));
  const auto wr = check_assumptions(w, f_sup + 1e-9, 28.0, ws);
  CHECK(wr.f_bound == doctest::Approx(f_sup));
  CHECK(wr.pass());

  const auto quad = make_grid_space(
      0.0, 1.0, 3, [](double t, std::size_t) { return t * t; }, zero_h, zero_local);
  const auto qr = check_assumptions(quad, 10.0, 1.0, AssumptionSample::uniform(quad, 8));
  CHECK_FALSE(qr.f_lip_time_pass);
  CHECK_FALSE(qr.pass());

  AssumptionSample empty;
  CHECK_THROWS_AS(check_assumptions(g, 1.0, 1.0, empty), Error);
}

TEST_CASE("log-Lipschitz bound on the homothetic flow") {
  const double K = 0.5;
  const auto hom = homothetic(gaussian_grid(4.0, 41, 1.0), K);
  const double C = hom.log_derivative_bound();
  for (double s : {0.0, 0.2, 0.5}) {
    for (double t : {0.3, 0.6, 0.9}) {
      if (!hom.horizon().admits(t) || s == t) continue;
      const double ratio = std::abs(std::log(distance_at(hom, t)(0, 1) / distance_at(hom, s)(0, 1)));
      CHECK(ratio <= C * std::abs(t - s) + 1e-12);
    }
  }
}
