#include "srflab/heat.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <limits>

namespace srflab {

const char* to_string(Scheme scheme) noexcept {
  return scheme == Scheme::implicit_euler ? "implicit-euler" : "crank-nicolson";
}

FormSnapshot snapshot_at(const DynamicSpace& space, double t) {
  space.require_in_horizon(t, "snapshot_at");
  FormSnapshot form;
  form.time = t;
  form.mass = measure_at(space, t).masses;
  form.conductance = space.edge_conductances_at(t);
  return form;
}

Vector laplacian(const DynamicSpace& space, const FormSnapshot& form, const Vector& u) {
  Vector out = Vector::Zero(u.size());
  const auto& edges = space.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [x, y, a] = edges[e];
    const double flux = form.conductance[e] * (u[y] - u[x]);
    out[x] += flux;
    out[y] -= flux;
  }
  return out.cwiseQuotient(form.mass);
}

Vector gamma(const DynamicSpace& space, const FormSnapshot& form, const Vector& u, const Vector& v) {
  Vector out = Vector::Zero(u.size());
  const auto& edges = space.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [x, y, a] = edges[e];
    const double term = form.conductance[e] * (u[y] - u[x]) * (v[y] - v[x]);
    out[x] += term;
    out[y] += term;
  }
  return 0.5 * out.cwiseQuotient(form.mass);
}

double energy(const DynamicSpace& space, const FormSnapshot& form, const Vector& u, const Vector& v) {
  double sum = 0.0;
  const auto& edges = space.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [x, y, a] = edges[e];
    sum += form.conductance[e] * (u[x] - u[y]) * (v[x] - v[y]);
  }
  // Each undirected edge appears twice in ½ Σ_{x,y}.
  return sum;
}

double weighted_inner(const Vector& a, const Vector& b, const Vector& mass) {
  return (a.array() * b.array() * mass.array()).sum();
}

namespace {

void require_size(const DynamicSpace& space, const Field& u, const char* what) {
  require(u.size() == space.size(), ErrorKind::invalid_size, std::string(what) + ": field size mismatch");
  require(u.finite(), ErrorKind::invalid_input, std::string(what) + ": field has non-finite entries");
}

double node(double s, double t, int k, int steps) {
  return k == steps ? t : s + (t - s) * static_cast<double>(k) / static_cast<double>(steps);
}

// (C - D) as a sparse matrix: the unnormalized generator.
Eigen::SparseMatrix<double> generator_matrix(const DynamicSpace& space, const FormSnapshot& form) {
  const auto n = static_cast<Eigen::Index>(space.size());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(4 * space.edges().size());
  for (std::size_t e = 0; e < space.edges().size(); ++e) {
    const auto& edge = space.edges()[e];
    const double c = form.conductance[e];
    triplets.emplace_back(edge.x, edge.y, c);
    triplets.emplace_back(edge.y, edge.x, c);
    triplets.emplace_back(edge.x, edge.x, -c);
    triplets.emplace_back(edge.y, edge.y, -c);
  }
  Eigen::SparseMatrix<double> g(n, n);
  g.setFromTriplets(triplets.begin(), triplets.end());
  return g;
}

// M - θτ (C - D): symmetric positive definite for τ > 0.
Eigen::SparseMatrix<double> step_matrix(const DynamicSpace& space, const FormSnapshot& form, double weight) {
  Eigen::SparseMatrix<double> a = -weight * generator_matrix(space, form);
  for (Eigen::Index i = 0; i < a.rows(); ++i) a.coeffRef(i, i) += form.mass[i];
  return a;
}

class Factorization {
 public:
  explicit Factorization(const Eigen::SparseMatrix<double>& a) {
    solver_.compute(a);
    if (solver_.info() != Eigen::Success) {
      throw Error(ErrorKind::numerical_failure, "factorization of the heat step matrix failed");
    }
  }
  template <class Rhs>
  Matrix solve(const Rhs& rhs) const {
    Matrix x = solver_.solve(rhs);
    if (solver_.info() != Eigen::Success) {
      throw Error(ErrorKind::numerical_failure, "heat step solve failed");
    }
    return x;
  }

 private:
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
};

void check_interval(const DynamicSpace& space, double s, double t, int steps, const char* what) {
  space.require_in_horizon(s, what);
  space.require_in_horizon(t, what);
  require(s < t, ErrorKind::bad_interval, std::string(what) + ": need s < t");
  require(steps >= 1, ErrorKind::invalid_parameter, std::string(what) + ": steps must be >= 1");
}

// Applies P_{t,s}^T to a mass-like vector: w <- M_k A_k^{-1} w for k = N..1.
Vector transpose_apply(const DynamicSpace& space, Vector w, double s, double t, int steps) {
  const double tau = (t - s) / steps;
  for (int k = steps; k >= 1; --k) {
    const auto form = snapshot_at(space, node(s, t, k, steps));
    const Factorization factor(step_matrix(space, form, tau));
    w = form.mass.cwiseProduct(factor.solve(w).col(0));
  }
  return w;
}

}  // namespace

Field laplacian_at(const DynamicSpace& space, double t, const Field& u) {
  require_size(space, u, "laplacian_at");
  return Field(laplacian(space, snapshot_at(space, t), u.values), t);
}

Field gamma_at(const DynamicSpace& space, double t, const Field& u, const Field& v) {
  require_size(space, u, "gamma_at");
  require_size(space, v, "gamma_at");
  return Field(gamma(space, snapshot_at(space, t), u.values, v.values), t);
}

double energy_at(const DynamicSpace& space, double t, const Field& u, const Field& v) {
  require_size(space, u, "energy_at");
  require_size(space, v, "energy_at");
  return energy(space, snapshot_at(space, t), u.values, v.values);
}

GammaDerivative dt_gamma(const DynamicSpace& space, double t, const Field& u, double delta) {
  require_size(space, u, "dt_gamma");
  require(delta > 0.0, ErrorKind::invalid_parameter, "dt_gamma: delta must be positive");
  space.require_in_horizon(t - delta, "dt_gamma stencil");
  space.require_in_horizon(t + delta, "dt_gamma stencil");

  const auto plus = snapshot_at(space, t + delta);
  const auto minus = snapshot_at(space, t - delta);
  GammaDerivative out;
  out.central = Field((gamma(space, plus, u.values, u.values) - gamma(space, minus, u.values, u.values)) /
                          (2.0 * delta),
                      t);

  const auto form = snapshot_at(space, t);
  const std::size_t n = space.size();
  Vector fdot(static_cast<Eigen::Index>(n));
  for (std::size_t x = 0; x < n; ++x) {
    fdot[x] = space.static_weight()
                  ? 0.0
                  : (space.weight(t + delta, x) - space.weight(t - delta, x)) / (2.0 * delta);
  }
  Vector analytic = Vector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t e = 0; e < space.edges().size(); ++e) {
    const auto [x, y, a] = space.edges()[e];
    const double du2 = (u.values[y] - u.values[x]) * (u.values[y] - u.values[x]);
    const double h = space.log_derivative(t, x, y);
    const double c = form.conductance[e];
    analytic[x] += c * du2 * (0.5 * (fdot[x] - fdot[y]) - 2.0 * h) / form.mass[x];
    analytic[y] += c * du2 * (0.5 * (fdot[y] - fdot[x]) - 2.0 * h) / form.mass[y];
  }
  out.analytic = Field(0.5 * analytic, t);
  return out;
}

Matrix propagate_columns(const DynamicSpace& space, Matrix columns, double s, double t, int steps,
                         Scheme scheme) {
  check_interval(space, s, t, steps, "propagate");
  require(columns.rows() == static_cast<Eigen::Index>(space.size()), ErrorKind::invalid_size,
          "propagate: column height mismatch");
  const double tau = (t - s) / steps;
  if (scheme == Scheme::implicit_euler) {
    for (int k = 1; k <= steps; ++k) {
      const auto form = snapshot_at(space, node(s, t, k, steps));
      const Factorization factor(step_matrix(space, form, tau));
      columns = factor.solve(form.mass.asDiagonal() * columns);
    }
    return columns;
  }
  auto previous = snapshot_at(space, s);
  for (int k = 1; k <= steps; ++k) {
    auto current = snapshot_at(space, node(s, t, k, steps));
    const Factorization factor(step_matrix(space, current, 0.5 * tau));
    const Eigen::SparseMatrix<double> g_prev = generator_matrix(space, previous);
    Matrix explicit_half = columns + 0.5 * tau * previous.mass.cwiseInverse().asDiagonal() * (g_prev * columns);
    columns = factor.solve(current.mass.asDiagonal() * explicit_half);
    previous = std::move(current);
  }
  return columns;
}

Field frozen_smooth(const DynamicSpace& space, double t, const Field& u, double duration, int steps) {
  require_size(space, u, "frozen_smooth");
  require(duration >= 0.0 && steps >= 1, ErrorKind::invalid_parameter, "frozen_smooth: bad duration or steps");
  if (duration == 0.0) return Field(u.values, t);
  const auto form = snapshot_at(space, t);
  const Factorization factor(step_matrix(space, form, duration / steps));
  Vector v = u.values;
  for (int k = 0; k < steps; ++k) v = factor.solve(form.mass.cwiseProduct(v)).col(0);
  return Field(std::move(v), t);
}

Field propagate(const DynamicSpace& space, const Field& u, double s, double t, int steps, Scheme scheme) {
  require_size(space, u, "propagate");
  Matrix out = propagate_columns(space, u.values, s, t, steps, scheme);
  return Field(out.col(0), t);
}

Propagator propagator_matrix(const DynamicSpace& space, double s, double t, int steps, Scheme scheme) {
  const auto n = static_cast<Eigen::Index>(space.size());
  Propagator p;
  p.s = s;
  p.t = t;
  p.steps = steps;
  p.scheme = scheme;
  if (s == t) {
    space.require_in_horizon(s, "propagator_matrix");
    p.matrix = Matrix::Identity(n, n);
    return p;
  }
  p.matrix = propagate_columns(space, Matrix::Identity(n, n), s, t, steps, scheme);
  return p;
}

HeatKernel heat_kernel(const DynamicSpace& space, double s, double t, int steps) {
  const auto p = propagator_matrix(space, s, t, steps, Scheme::implicit_euler);
  const auto ms = measure_at(space, s).masses;
  HeatKernel kernel;
  kernel.s = s;
  kernel.t = t;
  kernel.values = p.matrix * ms.cwiseInverse().asDiagonal();
  return kernel;
}

Field adjoint_propagate(const DynamicSpace& space, const Field& g, double t, double s, int steps) {
  require_size(space, g, "adjoint_propagate");
  check_interval(space, s, t, steps, "adjoint_propagate");
  const Vector mt = measure_at(space, t).masses;
  const Vector ms = measure_at(space, s).masses;
  Vector w = transpose_apply(space, g.values.cwiseProduct(mt), s, t, steps);
  return Field(w.cwiseQuotient(ms), s);
}

Measure dual_propagate(const DynamicSpace& space, const Measure& mu, double t, double s, int steps,
                       bool allow_subprobability) {
  require(mu.size() == space.size(), ErrorKind::invalid_size, "dual_propagate: measure size mismatch");
  require(mu.masses.allFinite() && mu.masses.minCoeff() >= 0.0, ErrorKind::invalid_measure,
          "dual_propagate: masses must be nonnegative");
  const double total = mu.total();
  if (allow_subprobability) {
    require(total <= 1.0 + 1e-12, ErrorKind::invalid_measure, "dual_propagate: total mass exceeds one");
  } else {
    require(mu.normalized && std::abs(total - 1.0) <= 1e-12, ErrorKind::invalid_measure,
            "dual_propagate: measure must be normalized");
  }
  check_interval(space, s, t, steps, "dual_propagate");
  Vector w = transpose_apply(space, mu.masses, s, t, steps);
  // Implicit Euler transposes are positive; clip rounding-level negatives.
  w = w.cwiseMax(0.0);
  return Measure(std::move(w), mu.normalized);
}

PstarLimitReport pstar_limit_check(const DynamicSpace& space, const Field& u, const Field& g, double t,
                                   const std::vector<double>& h_sequence, int steps_per_h) {
  require_size(space, u, "pstar_limit_check");
  require_size(space, g, "pstar_limit_check");
  require(!h_sequence.empty(), ErrorKind::invalid_input, "pstar_limit_check: empty h sequence");
  const auto form = snapshot_at(space, t);
  PstarLimitReport report;
  report.target = gamma(space, form, u.values, g.values).dot(form.mass);
  const double base = weighted_inner(u.values, g.values, form.mass);
  for (double h : h_sequence) {
    require(h > 0.0, ErrorKind::invalid_parameter, "pstar_limit_check: h must be positive");
    space.require_in_horizon(t - h, "pstar_limit_check stencil");
    const Field v = adjoint_propagate(space, g, t, t - h, steps_per_h);
    const Vector ms = measure_at(space, t - h).masses;
    const double q = (base - weighted_inner(u.values, v.values, ms)) / h;
    report.h_values.push_back(h);
    report.quotients.push_back(q);
    report.errors.push_back(std::abs(q - report.target));
  }
  // Least-squares slope in log-log coordinates over strictly positive errors.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (std::size_t i = 0; i < report.errors.size(); ++i) {
    if (report.errors[i] <= 0.0) continue;
    const double x = std::log(report.h_values[i]);
    const double y = std::log(report.errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  report.order = count >= 2 ? (count * sxy - sx * sy) / (count * sxx - sx * sx)
                            : std::numeric_limits<double>::quiet_NaN();
  return report;
}

EnergyReport energy_estimate_check(const DynamicSpace& space, const Field& u, double s, double tau, double L,
                                   int steps) {
  require_size(space, u, "energy_estimate_check");
  check_interval(space, s, tau, steps, "energy_estimate_check");
  const double dt = (tau - s) / steps;
  const auto start = snapshot_at(space, s);
  EnergyReport report;
  report.rhs = std::exp(-3.0 * L * s) * energy(space, start, u.values, u.values);

  Vector current = u.values;
  double integral = 0.0;
  FormSnapshot form;
  for (int k = 1; k <= steps; ++k) {
    const double tk = node(s, tau, k, steps);
    form = snapshot_at(space, tk);
    const Factorization factor(step_matrix(space, form, dt));
    current = factor.solve(form.mass.cwiseProduct(current)).col(0);
    const Vector lap = laplacian(space, form, current);
    integral += dt * std::exp(-3.0 * L * tk) * weighted_inner(lap, lap, form.mass);
  }
  report.lhs = std::exp(-3.0 * L * tau) * energy(space, form, current, current) + 2.0 * integral;
  report.slack = report.rhs - report.lhs;
  return report;
}

}  // namespace srflab
