#pragma once

#include "srflab/space.hpp"

#include <vector>

namespace srflab {

enum class Scheme { implicit_euler, crank_nicolson };

const char* to_string(Scheme scheme) noexcept;

/// Frozen-time data of the discrete Dirichlet form: vertex masses m_t and
/// edge conductances c_t (aligned with DynamicSpace::edges()).
struct FormSnapshot {
  double time = 0.0;
  Vector mass;
  std::vector<double> conductance;
};

FormSnapshot snapshot_at(const DynamicSpace& space, double t);

/// (Δ_t u)(x) = (1/m_t(x)) Σ_y c_t(x,y) (u(y) - u(x)).
Field laplacian_at(const DynamicSpace& space, double t, const Field& u);
Vector laplacian(const DynamicSpace& space, const FormSnapshot& form, const Vector& u);

/// Γ_t(u,v)(x) = (1/(2 m_t(x))) Σ_y c_t(x,y) (u(y)-u(x)) (v(y)-v(x)).
Field gamma_at(const DynamicSpace& space, double t, const Field& u, const Field& v);
Vector gamma(const DynamicSpace& space, const FormSnapshot& form, const Vector& u, const Vector& v);

/// E_t(u, v) = ½ Σ_edges c_t (u(x)-u(y)) (v(x)-v(y)).
double energy_at(const DynamicSpace& space, double t, const Field& u, const Field& v);
double energy(const DynamicSpace& space, const FormSnapshot& form, const Vector& u, const Vector& v);

/// Σ_x a(x) b(x) m(x).
double weighted_inner(const Vector& a, const Vector& b, const Vector& mass);

struct GammaDerivative {
  /// (Γ_{t+δ}(u) - Γ_{t-δ}(u)) / (2δ).
  Field central;
  /// Edge-wise derivative of the conductance-to-mass ratio: per edge the
  /// factor ½(∂_t f(x) - ∂_t f(y)) - 2 h_t(x,y), with ∂_t f by central difference.
  Field analytic;
};

GammaDerivative dt_gamma(const DynamicSpace& space, double t, const Field& u, double delta);

/// Heat propagator P_{t,s} as a matrix acting on fields: u_t = matrix · u_s.
struct Propagator {
  Matrix matrix;
  double s = 0.0;
  double t = 0.0;
  int steps = 0;
  Scheme scheme = Scheme::implicit_euler;
};

/// Kernel p_{t,s}(x, y) with respect to m_s.
struct HeatKernel {
  Matrix values;
  double s = 0.0;
  double t = 0.0;
};

/// Solves ∂_t u = Δ_t u from s to t. Implicit Euler samples Δ at the right end
/// of every step; Crank–Nicolson averages both ends.
Field propagate(const DynamicSpace& space, const Field& u, double s, double t, int steps,
                Scheme scheme = Scheme::implicit_euler);

/// Applies the same step sequence as `propagate` to every column of `columns`.
Matrix propagate_columns(const DynamicSpace& space, Matrix columns, double s, double t, int steps,
                         Scheme scheme = Scheme::implicit_euler);

/// Implicit Euler steps over a duration with the generator frozen at time t.
Field frozen_smooth(const DynamicSpace& space, double t, const Field& u, double duration, int steps);

/// s == t yields the identity.
Propagator propagator_matrix(const DynamicSpace& space, double s, double t, int steps,
                             Scheme scheme = Scheme::implicit_euler);

/// Always built from implicit Euler, which keeps entries nonnegative.
HeatKernel heat_kernel(const DynamicSpace& space, double s, double t, int steps);

/// v_s = P*_{t,s} g with v_s(y) = Σ_x p_{t,s}(x,y) g(x) m_t(x).
Field adjoint_propagate(const DynamicSpace& space, const Field& g, double t, double s, int steps);

/// μ_s = P̂_{t,s} μ_t, i.e. the transpose of the propagator applied to masses.
Measure dual_propagate(const DynamicSpace& space, const Measure& mu, double t, double s, int steps,
                       bool allow_subprobability = false);

struct PstarLimitReport {
  std::vector<double> h_values;
  std::vector<double> quotients;
  std::vector<double> errors;
  double target = 0.0;
  /// Least-squares slope of log error against log h; NaN when errors vanish.
  double order = 0.0;
};

/// (1/h)(∫ u g dm_t - ∫ u P*_{t,t-h} g dm_{t-h}) against ∫ Γ_t(u,g) dm_t.
PstarLimitReport pstar_limit_check(const DynamicSpace& space, const Field& u, const Field& g, double t,
                                   const std::vector<double>& h_sequence, int steps_per_h = 1);

struct EnergyReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
};

/// e^{-3Lτ} E_τ(u_τ) + 2 ∫_s^τ e^{-3Lt} ‖Δ_t u_t‖² dt ≤ e^{-3Ls} E_s(u_s), with the
/// time integral sampled at the right end of every implicit Euler step.
EnergyReport energy_estimate_check(const DynamicSpace& space, const Field& u, double s, double tau,
                                   double L, int steps);

}  // namespace srflab
