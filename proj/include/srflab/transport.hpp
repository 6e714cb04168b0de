#pragma once

#include "srflab/space.hpp"

#include <limits>
#include <vector>

namespace srflab {

inline constexpr double kInfiniteExponent = std::numeric_limits<double>::infinity();

/// Mass below this threshold may be left unrouted when deciding W_∞ feasibility.
inline constexpr double kFeasibilityDust = 1e-12;

/// Joint mass matrix with prescribed marginals.
struct TransportPlan {
  Matrix joint;
  Measure row_marginal;
  Measure col_marginal;
  /// ∫ d^p dγ for finite p; the largest distance on the support (mass > dust) for p = ∞.
  double cost_value = 0.0;
  double p = 1.0;
  /// Primal minus certified dual objective (finite p only), in the units of cost_value.
  double duality_gap = 0.0;

  [[nodiscard]] double row_deviation() const;
  [[nodiscard]] double col_deviation() const;
};

struct TransportResult {
  double value = 0.0;
  TransportPlan plan;
};

/// Exact minimum-cost transportation problem solved by successive shortest
/// paths with dual potentials. `cost` is rows × cols.
struct MinCostSolution {
  Matrix flow;
  Vector row_potential;
  Vector col_potential;
  double primal = 0.0;
  /// Dual objective after making the potentials exactly feasible (c-transform).
  double dual = 0.0;
};

MinCostSolution solve_transportation(const Matrix& cost, const Vector& supply, const Vector& demand);

/// Maximum flow through the bipartite graph {(i, j) : allowed(i, j)} with
/// source capacities `supply` and sink capacities `demand`.
struct BipartiteFlow {
  double value = 0.0;
  Matrix flow;
};

BipartiteFlow max_bipartite_flow(const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& allowed,
                                 const Vector& supply, const Vector& demand);

/// True when d(i, j) = |t_j - t_i| for some strictly increasing t (a line
/// metric in index order).
bool is_line_metric(const Matrix& d);

struct CouplingCell {
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  double mass = 0.0;
};

/// North-west corner coupling in index order, as a staircase of at most
/// rows + cols - 1 cells. Optimal for W_p and W_∞ on a line metric.
std::vector<CouplingCell> monotone_coupling(const Vector& supply, const Vector& demand);

/// `automatic` uses the monotone coupling when d is a line metric (increasing
/// in index, as on grids) and the network solvers otherwise.
enum class TransportSolver { automatic, network };

/// W_p for 1 <= p < ∞ with an exact optimal plan.
TransportResult wasserstein_p(const Matrix& d, double p, const Measure& mu, const Measure& nu,
                              TransportSolver solver = TransportSolver::automatic);

/// W_∞: smallest entry θ of d admitting a coupling supported on {d <= θ},
/// found by bisection over the sorted distinct values with max-flow
/// feasibility. Among optimal plans the returned one minimises ∫ d² dγ.
TransportResult wasserstein_inf(const Matrix& d, const Measure& mu, const Measure& nu,
                                TransportSolver solver = TransportSolver::automatic);

/// Dispatches on p, with p = kInfiniteExponent meaning W_∞.
TransportResult wasserstein(const Matrix& d, double p, const Measure& mu, const Measure& nu,
                            TransportSolver solver = TransportSolver::automatic);

/// S(μ) = Σ ρ log ρ · reference, ρ = μ / reference. +∞ when μ is not
/// absolutely continuous with respect to the reference.
double entropy(const Measure& mu, const Measure& reference);

/// Displacement interpolation on a 1D grid: convex combination of quantile
/// functions, re-binned to the two nearest grid points with linear weights.
Measure quantile_geodesic_1d(const DynamicSpace& space, const Measure& mu0, const Measure& mu1, double a);

struct ConvexityReport {
  double entropy_derivative_gap = 0.0;  // ∂_a S|_{1-} - ∂_a S|_{0+}
  double w2_backward_derivative = 0.0;  // (W_t² - W_{t-dt}²) / dt
  double slack = 0.0;                   // gap + ½ ∂_t^- W_t²
  double w2_at_t = 0.0;
  bool inconclusive = false;
};

ConvexityReport dynamic_convexity_check(const DynamicSpace& space, const Measure& mu0, const Measure& mu1,
                                        double t, double da, double dt_step);

}  // namespace srflab
