#pragma once

#include "srflab/error.hpp"
#include "srflab/types.hpp"

#include <Eigen/SparseCore>

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace srflab {

/// f(t, x): log-density of m_t with respect to the base measure, m_t = e^{-f_t} m.
using WeightFn = std::function<double(double t, std::size_t x)>;
/// h(r, x, y) = d/dr log d_r(x, y).
using LogDerivativeFn = std::function<double(double r, std::size_t x, std::size_t y)>;
/// H(r, x) = lim_{y -> x} h(r, x, y).
using LocalLogDerivativeFn = std::function<double(double r, std::size_t x)>;

enum class SpaceKind { grid, graph };

/// Open time interval (begin, end). Evaluators are also required to be
/// defined at `begin`, which serves as the default reference time.
struct Horizon {
  double begin = 0.0;
  double end = 1.0;

  [[nodiscard]] bool contains(double t) const noexcept { return t > begin && t < end; }
  /// Closed at the left end: admissible start/reference times.
  [[nodiscard]] bool admits(double t) const noexcept { return t >= begin && t < end; }
};

/// Undirected edge with base conductance a(x, y) > 0, stored with x < y.
struct Edge {
  std::size_t x = 0;
  std::size_t y = 0;
  double weight = 1.0;
};

/// Construction input for a DynamicSpace.
struct SpaceDefinition {
  std::string name = "space";
  SpaceKind kind = SpaceKind::graph;
  Vector base_measure;
  /// Geodesic distance matrix at `reference_time`.
  Matrix base_distance;
  std::vector<Edge> edges;
  WeightFn weight;
  LogDerivativeFn log_derivative;
  LocalLogDerivativeFn local_log_derivative;
  Horizon horizon;
  double reference_time = 0.0;
  /// Declared bound C_h on |h|. Negative means: estimate by sampling.
  double log_derivative_bound = -1.0;
  /// h depends on r only (one quadrature serves every pair).
  bool pair_independent_log_derivative = false;
  /// f does not depend on t.
  bool static_weight = false;
  /// Vertex coordinates for grid spaces; empty for graphs.
  std::vector<double> coordinates;
  /// Simpson panels per unit time for the base quadrature level.
  int quadrature_per_unit = 64;
};

/// Finite stand-in for a time-dependent metric measure space (X, d_t, m_t).
/// Immutable after construction; all evaluators must be pure.
class DynamicSpace {
 public:
  explicit DynamicSpace(SpaceDefinition def);

  [[nodiscard]] std::size_t size() const noexcept { return n_; }
  [[nodiscard]] const std::string& name() const noexcept { return def_.name; }
  [[nodiscard]] SpaceKind kind() const noexcept { return def_.kind; }
  [[nodiscard]] bool is_grid() const noexcept { return def_.kind == SpaceKind::grid; }
  [[nodiscard]] const Horizon& horizon() const noexcept { return def_.horizon; }
  [[nodiscard]] double reference_time() const noexcept { return def_.reference_time; }
  [[nodiscard]] const Vector& base_measure() const noexcept { return def_.base_measure; }
  [[nodiscard]] const Matrix& base_distance() const noexcept { return def_.base_distance; }
  [[nodiscard]] const std::vector<Edge>& edges() const noexcept { return def_.edges; }
  [[nodiscard]] const std::vector<double>& coordinates() const noexcept { return def_.coordinates; }
  [[nodiscard]] double log_derivative_bound() const noexcept { return def_.log_derivative_bound; }
  [[nodiscard]] bool static_weight() const noexcept { return def_.static_weight; }
  [[nodiscard]] bool pair_independent_log_derivative() const noexcept {
    return def_.pair_independent_log_derivative;
  }
  [[nodiscard]] int quadrature_per_unit() const noexcept { return def_.quadrature_per_unit; }
  [[nodiscard]] const SpaceDefinition& definition() const noexcept { return def_; }

  /// Grid spacing; zero for graph spaces.
  [[nodiscard]] double spacing() const noexcept { return spacing_; }
  /// Edge indices incident to x.
  [[nodiscard]] const std::vector<std::size_t>& incident(std::size_t x) const { return incident_[x]; }
  /// Vertices with fewer incident edges than the maximum degree (grid ends).
  [[nodiscard]] const std::vector<bool>& boundary_mask() const noexcept { return boundary_; }

  [[nodiscard]] double weight(double t, std::size_t x) const { return def_.weight(t, x); }
  [[nodiscard]] double log_derivative(double r, std::size_t x, std::size_t y) const {
    return def_.log_derivative(r, x, y);
  }
  [[nodiscard]] double local_log_derivative(double r, std::size_t x) const {
    return def_.local_log_derivative(r, x);
  }

  /// ∫_s^t h_r(x, y) dr by refined composite Simpson.
  [[nodiscard]] double integrated_log_derivative(double s, double t, std::size_t x, std::size_t y) const;
  /// ∫_s^t H_r(x) dr by refined composite Simpson.
  [[nodiscard]] double integrated_local_log_derivative(double s, double t, std::size_t x) const;

  /// d_t on every edge, aligned with edges().
  [[nodiscard]] std::vector<double> edge_distances_at(double t) const;
  /// c_t on every edge, aligned with edges().
  [[nodiscard]] std::vector<double> edge_conductances_at(double t) const;

  void require_in_horizon(double t, const char* what) const;

 private:
  SpaceDefinition def_;
  std::size_t n_ = 0;
  double spacing_ = 0.0;
  std::vector<std::vector<std::size_t>> incident_;
  std::vector<bool> boundary_;
};

struct GridOptions {
  std::string name = "grid";
  Horizon horizon{0.0, 1.0};
  double reference_time = 0.0;
  double log_derivative_bound = -1.0;
  bool pair_independent_log_derivative = false;
  bool static_weight = false;
};

/// Uniform grid on [lo, hi] with n vertices, nearest-neighbour adjacency,
/// counting base measure and base distance |x - y|.
DynamicSpace make_grid_space(double lo, double hi, std::size_t n, WeightFn weight,
                             LogDerivativeFn log_derivative,
                             LocalLogDerivativeFn local_log_derivative, GridOptions options = {});

/// d_t(x, y): edge lengths d_{t0} exp(∫_{t0}^t h), shortest paths elsewhere.
Matrix distance_at(const DynamicSpace& space, double t);

/// m_t = e^{-f_t} m, not normalized.
Measure measure_at(const DynamicSpace& space, double t);

/// c_t(x, y) = a(x, y) e^{-(f_t(x) + f_t(y))/2} / d_t(x, y)^2 on edges.
Eigen::SparseMatrix<double> conductance_at(const DynamicSpace& space, double t);

struct AssumptionSample {
  std::vector<double> times;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;

  /// `count` equally spaced interior times; every edge plus the two extreme vertices.
  static AssumptionSample uniform(const DynamicSpace& space, std::size_t count);
};

struct AssumptionReport {
  double f_bound = 0.0;
  double f_lip_space = 0.0;
  double f_lip_time = 0.0;
  double d_log_lip = 0.0;
  double h_bound = 0.0;
  bool f_bound_pass = false;
  bool f_lip_space_pass = false;
  bool f_lip_time_pass = false;
  bool d_log_lip_pass = false;
  bool h_bound_pass = false;

  [[nodiscard]] bool pass() const noexcept {
    return f_bound_pass && f_lip_space_pass && f_lip_time_pass && d_log_lip_pass && h_bound_pass;
  }
};

AssumptionReport check_assumptions(const DynamicSpace& space, double C, double L,
                                   const AssumptionSample& sample);

}  // namespace srflab
