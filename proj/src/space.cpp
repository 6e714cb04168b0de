#include "srflab/space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

namespace srflab {

namespace {

constexpr double kQuadratureTolerance = 1e-14;
constexpr int kMaxQuadratureDoublings = 14;

// Composite Simpson on [a, b], starting at `per_unit` panels per unit length
// and doubling until successive estimates agree. Exact for cubics at the base level.
template <class F>
double refined_simpson(F&& f, double a, double b, int per_unit) {
  if (a == b) return 0.0;
  if (b < a) return -refined_simpson(f, b, a, per_unit);

  int panels = std::max(2, static_cast<int>(std::ceil(per_unit * (b - a))));
  if (panels % 2 != 0) ++panels;

  // Trapezoid sums T_m reuse every evaluation of the previous level;
  // Simpson with 2m panels is (4 T_{2m} - T_m) / 3.
  int m = panels / 2;
  double h = (b - a) / m;
  double interior = 0.0;
  for (int k = 1; k < m; ++k) interior += f(a + k * h);
  const double ends = 0.5 * (f(a) + f(b));
  double trapezoid = h * (ends + interior);

  double previous = std::numeric_limits<double>::quiet_NaN();
  for (int level = 0; level <= kMaxQuadratureDoublings; ++level) {
    double midpoints = 0.0;
    for (int k = 0; k < m; ++k) midpoints += f(a + (k + 0.5) * h);
    const double refined = 0.5 * trapezoid + 0.5 * h * midpoints;
    const double simpson = (4.0 * refined - trapezoid) / 3.0;
    if (std::abs(simpson - previous) <= kQuadratureTolerance * std::max(1.0, std::abs(simpson))) {
      return simpson;
    }
    previous = simpson;
    trapezoid = refined;
    m *= 2;
    h *= 0.5;
  }
  return previous;
}

std::vector<double> shortest_paths_from(std::size_t source, std::size_t n,
                                        const std::vector<Edge>& edges,
                                        const std::vector<std::vector<std::size_t>>& incident,
                                        const std::vector<double>& lengths) {
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[source] = 0.0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[v]) continue;
    for (std::size_t e : incident[v]) {
      const std::size_t w = edges[e].x == v ? edges[e].y : edges[e].x;
      const double candidate = d + lengths[e];
      if (candidate < dist[w]) {
        dist[w] = candidate;
        queue.emplace(candidate, w);
      }
    }
  }
  return dist;
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

DynamicSpace::DynamicSpace(SpaceDefinition def) : def_(std::move(def)) {
  n_ = static_cast<std::size_t>(def_.base_measure.size());
  require(n_ >= 2, ErrorKind::invalid_size, "a space needs at least two vertices");
  require(def_.base_distance.rows() == static_cast<Eigen::Index>(n_) &&
              def_.base_distance.cols() == static_cast<Eigen::Index>(n_),
          ErrorKind::invalid_size, "base distance must be n x n");
  require(def_.base_measure.allFinite() && def_.base_measure.minCoeff() > 0.0,
          ErrorKind::invalid_input, "base measure must be positive");
  require(def_.horizon.begin < def_.horizon.end, ErrorKind::invalid_horizon, "empty horizon");
  require(def_.horizon.admits(def_.reference_time), ErrorKind::invalid_horizon,
          "reference time outside horizon");
  require(static_cast<bool>(def_.weight) && static_cast<bool>(def_.log_derivative) &&
              static_cast<bool>(def_.local_log_derivative),
          ErrorKind::invalid_evaluator, "all evaluators must be set");
  require(def_.quadrature_per_unit >= 2, ErrorKind::invalid_parameter,
          "quadrature resolution must be at least 2 panels per unit time");
  if (def_.kind == SpaceKind::grid) {
    require(def_.coordinates.size() == n_, ErrorKind::invalid_size,
            "grid spaces need one coordinate per vertex");
    spacing_ = (def_.coordinates.back() - def_.coordinates.front()) / static_cast<double>(n_ - 1);
  }

  incident_.assign(n_, {});
  for (std::size_t e = 0; e < def_.edges.size(); ++e) {
    auto& edge = def_.edges[e];
    require(edge.x < n_ && edge.y < n_ && edge.x != edge.y, ErrorKind::invalid_input,
            "edge endpoints must be distinct vertices");
    if (edge.x > edge.y) std::swap(edge.x, edge.y);
    require(edge.weight > 0.0 && finite(edge.weight), ErrorKind::invalid_input,
            "edge weights must be positive");
    incident_[edge.x].push_back(e);
    incident_[edge.y].push_back(e);
  }

  // Connectedness of the conductance support.
  std::vector<bool> seen(n_, false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t e : incident_[v]) {
      const std::size_t w = def_.edges[e].x == v ? def_.edges[e].y : def_.edges[e].x;
      if (!seen[w]) {
        seen[w] = true;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  require(reached == n_, ErrorKind::invalid_input, "adjacency support must be connected");

  std::size_t max_degree = 0;
  for (const auto& inc : incident_) max_degree = std::max(max_degree, inc.size());
  boundary_.resize(n_);
  for (std::size_t x = 0; x < n_; ++x) boundary_[x] = incident_[x].size() < max_degree;

  // The base distance must be the geodesic (shortest path) metric of its own edge lengths.
  const Matrix& d = def_.base_distance;
  for (std::size_t x = 0; x < n_; ++x) {
    require(d(x, x) == 0.0, ErrorKind::invalid_input, "base distance needs a zero diagonal");
    for (std::size_t y = x + 1; y < n_; ++y) {
      require(finite(d(x, y)) && d(x, y) > 0.0 && std::abs(d(x, y) - d(y, x)) <= 1e-12 * d(x, y),
              ErrorKind::invalid_input, "base distance must be symmetric and positive");
    }
  }
  std::vector<double> lengths(def_.edges.size());
  for (std::size_t e = 0; e < def_.edges.size(); ++e) lengths[e] = d(def_.edges[e].x, def_.edges[e].y);
  for (std::size_t x = 0; x < n_; ++x) {
    const auto geodesic = shortest_paths_from(x, n_, def_.edges, incident_, lengths);
    for (std::size_t y = 0; y < n_; ++y) {
      require(std::abs(geodesic[y] - d(x, y)) <= 1e-9 * std::max(1.0, d(x, y)), ErrorKind::invalid_input,
              "base distance is not the shortest-path metric of the adjacency");
    }
  }

  // Probe every evaluator on a time grid covering the horizon.
  const int probes = 33;
  double h_sup = 0.0;
  for (int k = 0; k < probes; ++k) {
    const double t = def_.horizon.begin + (def_.horizon.end - def_.horizon.begin) * k / probes;
    for (std::size_t x = 0; x < n_; ++x) {
      require(finite(def_.weight(t, x)), ErrorKind::invalid_evaluator,
              "weight evaluator returned a non-finite value");
      require(finite(def_.local_log_derivative(t, x)), ErrorKind::invalid_evaluator,
              "local log-derivative returned a non-finite value");
    }
    for (const auto& edge : def_.edges) {
      const double h = def_.log_derivative(t, edge.x, edge.y);
      require(finite(h), ErrorKind::invalid_evaluator, "log-derivative returned a non-finite value");
      h_sup = std::max(h_sup, std::abs(h));
    }
  }
  if (def_.log_derivative_bound < 0.0) def_.log_derivative_bound = h_sup;
}

void DynamicSpace::require_in_horizon(double t, const char* what) const {
  if (!def_.horizon.admits(t)) {
    throw Error(ErrorKind::out_of_horizon,
                std::string(what) + ": t=" + std::to_string(t) + " outside [" +
                    std::to_string(def_.horizon.begin) + ", " + std::to_string(def_.horizon.end) + ")");
  }
}

double DynamicSpace::integrated_log_derivative(double s, double t, std::size_t x, std::size_t y) const {
  return refined_simpson([&](double r) { return def_.log_derivative(r, x, y); }, s, t,
                         def_.quadrature_per_unit);
}

double DynamicSpace::integrated_local_log_derivative(double s, double t, std::size_t x) const {
  return refined_simpson([&](double r) { return def_.local_log_derivative(r, x); }, s, t,
                         def_.quadrature_per_unit);
}

std::vector<double> DynamicSpace::edge_distances_at(double t) const {
  std::vector<double> out(def_.edges.size());
  const double t0 = def_.reference_time;
  double shared = 0.0;
  if (def_.pair_independent_log_derivative && !def_.edges.empty()) {
    shared = integrated_log_derivative(t0, t, def_.edges[0].x, def_.edges[0].y);
  }
  for (std::size_t e = 0; e < def_.edges.size(); ++e) {
    const auto& edge = def_.edges[e];
    const double exponent = def_.pair_independent_log_derivative
                                ? shared
                                : integrated_log_derivative(t0, t, edge.x, edge.y);
    out[e] = def_.base_distance(edge.x, edge.y) * std::exp(exponent);
  }
  return out;
}

std::vector<double> DynamicSpace::edge_conductances_at(double t) const {
  const auto lengths = edge_distances_at(t);
  std::vector<double> out(def_.edges.size());
  for (std::size_t e = 0; e < def_.edges.size(); ++e) {
    const auto& edge = def_.edges[e];
    const double d = lengths[e];
    require(finite(d) && d > 0.0, ErrorKind::degenerate_metric,
            "zero or non-finite distance between adjacent vertices");
    const double w = std::exp(-0.5 * (def_.weight(t, edge.x) + def_.weight(t, edge.y)));
    out[e] = edge.weight * w / (d * d);
  }
  return out;
}

DynamicSpace make_grid_space(double lo, double hi, std::size_t n, WeightFn weight,
                             LogDerivativeFn log_derivative,
                             LocalLogDerivativeFn local_log_derivative, GridOptions options) {
  require(n >= 2, ErrorKind::invalid_size, "grid needs n >= 2");
  require(lo < hi, ErrorKind::invalid_input, "grid interval needs lo < hi");
  SpaceDefinition def;
  def.name = options.name;
  def.kind = SpaceKind::grid;
  const double dx = (hi - lo) / static_cast<double>(n - 1);
  def.coordinates.resize(n);
  for (std::size_t i = 0; i < n; ++i) def.coordinates[i] = lo + dx * static_cast<double>(i);
  def.coordinates.back() = hi;
  def.base_measure = Vector::Ones(static_cast<Eigen::Index>(n));
  def.base_distance.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      def.base_distance(i, j) = dx * std::abs(static_cast<double>(i) - static_cast<double>(j));
    }
  }
  def.edges.reserve(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) def.edges.push_back({i, i + 1, 1.0});
  def.weight = std::move(weight);
  def.log_derivative = std::move(log_derivative);
  def.local_log_derivative = std::move(local_log_derivative);
  def.horizon = options.horizon;
  def.reference_time = options.reference_time;
  def.log_derivative_bound = options.log_derivative_bound;
  def.pair_independent_log_derivative = options.pair_independent_log_derivative;
  def.static_weight = options.static_weight;
  return DynamicSpace(std::move(def));
}

Matrix distance_at(const DynamicSpace& space, double t) {
  space.require_in_horizon(t, "distance_at");
  const std::size_t n = space.size();
  const auto lengths = space.edge_distances_at(t);
  std::vector<std::vector<std::size_t>> incident(n);
  for (std::size_t x = 0; x < n; ++x) incident[x] = space.incident(x);
  Matrix d(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t x = 0; x < n; ++x) {
    const auto row = shortest_paths_from(x, n, space.edges(), incident, lengths);
    for (std::size_t y = 0; y < n; ++y) d(x, y) = row[y];
  }
  // Symmetrize rounding differences between the two Dijkstra directions.
  return 0.5 * (d + d.transpose());
}

Measure measure_at(const DynamicSpace& space, double t) {
  space.require_in_horizon(t, "measure_at");
  const std::size_t n = space.size();
  Vector m(static_cast<Eigen::Index>(n));
  for (std::size_t x = 0; x < n; ++x) m[x] = std::exp(-space.weight(t, x)) * space.base_measure()[x];
  return Measure(std::move(m), false);
}

Eigen::SparseMatrix<double> conductance_at(const DynamicSpace& space, double t) {
  space.require_in_horizon(t, "conductance_at");
  const auto c = space.edge_conductances_at(t);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * c.size());
  for (std::size_t e = 0; e < c.size(); ++e) {
    const auto& edge = space.edges()[e];
    triplets.emplace_back(edge.x, edge.y, c[e]);
    triplets.emplace_back(edge.y, edge.x, c[e]);
  }
  const auto n = static_cast<Eigen::Index>(space.size());
  Eigen::SparseMatrix<double> out(n, n);
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

AssumptionSample AssumptionSample::uniform(const DynamicSpace& space, std::size_t count) {
  AssumptionSample sample;
  const auto& horizon = space.horizon();
  for (std::size_t k = 1; k <= count; ++k) {
    sample.times.push_back(horizon.begin +
                           (horizon.end - horizon.begin) * static_cast<double>(k) /
                               static_cast<double>(count + 1));
  }
  for (const auto& edge : space.edges()) sample.pairs.emplace_back(edge.x, edge.y);
  sample.pairs.emplace_back(0, space.size() - 1);
  return sample;
}

AssumptionReport check_assumptions(const DynamicSpace& space, double C, double L,
                                   const AssumptionSample& sample) {
  require(!sample.times.empty() && !sample.pairs.empty(), ErrorKind::invalid_input,
          "empty assumption sample grid");
  for (double t : sample.times) space.require_in_horizon(t, "check_assumptions");
  const std::size_t n = space.size();
  for (const auto& [x, y] : sample.pairs) {
    require(x < n && y < n && x != y, ErrorKind::invalid_input, "sample pair out of range");
  }

  AssumptionReport report;
  std::vector<Matrix> distances;
  distances.reserve(sample.times.size());
  for (double t : sample.times) distances.push_back(distance_at(space, t));

  for (std::size_t i = 0; i < sample.times.size(); ++i) {
    const double t = sample.times[i];
    for (std::size_t x = 0; x < n; ++x) report.f_bound = std::max(report.f_bound, std::abs(space.weight(t, x)));
    for (const auto& [x, y] : sample.pairs) {
      const double df = std::abs(space.weight(t, x) - space.weight(t, y));
      report.f_lip_space = std::max(report.f_lip_space, df / distances[i](x, y));
      report.h_bound = std::max(report.h_bound, std::abs(space.log_derivative(t, x, y)));
    }
    for (std::size_t j = i + 1; j < sample.times.size(); ++j) {
      const double s = sample.times[j];
      const double gap = std::abs(t - s);
      if (gap == 0.0) continue;
      for (std::size_t x = 0; x < n; ++x) {
        report.f_lip_time =
            std::max(report.f_lip_time, std::abs(space.weight(t, x) - space.weight(s, x)) / gap);
      }
      for (const auto& [x, y] : sample.pairs) {
        report.d_log_lip = std::max(
            report.d_log_lip, std::abs(std::log(distances[i](x, y) / distances[j](x, y))) / gap);
      }
    }
  }

  report.f_bound_pass = report.f_bound <= C;
  report.f_lip_space_pass = report.f_lip_space <= C;
  report.f_lip_time_pass = report.f_lip_time <= L;
  report.d_log_lip_pass = report.d_log_lip <= L;
  report.h_bound_pass = report.h_bound <= space.log_derivative_bound() * (1.0 + 1e-12);
  return report;
}

}  // namespace srflab
