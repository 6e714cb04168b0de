#include "srflab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

namespace srflab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<Eigen::Index> positive_indices(const Vector& v) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] > 0.0) idx.push_back(i);
  }
  return idx;
}

void check_pair(const Matrix& d, const Measure& mu, const Measure& nu) {
  require(d.rows() == static_cast<Eigen::Index>(mu.size()) && d.cols() == static_cast<Eigen::Index>(nu.size()),
          ErrorKind::invalid_size, "distance matrix does not match the measures");
  require(mu.masses.allFinite() && nu.masses.allFinite() && mu.masses.minCoeff() >= 0.0 &&
              nu.masses.minCoeff() >= 0.0,
          ErrorKind::invalid_measure, "masses must be finite and nonnegative");
  require(std::abs(mu.total() - nu.total()) <= 1e-9, ErrorKind::unbalanced_input,
          "measures carry different total mass");
  require(mu.total() > 0.0, ErrorKind::invalid_measure, "measures carry no mass");
}

// Dinic's algorithm with floating capacities.
class Dinic {
 public:
  explicit Dinic(int nodes) : graph_(nodes), level_(nodes), cursor_(nodes) {}

  int add_edge(int from, int to, double cap) {
    const int id = static_cast<int>(edges_.size());
    edges_.push_back({to, cap});
    edges_.push_back({from, 0.0});
    graph_[from].push_back(id);
    graph_[to].push_back(id + 1);
    return id;
  }

  double run(int source, int sink) {
    double total = 0.0;
    while (bfs(source, sink)) {
      std::fill(cursor_.begin(), cursor_.end(), 0);
      while (true) {
        const double pushed = dfs(source, sink, kInf);
        if (pushed <= 0.0) break;
        total += pushed;
      }
    }
    return total;
  }

  [[nodiscard]] double flow_on(int edge_id) const { return edges_[edge_id ^ 1].cap; }

 private:
  struct Arc {
    int to;
    double cap;
  };
  static constexpr double kResidual = 1e-18;

  bool bfs(int source, int sink) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<int> queue;
    level_[source] = 0;
    queue.push(source);
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop();
      for (int id : graph_[v]) {
        const Arc& arc = edges_[id];
        if (arc.cap > kResidual && level_[arc.to] < 0) {
          level_[arc.to] = level_[v] + 1;
          queue.push(arc.to);
        }
      }
    }
    return level_[sink] >= 0;
  }

  double dfs(int v, int sink, double limit) {
    if (v == sink) return limit;
    for (auto& i = cursor_[v]; i < static_cast<int>(graph_[v].size()); ++i) {
      const int id = graph_[v][i];
      Arc& arc = edges_[id];
      if (arc.cap <= kResidual || level_[arc.to] != level_[v] + 1) continue;
      const double pushed = dfs(arc.to, sink, std::min(limit, arc.cap));
      if (pushed > 0.0) {
        arc.cap -= pushed;
        edges_[id ^ 1].cap += pushed;
        return pushed;
      }
    }
    return 0.0;
  }

  std::vector<Arc> edges_;
  std::vector<std::vector<int>> graph_;
  std::vector<int> level_;
  std::vector<int> cursor_;
};

// Positions t_i with d(i, j) = |t_i - t_j| and t increasing in i, or empty
// when d is not such a line metric.
std::vector<double> line_positions(const Matrix& d) {
  const Eigen::Index n = d.rows();
  if (d.cols() != n || n < 2) return {};
  std::vector<double> pos(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) pos[i] = d(0, i);
  for (Eigen::Index i = 1; i < n; ++i) {
    if (!(pos[i] > pos[i - 1])) return {};
  }
  const double slack = 1e-12 * std::max(1.0, pos.back());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (std::abs(d(i, j) - (pos[j] - pos[i])) > slack) return {};
    }
  }
  return pos;
}

// Monotone (north-west corner) coupling in index order. Optimal for every
// cost that is a convex function of t_i - t_j. The staircase plus degenerate
// steps forms a spanning tree, which fixes the dual potentials.
MinCostSolution monotone_transport(const Matrix& cost, const Vector& supply, const Vector& demand) {
  const auto rows = positive_indices(supply);
  const auto cols = positive_indices(demand);
  MinCostSolution out;
  out.flow = Matrix::Zero(cost.rows(), cost.cols());
  out.row_potential = Vector::Zero(supply.size());
  out.col_potential = Vector::Zero(demand.size());
  if (rows.empty() || cols.empty()) return out;

  const std::size_t nr = rows.size();
  const std::size_t nc = cols.size();
  std::vector<double> u(nr), v(nc);
  std::size_t i = 0;
  std::size_t j = 0;
  double a = supply[rows[0]];
  double b = demand[cols[0]];
  u[0] = 0.0;
  v[0] = cost(rows[0], cols[0]);
  while (true) {
    const double m = std::min(a, b);
    out.flow(rows[i], cols[j]) += m;
    a -= m;
    b -= m;
    const bool last_row = i + 1 == nr;
    const bool last_col = j + 1 == nc;
    if (last_row && last_col) break;
    if (last_col || (!last_row && a <= b)) {
      ++i;
      a += supply[rows[i]];
      u[i] = cost(rows[i], cols[j]) - v[j];
    } else {
      ++j;
      b += demand[cols[j]];
      v[j] = cost(rows[i], cols[j]) - u[i];
    }
  }
  // Rounding leftovers land in the last cell.
  out.flow(rows[nr - 1], cols[nc - 1]) += std::max(0.0, std::min(a, b));

  for (std::size_t r = 0; r < nr; ++r) {
    double best = kInf;
    for (std::size_t c = 0; c < nc; ++c) best = std::min(best, cost(rows[r], cols[c]) - v[c]);
    u[r] = best;
  }
  for (std::size_t r = 0; r < nr; ++r) {
    out.row_potential[rows[r]] = u[r];
    out.dual += u[r] * supply[rows[r]];
  }
  for (std::size_t c = 0; c < nc; ++c) {
    out.col_potential[cols[c]] = v[c];
    out.dual += v[c] * demand[cols[c]];
  }
  for (std::size_t r = 0; r < nr; ++r)
    for (std::size_t c = 0; c < nc; ++c) out.primal += out.flow(rows[r], cols[c]) * cost(rows[r], cols[c]);
  return out;
}

}  // namespace

bool is_line_metric(const Matrix& d) { return !line_positions(d).empty(); }

std::vector<CouplingCell> monotone_coupling(const Vector& supply, const Vector& demand) {
  require(supply.size() > 0 && demand.size() > 0, ErrorKind::invalid_size, "monotone_coupling: empty input");
  const auto rows = positive_indices(supply);
  const auto cols = positive_indices(demand);
  std::vector<CouplingCell> out;
  if (rows.empty() || cols.empty()) return out;
  out.reserve(rows.size() + cols.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double a = supply[rows[0]];
  double b = demand[cols[0]];
  while (true) {
    const double m = std::min(a, b);
    if (m > 0.0) out.push_back({rows[i], cols[j], m});
    a -= m;
    b -= m;
    const bool last_row = i + 1 == rows.size();
    const bool last_col = j + 1 == cols.size();
    if (last_row && last_col) break;
    if (last_col || (!last_row && a <= b)) {
      a += supply[rows[++i]];
    } else {
      b += demand[cols[++j]];
    }
  }
  const double rest = std::max(0.0, std::min(a, b));
  if (rest > 0.0) {
    if (!out.empty() && out.back().row == rows.back() && out.back().col == cols.back()) {
      out.back().mass += rest;
    } else {
      out.push_back({rows.back(), cols.back(), rest});
    }
  }
  return out;
}

double TransportPlan::row_deviation() const {
  return (joint.rowwise().sum() - row_marginal.masses).cwiseAbs().maxCoeff();
}

double TransportPlan::col_deviation() const {
  return (joint.colwise().sum().transpose() - col_marginal.masses).cwiseAbs().maxCoeff();
}

MinCostSolution solve_transportation(const Matrix& cost, const Vector& supply, const Vector& demand) {
  require(cost.rows() == supply.size() && cost.cols() == demand.size(), ErrorKind::invalid_size,
          "transportation: cost shape mismatch");
  const auto rows = positive_indices(supply);
  const auto cols = positive_indices(demand);
  const int n = static_cast<int>(rows.size());
  const int m = static_cast<int>(cols.size());

  MinCostSolution out;
  out.flow = Matrix::Zero(cost.rows(), cost.cols());
  out.row_potential = Vector::Zero(supply.size());
  out.col_potential = Vector::Zero(demand.size());
  if (n == 0 || m == 0) return out;

  Matrix c(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) c(i, j) = cost(rows[i], cols[j]);

  std::vector<double> a(n), b(m);
  for (int i = 0; i < n; ++i) a[i] = supply[rows[i]];
  for (int j = 0; j < m; ++j) b[j] = demand[cols[j]];

  Matrix x = Matrix::Zero(n, m);
  // Reduced cost c_ij - u_i - v_j stays nonnegative, and zero wherever x_ij > 0.
  std::vector<double> u(n, 0.0), v(m);
  for (int j = 0; j < m; ++j) v[j] = c.col(j).minCoeff();

  std::vector<double> dist_row(n), dist_col(m);
  std::vector<int> pred_row(n), pred_col(m);  // pred_row: column we came from; pred_col: row
  std::vector<char> done_row(n), done_col(m);

  const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
  const double exhausted = 1e-15 * std::accumulate(a.begin(), a.end(), 0.0);
  for (int guard = 0; guard < 64 * (n + m) * (n + m) + 16; ++guard) {
    bool any_supply = false;
    for (int i = 0; i < n; ++i) {
      if (a[i] > exhausted) any_supply = true;
    }
    if (!any_supply) break;

    std::fill(dist_row.begin(), dist_row.end(), kInf);
    std::fill(dist_col.begin(), dist_col.end(), kInf);
    std::fill(done_row.begin(), done_row.end(), 0);
    std::fill(done_col.begin(), done_col.end(), 0);
    for (int i = 0; i < n; ++i) {
      if (a[i] > exhausted) {
        dist_row[i] = 0.0;
        pred_row[i] = -1;
      }
    }

    int target = -1;
    double target_dist = kInf;
    while (true) {
      // Dense Dijkstra: pick the closest unsettled node.
      double best = kInf;
      int best_node = -1;
      bool best_is_row = true;
      for (int i = 0; i < n; ++i) {
        if (!done_row[i] && dist_row[i] < best) {
          best = dist_row[i];
          best_node = i;
          best_is_row = true;
        }
      }
      for (int j = 0; j < m; ++j) {
        if (!done_col[j] && dist_col[j] < best) {
          best = dist_col[j];
          best_node = j;
          best_is_row = false;
        }
      }
      if (best_node < 0) break;
      if (best_is_row) {
        const int i = best_node;
        done_row[i] = 1;
        for (int j = 0; j < m; ++j) {
          if (done_col[j]) continue;
          const double reduced = std::max(0.0, c(i, j) - u[i] - v[j]);
          if (best + reduced < dist_col[j]) {
            dist_col[j] = best + reduced;
            pred_col[j] = i;
          }
        }
      } else {
        const int j = best_node;
        done_col[j] = 1;
        if (b[j] > 0.0) {
          target = j;
          target_dist = best;
          break;
        }
        for (int i = 0; i < n; ++i) {
          if (done_row[i] || x(i, j) <= 0.0) continue;
          if (best < dist_row[i]) {
            dist_row[i] = best;
            pred_row[i] = j;
          }
        }
      }
    }
    if (target < 0) break;

    for (int i = 0; i < n; ++i) u[i] -= std::min(dist_row[i], target_dist);
    for (int j = 0; j < m; ++j) v[j] += std::min(dist_col[j], target_dist);

    // Bottleneck along the path target <- row <- col <- ... <- source row.
    double delta = b[target];
    int j = target;
    int source = -1;
    while (true) {
      const int i = pred_col[j];
      if (pred_row[i] < 0) {
        source = i;
        break;
      }
      delta = std::min(delta, x(i, pred_row[i]));
      j = pred_row[i];
    }
    delta = std::min(delta, a[source]);

    j = target;
    while (true) {
      const int i = pred_col[j];
      x(i, j) += delta;
      if (pred_row[i] < 0) break;
      const int back = pred_row[i];
      x(i, back) = x(i, back) - delta <= 1e-18 * scale ? 0.0 : x(i, back) - delta;
      j = back;
    }
    a[source] = a[source] - delta <= 0.0 ? 0.0 : a[source] - delta;
    b[target] = b[target] - delta <= 0.0 ? 0.0 : b[target] - delta;
    if (delta == a[source] + delta && a[source] == 0.0) a[source] = 0.0;
  }

  // c-transform of the column potentials yields an exactly feasible dual.
  for (int i = 0; i < n; ++i) {
    double best = kInf;
    for (int j = 0; j < m; ++j) best = std::min(best, c(i, j) - v[j]);
    u[i] = best;
  }

  double primal = 0.0;
  double dual = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      out.flow(rows[i], cols[j]) = x(i, j);
      primal += x(i, j) * c(i, j);
    }
    out.row_potential[rows[i]] = u[i];
    dual += u[i] * supply[rows[i]];
  }
  for (int j = 0; j < m; ++j) {
    out.col_potential[cols[j]] = v[j];
    dual += v[j] * demand[cols[j]];
  }
  // Zero-mass rows and columns get c-transforms too, so the dual is feasible on the full cost matrix.
  std::vector<char> active_row(supply.size(), 0), active_col(demand.size(), 0);
  for (int i : rows) active_row[i] = 1;
  for (int j : cols) active_col[j] = 1;
  for (Eigen::Index r = 0; r < supply.size(); ++r) {
    if (active_row[r]) continue;
    double best = kInf;
    for (int j = 0; j < m; ++j) best = std::min(best, cost(r, cols[j]) - v[j]);
    out.row_potential[r] = best;
  }
  for (Eigen::Index k = 0; k < demand.size(); ++k) {
    if (active_col[k]) continue;
    double best = kInf;
    for (Eigen::Index r = 0; r < supply.size(); ++r) best = std::min(best, cost(r, k) - out.row_potential[r]);
    out.col_potential[k] = best;
  }
  out.primal = primal;
  out.dual = dual;
  return out;
}

BipartiteFlow max_bipartite_flow(const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& allowed,
                                 const Vector& supply, const Vector& demand) {
  const auto rows = positive_indices(supply);
  const auto cols = positive_indices(demand);
  const int n = static_cast<int>(rows.size());
  const int m = static_cast<int>(cols.size());
  const int source = n + m;
  const int sink = n + m + 1;
  Dinic dinic(n + m + 2);
  const double big = 2.0 * (supply.sum() + demand.sum()) + 1.0;
  for (int i = 0; i < n; ++i) dinic.add_edge(source, i, supply[rows[i]]);
  for (int j = 0; j < m; ++j) dinic.add_edge(n + j, sink, demand[cols[j]]);
  std::vector<std::tuple<int, int, int>> middle;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      if (allowed(rows[i], cols[j])) middle.emplace_back(i, j, dinic.add_edge(i, n + j, big));
    }
  }
  BipartiteFlow out;
  out.value = dinic.run(source, sink);
  out.flow = Matrix::Zero(supply.size(), demand.size());
  for (const auto& [i, j, id] : middle) out.flow(rows[i], cols[j]) = dinic.flow_on(id);
  return out;
}

namespace {

// Max flow through {|t_i - t_j| <= θ} on a line. Windows are monotone in i,
// so filling the leftmost open demand first is optimal.
double line_max_flow(const Matrix& d, const std::vector<double>& pos, const Vector& supply, const Vector& demand,
                     double theta) {
  const auto rows = positive_indices(supply);
  const auto cols = positive_indices(demand);
  std::vector<double> left(cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) left[c] = demand[cols[c]];
  double routed = 0.0;
  std::size_t first = 0;
  for (auto r : rows) {
    double a = supply[r];
    // Window tests use d itself so that pairs at distance exactly θ are kept.
    while (first < cols.size() &&
           (left[first] <= 0.0 || (pos[cols[first]] < pos[r] && d(r, cols[first]) > theta))) {
      ++first;
    }
    for (std::size_t c = first; c < cols.size() && a > 0.0; ++c) {
      if (d(r, cols[c]) > theta) {
        if (pos[cols[c]] > pos[r]) break;
        continue;
      }
      const double m = std::min(a, left[c]);
      a -= m;
      left[c] -= m;
      routed += m;
    }
  }
  return routed;
}

double support_max(const Matrix& d, const Matrix& flow) {
  double out = 0.0;
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = 0; j < d.cols(); ++j)
      if (flow(i, j) > kFeasibilityDust) out = std::max(out, d(i, j));
  return out;
}

}  // namespace

TransportResult wasserstein_p(const Matrix& d, double p, const Measure& mu, const Measure& nu,
                              TransportSolver solver) {
  require(p >= 1.0 && std::isfinite(p), ErrorKind::invalid_parameter, "wasserstein_p needs 1 <= p < inf");
  check_pair(d, mu, nu);
  const double dmax = d.maxCoeff();
  TransportResult result;
  result.plan.row_marginal = mu;
  result.plan.col_marginal = nu;
  result.plan.p = p;
  if (dmax <= 0.0) {
    // All points coincide metrically; any coupling is optimal.
    const auto sol = solve_transportation(Matrix::Zero(d.rows(), d.cols()), mu.masses, nu.masses);
    result.plan.joint = sol.flow;
    return result;
  }
  const Matrix scaled = (d / dmax).array().pow(p).matrix();
  const bool line = solver == TransportSolver::automatic && !line_positions(d).empty();
  const auto sol = line ? monotone_transport(scaled, mu.masses, nu.masses)
                        : solve_transportation(scaled, mu.masses, nu.masses);
  result.plan.joint = sol.flow;
  const double unit = std::pow(dmax, p);
  result.plan.cost_value = sol.primal * unit;
  result.plan.duality_gap = std::abs(sol.primal - sol.dual) * unit;
  result.value = dmax * std::pow(std::max(0.0, sol.primal), 1.0 / p);
  return result;
}

TransportResult wasserstein_inf(const Matrix& d, const Measure& mu, const Measure& nu, TransportSolver solver) {
  check_pair(d, mu, nu);
  const auto rows = positive_indices(mu.masses);
  const auto cols = positive_indices(nu.masses);
  std::vector<double> values;
  values.reserve(rows.size() * cols.size());
  for (auto i : rows)
    for (auto j : cols) values.push_back(d(i, j));
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  const std::vector<double> pos = solver == TransportSolver::automatic ? line_positions(d) : std::vector<double>{};
  const double total = std::min(mu.total(), nu.total());
  auto feasible = [&](double theta) {
    if (!pos.empty()) return line_max_flow(d, pos, mu.masses, nu.masses, theta) >= total - kFeasibilityDust;
    const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> allowed = (d.array() <= theta).matrix();
    return max_bipartite_flow(allowed, mu.masses, nu.masses).value >= total - kFeasibilityDust;
  };
  std::size_t lo = 0;
  std::size_t hi = values.size() - 1;  // the largest value is always feasible
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (feasible(values[mid])) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  const double theta = values[lo];

  TransportResult result;
  result.value = theta;
  result.plan.row_marginal = mu;
  result.plan.col_marginal = nu;
  result.plan.p = kInfiniteExponent;

  // Tie-break among optimal plans: minimise ∫ d². On a line the monotone
  // coupling does so globally and is accepted whenever it stays within θ.
  const double dmax = std::max(d.maxCoeff(), 1e-300);
  if (!pos.empty()) {
    const Matrix squared = (d / dmax).array().square().matrix();
    auto sol = monotone_transport(squared, mu.masses, nu.masses);
    if (support_max(d, sol.flow) <= theta) {
      result.plan.joint = std::move(sol.flow);
      result.plan.cost_value = support_max(d, result.plan.joint);
      return result;
    }
  }
  // Dust that cannot be routed inside {d <= θ} pays a large penalty.
  Matrix cost(d.rows(), d.cols());
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      const double r = d(i, j) / dmax;
      cost(i, j) = d(i, j) <= theta ? r * r : 1e3 + r * r;
    }
  }
  result.plan.joint = solve_transportation(cost, mu.masses, nu.masses).flow;
  result.plan.cost_value = support_max(d, result.plan.joint);
  return result;
}

TransportResult wasserstein(const Matrix& d, double p, const Measure& mu, const Measure& nu,
                            TransportSolver solver) {
  return std::isinf(p) ? wasserstein_inf(d, mu, nu, solver) : wasserstein_p(d, p, mu, nu, solver);
}

double entropy(const Measure& mu, const Measure& reference) {
  require(mu.size() == reference.size(), ErrorKind::invalid_size, "entropy: size mismatch");
  double sum = 0.0;
  for (Eigen::Index x = 0; x < mu.masses.size(); ++x) {
    const double m = mu.masses[x];
    if (m <= 0.0) continue;
    const double r = reference.masses[x];
    if (r <= 0.0) return kInf;
    sum += m * std::log(m / r);
  }
  return sum;
}

Measure quantile_geodesic_1d(const DynamicSpace& space, const Measure& mu0, const Measure& mu1, double a) {
  require(space.is_grid(), ErrorKind::unsupported_space, "quantile geodesics need a 1D grid");
  require(mu0.size() == space.size() && mu1.size() == space.size(), ErrorKind::invalid_size,
          "quantile_geodesic_1d: measure size mismatch");
  require(a >= 0.0 && a <= 1.0, ErrorKind::invalid_parameter, "interpolation parameter must lie in [0,1]");
  require(std::abs(mu0.total() - 1.0) <= 1e-9 && std::abs(mu1.total() - 1.0) <= 1e-9,
          ErrorKind::invalid_measure, "quantile_geodesic_1d needs probability measures");
  if (a == 0.0) return mu0;
  if (a == 1.0) return mu1;

  const auto n = static_cast<Eigen::Index>(space.size());
  Vector out = Vector::Zero(n);
  Eigen::Index i = 0;
  Eigen::Index j = 0;
  double r0 = mu0.masses[0];
  double r1 = mu1.masses[0];
  // Walk both quantile functions; each common q-segment is transported to
  // index (1-a) i + a j and split between the two nearest vertices.
  while (i < n && j < n) {
    if (r0 <= 0.0) {
      if (++i < n) r0 = mu0.masses[i];
      continue;
    }
    if (r1 <= 0.0) {
      if (++j < n) r1 = mu1.masses[j];
      continue;
    }
    const double mass = std::min(r0, r1);
    const double position = (1.0 - a) * static_cast<double>(i) + a * static_cast<double>(j);
    const auto left = static_cast<Eigen::Index>(std::floor(position));
    const double frac = position - static_cast<double>(left);
    out[left] += mass * (1.0 - frac);
    if (frac > 0.0) out[std::min(left + 1, n - 1)] += mass * frac;
    if (r0 <= r1) {
      r1 -= r0;
      r0 = 0.0;
    } else {
      r0 -= r1;
      r1 = 0.0;
    }
  }
  return Measure(std::move(out), true);
}

ConvexityReport dynamic_convexity_check(const DynamicSpace& space, const Measure& mu0, const Measure& mu1,
                                        double t, double da, double dt_step) {
  require(space.is_grid(), ErrorKind::unsupported_space, "dynamic convexity check needs a 1D grid");
  require(da > 0.0 && da < 0.5, ErrorKind::invalid_parameter, "da must lie in (0, 1/2)");
  require(dt_step > 0.0, ErrorKind::invalid_parameter, "dt_step must be positive");
  space.require_in_horizon(t, "dynamic_convexity_check");
  space.require_in_horizon(t - dt_step, "dynamic_convexity_check stencil");

  const Measure reference = measure_at(space, t);
  const double s0 = entropy(mu0, reference);
  const double s_da = entropy(quantile_geodesic_1d(space, mu0, mu1, da), reference);
  const double s_1da = entropy(quantile_geodesic_1d(space, mu0, mu1, 1.0 - da), reference);
  const double s1 = entropy(mu1, reference);

  ConvexityReport report;
  if (!std::isfinite(s0) || !std::isfinite(s_da) || !std::isfinite(s_1da) || !std::isfinite(s1)) {
    report.inconclusive = true;
    return report;
  }
  report.entropy_derivative_gap = (s1 - s_1da) / da - (s_da - s0) / da;
  const double w_now = wasserstein_p(distance_at(space, t), 2.0, mu0, mu1).value;
  const double w_before = wasserstein_p(distance_at(space, t - dt_step), 2.0, mu0, mu1).value;
  report.w2_at_t = w_now;
  report.w2_backward_derivative = (w_now * w_now - w_before * w_before) / dt_step;
  report.slack = report.entropy_derivative_gap + 0.5 * report.w2_backward_derivative;
  return report;
}

}  // namespace srflab
