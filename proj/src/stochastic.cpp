#include "srflab/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "srflab/random.hpp"

namespace srflab {

namespace {

void require_decreasing(const DynamicSpace& space, const std::vector<double>& times) {
  require(!times.empty(), ErrorKind::invalid_grid, "time grid is empty");
  for (std::size_t k = 0; k < times.size(); ++k) {
    space.require_in_horizon(times[k], "time grid");
    if (k > 0) require(times[k] < times[k - 1], ErrorKind::invalid_grid, "time grid must be strictly decreasing");
  }
}

// Cumulative weights over a list of cells, sampled by inverse CDF.
struct CellSampler {
  std::vector<int> a;
  std::vector<int> b;
  std::vector<double> cumulative;

  [[nodiscard]] std::size_t draw(double u) const {
    const double target = u * cumulative.back();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    return std::min(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
  }
};

CellSampler row_sampler(const Vector& row) {
  CellSampler s;
  double running = 0.0;
  for (Eigen::Index y = 0; y < row.size(); ++y) {
    if (row[y] <= 0.0) continue;
    running += row[y];
    s.a.push_back(static_cast<int>(y));
    s.cumulative.push_back(running);
  }
  return s;
}

Vector trimmed_row(const Matrix& propagator, std::size_t x) {
  Vector row = propagator.row(static_cast<Eigen::Index>(x)).transpose();
  row = (row.array() < kKernelTrim).select(0.0, row);
  return row / row.sum();
}

double draw_uniform(std::mt19937_64& engine) { return std::uniform_real_distribution<double>(0.0, 1.0)(engine); }

// Sparse coupling of two kernel rows.
struct LocalPlan {
  std::vector<CouplingCell> cells;
  double support = 0.0;
  double duality_gap = 0.0;
};

// Couples two kernel rows. `d_lo` is the metric at the lower time; `line`
// says whether it is a line metric in index order.
LocalPlan couple_rows(const Vector& a, const Vector& b, const Matrix& d_lo, bool line, bool same_start,
                      const CouplingOptions& options) {
  LocalPlan out;
  if (options.mode == CouplingMode::independent) {
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      if (b[j] <= 0.0) continue;
      for (Eigen::Index i = 0; i < a.size(); ++i)
        if (a[i] > 0.0) out.cells.push_back({i, j, a[i] * b[j]});
    }
  } else if (same_start) {
    for (Eigen::Index i = 0; i < a.size(); ++i)
      if (a[i] > 0.0) out.cells.push_back({i, i, a[i]});
  } else if (line) {
    out.cells = monotone_coupling(a, b);
  } else {
    // Network solvers on the index window that holds both supports.
    const Eigen::Index n = a.size();
    Eigen::Index lo = n;
    Eigen::Index hi = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (a[i] > 0.0 || b[i] > 0.0) {
        lo = std::min(lo, i);
        hi = std::max(hi, i);
      }
    }
    const Eigen::Index len = hi - lo + 1;
    const Measure ma(a.segment(lo, len), true);
    const Measure mb(b.segment(lo, len), true);
    const Matrix block = d_lo.block(lo, lo, len, len);
    const auto result = options.mode == CouplingMode::winf
                            ? wasserstein_inf(block, ma, mb, TransportSolver::network)
                            : wasserstein_p(block, options.p, ma, mb, TransportSolver::network);
    out.duality_gap = result.plan.duality_gap;
    for (Eigen::Index j = 0; j < len; ++j)
      for (Eigen::Index i = 0; i < len; ++i)
        if (result.plan.joint(i, j) > 0.0) out.cells.push_back({lo + i, lo + j, result.plan.joint(i, j)});
  }
  for (const auto& cell : out.cells)
    if (cell.mass > kFeasibilityDust) out.support = std::max(out.support, d_lo(cell.row, cell.col));
  return out;
}

Matrix dense(const std::vector<CouplingCell>& cells, Eigen::Index n) {
  Matrix joint = Matrix::Zero(n, n);
  for (const auto& cell : cells) joint(cell.row, cell.col) += cell.mass;
  return joint;
}

CellSampler plan_sampler(const LocalPlan& local) {
  CellSampler s;
  double running = 0.0;
  for (const auto& cell : local.cells) {
    if (cell.mass <= 0.0) continue;
    running += cell.mass;
    s.a.push_back(static_cast<int>(cell.row));
    s.b.push_back(static_cast<int>(cell.col));
    s.cumulative.push_back(running);
  }
  return s;
}

}  // namespace

const char* to_string(CouplingMode mode) noexcept {
  switch (mode) {
    case CouplingMode::winf:
      return "winf";
    case CouplingMode::wp:
      return "wp";
    case CouplingMode::independent:
      return "independent";
  }
  return "unknown";
}

PathEnsemble sample_backward_bm(const DynamicSpace& space, const Measure& terminal,
                                const std::vector<double>& times, int n_paths, int steps, std::uint64_t seed) {
  require_decreasing(space, times);
  require(terminal.size() == space.size(), ErrorKind::invalid_size, "terminal law size mismatch");
  require(std::abs(terminal.total() - 1.0) <= 1e-12 && terminal.masses.minCoeff() >= 0.0,
          ErrorKind::invalid_measure, "terminal law must be a probability measure");
  require(n_paths > 0 && steps >= 1, ErrorKind::invalid_parameter, "need n_paths > 0 and steps >= 1");

  const std::size_t transitions = times.size() - 1;
  std::vector<std::vector<CellSampler>> rows(transitions);
  for (std::size_t k = 0; k < transitions; ++k) {
    const Matrix p = propagator_matrix(space, times[k + 1], times[k], steps).matrix;
    rows[k].resize(space.size());
    for (std::size_t x = 0; x < space.size(); ++x) rows[k][x] = row_sampler(p.row(x).transpose().cwiseMax(0.0));
  }
  const CellSampler start = row_sampler(terminal.masses);

  PathEnsemble out;
  out.times = times;
  out.first.resize(n_paths, static_cast<Eigen::Index>(times.size()));
  out.seed = seed;
  out.kernel_steps = steps;
  for (int path = 0; path < n_paths; ++path) {
    auto engine = stream_engine(seed, static_cast<std::uint64_t>(path));
    int at = start.a[start.draw(draw_uniform(engine))];
    out.first(path, 0) = at;
    for (std::size_t k = 0; k < transitions; ++k) {
      const auto& sampler = rows[k][static_cast<std::size_t>(at)];
      at = sampler.a[sampler.draw(draw_uniform(engine))];
      out.first(path, static_cast<Eigen::Index>(k + 1)) = at;
    }
  }
  return out;
}

CouplingPlan coupling_kernel(const DynamicSpace& space, double s_hi, double s_lo, std::size_t x, std::size_t y,
                             const CouplingOptions& options) {
  require(x < space.size() && y < space.size(), ErrorKind::invalid_input, "coupling_kernel: vertex out of range");
  require(s_lo < s_hi, ErrorKind::bad_interval, "coupling_kernel: need s_lo < s_hi");
  const Matrix p = propagator_matrix(space, s_lo, s_hi, options.steps).matrix;
  const double d_hi = distance_at(space, s_hi)(x, y);
  const Vector a = trimmed_row(p, x);
  const Vector b = trimmed_row(p, y);
  const Matrix d_lo = distance_at(space, s_lo);
  const auto local = couple_rows(a, b, d_lo, is_line_metric(d_lo), x == y, options);
  CouplingPlan out;
  out.plan.joint = dense(local.cells, a.size());
  out.plan.row_marginal = Measure(a, true);
  out.plan.col_marginal = Measure(b, true);
  out.plan.p = options.mode == CouplingMode::wp ? options.p : kInfiniteExponent;
  out.plan.cost_value = local.support;
  out.plan.duality_gap = local.duality_gap;
  out.excess = local.support - d_hi;
  return out;
}

long dyadic_index(double t, int level, double s) {
  require(level >= 0 && level <= 30, ErrorKind::invalid_grid, "dyadic level out of range");
  require(t > 0.0, ErrorKind::invalid_grid, "dyadic grid needs t > 0");
  const double scaled = s / t * std::ldexp(1.0, level);
  const double k = std::round(scaled);
  require(std::abs(scaled - k) <= 1e-9 && k >= 1.0 && k <= std::ldexp(1.0, level), ErrorKind::invalid_grid,
          "time is not on the dyadic grid");
  return static_cast<long>(k);
}

std::vector<double> dyadic_times(const DynamicSpace& space, double t, int level) {
  const long top = dyadic_index(t, level, t);
  std::vector<double> out;
  for (long k = top; k >= 1; --k) {
    const double s = t * std::ldexp(static_cast<double>(k), -level);
    if (!space.horizon().admits(s)) break;
    out.push_back(s);
  }
  return out;
}

TransportPlan dyadic_coupling_step(const DynamicSpace& space, int level, double t, double s_hi, double s_lo,
                                   std::size_t x, std::size_t y, const CouplingOptions& options) {
  const long k_hi = dyadic_index(t, level, s_hi);
  const long k_lo = dyadic_index(t, level, s_lo);
  require(k_lo < k_hi, ErrorKind::bad_interval, "dyadic_coupling_step: need s_lo < s_hi");
  require(x < space.size() && y < space.size(), ErrorKind::invalid_input, "vertex out of range");
  const auto n = static_cast<Eigen::Index>(space.size());

  Matrix joint = Matrix::Zero(n, n);
  joint(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = 1.0;
  Matrix composite = Matrix::Identity(n, n);
  for (long k = k_hi; k > k_lo; --k) {
    const double hi = t * std::ldexp(static_cast<double>(k), -level);
    const double lo = t * std::ldexp(static_cast<double>(k - 1), -level);
    const Matrix p = propagator_matrix(space, lo, hi, options.steps).matrix;
    const Matrix d_lo = distance_at(space, lo);
    const bool line = is_line_metric(d_lo);
    composite = composite * p;
    Matrix next = Matrix::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < n; ++b) {
        const double w = joint(a, b);
        if (w <= 0.0) continue;
        const auto local = couple_rows(trimmed_row(p, a), trimmed_row(p, b), d_lo, line, a == b, options);
        for (const auto& cell : local.cells) next(cell.row, cell.col) += w * cell.mass;
      }
    }
    joint = std::move(next);
  }

  TransportPlan plan;
  plan.joint = std::move(joint);
  plan.row_marginal = Measure(composite.row(static_cast<Eigen::Index>(x)).transpose(), true);
  plan.col_marginal = Measure(composite.row(static_cast<Eigen::Index>(y)).transpose(), true);
  plan.p = options.mode == CouplingMode::wp ? options.p : kInfiniteExponent;
  const Matrix d = distance_at(space, s_lo);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (plan.joint(i, j) > kFeasibilityDust) plan.cost_value = std::max(plan.cost_value, d(i, j));
  return plan;
}

PathEnsemble sample_coupled_bm(const DynamicSpace& space, std::size_t x, std::size_t y, double t, int level,
                               const std::vector<double>& times, int n_paths, std::uint64_t seed,
                               const CouplingOptions& options) {
  require_decreasing(space, times);
  require(x < space.size() && y < space.size(), ErrorKind::invalid_input, "vertex out of range");
  require(n_paths > 0, ErrorKind::invalid_parameter, "n_paths must be positive");
  require(std::abs(times.front() - t) <= 1e-12 * std::max(1.0, t), ErrorKind::invalid_grid,
          "the grid must start at the terminal time");
  for (double s : times) dyadic_index(t, level, s);

  const std::size_t transitions = times.size() - 1;
  std::vector<Matrix> kernels(transitions);
  std::vector<Matrix> metrics(times.size());
  std::vector<bool> lines(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    metrics[k] = distance_at(space, times[k]);
    lines[k] = is_line_metric(metrics[k]);
  }
  for (std::size_t k = 0; k < transitions; ++k) {
    kernels[k] = propagator_matrix(space, times[k + 1], times[k], options.steps).matrix;
  }

  PathEnsemble out;
  out.times = times;
  out.first.resize(n_paths, static_cast<Eigen::Index>(times.size()));
  out.second.resize(n_paths, static_cast<Eigen::Index>(times.size()));
  out.seed = seed;
  out.kernel_steps = options.steps;
  out.mode = to_string(options.mode);

  std::map<std::tuple<std::size_t, int, int>, CellSampler> cache;
  std::vector<std::vector<CellSampler>> marginal_rows;
  if (options.mode == CouplingMode::independent) {
    marginal_rows.resize(transitions);
    for (std::size_t k = 0; k < transitions; ++k) {
      marginal_rows[k].resize(space.size());
      for (std::size_t v = 0; v < space.size(); ++v) marginal_rows[k][v] = row_sampler(trimmed_row(kernels[k], v));
    }
  }

  for (int path = 0; path < n_paths; ++path) {
    auto engine = stream_engine(seed, static_cast<std::uint64_t>(path));
    int a = static_cast<int>(x);
    int b = static_cast<int>(y);
    out.first(path, 0) = a;
    out.second(path, 0) = b;
    for (std::size_t k = 0; k < transitions; ++k) {
      const double u1 = draw_uniform(engine);
      const double u2 = draw_uniform(engine);
      if (options.mode == CouplingMode::independent) {
        const auto& ra = marginal_rows[k][static_cast<std::size_t>(a)];
        const auto& rb = marginal_rows[k][static_cast<std::size_t>(b)];
        a = ra.a[ra.draw(u1)];
        b = rb.a[rb.draw(u2)];
      } else {
        const auto key = std::make_tuple(k, a, b);
        auto it = cache.find(key);
        if (it == cache.end()) {
          const auto local = couple_rows(trimmed_row(kernels[k], static_cast<std::size_t>(a)),
                                         trimmed_row(kernels[k], static_cast<std::size_t>(b)), metrics[k + 1],
                                         lines[k + 1], a == b, options);
          it = cache.emplace(key, plan_sampler(local)).first;
        }
        const std::size_t cell = it->second.draw(u1);
        a = it->second.a[cell];
        b = it->second.b[cell];
      }
      out.first(path, static_cast<Eigen::Index>(k + 1)) = a;
      out.second(path, static_cast<Eigen::Index>(k + 1)) = b;
    }
  }
  return out;
}

ContractionStats contraction_stats(const PathEnsemble& paths, const DynamicSpace& space, double margin) {
  require(paths.coupled(), ErrorKind::invalid_input, "contraction_stats needs a coupled ensemble");
  const auto columns = static_cast<Eigen::Index>(paths.times.size());
  ContractionStats stats;
  stats.margin = margin;
  stats.times = paths.times;
  std::vector<Matrix> metrics;
  for (double s : paths.times) metrics.push_back(distance_at(space, s));
  stats.reference_distance = metrics[0](paths.first(0, 0), paths.second(0, 0));

  const auto n_paths = paths.paths();
  std::vector<double> path_max(static_cast<std::size_t>(n_paths), -std::numeric_limits<double>::infinity());
  for (Eigen::Index k = 0; k < columns; ++k) {
    int violations = 0;
    double sum = 0.0;
    double worst = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n_paths; ++i) {
      const double reference = metrics[0](paths.first(i, 0), paths.second(i, 0));
      const double excess = metrics[k](paths.first(i, k), paths.second(i, k)) - reference;
      sum += excess;
      worst = std::max(worst, excess);
      if (excess > margin) ++violations;
      if (k > 0) path_max[i] = std::max(path_max[i], excess);
    }
    stats.violation_fraction.push_back(static_cast<double>(violations) / n_paths);
    stats.mean_excess.push_back(sum / n_paths);
    stats.max_excess.push_back(worst);
  }
  if (columns > 1) {
    int violating = 0;
    double sum = 0.0;
    double worst = -std::numeric_limits<double>::infinity();
    for (double m : path_max) {
      if (m > margin) ++violating;
      sum += m;
      worst = std::max(worst, m);
    }
    stats.overall_violation_fraction = static_cast<double>(violating) / n_paths;
    stats.overall_mean_excess = sum / n_paths;
    stats.overall_max_excess = worst;
  }
  return stats;
}

ScalingReport kolmogorov_scaling(const PathEnsemble& paths, const DynamicSpace& space, double p) {
  require(!paths.coupled(), ErrorKind::invalid_input, "kolmogorov_scaling needs a single-component ensemble");
  require(p > 0.0, ErrorKind::invalid_parameter, "kolmogorov_scaling: p must be positive");
  require(paths.times.size() >= 2, ErrorKind::invalid_grid, "kolmogorov_scaling: need at least one gap");
  std::vector<double> distinct;
  for (std::size_t k = 0; k + 1 < paths.times.size(); ++k) {
    const double gap = paths.times[k] - paths.times[k + 1];
    const bool seen = std::any_of(distinct.begin(), distinct.end(),
                                  [gap](double g) { return std::abs(g - gap) <= 1e-9 * std::max(g, gap); });
    if (!seen) distinct.push_back(gap);
  }
  require(distinct.size() >= 4, ErrorKind::invalid_grid, "kolmogorov_scaling: need at least 4 distinct gaps");

  ScalingReport report;
  report.target = p / 2.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (std::size_t k = 0; k + 1 < paths.times.size(); ++k) {
    const Matrix d = distance_at(space, paths.times[k]);
    double moment = 0.0;
    for (Eigen::Index i = 0; i < paths.paths(); ++i) {
      moment += std::pow(d(paths.first(i, k), paths.first(i, k + 1)), p);
    }
    moment /= static_cast<double>(paths.paths());
    const double gap = paths.times[k] - paths.times[k + 1];
    report.gaps.push_back(gap);
    report.moments.push_back(moment);
    if (moment <= 0.0) continue;
    const double lx = std::log(gap);
    const double ly = std::log(moment);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++count;
  }
  const double denom = count * sxx - sx * sx;
  if (count < 2 || std::abs(denom) <= 1e-300) {
    report.degenerate = true;
    report.slope = std::numeric_limits<double>::quiet_NaN();
    report.relative_error = std::numeric_limits<double>::quiet_NaN();
    return report;
  }
  report.slope = (count * sxy - sx * sy) / denom;
  report.relative_error = std::abs(report.slope - report.target) / report.target;
  return report;
}

Measure empirical_law(const PathEnsemble& paths, std::size_t n, Eigen::Index column) {
  require(column >= 0 && column < static_cast<Eigen::Index>(paths.times.size()), ErrorKind::invalid_input,
          "empirical_law: column out of range");
  Vector counts = Vector::Zero(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < paths.paths(); ++i) counts[paths.first(i, column)] += 1.0;
  return Measure(counts / static_cast<double>(paths.paths()), true);
}

double total_variation(const Measure& a, const Measure& b) {
  require(a.size() == b.size(), ErrorKind::invalid_size, "total_variation: size mismatch");
  return 0.5 * (a.masses - b.masses).cwiseAbs().sum();
}

}  // namespace srflab
