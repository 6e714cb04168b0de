#pragma once

#include "srflab/heat.hpp"
#include "srflab/transport.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

namespace srflab {

enum class CouplingMode { winf, wp, independent };

const char* to_string(CouplingMode mode) noexcept;

/// Sampled trajectories on the decreasing time grid `times`. `second` is
/// empty for single-component ensembles.
struct PathEnsemble {
  std::vector<double> times;
  Eigen::MatrixXi first;
  Eigen::MatrixXi second;
  std::uint64_t seed = 0;
  int kernel_steps = 0;
  std::string mode = "single";

  [[nodiscard]] bool coupled() const noexcept { return second.size() > 0; }
  [[nodiscard]] Eigen::Index paths() const noexcept { return first.rows(); }
};

/// Kernel rows with mass below this are dropped (and the row renormalized)
/// before coupling.
inline constexpr double kKernelTrim = 1e-14;

/// Backward Brownian motion: B_{s0} ~ terminal, then transitions
/// P̂_{s_k, s_{k+1}}(δ_x) built from `steps` implicit Euler steps.
PathEnsemble sample_backward_bm(const DynamicSpace& space, const Measure& terminal,
                                const std::vector<double>& times, int n_paths, int steps, std::uint64_t seed);

struct CouplingOptions {
  CouplingMode mode = CouplingMode::winf;
  /// Exponent for CouplingMode::wp.
  double p = 2.0;
  int steps = 4;
};

struct CouplingPlan {
  TransportPlan plan;
  /// Largest d_{s_lo} on the plan support minus d_{s_hi}(x, y).
  double excess = 0.0;
};

/// Coupling of p_{s_hi,s_lo}(x, ·) m_{s_lo} and p_{s_hi,s_lo}(y, ·) m_{s_lo}.
CouplingPlan coupling_kernel(const DynamicSpace& space, double s_hi, double s_lo, std::size_t x, std::size_t y,
                             const CouplingOptions& options = {});

/// Dyadic grid of level n on (0, t]: t k / 2^n. Returns k, or throws
/// invalid_grid when s is not on the grid.
long dyadic_index(double t, int level, double s);

/// Joint law at s_lo of the pair started at (x, y) at s_hi, composing the
/// one-step couplings across every intermediate grid time. The result is an
/// n × n mass matrix (a plan whose marginals are the two heat-kernel rows).
TransportPlan dyadic_coupling_step(const DynamicSpace& space, int level, double t, double s_hi, double s_lo,
                                   std::size_t x, std::size_t y, const CouplingOptions& options = {});

/// Coupled backward Brownian motions from (x, y) at times[0] = t along the
/// decreasing dyadic grid `times`. Plans are memoized per (step, a, b). On a
/// line metric the winf and wp plans are the monotone coupling, which is
/// optimal for both; other metrics go through the network solvers.
PathEnsemble sample_coupled_bm(const DynamicSpace& space, std::size_t x, std::size_t y, double t, int level,
                               const std::vector<double>& times, int n_paths, std::uint64_t seed,
                               const CouplingOptions& options = {});

/// Full level-n grid from t down to the lowest admissible grid time.
std::vector<double> dyadic_times(const DynamicSpace& space, double t, int level);

struct ContractionStats {
  std::vector<double> times;
  std::vector<double> violation_fraction;
  std::vector<double> mean_excess;
  std::vector<double> max_excess;
  double overall_violation_fraction = 0.0;
  double overall_mean_excess = 0.0;
  double overall_max_excess = 0.0;
  double reference_distance = 0.0;
  double margin = 0.0;
};

/// Excess d_{s_k}(B¹, B²) - d_t(x, y); a violation is excess > margin.
/// "Overall" counts paths that violate at any time.
ContractionStats contraction_stats(const PathEnsemble& paths, const DynamicSpace& space, double margin = 0.0);

struct ScalingReport {
  std::vector<double> gaps;
  std::vector<double> moments;
  double slope = 0.0;
  double target = 0.0;
  double relative_error = 0.0;
  bool degenerate = false;
};

/// Least-squares slope of log E[d^p(B_{s_k}, B_{s_{k+1}})] against the log gap,
/// with d taken at the later time s_k.
ScalingReport kolmogorov_scaling(const PathEnsemble& paths, const DynamicSpace& space, double p);

/// Empirical law at column k of a single-component ensemble.
Measure empirical_law(const PathEnsemble& paths, std::size_t n, Eigen::Index column);

double total_variation(const Measure& a, const Measure& b);

}  // namespace srflab
