#pragma once

#include "srflab/export.hpp"
#include "srflab/stochastic.hpp"
#include "srflab/verify.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace srflab {

/// tol(Δx) = scale · C · Δx, applied relative to each check's scale.
struct MeshTolerance {
  double constant = 0.1;
  double scale = 1.0;

  [[nodiscard]] double at(double dx) const { return scale * constant * dx; }
};

struct Calibration {
  double spacing = 0.0;
  /// Worst negative normalized slack on the flat grid (0 if none).
  double defect = 0.0;
  double floor = 0.0;
  /// max(floor, defect / spacing).
  double constant = 0.0;
};

struct CalibrationConfig {
  double c_floor = 0.1;
  int gradient_trials = 20;
  int bochner_trials = 50;
  double s = 0.1;
  double t = 0.5;
  int steps = 32;
};

/// Runs gradient (α = 1/2, 1) and Bochner scans on a flat static grid, which
/// should satisfy every inequality, and turns the worst observed violation
/// into the mesh constant.
Calibration calibrate_mesh_constant(const DynamicSpace& flat, const CalibrationConfig& config, std::uint64_t seed);

/// Nearest grid vertex to a coordinate; on graphs the coordinate is the vertex index.
std::size_t vertex_at(const DynamicSpace& space, double coordinate);

struct SuiteResult {
  std::string name;
  bool pass = true;
  nlohmann::json summary = nlohmann::json::object();
  nlohmann::json checks = nlohmann::json::array();
  std::vector<Table> tables;

  void add(const CheckReport& report);
  /// Informational records leave the pass flag alone.
  void add_record(nlohmann::json record, bool enforced);
};

nlohmann::json to_json(const SuiteResult& result);

struct HeatSuiteConfig {
  double s = 0.1;
  double t = 0.5;
  int steps = 32;
  int trials = 10;
  /// Constant in the energy estimate; negative means estimate it from the space.
  double energy_L = -1.0;
  int energy_steps = 256;
  std::vector<double> pstar_h{0.04, 0.02, 0.01, 0.005};
  double ck_tol = 1e-8;
  double markov_tol = 1e-10;
  double duality_tol = 1e-10;
  double ibp_tol = 1e-12;
  double energy_tol = 1e-6;
};

/// Chapman–Kolmogorov (nested enforced, non-nested reported), conservation,
/// positivity, Markov normalization, duality, adjointness, integration by
/// parts, maximum principle, energy estimate and P* limit.
SuiteResult heat_suite(const DynamicSpace& space, const HeatSuiteConfig& config, std::uint64_t seed);

struct GradientSuiteConfig {
  std::vector<double> alphas{0.5, 0.75, 1.0};
  /// (s, t) pairs.
  std::vector<std::pair<double, double>> intervals{{0.1, 0.5}, {0.1, 0.2}};
  int trials = 100;
  int steps = 32;
  double eps = 0.05;
};

SuiteResult gradient_suite(const DynamicSpace& space, const GradientSuiteConfig& config, const MeshTolerance& tol,
                           std::uint64_t seed);

struct TransportSuiteConfig {
  std::vector<double> ps{1.0, 2.0, 4.0, kInfiniteExponent};
  int pairs = 20;
  double s = 0.1;
  double t = 0.5;
  int steps = 32;
  double relative = 1e-6;
  double eps = 0.1;
  /// "mixed": even pairs smoothed Gaussians, odd pairs Dirac masses at
  /// distinct random vertices. "noise": random_measure pairs, which are often
  /// closer than one grid cell in W_p.
  std::string family = "mixed";
};

/// Measure pair number i of the suite.
std::pair<Measure, Measure> transport_measure_pair(const DynamicSpace& space, const TransportSuiteConfig& config,
                                                   std::uint64_t seed, int i);

SuiteResult transport_suite(const DynamicSpace& space, const TransportSuiteConfig& config, std::uint64_t seed);

struct BochnerSuiteConfig {
  double t = 0.5;
  int trials = 200;
  double delta = 1e-4;
  double eps = 0.05;
  /// Fields checked with self_improvement_check (reported only).
  int self_improvement_trials = 5;
};

SuiteResult bochner_suite(const DynamicSpace& space, const BochnerSuiteConfig& config, const MeshTolerance& tol,
                          std::uint64_t seed);

struct ConvexitySuiteConfig {
  double t = 0.5;
  double da = 0.05;
  /// The first entry decides pass/fail; all of them go to the sensitivity table.
  std::vector<double> dt_steps{0.1, 0.05, 0.02, 0.01};
  int pairs = 10;
  double eps = 0.01;
};

/// Smoothed Gaussian pairs; pass iff slack ≥ -tol(Δx + da) · (1 + W_t²).
SuiteResult convexity_suite(const DynamicSpace& space, const ConvexitySuiteConfig& config,
                            const MeshTolerance& tol, std::uint64_t seed);

struct CouplingSuiteConfig {
  /// Start coordinates (nearest grid vertices); vertex indices on graphs.
  double x = -1.5;
  double y = 1.5;
  double t = 0.5;
  int level = 6;
  int paths = 10000;
  CouplingMode mode = CouplingMode::winf;
  double p = 2.0;
  int steps = 4;
  /// Violation means d_s(B¹, B²) > d_t(x, y) + margin_cells · Δx.
  double margin_cells = 2.0;
  double max_violation = 0.01;
  /// Independent-mode control that must violate control_ratio times more often.
  bool control = true;
  double control_ratio = 10.0;

  bool scaling = true;
  double scaling_t = 0.5;
  double scaling_start = 0.0;
  std::vector<double> scaling_p{2.0, 4.0};
  std::vector<double> gaps{0.04, 0.02, 0.01, 0.005, 0.0025};
  double scaling_tolerance = 0.15;
  bool marginal = true;
};

SuiteResult coupling_suite(const DynamicSpace& space, const CouplingSuiteConfig& config, std::uint64_t seed);

/// One suite evaluation at a refinement level.
using SuiteRunner = std::function<SuiteResult(const DynamicSpace& space, const MeshTolerance& tol)>;

struct RefinementResult {
  std::vector<SuiteResult> levels;
  Table trend;
  /// Least-squares slope of log tol(Δx) against log Δx.
  double tolerance_order = 0.0;
  bool pass = true;
};

/// Runs `runner` at levels 0..count-1 (Δx halved each time), calibrating the
/// mesh constant on the flat companion grid of every level.
RefinementResult run_refinement(const nlohmann::json& space_config, int count, const CalibrationConfig& calibration,
                                double tol_scale, std::uint64_t seed, const SuiteRunner& runner);

/// Slope of log y against log x by least squares.
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Config sections <-> suite parameters. Missing keys keep the defaults;
/// unknown keys throw invalid_input.
HeatSuiteConfig heat_config(const nlohmann::json& times, const nlohmann::json& section);
GradientSuiteConfig gradient_config(const nlohmann::json& times, const nlohmann::json& section);
TransportSuiteConfig transport_config(const nlohmann::json& times, const nlohmann::json& section);
BochnerSuiteConfig bochner_config(const nlohmann::json& times, const nlohmann::json& section);
ConvexitySuiteConfig convexity_config(const nlohmann::json& times, const nlohmann::json& section);
CouplingSuiteConfig coupling_config(const nlohmann::json& times, const nlohmann::json& section);
CalibrationConfig calibration_config(const nlohmann::json& times, const nlohmann::json& section);

nlohmann::json to_json(const HeatSuiteConfig& c);
nlohmann::json to_json(const GradientSuiteConfig& c);
nlohmann::json to_json(const TransportSuiteConfig& c);
nlohmann::json to_json(const BochnerSuiteConfig& c);
nlohmann::json to_json(const ConvexitySuiteConfig& c);
nlohmann::json to_json(const CouplingSuiteConfig& c);
nlohmann::json to_json(const CalibrationConfig& c);

}  // namespace srflab
