#pragma once

#include "srflab/space.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace srflab {

/// Example flows addressable by name. A space config is a JSON object with a
/// "name" and the numeric parameters of that factory; missing keys take the
/// values from default_space_config(name).
///
///   flat                     lo, hi, n, T
///   two_point                T
///   gaussian                 R, n, kappa, T
///   wandering_gaussian       R, n, T, alpha0, alpha1, beta_amp, gamma
///                            (α_t = alpha0 + alpha1·t, β_t = beta_amp·sin t, γ_t = gamma)
///   homothetic               R, n, kappa, K, margin, T (Gaussian base with curvature kappa)
///   constant_log_derivative  lo, hi, n, c, T (flat base)
///   violating                R, n, c, T
std::vector<std::string> space_names();

nlohmann::json default_space_config(const std::string& name);

/// Fills in defaults; throws invalid_input for unknown names or keys.
nlohmann::json complete_space_config(const nlohmann::json& config);

DynamicSpace make_space(const nlohmann::json& config);

/// Halves the grid spacing `level` times: n -> (n - 1) 2^level + 1.
nlohmann::json refine_space_config(const nlohmann::json& config, int level);

/// Flat static grid on the same interval and with the same n as a grid
/// config; used to calibrate mesh tolerances.
nlohmann::json flat_companion(const nlohmann::json& config);

}  // namespace srflab
