#pragma once

#include "srflab/space.hpp"

#include <functional>

namespace srflab {

using CoefficientFn = std::function<double(double t)>;

/// Flat grid on [lo, hi]: f ≡ 0, h ≡ 0.
DynamicSpace flat_grid(double lo, double hi, std::size_t n, Horizon horizon = {0.0, 1.0});

/// Two vertices at distance 1 with unit masses and unit conductance.
DynamicSpace two_point_space(Horizon horizon = {0.0, 1.0});

/// Static grid on [-R, R] with f(x) = κx²/2, the discrete analogue of a
/// Gaussian space with Bakry–Émery curvature κ.
DynamicSpace gaussian_grid(double R, std::size_t n, double kappa, Horizon horizon = {0.0, 1.0});

/// Freezes the weight at the reference time and sets h ≡ H ≡ 0.
DynamicSpace static_space(const DynamicSpace& base);

/// f_t(x) = (x α_t)² + x β_t + γ_t on [-R, R] with a static metric.
DynamicSpace wandering_gaussian(CoefficientFn alpha, CoefficientFn beta, CoefficientFn gamma, double R,
                                std::size_t n, double T = 1.0);

/// d_t² = d²(1 - 2Kt) with m_t = m. The horizon is cut so that 1 - 2Kt ≥ margin.
/// K = 0 returns static_space(base).
DynamicSpace homothetic(const DynamicSpace& base, double K, double margin = 0.05);

/// Closed-form homothetic distance d · √(1 - 2Kt).
double homothetic_factor(double K, double t);

/// h ≡ c for every pair, so d_t = d e^{c(t - t0)}.
DynamicSpace constant_log_derivative(const DynamicSpace& base, double c);

/// Static metric, f(x) = -c x² on [-R, R]: negative Bakry–Émery curvature.
DynamicSpace violating_flow(double R, std::size_t n, double c, double T = 1.0);

}  // namespace srflab
