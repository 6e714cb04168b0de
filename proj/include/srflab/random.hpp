#pragma once

#include "srflab/space.hpp"

#include <cstdint>
#include <random>

namespace srflab {

/// Independent engine for the stream (seed, a, b). Streams do not depend on
/// the order in which they are requested.
std::mt19937_64 stream_engine(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// Smoothed white noise: standard normal values run through the heat flow
/// frozen at time t for a duration eps, then scaled so that max Γ_t(u) = 1.
Field random_smooth_field(const DynamicSpace& space, double t, std::uint64_t seed, std::uint64_t index,
                          double eps = 0.1, int steps = 4);

/// Nonnegative test function with max value 1. Even indices give a Gaussian
/// bump at a random interior position (grids only), odd indices smoothed
/// positive noise.
Field random_nonnegative_field(const DynamicSpace& space, double t, std::uint64_t seed, std::uint64_t index,
                               double eps = 0.1, int steps = 4);

/// Probability measure from a smoothed random density (strictly positive).
Measure random_measure(const DynamicSpace& space, double t, std::uint64_t seed, std::uint64_t index,
                       double eps = 0.1, int steps = 4);

/// Gaussian profile on a grid (center in the middle 60% of the interval,
/// width 5-15% of its length) smoothed by the frozen heat flow over eps.
/// Strictly positive up to underflow far in the tails.
Measure random_gaussian_measure(const DynamicSpace& space, double t, std::uint64_t seed, std::uint64_t index,
                                double eps = 0.01, int steps = 4);

}  // namespace srflab
