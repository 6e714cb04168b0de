#include "srflab/random.hpp"

#include "srflab/heat.hpp"

#include <algorithm>
#include <cmath>

namespace srflab {

namespace {

Vector smooth(const DynamicSpace& space, const Vector& v, double t, double eps, int steps) {
  if (eps <= 0.0) return v;
  return frozen_smooth(space, t, Field(v), eps, steps).values;
}

}  // namespace

std::mt19937_64 stream_engine(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a),    static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b),    static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

Field random_smooth_field(const DynamicSpace& space, double t, std::uint64_t seed, std::uint64_t index,
                          double eps, int steps) {
  auto engine = stream_engine(seed, index, 1);
  std::normal_distribution<double> normal;
  Vector noise(static_cast<Eigen::Index>(space.size()));
  for (auto& v : noise) v = normal(engine);
  Vector u = smooth(space, noise, t, eps, steps);
  const double top = gamma_at(space, t, Field(u), Field(u)).values.maxCoeff();
  if (top > 0.0) u /= std::sqrt(top);
  return Field(std::move(u), t);
}

Field random_nonnegative_field(const DynamicSpace& space, double t, std::uint64_t seed, std::uint64_t index,
                               double eps, int steps) {
  auto engine = stream_engine(seed, index, 2);
  std::uniform_real_distribution<double> uniform;
  const auto n = static_cast<Eigen::Index>(space.size());
  Vector g(n);
  if (space.is_grid() && index % 2 == 0) {
    const auto& xs = space.coordinates();
    const double lo = xs.front();
    const double length = xs.back() - lo;
    const double center = lo + length * (0.2 + 0.6 * uniform(engine));
    const double width = length * (0.05 + 0.15 * uniform(engine));
    for (Eigen::Index i = 0; i < n; ++i) {
      const double z = (xs[i] - center) / width;
      g[i] = std::exp(-0.5 * z * z);
    }
  } else {
    for (auto& v : g) v = uniform(engine);
    g = smooth(space, g, t, eps, steps).cwiseMax(0.0);
  }
  const double top = g.maxCoeff();
  if (top > 0.0) g /= top;
  return Field(std::move(g), t);
}

Measure random_measure(const DynamicSpace& space, double t, std::uint64_t seed, std::uint64_t index,
                       double eps, int steps) {
  auto engine = stream_engine(seed, index, 3);
  std::normal_distribution<double> normal;
  Vector noise(static_cast<Eigen::Index>(space.size()));
  for (auto& v : noise) v = normal(engine);
  Vector density = smooth(space, noise, t, eps, steps).array().exp();
  return Measure::probability(density.cwiseProduct(measure_at(space, t).masses));
}

Measure random_gaussian_measure(const DynamicSpace& space, double t, std::uint64_t seed, std::uint64_t index,
                                double eps, int steps) {
  require(space.is_grid(), ErrorKind::unsupported_space, "random_gaussian_measure needs a grid");
  auto engine = stream_engine(seed, index, 4);
  std::uniform_real_distribution<double> uniform;
  const auto& xs = space.coordinates();
  const double lo = xs.front();
  const double length = xs.back() - lo;
  const double center = lo + length * (0.2 + 0.6 * uniform(engine));
  const double width = length * (0.05 + 0.1 * uniform(engine));
  Vector v(static_cast<Eigen::Index>(space.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double z = (xs[i] - center) / width;
    v[i] = std::exp(-0.5 * z * z);
  }
  return Measure::probability(smooth(space, v, t, eps, steps).cwiseMax(0.0));
}

}  // namespace srflab
