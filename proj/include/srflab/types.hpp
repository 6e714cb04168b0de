#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>

namespace srflab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Real-valued function on the vertices, optionally tagged with the time at
/// which it is understood.
struct Field {
  Vector values;
  std::optional<double> time;

  Field() = default;
  explicit Field(Vector v, std::optional<double> t = std::nullopt)
      : values(std::move(v)), time(t) {}

  static Field constant(std::size_t n, double value) {
    return Field(Vector::Constant(static_cast<Eigen::Index>(n), value));
  }

  [[nodiscard]] std::size_t size() const noexcept {
    return static_cast<std::size_t>(values.size());
  }
  [[nodiscard]] bool finite() const { return values.allFinite(); }
};

/// Nonnegative mass vector. `normalized` records that the masses sum to one.
struct Measure {
  Vector masses;
  bool normalized = false;

  Measure() = default;
  Measure(Vector m, bool is_normalized) : masses(std::move(m)), normalized(is_normalized) {}

  /// Rescales to unit total mass. Throws on nonpositive total.
  static Measure probability(Vector m);
  static Measure dirac(std::size_t n, std::size_t at);

  [[nodiscard]] std::size_t size() const noexcept {
    return static_cast<std::size_t>(masses.size());
  }
  [[nodiscard]] double total() const { return masses.sum(); }
};

}  // namespace srflab
