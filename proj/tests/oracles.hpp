#pragma once

// Independent reference computations shared by the tests.

#include "srflab/types.hpp"

#include <Eigen/LU>

#include <array>
#include <limits>
#include <random>

namespace oracles {

using srflab::Matrix;
using srflab::Measure;
using srflab::Vector;

using Cell = std::pair<double, Eigen::Vector4d>;  // constant + coefficients on (γ00, γ01, γ10, γ11)

// Minimum of Σ γ_ij cost_ij over the vertices of the 3 × 3 transport polytope.
// Every vertex zeroes four of the nine cells; we try all 126 choices.
inline double polytope_minimum(const Matrix& cost, const Vector& a, const Vector& b) {
  std::array<Cell, 9> cells;
  auto unit = [](int k) {
    Eigen::Vector4d v = Eigen::Vector4d::Zero();
    v[k] = 1.0;
    return v;
  };
  cells[0] = {0.0, unit(0)};
  cells[1] = {0.0, unit(1)};
  cells[3] = {0.0, unit(2)};
  cells[4] = {0.0, unit(3)};
  cells[2] = {a[0], -unit(0) - unit(1)};
  cells[5] = {a[1], -unit(2) - unit(3)};
  cells[6] = {b[0], -unit(0) - unit(2)};
  cells[7] = {b[1], -unit(1) - unit(3)};
  cells[8] = {a[2] - b[0] - b[1], unit(0) + unit(1) + unit(2) + unit(3)};
  double best = std::numeric_limits<double>::infinity();
  for (int mask = 0; mask < 512; ++mask) {
    if (__builtin_popcount(static_cast<unsigned>(mask)) != 4) continue;
    Eigen::Matrix4d A;
    Eigen::Vector4d rhs;
    int row = 0;
    for (int k = 0; k < 9; ++k) {
      if (!(mask >> k & 1)) continue;
      A.row(row) = cells[k].second.transpose();
      rhs[row] = -cells[k].first;
      ++row;
    }
    Eigen::FullPivLU<Eigen::Matrix4d> lu(A);
    if (lu.rank() < 4) continue;
    const Eigen::Vector4d x = lu.solve(rhs);
    double total = 0.0;
    bool feasible = true;
    for (int k = 0; k < 9; ++k) {
      const double v = cells[k].first + cells[k].second.dot(x);
      if (v < -1e-13) feasible = false;
      total += v * cost(k / 3, k % 3);
    }
    if (feasible) best = std::min(best, total);
  }
  return best;
}

inline Measure random_probability(std::mt19937_64& rng, int n, double zero_chance = 0.0) {
  std::uniform_real_distribution<double> u;
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng) < zero_chance ? 0.0 : u(rng);
  if (v.sum() == 0.0) v[0] = 1.0;
  return Measure::probability(v);
}

inline Matrix random_metric(std::mt19937_64& rng, int n) {
  // Shortest paths over random positive weights.
  std::uniform_real_distribution<double> u(0.1, 2.0);
  Matrix d(n, n);
  for (int i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) d(i, j) = d(j, i) = u(rng);
  }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
  return d;
}

}  // namespace oracles
