#include "srflab/error.hpp"
#include "srflab/types.hpp"

namespace srflab {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_size: return "invalid-size";
    case ErrorKind::invalid_evaluator: return "invalid-evaluator";
    case ErrorKind::out_of_horizon: return "out-of-horizon";
    case ErrorKind::degenerate_metric: return "degenerate-metric";
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::bad_interval: return "bad-interval";
    case ErrorKind::numerical_failure: return "numerical-failure";
    case ErrorKind::invalid_measure: return "invalid-measure";
    case ErrorKind::unbalanced_input: return "unbalanced-input";
    case ErrorKind::unsupported_space: return "unsupported-space";
    case ErrorKind::invalid_parameter: return "invalid-parameter";
    case ErrorKind::invalid_test_function: return "invalid-test-function";
    case ErrorKind::invalid_grid: return "invalid-grid";
    case ErrorKind::inapplicable: return "inapplicable";
    case ErrorKind::invalid_horizon: return "invalid-horizon";
  }
  return "unknown";
}

Measure Measure::probability(Vector m) {
  require(m.size() > 0, ErrorKind::invalid_measure, "empty measure");
  require(m.allFinite() && m.minCoeff() >= 0.0, ErrorKind::invalid_measure,
          "masses must be finite and nonnegative");
  const double total = m.sum();
  require(total > 0.0, ErrorKind::invalid_measure, "zero total mass");
  return Measure(m / total, true);
}

Measure Measure::dirac(std::size_t n, std::size_t at) {
  require(at < n, ErrorKind::invalid_input, "dirac location out of range");
  Vector m = Vector::Zero(static_cast<Eigen::Index>(n));
  m[static_cast<Eigen::Index>(at)] = 1.0;
  return Measure(std::move(m), true);
}

}  // namespace srflab
