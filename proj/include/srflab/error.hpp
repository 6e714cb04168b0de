#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace srflab {

enum class ErrorKind {
  invalid_size,
  invalid_evaluator,
  out_of_horizon,
  degenerate_metric,
  invalid_input,
  bad_interval,
  numerical_failure,
  invalid_measure,
  unbalanced_input,
  unsupported_space,
  invalid_parameter,
  invalid_test_function,
  invalid_grid,
  inapplicable,
  invalid_horizon,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) throw Error(kind, what);
}

}  // namespace srflab
