#include "srflab/catalog.hpp"

#include "srflab/flows.hpp"

#include <cmath>

namespace srflab {

namespace {

using nlohmann::json;

std::size_t count_of(const json& c, const char* key) {
  const double v = c.at(key).get<double>();
  require(v >= 2.0 && v == std::floor(v), ErrorKind::invalid_size, std::string("space.") + key + " must be an integer >= 2");
  return static_cast<std::size_t>(v);
}

double real(const json& c, const char* key) { return c.at(key).get<double>(); }

}  // namespace

std::vector<std::string> space_names() {
  return {"flat", "two_point", "gaussian", "wandering_gaussian", "homothetic", "constant_log_derivative",
          "violating"};
}

json default_space_config(const std::string& name) {
  if (name == "flat") return {{"name", name}, {"lo", -4.0}, {"hi", 4.0}, {"n", 101}, {"T", 1.0}};
  if (name == "two_point") return {{"name", name}, {"T", 1.0}};
  if (name == "gaussian") return {{"name", name}, {"R", 4.0}, {"n", 101}, {"kappa", 1.0}, {"T", 1.0}};
  if (name == "wandering_gaussian") {
    return {{"name", name}, {"R", 4.0},      {"n", 201},        {"T", 1.0},
            {"alpha0", 1.0}, {"alpha1", 0.5}, {"beta_amp", 1.0}, {"gamma", 0.0}};
  }
  if (name == "homothetic") {
    return {{"name", name}, {"R", 4.0}, {"n", 200}, {"kappa", 1.0}, {"K", 0.5}, {"margin", 0.05}, {"T", 1.0}};
  }
  if (name == "constant_log_derivative") {
    return {{"name", name}, {"lo", -4.0}, {"hi", 4.0}, {"n", 101}, {"c", 0.5}, {"T", 1.0}};
  }
  if (name == "violating") return {{"name", name}, {"R", 4.0}, {"n", 201}, {"c", 1.0}, {"T", 1.0}};
  throw Error(ErrorKind::invalid_input, "unknown space name '" + name + "'");
}

json complete_space_config(const json& config) {
  require(config.is_object() && config.contains("name") && config.at("name").is_string(), ErrorKind::invalid_input,
          "space config needs a string 'name'");
  json out = default_space_config(config.at("name").get<std::string>());
  for (const auto& [key, value] : config.items()) {
    require(out.contains(key), ErrorKind::invalid_input, "unknown key space." + key);
    if (key != "name") {
      require(value.is_number(), ErrorKind::invalid_input, "space." + key + " must be a number");
    }
    out[key] = value;
  }
  return out;
}

DynamicSpace make_space(const json& config) {
  const json c = complete_space_config(config);
  const std::string name = c.at("name").get<std::string>();
  const Horizon horizon{0.0, real(c, "T")};
  if (name == "flat") return flat_grid(real(c, "lo"), real(c, "hi"), count_of(c, "n"), horizon);
  if (name == "two_point") return two_point_space(horizon);
  if (name == "gaussian") return gaussian_grid(real(c, "R"), count_of(c, "n"), real(c, "kappa"), horizon);
  if (name == "wandering_gaussian") {
    const double a0 = real(c, "alpha0");
    const double a1 = real(c, "alpha1");
    const double b = real(c, "beta_amp");
    const double g = real(c, "gamma");
    return wandering_gaussian([a0, a1](double t) { return a0 + a1 * t; },
                              [b](double t) { return b * std::sin(t); }, [g](double) { return g; }, real(c, "R"),
                              count_of(c, "n"), real(c, "T"));
  }
  if (name == "homothetic") {
    return homothetic(gaussian_grid(real(c, "R"), count_of(c, "n"), real(c, "kappa"), horizon), real(c, "K"),
                      real(c, "margin"));
  }
  if (name == "constant_log_derivative") {
    return constant_log_derivative(flat_grid(real(c, "lo"), real(c, "hi"), count_of(c, "n"), horizon),
                                   real(c, "c"));
  }
  return violating_flow(real(c, "R"), count_of(c, "n"), real(c, "c"), real(c, "T"));
}

json refine_space_config(const json& config, int level) {
  require(level >= 0 && level <= 10, ErrorKind::invalid_parameter, "refinement level must lie in [0, 10]");
  json c = complete_space_config(config);
  if (!c.contains("n")) return c;
  const auto n = count_of(c, "n");
  c["n"] = (n - 1) * (std::size_t{1} << level) + 1;
  return c;
}

json flat_companion(const json& config) {
  const json c = complete_space_config(config);
  require(c.contains("n"), ErrorKind::unsupported_space, "flat companion needs a grid config");
  const double lo = c.contains("lo") ? real(c, "lo") : -real(c, "R");
  const double hi = c.contains("hi") ? real(c, "hi") : real(c, "R");
  return {{"name", "flat"}, {"lo", lo}, {"hi", hi}, {"n", c.at("n")}, {"T", c.at("T")}};
}

}  // namespace srflab
