#pragma once

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace srflab {

/// git describe of the build tree, or the project version.
std::string version_string();

/// Complete config with every default spelled out.
nlohmann::json default_config(const std::string& space_name = "homothetic");

/// Command-line entry point. Exit codes: 0 all checks pass, 1 a check
/// failed, 2 usage, config or input error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace srflab
