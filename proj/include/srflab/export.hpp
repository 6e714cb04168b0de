#pragma once

#include "srflab/heat.hpp"
#include "srflab/stochastic.hpp"
#include "srflab/transport.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace srflab {

/// Rows of scalars (numbers or strings) under named columns.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<nlohmann::json> rows;  // each row is a JSON array

  void add(nlohmann::json row);
};

void write_table_csv(const std::filesystem::path& path, const Table& table);

/// Matrix rows as CSV after a first line "# s=... t=... steps=... scheme=...".
void write_propagator_csv(const std::filesystem::path& path, const Propagator& propagator);
void write_kernel_csv(const std::filesystem::path& path, const HeatKernel& kernel, int steps);

/// Reads the numeric rows back, skipping lines that start with '#' and a
/// leading column-name row.
Matrix read_matrix_csv(const std::filesystem::path& path);

/// Sparse triplets x_index,y_index,mass for entries above `dust`.
void write_plan_csv(const std::filesystem::path& path, const TransportPlan& plan, double dust = 0.0);

/// path_id,time,vertex1[,vertex2], one line per path and grid time.
void write_ensemble_csv(const std::filesystem::path& path, const PathEnsemble& paths);

}  // namespace srflab
