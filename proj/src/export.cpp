#include "srflab/export.hpp"

#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace srflab {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  require(out.good(), ErrorKind::invalid_input, "cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

void write_cell(std::ostream& out, const nlohmann::json& value) {
  if (value.is_string()) {
    out << value.get<std::string>();
  } else if (value.is_number_float()) {
    out << value.get<double>();
  } else {
    out << value.dump();
  }
}

void write_rows(std::ostream& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
}

}  // namespace

void Table::add(nlohmann::json row) {
  require(row.is_array() && row.size() == columns.size(), ErrorKind::invalid_input,
          "table " + name + ": row width does not match the columns");
  rows.push_back(std::move(row));
}

void write_table_csv(const std::filesystem::path& path, const Table& table) {
  auto out = open_out(path);
  for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      write_cell(out, row[c]);
    }
    out << '\n';
  }
}

void write_propagator_csv(const std::filesystem::path& path, const Propagator& propagator) {
  auto out = open_out(path);
  out << "# s=" << propagator.s << " t=" << propagator.t << " steps=" << propagator.steps
      << " scheme=" << to_string(propagator.scheme) << '\n';
  write_rows(out, propagator.matrix);
}

void write_kernel_csv(const std::filesystem::path& path, const HeatKernel& kernel, int steps) {
  auto out = open_out(path);
  out << "# s=" << kernel.s << " t=" << kernel.t << " steps=" << steps
      << " scheme=" << to_string(Scheme::implicit_euler) << '\n';
  write_rows(out, kernel.values);
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::invalid_input, "cannot read " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const bool header = first && std::isalpha(static_cast<unsigned char>(line[0]));
    first = false;
    if (header) continue;
    std::vector<double> row;
    std::stringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
    require(rows.empty() || row.size() == rows.front().size(), ErrorKind::invalid_input,
            "ragged matrix in " + path.string());
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  return m;
}

void write_plan_csv(const std::filesystem::path& path, const TransportPlan& plan, double dust) {
  auto out = open_out(path);
  out << "x_index,y_index,mass\n";
  for (Eigen::Index i = 0; i < plan.joint.rows(); ++i)
    for (Eigen::Index j = 0; j < plan.joint.cols(); ++j)
      if (plan.joint(i, j) > dust) out << i << ',' << j << ',' << plan.joint(i, j) << '\n';
}

void write_ensemble_csv(const std::filesystem::path& path, const PathEnsemble& paths) {
  auto out = open_out(path);
  const bool pair = paths.coupled();
  out << (pair ? "path_id,time,vertex1,vertex2\n" : "path_id,time,vertex1\n");
  for (Eigen::Index i = 0; i < paths.paths(); ++i) {
    for (std::size_t k = 0; k < paths.times.size(); ++k) {
      const auto col = static_cast<Eigen::Index>(k);
      out << i << ',' << paths.times[k] << ',' << paths.first(i, col);
      if (pair) out << ',' << paths.second(i, col);
      out << '\n';
    }
  }
}

}  // namespace srflab
