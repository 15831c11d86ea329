#include "emtl/trajectory_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace emtl {
namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void append_block(std::string& header, const char* prefix, std::size_t count,
                  std::size_t base) {
  for (std::size_t i = 0; i < count; ++i) {
    header += ',';
    header += prefix;
    header += '_';
    header += std::to_string(base + i);
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

}  // namespace

std::string trajectory_csv_header(std::size_t dim, std::size_t num_tasks) {
  std::string header = "step";
  append_block(header, "theta", dim, 0);   // theta is zero-indexed
  append_block(header, "loss", num_tasks, 1);
  append_block(header, "alpha", num_tasks, 1);
  append_block(header, "p", num_tasks, 1);
  append_block(header, "w", num_tasks, 1);
  append_block(header, "rr", num_tasks, 1);
  header += ",variance";
  return header;
}

void write_trajectory_csv(std::ostream& out,
                          const std::vector<TrajectoryRecord>& records,
                          std::size_t dim, std::size_t num_tasks) {
  out << trajectory_csv_header(dim, num_tasks) << '\n';
  for (const TrajectoryRecord& rec : records) {
    if (rec.theta.size() != dim || rec.losses.size() != num_tasks ||
        rec.alpha.size() != num_tasks || rec.p.size() != num_tasks ||
        rec.effective_weights.size() != num_tasks ||
        rec.rates.weighted.size() != num_tasks) {
      throw InvalidInputError("write_trajectory_csv: record shape mismatch");
    }
    out << rec.step;
    for (double v : rec.theta) out << ',' << format_double(v);
    for (double v : rec.losses) out << ',' << format_double(v);
    for (double v : rec.alpha) out << ',' << format_double(v);
    for (double v : rec.p) out << ',' << format_double(v);
    for (double v : rec.effective_weights) out << ',' << format_double(v);
    for (double v : rec.rates.weighted) out << ',' << format_double(v);
    out << ',' << format_double(rec.rates.variance) << '\n';
  }
}

void write_trajectory_csv(const std::string& path,
                          const std::vector<TrajectoryRecord>& records,
                          std::size_t dim, std::size_t num_tasks) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("write_trajectory_csv: cannot open " + path);
  }
  write_trajectory_csv(out, records, dim, num_tasks);
  if (!out.good()) {
    throw std::runtime_error("write_trajectory_csv: write failed for " + path);
  }
}

std::vector<TrajectoryRecord> read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw InvalidInputError("read_trajectory_csv: missing header");
  }
  const std::vector<std::string> cols = split_csv_line(line);
  std::size_t dim = 0;
  std::size_t num_tasks = 0;
  for (const std::string& c : cols) {
    if (c.rfind("theta_", 0) == 0) ++dim;
    if (c.rfind("loss_", 0) == 0) ++num_tasks;
  }
  if (dim == 0 || num_tasks == 0 ||
      cols.size() != 2 + dim + 5 * num_tasks ||
      line != trajectory_csv_header(dim, num_tasks)) {
    throw InvalidInputError("read_trajectory_csv: unrecognized header");
  }

  std::vector<TrajectoryRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != cols.size()) {
      throw InvalidInputError("read_trajectory_csv: malformed row");
    }
    std::size_t i = 0;
    auto next = [&fields, &i]() { return std::strtod(fields[i++].c_str(), nullptr); };
    TrajectoryRecord rec;
    rec.step = std::strtol(fields[i++].c_str(), nullptr, 10);
    rec.theta.resize(dim);
    for (double& v : rec.theta) v = next();
    rec.losses.resize(num_tasks);
    for (double& v : rec.losses) v = next();
    rec.alpha.resize(num_tasks);
    for (double& v : rec.alpha) v = next();
    rec.p.resize(num_tasks);
    for (double& v : rec.p) v = next();
    rec.effective_weights.resize(num_tasks);
    for (double& v : rec.effective_weights) v = next();
    rec.rates.weighted.resize(num_tasks);
    for (double& v : rec.rates.weighted) v = next();
    rec.rates.variance = next();
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<TrajectoryRecord> read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("read_trajectory_csv: cannot open " + path);
  }
  return read_trajectory_csv(in);
}

}  // namespace emtl
