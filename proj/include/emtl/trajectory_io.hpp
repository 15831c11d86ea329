// Trajectory serialization. One CSV per run with the exact header
//   step,theta_0..theta_{D-1},loss_1..loss_T,alpha_1..alpha_T,
//   p_1..p_T,w_1..w_T,rr_1..rr_T,variance
// where the rr columns carry the weighted relative rates. Values are written
// with 17 significant digits so parsing reproduces the doubles exactly.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "emtl/types.hpp"

namespace emtl {

std::string trajectory_csv_header(std::size_t dim, std::size_t num_tasks);

void write_trajectory_csv(std::ostream& out,
                          const std::vector<TrajectoryRecord>& records,
                          std::size_t dim, std::size_t num_tasks);

void write_trajectory_csv(const std::string& path,
                          const std::vector<TrajectoryRecord>& records,
                          std::size_t dim, std::size_t num_tasks);

// Parses a file produced by write_trajectory_csv. Dimensions are recovered
// from the header. Only the serialized fields are populated (raw rates and
// the objective diagnostic are not part of the CSV).
std::vector<TrajectoryRecord> read_trajectory_csv(std::istream& in);
std::vector<TrajectoryRecord> read_trajectory_csv(const std::string& path);

}  // namespace emtl
