#include "gcngp/dynamics.hpp"

#include <ostream>

#include "gcngp/csv.hpp"

namespace gcngp {

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows) {
  CsvWriter csv(out, {"layer", "mu", "min_offdiag_distance", "max_offdiag_distance"});
  for (const auto& row : rows) {
    csv << row.layer << row.mu << row.min_offdiag_distance << row.max_offdiag_distance;
    csv.end_row();
  }
}

}  // namespace gcngp
