#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "iprop/types.hpp"

namespace iprop {

inline constexpr std::string_view kTrajectoryHeader = "iter,selected_prompt_id,train_f1,val_f1";
inline constexpr std::string_view kPlotHeader = "dataset,iter,split,f1";

/// Header plus one row per record; scores with 4 decimals.
std::string trajectory_csv(const std::vector<TrajectoryRecord>& records);

/// Inverse of trajectory_csv (scores are read back at 4-decimal precision).
/// Throws MalformedContent with the offending line.
std::vector<TrajectoryRecord> parse_trajectory_csv(std::string_view content);

struct NamedTrajectory {
  std::string dataset;
  std::vector<TrajectoryRecord> records;
};

/// Long format for plotting: per dataset and iteration one "train" and one
/// "validation" row.
std::string plot_csv(const std::vector<NamedTrajectory>& series);

}  // namespace iprop
