#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "meshrect/config.hpp"

namespace meshrect {

struct AblationOptions {
  /// Mesh resolutions (U, V) to compare.
  std::vector<std::pair<std::size_t, std::size_t>> resolutions = {{4, 3}, {8, 6}, {16, 12}};
  /// Number of dataset samples to use, from the start of the manifest.
  std::size_t limit = 5;
  bool label_free = false;
  EnergyConfig cfg;  ///< weights and optimizer settings; mesh fields are overridden
};

/// Rectangles the first `limit` samples of a dataset written by
/// build_dataset at every resolution and returns a JSON report with
/// per-sample and mean PSNR, SSIM, coverage, final energy and convergence.
/// Contains no timings, so equal inputs give byte-identical reports.
std::string mesh_ablation_report(const std::filesystem::path& data_dir, const AblationOptions& opts);

}  // namespace meshrect
