#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "meshrect/image.hpp"

namespace meshrect {

/// PSNR reported for identical images.
inline constexpr double kPsnrCap = 99.0;

double mean_squared_error(const ImageBuffer& a, const ImageBuffer& b);

/// 10 log10(1 / MSE) with peak 1, capped at kPsnrCap.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

/// PSNR over pixels where `mask` >= 0.5. Throws InvalidArgument if none.
double psnr_masked(const ImageBuffer& a, const ImageBuffer& b, const MaskBuffer& mask);

/// Single-scale SSIM on luma: 11x11 Gaussian window (sigma 1.5),
/// C1 = (0.01)^2, C2 = (0.03)^2, averaged over window positions fully inside
/// the image. Throws InvalidArgument for images smaller than the window.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

struct EvalEntry {
  std::string name;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct EvalReport {
  std::vector<EvalEntry> entries;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  std::size_t count = 0;
};

EvalReport make_report(std::vector<EvalEntry> entries);

/// Pairs `<pred_prefix>NNNNN.png` in `pred_dir` with `<gt_prefix>NNNNN.png`
/// in `gt_dir` by their shared suffix, in lexicographic order.
EvalReport evaluate_dirs(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                         const std::string& pred_prefix = "output_", const std::string& gt_prefix = "gt_");

std::string eval_report_json(const EvalReport& report);

}  // namespace meshrect
