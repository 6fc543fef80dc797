#include "meshrect/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "meshrect/error.hpp"
#include "meshrect/png_io.hpp"

namespace meshrect {
namespace {

void require_same(const ImageBuffer& a, const ImageBuffer& b) {
  if (a.width() != b.width() || a.height() != b.height() || a.channels() != b.channels()) {
    throw InvalidArgument("images differ in size or channel count");
  }
}

double to_db(double mse) {
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

// Valid-mode separable filter of a w x h plane.
std::vector<double> filter_valid(const std::vector<double>& in, int w, int h, const std::vector<double>& k) {
  const int ow = w - kWindow + 1;
  const int oh = h - kWindow + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kWindow; ++i) acc += k[i] * in[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kWindow; ++i) acc += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace

double mean_squared_error(const ImageBuffer& a, const ImageBuffer& b) {
  require_same(a, b);
  double sum = 0.0;
  for (std::size_t k = 0; k < a.data().size(); ++k) {
    const double d = a.data()[k] - b.data()[k];
    sum += d * d;
  }
  return sum / static_cast<double>(a.data().size());
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) { return to_db(mean_squared_error(a, b)); }

double psnr_masked(const ImageBuffer& a, const ImageBuffer& b, const MaskBuffer& mask) {
  require_same(a, b);
  if (mask.width() != a.width() || mask.height() != a.height()) {
    throw InvalidArgument("mask size differs from the images");
  }
  const int c = a.channels();
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t p = 0; p < mask.pixel_count(); ++p) {
    if (mask.data()[p] < 0.5) continue;
    for (int ch = 0; ch < c; ++ch) {
      const double d = a.data()[p * c + ch] - b.data()[p * c + ch];
      sum += d * d;
    }
    n += c;
  }
  if (n == 0) throw InvalidArgument("mask selects no pixels");
  return to_db(sum / static_cast<double>(n));
}

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
  require_same(a, b);
  const int w = a.width();
  const int h = a.height();
  if (w < kWindow || h < kWindow) {
    throw InvalidArgument("images are smaller than the 11x11 SSIM window");
  }
  std::vector<double> k(kWindow);
  double ks = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    k[i] = std::exp(-0.5 * d * d / (kSigma * kSigma));
    ks += k[i];
  }
  for (double& v : k) v /= ks;

  const std::vector<double> ga = a.to_gray();
  const std::vector<double> gb = b.to_gray();
  std::vector<double> aa(ga.size()), bb(ga.size()), ab(ga.size());
  for (std::size_t i = 0; i < ga.size(); ++i) {
    aa[i] = ga[i] * ga[i];
    bb[i] = gb[i] * gb[i];
    ab[i] = ga[i] * gb[i];
  }
  const auto mu_a = filter_valid(ga, w, h, k);
  const auto mu_b = filter_valid(gb, w, h, k);
  const auto e_aa = filter_valid(aa, w, h, k);
  const auto e_bb = filter_valid(bb, w, h, k);
  const auto e_ab = filter_valid(ab, w, h, k);

  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  double sum = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = e_aa[i] - ma * ma;
    const double vb = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return sum / static_cast<double>(mu_a.size());
}

EvalReport make_report(std::vector<EvalEntry> entries) {
  EvalReport r;
  r.entries = std::move(entries);
  r.count = r.entries.size();
  for (const auto& e : r.entries) {
    r.mean_psnr += e.psnr;
    r.mean_ssim += e.ssim;
  }
  if (r.count > 0) {
    r.mean_psnr /= static_cast<double>(r.count);
    r.mean_ssim /= static_cast<double>(r.count);
  }
  return r;
}

EvalReport evaluate_dirs(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                         const std::string& pred_prefix, const std::string& gt_prefix) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(pred_dir) || !fs::is_directory(gt_dir)) {
    throw IoError("prediction and ground-truth paths must be directories");
  }
  std::vector<std::string> keys;
  for (const auto& entry : fs::directory_iterator(pred_dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.starts_with(pred_prefix) && name.ends_with(".png")) {
      keys.push_back(name.substr(pred_prefix.size()));
    }
  }
  std::sort(keys.begin(), keys.end());
  std::vector<EvalEntry> entries;
  for (const std::string& key : keys) {
    const fs::path gt = gt_dir / (gt_prefix + key);
    if (!fs::exists(gt)) {
      throw IoError("no ground truth for " + pred_prefix + key + " (expected " + gt.string() + ")");
    }
    const ImageBuffer p = load_png((pred_dir / (pred_prefix + key)).string());
    const ImageBuffer g = load_png(gt.string());
    entries.push_back({key.substr(0, key.size() - 4), psnr(p, g), ssim(p, g)});
  }
  return make_report(std::move(entries));
}

std::string eval_report_json(const EvalReport& report) {
  nlohmann::ordered_json per = nlohmann::ordered_json::array();
  for (const auto& e : report.entries) {
    per.push_back({{"name", e.name}, {"psnr", e.psnr}, {"ssim", e.ssim}});
  }
  nlohmann::ordered_json j;
  j["count"] = report.count;
  j["mean_psnr"] = report.mean_psnr;
  j["mean_ssim"] = report.mean_ssim;
  j["images"] = std::move(per);
  return j.dump(2);
}

}  // namespace meshrect
