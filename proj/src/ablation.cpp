#include "meshrect/ablation.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "meshrect/error.hpp"
#include "meshrect/metrics.hpp"
#include "meshrect/optimizer.hpp"
#include "meshrect/png_io.hpp"

namespace meshrect {

std::string mesh_ablation_report(const std::filesystem::path& data_dir, const AblationOptions& opts) {
  using json = nlohmann::ordered_json;
  std::ifstream in(data_dir / "manifest.json");
  if (!in) throw IoError("no manifest.json in " + data_dir.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("malformed manifest in " + data_dir.string() + ": " + e.what());
  }
  const auto& samples = manifest.at("samples");
  const std::size_t n = std::min(opts.limit, samples.size());
  if (n == 0) throw InvalidArgument("ablation needs at least one sample");

  struct Sample {
    std::string name;
    ImageBuffer input;
    MaskBuffer mask;
    ImageBuffer gt;
  };
  std::vector<Sample> data;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& s = samples[k];
    data.push_back({s.at("input").get<std::string>(), load_png((data_dir / s.at("input").get<std::string>()).string()),
                    load_mask_png((data_dir / s.at("mask").get<std::string>()).string()),
                    load_png((data_dir / s.at("gt").get<std::string>()).string())});
  }

  json report;
  report["samples"] = n;
  report["label_free"] = opts.label_free;
  json rows = json::array();
  for (const auto& [u, v] : opts.resolutions) {
    EnergyConfig cfg = opts.cfg;
    cfg.mesh_u = u;
    cfg.mesh_v = v;
    double sum_psnr = 0.0;
    double sum_ssim = 0.0;
    double sum_cov = 0.0;
    double sum_energy = 0.0;
    int converged = 0;
    json per = json::array();
    for (const Sample& s : data) {
      cfg.image_w = s.input.width();
      cfg.image_h = s.input.height();
      const RectangleResult r = rectangle_image(s.input, s.mask, cfg, opts.label_free ? nullptr : &s.gt);
      const MeshGrid fm[] = {r.final_mesh};
      const EnergyBreakdown e = EnergyModel(s.input, s.mask, r.rigid, s.gt, cfg).evaluate(fm);
      const double p = psnr(r.image, s.gt);
      const double q = ssim(r.image, s.gt);
      sum_psnr += p;
      sum_ssim += q;
      sum_cov += 1.0 - e.boundary;
      sum_energy += e.total;
      converged += r.solve.converged ? 1 : 0;
      per.push_back({{"input", s.name},
                     {"psnr", p},
                     {"ssim", q},
                     {"coverage", 1.0 - e.boundary},
                     {"energy", e.total},
                     {"converged", r.solve.converged},
                     {"iterations", r.solve.iterations_used}});
    }
    const double dn = static_cast<double>(n);
    rows.push_back({{"mesh", std::to_string(u) + "x" + std::to_string(v)},
                    {"mean_psnr", sum_psnr / dn},
                    {"mean_ssim", sum_ssim / dn},
                    {"mean_coverage", sum_cov / dn},
                    {"mean_energy", sum_energy / dn},
                    {"converged", converged},
                    {"samples", std::move(per)}});
  }
  report["resolutions"] = std::move(rows);
  return report.dump(2);
}

}  // namespace meshrect
