// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Per-triplet numbers are written to
// acceptance_results.json in the working directory.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "meshrect/ablation.hpp"
#include "meshrect/cli.hpp"
#include "meshrect/energy.hpp"
#include "meshrect/gradcheck.hpp"
#include "meshrect/metrics.hpp"
#include "meshrect/optimizer.hpp"
#include "meshrect/png_io.hpp"
#include "meshrect/synth.hpp"
#include "meshrect/warp.hpp"
#include "oracles.hpp"

using namespace meshrect;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr std::uint64_t kDatasetSeed = 7;
constexpr std::size_t kTriplets = 50;

int failures = 0;
nlohmann::ordered_json results;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %d: %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
  results["criteria"].push_back({{"id", id}, {"name", name}, {"pass", ok}, {"detail", detail}});
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Sample {
  ImageBuffer input;
  MaskBuffer mask;
  ImageBuffer gt;
  MeshGrid generator;
  std::uint64_t seed = 0;
};

void criterion_1() {
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    Rng rng(derive_seed(101, k));
    const int w = 16 + static_cast<int>(rng.uniform() * 200);
    const int h = 16 + static_cast<int>(rng.uniform() * 150);
    const ImageBuffer img = oracle::noise_image(w, h, k % 2 ? 3 : 1, k);
    const MeshGrid rigid =
        build_rigid_mesh(w, h, 1 + static_cast<std::size_t>(rng.uniform() * 12), 1 + static_cast<std::size_t>(rng.uniform() * 12));
    const ImageBuffer out = warp_to_rigid(img, rigid, rigid);
    double mae = 0.0;
    for (std::size_t i = 0; i < img.data().size(); ++i) mae += std::abs(out.data()[i] - img.data()[i]);
    worst = std::max(worst, mae / static_cast<double>(img.data().size()));
  }
  report(1, "warp identity", worst <= 1e-6, fmt("worst mean abs error %.3g over 20 images (tol 1e-6)", worst));
}

void criterion_2() {
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 10; ++k) {
    Rng rng(derive_seed(202, k));
    const int w = 40 + static_cast<int>(rng.uniform() * 120);
    const int h = 30 + static_cast<int>(rng.uniform() * 90);
    const std::size_t u = 2 + static_cast<std::size_t>(rng.uniform() * 6);
    const std::size_t v = 2 + static_cast<std::size_t>(rng.uniform() * 6);
    const ImageBuffer img = oracle::noise_image(w, h, k % 2 ? 3 : 1, 900 + k);
    const MeshGrid rigid = build_rigid_mesh(w, h, u, v);
    const MeshGrid src = oracle::smooth_random_mesh(w, h, u, v, 0.1 * std::min(w / v, h / u), 700 + k);
    const ImageBuffer a = warp_to_rigid(img, src, rigid);
    const ImageBuffer b = oracle::warp(img, src);
    for (std::size_t i = 0; i < a.data().size(); ++i) worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  }
  report(2, "warp oracle", worst <= 1e-6, fmt("max abs difference %.3g over 10 pairs (tol 1e-6)", worst));
}

void criterion_3() {
  const auto t0 = Clock::now();
  GradCheckOptions opts;
  opts.seed = 0;
  opts.trials = 100;
  const GradCheckReport r = run_gradcheck(opts);
  const double secs = seconds_since(t0);
  results["gradcheck"] = {{"max_rel_error", r.max_rel_error},
                          {"coordinates_checked", r.coordinates_checked},
                          {"coordinates_excluded", r.coordinates_excluded},
                          {"seconds", secs}};
  report(3, "gradient correctness", r.max_rel_error <= 1e-3 && secs <= 300.0 && r.trials == 100,
         fmt("max rel error %.3g over %d configurations, %ld coordinates (%ld kink-adjacent excluded), %.1f s "
             "(tol 1e-3, 300 s)",
             r.max_rel_error, r.trials, r.coordinates_checked, r.coordinates_excluded, secs));
}

void criterion_4() {
  double worst = 0.0;
  const std::tuple<int, int, std::size_t, std::size_t, int> cases[] = {
      {512, 384, 8, 6, 3}, {512, 384, 4, 3, 3}, {512, 384, 16, 12, 1}, {97, 61, 3, 5, 3}};
  for (const auto& [w, h, u, v, c] : cases) {
    ImageBuffer img = procedural_image(w, h, u * 31 + v);
    if (c == 1) img = ImageBuffer(w, h, 1, img.to_gray());
    EnergyConfig cfg;
    cfg.image_w = w;
    cfg.image_h = h;
    cfg.mesh_u = u;
    cfg.mesh_v = v;
    const MeshGrid rigid = build_rigid_mesh(w, h, u, v);
    const EnergyBreakdown e =
        total_energy(img, MaskBuffer(w, h, 1.0), rigid, rigid, rigid, &img, cfg, *default_feature_extractor());
    for (double t : {e.boundary, e.mesh_intra, e.mesh_inter, e.content_appearance, e.content_perception, e.total}) {
      worst = std::max(worst, t);
    }
  }
  report(4, "loss zeros", worst <= 1e-9, fmt("largest term %.3g over 4 rigid configurations (tol 1e-9)", worst));
}

// Independent round trip: oracle warp back by the generator mesh, PSNR on
// the 2-px eroded fully covered interior.
double oracle_round_trip(const Sample& s) {
  const ImageBuffer back = oracle::warp(s.input, s.generator);
  const MaskBuffer cov = oracle::warp_mask(s.mask, s.generator);
  const int w = s.gt.width();
  const int h = s.gt.height();
  double se = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool inside = true;
      for (int dy = -2; dy <= 2 && inside; ++dy) {
        for (int dx = -2; dx <= 2 && inside; ++dx) {
          const int xx = x + dx;
          const int yy = y + dy;
          inside = xx >= 0 && yy >= 0 && xx < w && yy < h && cov.at(xx, yy) >= 0.999;
        }
      }
      if (!inside) continue;
      for (int c = 0; c < s.gt.channels(); ++c) {
        const double d = back.at(x, y, c) - s.gt.at(x, y, c);
        se += d * d;
        ++n;
      }
    }
  }
  return n == 0 ? 0.0 : std::min(99.0, 10.0 * std::log10(static_cast<double>(n) / se));
}

void criterion_5(const std::vector<Sample>& data) {
  double worst = 1e9;
  int ok = 0;
  int redraws = 0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const double p = oracle_round_trip(data[k]);
    results["triplets"][k]["round_trip_psnr"] = p;
    worst = std::min(worst, p);
    ok += p >= 30.0;
    redraws += data[k].seed != derive_seed(kDatasetSeed, k);
  }
  report(5, "synthesis round-trip", ok == static_cast<int>(data.size()),
         fmt("%d/%zu triplets >= 30 dB, worst %.2f dB, %d generator redraws", ok, data.size(), worst, redraws));
}

void criteria_6_to_8(const std::vector<Sample>& data) {
  const EnergyConfig cfg;
  int covered = 0;
  int converged = 0;
  double worst_cov = 1.0;
  double slowest = 0.0;
  double slowest_full = 0.0;
  double in_psnr = 0.0, out_psnr = 0.0, in_ssim = 0.0, out_ssim = 0.0;
  int refined = 0;
  double worst_margin = -1e9;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const Sample& s = data[k];
    auto& row = results["triplets"][k];

    auto t0 = Clock::now();
    const RectangleResult lf = rectangle_image(s.input, s.mask, cfg);
    const double secs_lf = seconds_since(t0);
    const MeshGrid lf_mesh[] = {lf.final_mesh};
    const double cov = 1.0 - boundary_loss(s.mask, lf.final_mesh, lf.rigid);
    covered += cov >= 0.99;
    converged += lf.solve.converged;
    worst_cov = std::min(worst_cov, cov);
    slowest = std::max(slowest, secs_lf);

    t0 = Clock::now();
    const RectangleResult full = rectangle_image(s.input, s.mask, cfg, &s.gt);
    const double secs_full = seconds_since(t0);
    slowest_full = std::max(slowest_full, secs_full);
    const double pi = psnr(s.input, s.gt);
    const double po = psnr(full.image, s.gt);
    const double si = ssim(s.input, s.gt);
    const double so = ssim(full.image, s.gt);
    in_psnr += pi;
    out_psnr += po;
    in_ssim += si;
    out_ssim += so;

    const EnergyModel model(s.input, s.mask, full.rigid, s.gt, cfg);
    const MeshGrid mp[] = {apply_motion(full.rigid, full.solve.motion_p)};
    const MeshGrid mf[] = {full.final_mesh};
    const double ep = model.evaluate(mp).total;
    const double ef = model.evaluate(mf).total;
    refined += ef <= ep;
    worst_margin = std::max(worst_margin, ef - ep);

    row["label_free"] = {{"coverage", cov},
                         {"converged", lf.solve.converged},
                         {"iterations", lf.solve.iterations_used},
                         {"seconds", secs_lf},
                         {"final_energy", EnergyModel(s.input, s.mask, lf.rigid, std::nullopt, cfg).evaluate(lf_mesh).total}};
    row["full"] = {{"input_psnr", pi}, {"output_psnr", po}, {"input_ssim", si}, {"output_ssim", so},
                   {"energy_primary", ep}, {"energy_final", ef}, {"converged", full.solve.converged},
                   {"iterations", full.solve.iterations_used}, {"seconds", secs_full}};
    std::printf("  triplet %02zu: label-free coverage %.4f (%s, %.1f s); full PSNR %.2f -> %.2f, SSIM %.3f -> %.3f "
                "(%.1f s); E1 %.5f -> %.5f\n",
                k, cov, lf.solve.converged ? "converged" : "not converged", secs_lf, pi, po, si, so, secs_full, ep, ef);
    std::fflush(stdout);
  }
  const double n = static_cast<double>(data.size());
  report(6, "label-free rectangling closes boundaries",
         covered == static_cast<int>(data.size()) && converged >= 45 && slowest <= 30.0,
         fmt("%d/%zu with coverage >= 0.99 (worst %.4f), converged %d/%zu (need 45), slowest solve %.1f s (limit 30 s)",
             covered, data.size(), worst_cov, converged, data.size(), slowest));
  const double dp = (out_psnr - in_psnr) / n;
  const double ds = (out_ssim - in_ssim) / n;
  report(7, "full-objective improvement", dp >= 3.0 && ds >= 0.1,
         fmt("mean PSNR %.2f -> %.2f dB (%+.2f, need +3), mean SSIM %.4f -> %.4f (%+.4f, need +0.1), slowest solve "
             "%.1f s",
             in_psnr / n, out_psnr / n, dp, in_ssim / n, out_ssim / n, ds, slowest_full));
  report(8, "progressive refinement", refined == static_cast<int>(data.size()),
         fmt("E1(m_f) <= E1(m_p) on %d/%zu triplets (largest E1(m_f) - E1(m_p) = %.3g)", refined, data.size(),
             worst_margin));
}

void criterion_9(const fs::path& data_dir) {
  AblationOptions opts;
  opts.limit = 2;
  const auto t0 = Clock::now();
  const std::string a = mesh_ablation_report(data_dir, opts);
  const std::string b = mesh_ablation_report(data_dir, opts);
  const auto parsed = nlohmann::ordered_json::parse(a);
  bool present = parsed["resolutions"].size() == 3;
  std::string summary;
  for (const auto& r : parsed["resolutions"]) {
    present = present && r.contains("mean_psnr") && r["samples"].size() == opts.limit;
    summary += fmt("%s: PSNR %.2f SSIM %.3f; ", r["mesh"].get<std::string>().c_str(), r["mean_psnr"].get<double>(),
                   r["mean_ssim"].get<double>());
  }
  results["ablation"] = parsed;
  report(9, "mesh-resolution ablation", present && a == b,
         summary + (a == b ? "reports identical across two runs" : "reports differ across runs") +
             fmt(" (%.0f s)", seconds_since(t0)));
}

bool run_pipeline(const fs::path& root, std::vector<std::string>& artifacts) {
  std::ostringstream out;
  std::ostringstream err;
  const std::string data = (root / "data").string();
  const std::string pred = (root / "pred").string();
  fs::create_directories(pred);
  if (run_cli({"synth", "--procedural", "3", "--out", data, "--count", "3", "--seed", "11"}, out, err) != kExitOk) {
    return false;
  }
  for (int k = 0; k < 3; ++k) {
    const std::string id = fmt("%05d", k);
    const int code = run_cli({"rectangle", "--input", data + "/input_" + id + ".png", "--mask",
                              data + "/mask_" + id + ".png", "--label", data + "/gt_" + id + ".png", "--label-free",
                              "--out", pred + "/output_" + id + ".png", "--report", pred + "/report_" + id + ".json"},
                             out, err);
    if (code != kExitOk && code != kExitNumerical) return false;
    artifacts.push_back(slurp(pred + "/report_" + id + ".json"));
    artifacts.push_back(slurp(pred + "/output_" + id + ".png"));
  }
  if (run_cli({"eval", "--pred", pred, "--gt", data, "--report", (root / "eval.json").string()}, out, err) != kExitOk) {
    return false;
  }
  artifacts.push_back(slurp(data + "/manifest.json"));
  artifacts.push_back(slurp(root / "eval.json"));
  return true;
}

void criterion_10(const fs::path& scratch) {
  std::vector<std::string> a;
  std::vector<std::string> b;
  const bool ran = run_pipeline(scratch / "run_a", a) && run_pipeline(scratch / "run_b", b);
  report(10, "determinism", ran && a == b && !a.empty(),
         ran ? fmt("synth -> rectangle -> eval twice: %zu artifacts (reports, outputs, manifest, eval) %s", a.size(),
                   a == b ? "byte-identical" : "differ")
             : std::string("pipeline failed to run"));
}

}  // namespace

int main() {
  const fs::path scratch = fs::temp_directory_path() / "meshrect_acceptance";
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  results["criteria"] = nlohmann::json::array();

  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();

  DatasetOptions opts;
  opts.count = kTriplets;
  opts.seed = kDatasetSeed;
  opts.procedural_sources = kTriplets;
  const fs::path data_dir = scratch / "dataset";
  const auto manifest = nlohmann::ordered_json::parse(build_dataset({}, data_dir, opts));
  std::vector<Sample> data;
  for (const auto& s : manifest["samples"]) {
    data.push_back({load_png((data_dir / s["input"].get<std::string>()).string()),
                    load_mask_png((data_dir / s["mask"].get<std::string>()).string()),
                    load_png((data_dir / s["gt"].get<std::string>()).string()),
                    load_mesh((data_dir / s["mesh"].get<std::string>()).string()), s["seed"].get<std::uint64_t>()});
    results["triplets"].push_back({{"index", s["index"]}, {"void_fraction", s["void_fraction"]}});
  }

  criterion_5(data);
  criteria_6_to_8(data);
  criterion_9(data_dir);
  criterion_10(scratch);

  std::ofstream("acceptance_results.json") << results.dump(2) << '\n';
  fs::remove_all(scratch);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
