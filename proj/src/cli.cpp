#include "meshrect/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "meshrect/ablation.hpp"
#include "meshrect/energy.hpp"
#include "meshrect/error.hpp"
#include "meshrect/gradcheck.hpp"
#include "meshrect/metrics.hpp"
#include "meshrect/optimizer.hpp"
#include "meshrect/png_io.hpp"
#include "meshrect/synth.hpp"

namespace meshrect {
namespace {

using json = nlohmann::ordered_json;

json breakdown_json(const EnergyBreakdown& e) {
  return {{"boundary", e.boundary},
          {"mesh_intra", e.mesh_intra},
          {"mesh_inter", e.mesh_inter},
          {"content_appearance", e.content_appearance},
          {"content_perception", e.content_perception},
          {"total", e.total}};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << text << '\n';
}

// "8x6" -> (8, 6)
std::pair<std::size_t, std::size_t> parse_mesh(const std::string& s) {
  const auto x = s.find_first_of("xX");
  try {
    if (x == std::string::npos) throw std::invalid_argument(s);
    std::size_t used = 0;
    const unsigned long u = std::stoul(s.substr(0, x), &used);
    if (used != x) throw std::invalid_argument(s);
    const std::string rest = s.substr(x + 1);
    const unsigned long v = std::stoul(rest, &used);
    if (used != rest.size() || u == 0 || v == 0) throw std::invalid_argument(s);
    return {u, v};
  } catch (const std::logic_error&) {
    throw InvalidArgument("mesh resolution must look like UxV, got '" + s + "'");
  }
}

struct RectangleArgs {
  std::string input, mask, label, out, mesh_out, report;
  std::string mesh = "8x6";
  EnergyConfig cfg;
  bool label_free = false;
  bool downsample = false;
};

int cmd_rectangle(const RectangleArgs& a, std::ostream& out, std::ostream& err) {
  EnergyConfig cfg = a.cfg;
  std::tie(cfg.mesh_u, cfg.mesh_v) = parse_mesh(a.mesh);
  const ImageBuffer image = load_png(a.input);
  const MaskBuffer mask = load_mask_png(a.mask);
  if (mask.width() != image.width() || mask.height() != image.height()) {
    throw InvalidArgument("mask and input differ in size");
  }
  std::optional<ImageBuffer> label;
  if (!a.label.empty()) {
    label = load_png(a.label);
    if (label->channels() != image.channels()) {
      throw InvalidArgument("label and input differ in channel count");
    }
  }
  cfg.image_w = image.width();
  cfg.image_h = image.height();
  const ImageBuffer* solve_label = (label && !a.label_free) ? &*label : nullptr;

  const RectangleResult res = a.downsample ? rectangle_image_downsampled(image, mask, cfg, solve_label)
                                           : rectangle_image(image, mask, cfg, solve_label);
  save_png(res.image, a.out);
  if (!a.mesh_out.empty()) save_mesh(res.final_mesh, a.mesh_out);

  const EnergyModel model(image, mask, res.rigid, solve_label ? label : std::nullopt, cfg);
  const MeshGrid fm[] = {res.final_mesh};
  const MeshGrid pm[] = {apply_motion(res.rigid, res.solve.motion_p)};
  const EnergyBreakdown e_final = model.evaluate(fm);
  const EnergyBreakdown e_primary = model.evaluate(pm);

  json report;
  report["energy"] = {{"primary", breakdown_json(e_primary)},
                      {"residual", breakdown_json(res.solve.residual_history.back())},
                      {"final", breakdown_json(e_final)}};
  report["iterations"] = {{"primary", static_cast<int>(res.solve.primary_history.size()) - 1},
                          {"residual", static_cast<int>(res.solve.residual_history.size()) - 1},
                          {"used", res.solve.iterations_used}};
  report["converged"] = res.solve.converged;
  report["label_free"] = solve_label == nullptr;
  if (label) {
    report["metrics"] = {{"psnr", psnr(res.image, *label)},
                         {"ssim", ssim(res.image, *label)},
                         {"input_psnr", psnr(image, *label)},
                         {"input_ssim", ssim(image, *label)}};
  }
  report["coverage"] = 1.0 - e_final.boundary;
  if (!a.report.empty()) write_text(a.report, report.dump(2));
  out << "rectangled " << a.input << " -> " << a.out << " (energy " << e_final.total << ", "
      << (res.solve.converged ? "converged" : "not converged") << ")\n";
  if (!res.solve.converged) {
    // Best iterate and report are still written.
    err << "numerical error: optimizer did not converge within " << cfg.optimizer.max_iters
        << " iterations per stage\n";
    return kExitNumerical;
  }
  return kExitOk;
}

struct SynthArgs {
  std::string src, out, split, mesh = "8x6";
  std::optional<std::size_t> count;
  std::uint64_t seed = 0;
  double magnitude = 32.0;
  std::size_t procedural = 0;
  int width = 512;
  int height = 384;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  DatasetOptions opts;
  opts.seed = a.seed;
  opts.magnitude = a.magnitude;
  opts.procedural_sources = a.procedural;
  opts.cfg.image_w = a.width;
  opts.cfg.image_h = a.height;
  std::tie(opts.cfg.mesh_u, opts.cfg.mesh_v) = parse_mesh(a.mesh);
  std::filesystem::path out_dir = a.out;
  if (!a.split.empty()) {
    out_dir /= a.split;
    opts.count = a.count.value_or(a.split == "test" ? 519 : 5839);
  } else {
    if (!a.count) throw InvalidArgument("--count is required without --split");
    opts.count = *a.count;
  }
  if (a.src.empty() && a.procedural == 0 && opts.count > 0) {
    throw InvalidArgument("either --src or --procedural is required");
  }
  build_dataset(a.src, out_dir, opts);
  out << "wrote " << opts.count << " triplets to " << out_dir.string() << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string pred, gt, report;
  std::string pred_prefix = "output_";
  std::string gt_prefix = "gt_";
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const EvalReport r = evaluate_dirs(a.pred, a.gt, a.pred_prefix, a.gt_prefix);
  write_text(a.report, eval_report_json(r));
  out << "evaluated " << r.count << " images: PSNR " << r.mean_psnr << " dB, SSIM " << r.mean_ssim << "\n";
  return kExitOk;
}

struct AblateArgs {
  std::string data, report;
  std::vector<std::string> meshes = {"4x3", "8x6", "16x12"};
  AblationOptions opts;
};

int cmd_ablate(AblateArgs a, std::ostream& out) {
  a.opts.resolutions.clear();
  for (const std::string& m : a.meshes) a.opts.resolutions.push_back(parse_mesh(m));
  const std::string text = mesh_ablation_report(a.data, a.opts);
  write_text(a.report, text);
  out << "ablation over " << a.meshes.size() << " mesh resolutions written to " << a.report << "\n";
  return kExitOk;
}

int cmd_gradcheck(const GradCheckOptions& o, std::ostream& out) {
  const GradCheckReport r = run_gradcheck(o);
  out << "gradcheck: " << r.trials << " trials, " << r.coordinates_checked << " coordinates ("
      << r.coordinates_excluded << " near kinks skipped), max relative error " << r.max_rel_error << "\n";
  return r.max_rel_error <= 1e-3 ? kExitOk : kExitNumerical;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mesh-based rectangling of stitched images"};
  app.name("meshrect");
  app.require_subcommand(1);

  RectangleArgs ra;
  auto* rect = app.add_subcommand("rectangle", "Warp a stitched image to a rectangle");
  rect->add_option("--input", ra.input, "Stitched image (PNG)")->required();
  rect->add_option("--mask", ra.mask, "Validity mask (PNG)")->required();
  rect->add_option("--label", ra.label, "Rectangular reference (PNG); enables the content term");
  rect->add_option("--out", ra.out, "Output PNG")->required();
  rect->add_option("--mesh-out", ra.mesh_out, "Write the final mesh as JSON");
  rect->add_option("--report", ra.report, "Write energies and metrics as JSON");
  rect->add_option("--mesh", ra.mesh, "Mesh resolution UxV")->capture_default_str();
  rect->add_option("--alpha", ra.cfg.alpha, "Intra-grid threshold fraction")->capture_default_str();
  rect->add_option("--wa", ra.cfg.omega_a, "Appearance weight")->capture_default_str();
  rect->add_option("--wp", ra.cfg.omega_p, "Perception weight")->capture_default_str();
  rect->add_option("--iters", ra.cfg.optimizer.max_iters, "Iterations per stage")->capture_default_str();
  rect->add_option("--step", ra.cfg.optimizer.step, "Step size in pixels")->capture_default_str();
  rect->add_flag("--label-free", ra.label_free, "Ignore the label while solving");
  rect->add_flag("--downsample", ra.downsample, "Solve at <= 1 megapixel, warp at full size");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Synthesize (input, mask, gt) triplets");
  synth->add_option("--src", sa.src, "Directory of rectangular PNGs");
  synth->add_option("--procedural", sa.procedural, "Use N generated pictures instead of --src");
  synth->add_option("--out", sa.out, "Output directory")->required();
  synth->add_option("--count", sa.count, "Number of triplets");
  synth->add_option("--seed", sa.seed, "Random seed")->capture_default_str();
  synth->add_option("--magnitude", sa.magnitude, "Deformation magnitude in pixels")->capture_default_str();
  synth->add_option("--split", sa.split, "Write into <out>/<split>; default counts 5839/519")
      ->check(CLI::IsMember({"train", "test"}));
  synth->add_option("--mesh", sa.mesh, "Mesh resolution UxV")->capture_default_str();
  synth->add_option("--width", sa.width, "Raster width")->capture_default_str();
  synth->add_option("--height", sa.height, "Raster height")->capture_default_str();

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "PSNR/SSIM of predictions against ground truth");
  eval->add_option("--pred", ea.pred, "Prediction directory")->required();
  eval->add_option("--gt", ea.gt, "Ground-truth directory")->required();
  eval->add_option("--report", ea.report, "Output JSON")->required();
  eval->add_option("--pred-prefix", ea.pred_prefix, "Prediction file prefix")->capture_default_str();
  eval->add_option("--gt-prefix", ea.gt_prefix, "Ground-truth file prefix")->capture_default_str();

  AblateArgs aa;
  auto* ablate = app.add_subcommand("ablate", "Compare mesh resolutions on a synthesized dataset");
  ablate->add_option("--data", aa.data, "Directory written by synth")->required();
  ablate->add_option("--report", aa.report, "Output JSON")->required();
  ablate->add_option("--mesh", aa.meshes, "Resolutions UxV")->capture_default_str();
  ablate->add_option("--limit", aa.opts.limit, "Samples to use")->capture_default_str();
  ablate->add_flag("--label-free", aa.opts.label_free, "Solve without the content term");

  GradCheckOptions go;
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of the energy gradient");
  grad->add_option("--seed", go.seed, "Random seed")->capture_default_str();
  grad->add_option("--trials", go.trials, "Number of random configurations")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*rect) return cmd_rectangle(ra, out, err);
    if (*synth) return cmd_synth(sa, out);
    if (*eval) return cmd_eval(ea, out);
    if (*ablate) return cmd_ablate(aa, out);
    if (*grad) return cmd_gradcheck(go, out);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}

}  // namespace meshrect
