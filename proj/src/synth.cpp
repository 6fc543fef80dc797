#include "meshrect/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>

#include <nlohmann/json.hpp>

#include "meshrect/energy.hpp"
#include "meshrect/error.hpp"
#include "meshrect/metrics.hpp"
#include "meshrect/png_io.hpp"
#include "meshrect/warp.hpp"

namespace meshrect {

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t Rng::next() { return engine_(); }

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined words.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double footprint_void_fraction(const MeshGrid& mesh, double width, double height) {
  std::vector<Vec2> loop;
  const std::size_t r = mesh.rows() - 1;
  const std::size_t c = mesh.cols() - 1;
  for (std::size_t j = 0; j < c; ++j) loop.push_back(mesh.at(0, j));
  for (std::size_t i = 0; i < r; ++i) loop.push_back(mesh.at(i, c));
  for (std::size_t j = c; j > 0; --j) loop.push_back(mesh.at(r, j));
  for (std::size_t i = r; i > 0; --i) loop.push_back(mesh.at(i, 0));
  double area2 = 0.0;
  for (std::size_t k = 0; k < loop.size(); ++k) {
    area2 += cross(loop[k], loop[(k + 1) % loop.size()]);
  }
  return 1.0 - 0.5 * std::abs(area2) / (width * height);
}

namespace {

struct DeformationDraw {
  std::vector<Vec2> field;  // interior displacement, per vertex
  std::vector<double> top, bottom, left, right;
};

MeshMotion compose(const MeshGrid& rigid, const DeformationDraw& d, double inset_scale, double w, double h) {
  const std::size_t rows = rigid.rows();
  const std::size_t cols = rigid.cols();
  MeshMotion m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      Vec2 v = d.field[i * cols + j];
      const Vec2 base = rigid.at(i, j);
      if (i == 0) v.y = inset_scale * d.top[j];
      if (i == rows - 1) v.y = -inset_scale * d.bottom[j];
      if (j == 0) v.x = inset_scale * d.left[i];
      if (j == cols - 1) v.x = -inset_scale * d.right[i];
      v.x = std::clamp(base.x + v.x, 0.0, w) - base.x;
      v.y = std::clamp(base.y + v.y, 0.0, h) - base.y;
      m.at(i, j) = v;
    }
  }
  return m;
}

}  // namespace

MeshMotion random_deformation(const MeshGrid& rigid, double magnitude, std::uint64_t seed, double alpha,
                              const DeformationLimits& limits) {
  if (!(magnitude >= 0.0)) {
    throw InvalidArgument("deformation magnitude must be non-negative");
  }
  if (magnitude == 0.0) {
    return MeshMotion::zeros_like(rigid);
  }
  const auto [wi, hi] = rigid_raster_size(rigid);
  const double w = wi;
  const double h = hi;
  const std::size_t rows = rigid.rows();
  const std::size_t cols = rigid.cols();
  EnergyConfig check;
  check.alpha = alpha;
  check.image_w = wi;
  check.image_h = hi;

  // Aim inside the admissible void band so rasterization cannot push it out.
  const double lo_target = limits.min_void + 0.02;
  const double hi_target = limits.max_void - 0.02;

  Rng rng(seed);
  double amplitude = magnitude;
  for (int attempt = 0; attempt < limits.max_attempts; ++attempt, amplitude *= 0.8) {
    DeformationDraw d;
    double coarse[3][3][2];
    for (auto& row : coarse) {
      for (auto& cell : row) {
        cell[0] = rng.uniform(-1.0, 1.0);
        cell[1] = rng.uniform(-1.0, 1.0);
      }
    }
    d.field.resize(rows * cols);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        const double cu = 2.0 * static_cast<double>(j) / static_cast<double>(cols - 1);
        const double cv = 2.0 * static_cast<double>(i) / static_cast<double>(rows - 1);
        const int j0 = std::min(static_cast<int>(cu), 1);
        const int i0 = std::min(static_cast<int>(cv), 1);
        const double s = cu - j0;
        const double t = cv - i0;
        for (int k = 0; k < 2; ++k) {
          const double val = (1 - s) * (1 - t) * coarse[i0][j0][k] + s * (1 - t) * coarse[i0][j0 + 1][k] +
                             (1 - s) * t * coarse[i0 + 1][j0][k] + s * t * coarse[i0 + 1][j0 + 1][k];
          (k == 0 ? d.field[i * cols + j].x : d.field[i * cols + j].y) = amplitude * val;
        }
      }
    }
    auto draw_insets = [&](std::size_t n) {
      std::vector<double> v(n);
      for (double& x : v) x = rng.uniform(0.0, magnitude);
      return v;
    };
    d.top = draw_insets(cols);
    d.bottom = draw_insets(cols);
    d.left = draw_insets(rows);
    d.right = draw_insets(rows);

    auto void_at = [&](double k) {
      return footprint_void_fraction(apply_motion(rigid, compose(rigid, d, k, w, h)), w, h);
    };
    double scale = 1.0;
    const double v1 = void_at(1.0);
    if (v1 < lo_target || v1 > hi_target) {
      const double target = v1 < lo_target ? lo_target + 0.01 : hi_target - 0.01;
      double lo = 0.0;
      double hi_k = 1.0;
      while (void_at(hi_k) < target && hi_k < 1024.0) {
        lo = hi_k;
        hi_k *= 2.0;
      }
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi_k);
        (void_at(mid) < target ? lo : hi_k) = mid;
      }
      scale = 0.5 * (lo + hi_k);
    }
    MeshMotion motion = compose(rigid, d, scale, w, h);
    const MeshGrid mesh = apply_motion(rigid, motion);
    const double vf = footprint_void_fraction(mesh, w, h);
    const MeshGrid one[] = {mesh};
    if (vf >= limits.min_void && vf <= limits.max_void && intra_grid_loss(one, check) == 0.0 &&
        min_corner_jacobian(mesh) > 0.0) {
      return motion;
    }
  }
  throw NumericalError("no valid random deformation found for seed " + std::to_string(seed));
}

Triplet synthesize_triplet(const ImageBuffer& rect, const MeshMotion& motion, const EnergyConfig& cfg,
                           std::uint64_t seed) {
  const MeshGrid rigid = build_rigid_mesh(rect.width(), rect.height(), cfg.mesh_u, cfg.mesh_v);
  const MeshGrid dst = apply_motion(rigid, motion);
  WarpedRaster w = warp_from_rigid(rect, rigid, dst, rect.width(), rect.height(), 0.0);
  return {std::move(w.image), std::move(w.mask), rect, motion, seed};
}

double round_trip_psnr(const Triplet& t, const EnergyConfig& cfg) {
  const MeshGrid rigid = build_rigid_mesh(t.label.width(), t.label.height(), cfg.mesh_u, cfg.mesh_v);
  const MeshGrid gen = apply_motion(rigid, t.generator_motion);
  const RigidWarpPlan plan(rigid);
  const ImageBuffer back = warp_to_rigid(t.stitched, gen, plan);
  MaskBuffer covered = warp_mask_to_rigid(t.mask, gen, plan);
  for (double& v : covered.data()) v = v >= 0.999 ? 1.0 : 0.0;
  return psnr_masked(back, t.label, covered.eroded(2));
}

ImageBuffer procedural_image(int width, int height, std::uint64_t seed) {
  Rng rng(seed);
  ImageBuffer img(width, height, 3);
  const double pi = std::numbers::pi;

  double c0[3], c1[3];
  for (int k = 0; k < 3; ++k) {
    c0[k] = rng.uniform(0.15, 0.85);
    c1[k] = rng.uniform(0.15, 0.85);
  }
  const double gx = rng.uniform(-1.0, 1.0);
  const double gy = rng.uniform(-1.0, 1.0);
  struct Wave {
    double fx, fy, phase, amp[3];
  };
  std::vector<Wave> waves(4);
  for (std::size_t k = 0; k < waves.size(); ++k) {
    Wave& wv = waves[k];
    // Two broad undulations and two fine stripe patterns.
    const double period = k < 2 ? rng.uniform(60.0, 200.0) : rng.uniform(7.0, 16.0);
    const double theta = rng.uniform(0.0, pi);
    wv.fx = std::cos(theta) / period;
    wv.fy = std::sin(theta) / period;
    wv.phase = rng.uniform(0.0, 2.0 * pi);
    for (double& a : wv.amp) a = (k < 2 ? 0.08 : 0.04) * rng.uniform(-1.0, 1.0);
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double u = (x + 0.5) / width - 0.5;
      const double v = (y + 0.5) / height - 0.5;
      const double ramp = 0.5 + gx * u + gy * v;
      for (int k = 0; k < 3; ++k) {
        double val = c0[k] + (c1[k] - c0[k]) * ramp;
        for (const Wave& wv : waves) val += wv.amp[k] * std::sin(2.0 * pi * (wv.fx * x + wv.fy * y) + wv.phase);
        img.at(x, y, k) = val;
      }
    }
  }

  const int shapes = 14;
  const double scale = std::min(width, height);
  for (int s = 0; s < shapes; ++s) {
    const double cx = rng.uniform(0.0, width);
    const double cy = rng.uniform(0.0, height);
    const double rx = rng.uniform(0.03, 0.2) * scale;
    const double ry = rng.uniform(0.03, 0.2) * scale;
    const double rot = rng.uniform(0.0, pi);
    const bool box = rng.uniform() < 0.4;
    double col[3];
    for (double& c : col) c = rng.uniform(0.05, 0.95);
    const double cr = std::cos(rot), sr = std::sin(rot);
    const double reach = std::max(rx, ry) + 3.0;
    const int x0 = std::max(0, static_cast<int>(cx - reach));
    const int x1 = std::min(width - 1, static_cast<int>(cx + reach));
    const int y0 = std::max(0, static_cast<int>(cy - reach));
    const int y1 = std::min(height - 1, static_cast<int>(cy + reach));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double dx = x + 0.5 - cx;
        const double dy = y + 0.5 - cy;
        const double lx = cr * dx + sr * dy;
        const double ly = -sr * dx + cr * dy;
        double dist;
        if (box) {
          dist = std::max(std::abs(lx) - rx, std::abs(ly) - ry);
        } else {
          dist = (std::hypot(lx / rx, ly / ry) - 1.0) * std::min(rx, ry);
        }
        // Soft edge about 1.5 px wide.
        const double a = std::clamp(0.5 - dist / 1.5, 0.0, 1.0);
        if (a <= 0.0) continue;
        for (int k = 0; k < 3; ++k) img.at(x, y, k) = (1.0 - a) * img.at(x, y, k) + a * col[k];
      }
    }
  }
  for (double& v : img.data()) v = std::clamp(v, 0.0, 1.0);
  return img;
}

ImageBuffer center_crop(const ImageBuffer& image, int width, int height) {
  if (image.width() < width || image.height() < height) {
    throw InvalidArgument("image is smaller than the crop size");
  }
  const int ox = (image.width() - width) / 2;
  const int oy = (image.height() - height) / 2;
  ImageBuffer out(width, height, image.channels());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < image.channels(); ++c) out.at(x, y, c) = image.at(x + ox, y + oy, c);
    }
  }
  return out;
}

namespace {

std::string indexed(const char* prefix, std::size_t k, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%05zu%s", prefix, k, ext);
  return buf;
}

}  // namespace

std::string build_dataset(const std::filesystem::path& src_dir, const std::filesystem::path& out_dir,
                          const DatasetOptions& opts) {
  namespace fs = std::filesystem;
  const EnergyConfig& cfg = opts.cfg;
  cfg.validate();

  struct Source {
    std::string name;
    ImageBuffer image;
  };
  std::vector<Source> sources;
  if (opts.procedural_sources > 0) {
    for (std::size_t k = 0; k < opts.procedural_sources; ++k) {
      const std::uint64_t s = derive_seed(opts.seed, 1'000'000 + k);
      sources.push_back({indexed("procedural_", k, ""), procedural_image(cfg.image_w, cfg.image_h, s)});
    }
  } else if (opts.count > 0) {
    if (!fs::is_directory(src_dir)) {
      throw IoError("source directory " + src_dir.string() + " does not exist");
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(src_dir)) {
      if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const fs::path& f : files) {
      try {
        ImageBuffer img = load_png(f.string());
        if (img.width() < cfg.image_w || img.height() < cfg.image_h) {
          std::cerr << "warning: skipping " << f.filename().string() << " (smaller than " << cfg.image_w << "x"
                    << cfg.image_h << ")\n";
          continue;
        }
        if (img.channels() == 1) {
          std::vector<double> rgb;
          rgb.reserve(img.data().size() * 3);
          for (double v : img.data()) rgb.insert(rgb.end(), {v, v, v});
          img = ImageBuffer(img.width(), img.height(), 3, std::move(rgb));
        }
        sources.push_back({f.filename().string(), center_crop(img, cfg.image_w, cfg.image_h)});
      } catch (const IoError& e) {
        std::cerr << "warning: skipping " << f.filename().string() << ": " << e.what() << "\n";
      }
    }
    if (sources.empty()) {
      throw IoError("no usable source images in " + src_dir.string());
    }
  }

  const MeshGrid rigid = build_rigid_mesh(cfg.image_w, cfg.image_h, cfg.mesh_u, cfg.mesh_v);

  if (opts.count > 0) fs::create_directories(out_dir);
  nlohmann::ordered_json samples = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < opts.count; ++k) {
    const Source& src = sources[k % sources.size()];
    std::uint64_t seed = derive_seed(opts.seed, k);
    Triplet t;
    double quality = 0.0;
    // Redraw until the round trip clears 30 dB.
    for (int attempt = 0;; ++attempt) {
      const MeshMotion motion = random_deformation(rigid, opts.magnitude, seed, cfg.alpha);
      t = synthesize_triplet(src.image, motion, cfg, seed);
      quality = round_trip_psnr(t, cfg);
      if (quality >= 30.0) break;
      if (attempt == 20) {
        throw NumericalError("triplet " + std::to_string(k) + " failed the round-trip check");
      }
      seed = derive_seed(seed, 7);
    }
    save_png(t.stitched, (out_dir / indexed("input_", k, ".png")).string());
    save_png(t.mask, (out_dir / indexed("mask_", k, ".png")).string());
    save_png(t.label, (out_dir / indexed("gt_", k, ".png")).string());
    save_mesh(apply_motion(rigid, t.generator_motion), (out_dir / indexed("mesh_", k, ".json")).string());
    samples.push_back({{"index", k},
                       {"source", src.name},
                       {"seed", seed},
                       {"void_fraction", 1.0 - t.mask.mean()},
                       {"round_trip_psnr", quality},
                       {"input", indexed("input_", k, ".png")},
                       {"mask", indexed("mask_", k, ".png")},
                       {"gt", indexed("gt_", k, ".png")},
                       {"mesh", indexed("mesh_", k, ".json")}});
  }

  nlohmann::ordered_json manifest;
  manifest["seed"] = opts.seed;
  manifest["count"] = opts.count;
  manifest["width"] = cfg.image_w;
  manifest["height"] = cfg.image_h;
  manifest["mesh_u"] = cfg.mesh_u;
  manifest["mesh_v"] = cfg.mesh_v;
  manifest["magnitude"] = opts.magnitude;
  manifest["samples"] = std::move(samples);
  const std::string text = manifest.dump(2);
  if (opts.count == 0) return text;
  std::ofstream out(out_dir / "manifest.json");
  if (!out) {
    throw IoError("cannot write manifest in " + out_dir.string());
  }
  out << text << '\n';
  return text;
}

}  // namespace meshrect
