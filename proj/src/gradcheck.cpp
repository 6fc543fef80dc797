#include "meshrect/gradcheck.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>

#include "meshrect/energy.hpp"
#include "meshrect/synth.hpp"
#include "meshrect/warp.hpp"

namespace meshrect {
namespace {

// Random field in span{1, x, y, xy}. Bilinear sampling reproduces such a
// field exactly, so warped values have no derivative jumps at pixel lattice
// lines and central differences are meaningful.
std::vector<double> bilinear_field(int w, int h, Rng& rng, double base, double amp) {
  const double b = rng.uniform(-1.0, 1.0);
  const double c = rng.uniform(-1.0, 1.0);
  const double d = rng.uniform(-1.0, 1.0);
  const double s = 0.5 * amp / (std::abs(b) + std::abs(c) + 0.5 * std::abs(d));
  std::vector<double> out(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double u = (x + 0.5) / w - 0.5;
      const double v = (y + 0.5) / h - 0.5;
      out[static_cast<std::size_t>(y) * w + x] = base + s * (b * u + c * v + 2.0 * d * u * v);
    }
  }
  return out;
}

ImageBuffer random_image(int w, int h, int channels, Rng& rng) {
  std::vector<double> data(static_cast<std::size_t>(w) * h * channels);
  for (int c = 0; c < channels; ++c) {
    const auto f = bilinear_field(w, h, rng, 0.5, 0.8);
    for (std::size_t k = 0; k < f.size(); ++k) data[k * channels + c] = f[k];
  }
  return {w, h, channels, std::move(data)};
}

// Boundary vertices move inward by at least 0.6 px so every sample lands
// inside the outermost pixel centers, away from clamping and zero padding.
MeshMotion random_motion(std::size_t rows, std::size_t cols, double amp, Rng& rng) {
  MeshMotion m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      Vec2& d = m.at(i, j);
      d = {rng.uniform(-amp, amp), rng.uniform(-amp, amp)};
      if (j == 0) d.x = rng.uniform(0.6, amp);
      if (j + 1 == cols) d.x = -rng.uniform(0.6, amp);
      if (i == 0) d.y = rng.uniform(0.6, amp);
      if (i + 1 == rows) d.y = -rng.uniform(0.6, amp);
    }
  }
  return m;
}

// True when some warped sample changes the sign of (W - R) between the two
// meshes, i.e. the stencil straddles a kink of the appearance term.
bool appearance_sign_flips(const ImageBuffer& image, const ImageBuffer& label, const MeshGrid& lo,
                           const MeshGrid& hi, const RigidWarpPlan& plan) {
  const ImageBuffer a = warp_to_rigid(image, lo, plan);
  const ImageBuffer b = warp_to_rigid(image, hi, plan);
  const auto ad = a.data();
  const auto bd = b.data();
  const auto rd = label.data();
  for (std::size_t k = 0; k < rd.size(); ++k) {
    if ((ad[k] > rd[k]) != (bd[k] > rd[k]) || (ad[k] < rd[k]) != (bd[k] < rd[k])) return true;
  }
  return false;
}

// Marks coordinates whose incident edges sit within `margin` of a hinge kink.
std::vector<bool> hinge_adjacent(const MeshGrid& mesh, const EnergyConfig& cfg, double margin) {
  const double th = cfg.alpha * cfg.image_w / static_cast<double>(mesh.cells_v());
  const double tv = cfg.alpha * cfg.image_h / static_cast<double>(mesh.cells_u());
  const std::size_t cols = mesh.cols();
  std::vector<bool> near(2 * mesh.vertices().size(), false);
  for (std::size_t i = 0; i < mesh.rows(); ++i) {
    for (std::size_t j = 0; j + 1 < cols; ++j) {
      if (std::abs(mesh.at(i, j + 1).x - mesh.at(i, j).x - th) < margin) {
        near[2 * (i * cols + j)] = near[2 * (i * cols + j + 1)] = true;
      }
    }
  }
  for (std::size_t i = 0; i + 1 < mesh.rows(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (std::abs(mesh.at(i + 1, j).y - mesh.at(i, j).y - tv) < margin) {
        near[2 * (i * cols + j) + 1] = near[2 * ((i + 1) * cols + j) + 1] = true;
      }
    }
  }
  return near;
}

}  // namespace

GradCheckReport run_gradcheck(const GradCheckOptions& opts) {
  GradCheckReport report;
  const auto phi = std::make_shared<const PyramidExtractor>();
  for (int trial = 0; trial < opts.trials; ++trial) {
    Rng rng(derive_seed(opts.seed, static_cast<std::uint64_t>(trial)));
    const int w = 48 + static_cast<int>(rng.uniform() * 49);
    const int h = 40 + static_cast<int>(rng.uniform() * 41);
    const int channels = rng.uniform() < 0.5 ? 1 : 3;

    EnergyConfig cfg;
    cfg.mesh_u = 2 + static_cast<std::size_t>(rng.uniform() * 4);
    cfg.mesh_v = 2 + static_cast<std::size_t>(rng.uniform() * 4);
    cfg.image_w = w;
    cfg.image_h = h;
    cfg.omega_a = rng.uniform(0.5, 2.0);
    cfg.omega_p = rng.uniform() < 0.5 ? 5e-6 : rng.uniform(0.5, 5.0);
    // Large alpha puts the hinge penalties in play for some trials.
    cfg.alpha = rng.uniform() < 0.5 ? 0.125 : rng.uniform(0.85, 0.99);

    const ImageBuffer image = random_image(w, h, channels, rng);
    const MaskBuffer mask(w, h, bilinear_field(w, h, rng, 0.5, 0.8));
    std::optional<ImageBuffer> label;
    if (rng.uniform() < 0.75) label = random_image(w, h, channels, rng);

    const MeshGrid rigid = build_rigid_mesh(w, h, cfg.mesh_u, cfg.mesh_v);
    const MeshMotion mp = random_motion(rigid.rows(), rigid.cols(), opts.max_motion, rng);
    const MeshMotion mf = random_motion(rigid.rows(), rigid.cols(), opts.max_motion, rng);
    const EnergyModel model(image, mask, rigid, label, cfg, phi);

    std::vector<MeshMotion> grads;
    const MeshGrid meshes[] = {apply_motion(rigid, mp), apply_motion(rigid, mf)};
    model.evaluate(meshes, grads);

    for (int which = 0; which < 2; ++which) {
      const auto near = hinge_adjacent(meshes[which], cfg, opts.kink_margin + opts.step);
      const std::size_t nv = rigid.vertices().size();
      for (std::size_t coord = 0; coord < 2 * nv; ++coord) {
        if (near[coord]) {
          ++report.coordinates_excluded;
          continue;
        }
        auto shifted_at = [&](double delta) {
          MeshMotion a = mp;
          MeshMotion b = mf;
          Vec2& d = (which == 0 ? a : b).displacement()[coord / 2];
          (coord % 2 == 0 ? d.x : d.y) += delta;
          return std::array<MeshGrid, 2>{apply_motion(rigid, a), apply_motion(rigid, b)};
        };
        const auto lo = shifted_at(-opts.step);
        const auto hi = shifted_at(opts.step);
        if (label && appearance_sign_flips(image, *label, lo[which], hi[which], model.plan())) {
          ++report.coordinates_excluded;
          continue;
        }
        const double fd = (model.evaluate(hi).total - model.evaluate(lo).total) / (2.0 * opts.step);
        const Vec2 g = grads[which].displacement()[coord / 2];
        const double an = coord % 2 == 0 ? g.x : g.y;
        const double denom = std::max({std::abs(an), std::abs(fd), 1e-12});
        report.max_rel_error = std::max(report.max_rel_error, std::abs(an - fd) / denom);
        ++report.coordinates_checked;
      }
    }
    ++report.trials;
  }
  return report;
}

}  // namespace meshrect
