#include "meshrect/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "meshrect/error.hpp"
#include "meshrect/warp.hpp"

namespace meshrect {
namespace {

using Objective = std::function<EnergyBreakdown(const MeshMotion&, MeshMotion&)>;

StageResult descend(const Objective& f, MeshMotion x, const OptimizerConfig& o) {
  StageResult res;
  MeshMotion g;
  EnergyBreakdown e = f(x, g);
  res.history.push_back(e);

  const std::size_t n = x.size();
  std::vector<Vec2> m(n), v(n);
  int t = 0;
  int quiet = 0;
  MeshMotion trial = x;
  MeshMotion trial_g;
  for (int iter = 1; iter <= o.max_iters; ++iter) {
    ++t;
    const double c1 = 1.0 - std::pow(o.beta1, t);
    const double c2 = 1.0 - std::pow(o.beta2, t);
    const auto gd = g.displacement();
    std::vector<Vec2> dir(n);
    for (std::size_t k = 0; k < n; ++k) {
      m[k] = o.beta1 * m[k] + (1.0 - o.beta1) * gd[k];
      v[k] = {o.beta2 * v[k].x + (1.0 - o.beta2) * gd[k].x * gd[k].x,
              o.beta2 * v[k].y + (1.0 - o.beta2) * gd[k].y * gd[k].y};
      dir[k] = {(m[k].x / c1) / (std::sqrt(v[k].x / c2) + o.epsilon),
                (m[k].y / c1) / (std::sqrt(v[k].y / c2) + o.epsilon)};
    }

    bool accepted = false;
    EnergyBreakdown trial_e;
    double step = o.step;
    for (int h = 0; h <= o.max_halvings; ++h, step *= 0.5) {
      const auto xd = x.displacement();
      auto td = trial.displacement();
      for (std::size_t k = 0; k < n; ++k) td[k] = xd[k] - step * dir[k];
      trial_e = f(trial, trial_g);
      if (trial_e.total <= e.total) {
        accepted = true;
        break;
      }
    }

    double delta = 0.0;
    if (accepted) {
      delta = e.total - trial_e.total;
      std::swap(x, trial);
      std::swap(g, trial_g);
      e = trial_e;
      res.history.push_back(e);
    } else {
      std::fill(m.begin(), m.end(), Vec2{});
      std::fill(v.begin(), v.end(), Vec2{});
      t = 0;
    }
    res.iterations = iter;
    quiet = std::abs(delta) < o.tol ? quiet + 1 : 0;
    if (quiet >= o.patience) {
      res.converged = true;
      break;
    }
  }
  res.motion = std::move(x);
  return res;
}

}  // namespace

StageResult solve_primary(const EnergyModel& model) {
  const MeshGrid& rigid = model.rigid();
  std::vector<MeshMotion> grads;
  const Objective f = [&](const MeshMotion& motion, MeshMotion& grad) {
    const MeshGrid meshes[] = {apply_motion(rigid, motion)};
    const EnergyBreakdown e = model.evaluate(meshes, grads);
    grad = std::move(grads[0]);
    return e;
  };
  return descend(f, MeshMotion::zeros_like(rigid), model.config().optimizer);
}

StageResult solve_residual(const EnergyModel& model, const MeshMotion& motion_p) {
  const MeshGrid& rigid = model.rigid();
  const MeshGrid m_p = apply_motion(rigid, motion_p);
  std::vector<MeshMotion> grads;
  const Objective f = [&](const MeshMotion& residual, MeshMotion& grad) {
    const MeshGrid meshes[] = {m_p, apply_motion(rigid, motion_p + residual)};
    const EnergyBreakdown e = model.evaluate(meshes, grads);
    grad = std::move(grads[1]);
    return e;
  };
  StageResult res = descend(f, MeshMotion::zeros_like(rigid), model.config().optimizer);
  res.motion = motion_p + res.motion;
  return res;
}

RectangleResult rectangle_image(const ImageBuffer& image, const MaskBuffer& mask, const EnergyConfig& cfg,
                                const ImageBuffer* label, std::shared_ptr<const FeatureExtractor> phi) {
  cfg.validate();
  image.require_finite();
  MeshGrid rigid = build_rigid_mesh(image.width(), image.height(), cfg.mesh_u, cfg.mesh_v);
  const EnergyModel model(image, mask, rigid, label ? std::optional<ImageBuffer>(*label) : std::nullopt, cfg,
                          std::move(phi));

  StageResult primary = solve_primary(model);
  StageResult residual = solve_residual(model, primary.motion);

  RectangleResult out;
  out.solve.motion_p = std::move(primary.motion);
  out.solve.motion_f = std::move(residual.motion);
  out.solve.primary_history = std::move(primary.history);
  out.solve.residual_history = std::move(residual.history);
  out.solve.primary_converged = primary.converged;
  out.solve.residual_converged = residual.converged;
  out.solve.converged = primary.converged && residual.converged;
  out.solve.iterations_used = primary.iterations + residual.iterations;
  out.final_mesh = apply_motion(rigid, out.solve.motion_f);
  out.image = warp_to_rigid(image, out.final_mesh, model.plan());
  out.rigid = std::move(rigid);
  return out;
}

ImageBuffer resize_area(const ImageBuffer& image, int width, int height) {
  if (width <= 0 || height <= 0) {
    throw InvalidArgument("resize target must be non-empty");
  }
  // Separable box filter with fractional source coverage.
  auto weights = [](int src, int dst) {
    std::vector<std::vector<std::pair<int, double>>> w(dst);
    const double scale = static_cast<double>(src) / dst;
    for (int i = 0; i < dst; ++i) {
      const double a = i * scale;
      const double b = (i + 1) * scale;
      for (int s = static_cast<int>(std::floor(a)); s < std::min(src, static_cast<int>(std::ceil(b))); ++s) {
        const double overlap = std::min<double>(b, s + 1) - std::max<double>(a, s);
        if (overlap > 0.0) w[i].emplace_back(s, overlap / scale);
      }
    }
    return w;
  };
  const auto wx = weights(image.width(), width);
  const auto wy = weights(image.height(), height);
  const int c = image.channels();
  ImageBuffer tmp(width, image.height(), c);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < width; ++x) {
      for (const auto& [s, w] : wx[x]) {
        for (int ch = 0; ch < c; ++ch) tmp.at(x, y, ch) += w * image.at(s, y, ch);
      }
    }
  }
  ImageBuffer out(width, height, c);
  for (int y = 0; y < height; ++y) {
    for (const auto& [s, w] : wy[y]) {
      for (int x = 0; x < width; ++x) {
        for (int ch = 0; ch < c; ++ch) out.at(x, y, ch) += w * tmp.at(x, s, ch);
      }
    }
  }
  return out;
}

RectangleResult rectangle_image_downsampled(const ImageBuffer& image, const MaskBuffer& mask,
                                            const EnergyConfig& cfg, const ImageBuffer* label,
                                            std::shared_ptr<const FeatureExtractor> phi, double max_pixels) {
  const double pixels = static_cast<double>(image.width()) * image.height();
  if (pixels <= max_pixels) {
    return rectangle_image(image, mask, cfg, label, std::move(phi));
  }
  const double f = std::sqrt(max_pixels / pixels);
  const int w = std::max(1, static_cast<int>(std::floor(image.width() * f)));
  const int h = std::max(1, static_cast<int>(std::floor(image.height() * f)));

  const ImageBuffer small = resize_area(image, w, h);
  const ImageBuffer mask_img(mask.width(), mask.height(), 1, std::vector<double>(mask.data().begin(), mask.data().end()));
  const ImageBuffer small_mask_img = resize_area(mask_img, w, h);
  const MaskBuffer small_mask =
      MaskBuffer(w, h, std::vector<double>(small_mask_img.data().begin(), small_mask_img.data().end())).binarized();
  std::optional<ImageBuffer> small_label;
  if (label) small_label = resize_area(*label, w, h);

  EnergyConfig small_cfg = cfg;
  small_cfg.image_w = w;
  small_cfg.image_h = h;
  RectangleResult low = rectangle_image(small, small_mask, small_cfg, small_label ? &*small_label : nullptr,
                                        std::move(phi));

  const double sx = static_cast<double>(image.width()) / w;
  const double sy = static_cast<double>(image.height()) / h;
  RectangleResult out;
  out.solve = std::move(low.solve);
  out.solve.motion_p = out.solve.motion_p.scaled(sx, sy);
  out.solve.motion_f = out.solve.motion_f.scaled(sx, sy);
  out.rigid = build_rigid_mesh(image.width(), image.height(), cfg.mesh_u, cfg.mesh_v);
  out.final_mesh = apply_motion(out.rigid, out.solve.motion_f);
  out.image = warp_to_rigid(image, out.final_mesh, out.rigid);
  return out;
}

}  // namespace meshrect
