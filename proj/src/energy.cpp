#include "meshrect/energy.hpp"

#include <cmath>

#include "meshrect/error.hpp"
#include "meshrect/sampling.hpp"

namespace meshrect {
namespace {

// |W - R| below this is treated as an exact match when picking the
// subgradient, so rounding noise of an identity warp does not pick a side.
constexpr double kAbsDeadZone = 1e-12;

struct Thresholds {
  double horizontal;  // alpha * W / V
  double vertical;    // alpha * H / U
};

Thresholds intra_thresholds(const MeshGrid& mesh, const EnergyConfig& cfg) {
  return {cfg.alpha * cfg.image_w / static_cast<double>(mesh.cells_v()),
          cfg.alpha * cfg.image_h / static_cast<double>(mesh.cells_u())};
}

double intra_single(const MeshGrid& mesh, Thresholds thr, MeshMotion* grad) {
  const std::size_t rows = mesh.rows();
  const std::size_t cols = mesh.cols();
  const double nh = static_cast<double>(rows * (cols - 1));
  const double nv = static_cast<double>((rows - 1) * cols);
  double hor = 0.0;
  double ver = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j + 1 < cols; ++j) {
      const double proj = mesh.at(i, j + 1).x - mesh.at(i, j).x;
      if (proj < thr.horizontal) {
        hor += thr.horizontal - proj;
        if (grad) {
          grad->at(i, j + 1).x -= 1.0 / nh;
          grad->at(i, j).x += 1.0 / nh;
        }
      }
    }
  }
  for (std::size_t i = 0; i + 1 < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double proj = mesh.at(i + 1, j).y - mesh.at(i, j).y;
      if (proj < thr.vertical) {
        ver += thr.vertical - proj;
        if (grad) {
          grad->at(i + 1, j).y -= 1.0 / nv;
          grad->at(i, j).y += 1.0 / nv;
        }
      }
    }
  }
  return hor / nh + ver / nv;
}

double inter_single(const MeshGrid& mesh, MeshMotion* grad) {
  const std::size_t rows = mesh.rows();
  const std::size_t cols = mesh.cols();
  const std::size_t tuples = rows * (cols - 2) * (cols >= 3) + cols * (rows - 2) * (rows >= 3);
  if (tuples == 0) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(tuples);

  double sum = 0.0;
  // Chain a -> b -> c with e1 = b - a, e2 = c - b.
  auto visit = [&](std::size_t ia, std::size_t ja, std::size_t ib, std::size_t jb, std::size_t ic,
                   std::size_t jc) {
    Vec2 g1, g2;
    sum += edge_pair_penalty(mesh.at(ib, jb) - mesh.at(ia, ja), mesh.at(ic, jc) - mesh.at(ib, jb),
                             grad ? &g1 : nullptr, grad ? &g2 : nullptr);
    if (grad) {
      grad->at(ia, ja) += -inv_n * g1;
      grad->at(ib, jb) += inv_n * (g1 - g2);
      grad->at(ic, jc) += inv_n * g2;
    }
  };
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j + 2 < cols; ++j) {
      visit(i, j, i, j + 1, i, j + 2);
    }
  }
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i = 0; i + 2 < rows; ++i) {
      visit(i, j, i + 1, j, i + 2, j);
    }
  }
  return sum * inv_n;
}

void require_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height() || a.channels() != b.channels()) {
    throw InvalidArgument(std::string(what) + ": image dimensions do not match");
  }
}

std::shared_ptr<const FeatureExtractor> borrow(const FeatureExtractor& phi) {
  return {&phi, [](const FeatureExtractor*) {}};
}

}  // namespace

double edge_pair_penalty(Vec2 e1, Vec2 e2, Vec2* g1, Vec2* g2) {
  const double n1 = std::sqrt(dot(e1, e1));
  const double n2 = std::sqrt(dot(e2, e2));
  const double denom = n1 * n2 + kEdgeNormEpsilon;
  const double d = dot(e1, e2);
  if (g1 || g2) {
    // d/de1 of -d/denom = -(e2/denom - d * n2 * (e1/n1) / denom^2), zero-length edges contribute no direction.
    const double k = d / (denom * denom);
    const Vec2 u1 = n1 > 0.0 ? (1.0 / n1) * e1 : Vec2{};
    const Vec2 u2 = n2 > 0.0 ? (1.0 / n2) * e2 : Vec2{};
    if (g1) *g1 = (k * n2) * u1 - (1.0 / denom) * e2;
    if (g2) *g2 = (k * n1) * u2 - (1.0 / denom) * e1;
  }
  return 1.0 - d / denom;
}

double intra_grid_loss(std::span<const MeshGrid> meshes, const EnergyConfig& cfg) {
  double sum = 0.0;
  for (const MeshGrid& m : meshes) {
    sum += intra_single(m, intra_thresholds(m, cfg), nullptr);
  }
  return sum;
}

double inter_grid_loss(std::span<const MeshGrid> meshes) {
  double sum = 0.0;
  for (const MeshGrid& m : meshes) {
    sum += inter_single(m, nullptr);
  }
  return sum;
}

double boundary_loss(const MaskBuffer& mask, const MeshGrid& mesh, const MeshGrid& rigid) {
  const MaskBuffer warped = warp_mask_to_rigid(mask, mesh, rigid);
  double sum = 0.0;
  for (double v : warped.data()) sum += std::abs(1.0 - v);
  return sum / static_cast<double>(warped.pixel_count());
}

double appearance_loss(const ImageBuffer& image, std::span<const MeshGrid> meshes, const MeshGrid& rigid,
                       const ImageBuffer& label) {
  const RigidWarpPlan plan(rigid);
  double total = 0.0;
  for (const MeshGrid& m : meshes) {
    const ImageBuffer w = warp_to_rigid(image, m, plan);
    require_same_shape(w, label, "appearance_loss");
    double sum = 0.0;
    for (std::size_t k = 0; k < w.data().size(); ++k) sum += std::abs(w.data()[k] - label.data()[k]);
    total += sum / static_cast<double>(w.data().size());
  }
  return total;
}

double perception_loss(const ImageBuffer& image, std::span<const MeshGrid> meshes, const MeshGrid& rigid,
                       const ImageBuffer& label, const FeatureExtractor& phi) {
  const RigidWarpPlan plan(rigid);
  const std::vector<double> fl = phi.extract(label);
  double total = 0.0;
  for (const MeshGrid& m : meshes) {
    const ImageBuffer w = warp_to_rigid(image, m, plan);
    require_same_shape(w, label, "perception_loss");
    const std::vector<double> fw = phi.extract(w);
    double sum = 0.0;
    for (std::size_t k = 0; k < fw.size(); ++k) sum += (fw[k] - fl[k]) * (fw[k] - fl[k]);
    total += sum / static_cast<double>(fw.size());
  }
  return total;
}

EnergyModel::EnergyModel(ImageBuffer image, MaskBuffer mask, MeshGrid rigid, std::optional<ImageBuffer> label,
                         EnergyConfig cfg, std::shared_ptr<const FeatureExtractor> phi)
    : image_(std::move(image)),
      mask_(std::move(mask)),
      rigid_(std::move(rigid)),
      label_(std::move(label)),
      cfg_(cfg),
      phi_(std::move(phi)),
      plan_(rigid_) {
  if (mask_.width() != image_.width() || mask_.height() != image_.height()) {
    throw InvalidArgument("mask dimensions do not match the image");
  }
  if (plan_.width() != image_.width() || plan_.height() != image_.height()) {
    throw InvalidArgument("rigid mesh does not span the image raster");
  }
  for (double v : mask_.data()) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("mask values must lie in [0, 1]");
  }
  image_.require_finite();
  cfg_.image_w = plan_.width();
  cfg_.image_h = plan_.height();
  cfg_.mesh_u = rigid_.cells_u();
  cfg_.mesh_v = rigid_.cells_v();
  cfg_.validate();
  if (label_) {
    if (label_->width() != plan_.width() || label_->height() != plan_.height() ||
        label_->channels() != image_.channels()) {
      throw InvalidArgument("label dimensions do not match the rigid raster");
    }
    label_->require_finite();
    if (!phi_) throw InvalidArgument("a feature extractor is required with a label");
    label_features_ = phi_->extract(*label_);
  }
}

EnergyModel::RasterTerms EnergyModel::raster_terms(const MeshGrid& mesh, MeshMotion* grad) const {
  plan_.require_shape(mesh);
  const auto pixels = plan_.pixels();
  const auto verts = mesh.vertices();
  const std::size_t n = pixels.size();
  const int c = image_.channels();
  const double inv_n = 1.0 / static_cast<double>(n);
  RasterTerms out;

  // Forward pass: warped mask and image plus their position derivatives.
  std::vector<double> mdx, mdy;
  if (grad) {
    mdx.resize(n);
    mdy.resize(n);
  }
  std::optional<ImageBuffer> warped;
  std::vector<double> wdx, wdy;
  if (label_) {
    warped.emplace(plan_.width(), plan_.height(), c);
    if (grad) {
      wdx.resize(n * c);
      wdy.resize(n * c);
    }
  }
  double boundary = 0.0;
  double appearance = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 p = plan_.source_position(verts, pixels[k]);
    const double m = grad ? sample_zero(mask_, p.x, p.y, &mdx[k], &mdy[k]) : sample_zero(mask_, p.x, p.y);
    boundary += 1.0 - m;
    if (label_) {
      double* w = warped->data().data() + k * c;
      if (grad) {
        sample_clamped(image_, p.x, p.y, w, &wdx[k * c], &wdy[k * c]);
      } else {
        sample_clamped(image_, p.x, p.y, w);
      }
      const double* r = label_->data().data() + k * c;
      for (int ch = 0; ch < c; ++ch) appearance += std::abs(w[ch] - r[ch]);
    }
  }
  out.boundary = boundary * inv_n;
  if (!label_) {
    if (grad) {
      for (std::size_t k = 0; k < n; ++k) {
        const auto& px = pixels[k];
        const Vec2 g{-mdx[k] * inv_n, -mdy[k] * inv_n};
        Vec2* gv = grad->displacement().data() + px.corner;
        const std::size_t cols = mesh.cols();
        gv[0] += px.weight[0] * g;
        gv[1] += px.weight[1] * g;
        gv[cols] += px.weight[2] * g;
        gv[cols + 1] += px.weight[3] * g;
      }
    }
    return out;
  }
  const double inv_nc = 1.0 / static_cast<double>(n * c);
  out.appearance = appearance * inv_nc;

  const std::vector<double> fw = phi_->extract(*warped);
  const double inv_f = 1.0 / static_cast<double>(fw.size());
  double perception = 0.0;
  for (std::size_t k = 0; k < fw.size(); ++k) {
    const double d = fw[k] - label_features_[k];
    perception += d * d;
  }
  out.perception = perception * inv_f;
  if (!grad) return out;

  // d(total)/d(warped image) from the perception term, weighted by omega_p.
  ImageBuffer pgrad(plan_.width(), plan_.height(), c, 0.0);
  if (cfg_.omega_p != 0.0) {
    std::vector<double> fg(fw.size());
    for (std::size_t k = 0; k < fw.size(); ++k) {
      fg[k] = cfg_.omega_p * 2.0 * (fw[k] - label_features_[k]) * inv_f;
    }
    phi_->backprop(*warped, fg, pgrad);
  }

  const double wa = cfg_.omega_a * inv_nc;
  const std::size_t cols = mesh.cols();
  const double* wv = warped->data().data();
  const double* rv = label_->data().data();
  const double* pg = pgrad.data().data();
  for (std::size_t k = 0; k < n; ++k) {
    Vec2 g{-mdx[k] * inv_n, -mdy[k] * inv_n};
    for (int ch = 0; ch < c; ++ch) {
      const std::size_t idx = k * c + ch;
      const double diff = wv[idx] - rv[idx];
      const double sign = diff > kAbsDeadZone ? 1.0 : (diff < -kAbsDeadZone ? -1.0 : 0.0);
      const double a = wa * sign + pg[idx];
      g.x += a * wdx[idx];
      g.y += a * wdy[idx];
    }
    const auto& px = pixels[k];
    Vec2* gv = grad->displacement().data() + px.corner;
    gv[0] += px.weight[0] * g;
    gv[1] += px.weight[1] * g;
    gv[cols] += px.weight[2] * g;
    gv[cols + 1] += px.weight[3] * g;
  }
  return out;
}

EnergyBreakdown EnergyModel::run(std::span<const MeshGrid> meshes, std::vector<MeshMotion>* grads) const {
  if (meshes.empty()) {
    throw InvalidArgument("energy needs at least one mesh");
  }
  if (grads) {
    grads->clear();
    for (const MeshGrid& m : meshes) grads->push_back(MeshMotion::zeros_like(m));
  }
  EnergyBreakdown e;
  for (std::size_t k = 0; k < meshes.size(); ++k) {
    const MeshGrid& m = meshes[k];
    MeshMotion* g = grads ? &(*grads)[k] : nullptr;
    const RasterTerms r = raster_terms(m, g);
    e.boundary += r.boundary;
    e.content_appearance += r.appearance;
    e.content_perception += r.perception;
    e.mesh_intra += intra_single(m, intra_thresholds(m, cfg_), g);
    e.mesh_inter += inter_single(m, g);
  }
  e.total = e.boundary + e.mesh_intra + e.mesh_inter + cfg_.omega_a * e.content_appearance +
            cfg_.omega_p * e.content_perception;
  if (!std::isfinite(e.total)) {
    throw NumericalError("energy evaluated to a non-finite value");
  }
  return e;
}

EnergyBreakdown EnergyModel::evaluate(std::span<const MeshGrid> meshes) const { return run(meshes, nullptr); }

EnergyBreakdown EnergyModel::evaluate(std::span<const MeshGrid> meshes, std::vector<MeshMotion>& grads) const {
  return run(meshes, &grads);
}

EnergyBreakdown total_energy(const ImageBuffer& image, const MaskBuffer& mask, const MeshGrid& m_p,
                             const MeshGrid& m_f, const MeshGrid& rigid, const ImageBuffer* label,
                             const EnergyConfig& cfg, const FeatureExtractor& phi) {
  EnergyModel model(image, mask, rigid, label ? std::optional<ImageBuffer>(*label) : std::nullopt, cfg,
                    borrow(phi));
  const MeshGrid meshes[] = {m_p, m_f};
  return model.evaluate(meshes);
}

std::pair<MeshMotion, MeshMotion> energy_gradient(const ImageBuffer& image, const MaskBuffer& mask,
                                                  const MeshMotion& motion_p, const MeshMotion& motion_f,
                                                  const MeshGrid& rigid, const ImageBuffer* label,
                                                  const EnergyConfig& cfg, const FeatureExtractor& phi) {
  EnergyModel model(image, mask, rigid, label ? std::optional<ImageBuffer>(*label) : std::nullopt, cfg,
                    borrow(phi));
  const MeshGrid meshes[] = {apply_motion(rigid, motion_p), apply_motion(rigid, motion_f)};
  std::vector<MeshMotion> grads;
  model.evaluate(meshes, grads);
  return {std::move(grads[0]), std::move(grads[1])};
}

}  // namespace meshrect
