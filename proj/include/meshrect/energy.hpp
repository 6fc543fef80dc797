#pragma once

#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "meshrect/config.hpp"
#include "meshrect/features.hpp"
#include "meshrect/image.hpp"
#include "meshrect/mesh.hpp"
#include "meshrect/warp.hpp"

namespace meshrect {

/// Value of each objective term. `total` is
///   boundary + mesh_intra + mesh_inter
///   + omega_a * content_appearance + omega_p * content_perception.
struct EnergyBreakdown {
  double boundary = 0.0;
  double mesh_intra = 0.0;
  double mesh_inter = 0.0;
  double content_appearance = 0.0;
  double content_perception = 0.0;
  double total = 0.0;
};

/// Guard added to the product of edge norms in the co-linearity penalty.
inline constexpr double kEdgeNormEpsilon = 1e-8;

// --- Individual terms. Lists of meshes are summed term by term. ---

/// Mean of (1 - warped mask) over the rigid raster.
double boundary_loss(const MaskBuffer& mask, const MeshGrid& mesh, const MeshGrid& rigid);

/// Hinge penalty on edge projections below alpha * W/V (horizontal) and
/// alpha * H/U (vertical), each normalized by its edge count.
double intra_grid_loss(std::span<const MeshGrid> meshes, const EnergyConfig& cfg);

/// Mean of 1 - cos over successive edge pairs along rows and columns.
double inter_grid_loss(std::span<const MeshGrid> meshes);

/// Mean absolute error between each warp and the label.
double appearance_loss(const ImageBuffer& image, std::span<const MeshGrid> meshes, const MeshGrid& rigid,
                       const ImageBuffer& label);

/// Mean squared feature distance between each warp and the label.
double perception_loss(const ImageBuffer& image, std::span<const MeshGrid> meshes, const MeshGrid& rigid,
                       const ImageBuffer& label, const FeatureExtractor& phi);

/// 1 - <e1,e2> / (|e1||e2| + eps). When `g1`/`g2` are set they receive the
/// partial derivatives with respect to e1 and e2.
double edge_pair_penalty(Vec2 e1, Vec2 e2, Vec2* g1 = nullptr, Vec2* g2 = nullptr);

/// Objective over a fixed stitched image, mask and optional label.
///
/// Holds the rigid warp plan and the label features so that repeated
/// evaluations during optimization only pay for the warps themselves.
class EnergyModel {
 public:
  /// `label` may be null (label-free mode: the content term is zero).
  /// Throws InvalidArgument on dimension mismatches or masks outside [0, 1].
  EnergyModel(ImageBuffer image, MaskBuffer mask, MeshGrid rigid, std::optional<ImageBuffer> label,
              EnergyConfig cfg, std::shared_ptr<const FeatureExtractor> phi = default_feature_extractor());

  EnergyBreakdown evaluate(std::span<const MeshGrid> meshes) const;
  /// Also writes d(total)/d(vertex) of every mesh into `grads` (resized to match).
  EnergyBreakdown evaluate(std::span<const MeshGrid> meshes, std::vector<MeshMotion>& grads) const;

  const ImageBuffer& image() const { return image_; }
  const MaskBuffer& mask() const { return mask_; }
  const MeshGrid& rigid() const { return rigid_; }
  const RigidWarpPlan& plan() const { return plan_; }
  const EnergyConfig& config() const { return cfg_; }
  bool has_label() const { return label_.has_value(); }
  const ImageBuffer& label() const { return *label_; }

 private:
  struct RasterTerms {
    double boundary = 0.0;
    double appearance = 0.0;
    double perception = 0.0;
  };
  RasterTerms raster_terms(const MeshGrid& mesh, MeshMotion* grad) const;
  EnergyBreakdown run(std::span<const MeshGrid> meshes, std::vector<MeshMotion>* grads) const;

  ImageBuffer image_;
  MaskBuffer mask_;
  MeshGrid rigid_;
  std::optional<ImageBuffer> label_;
  EnergyConfig cfg_;
  std::shared_ptr<const FeatureExtractor> phi_;
  RigidWarpPlan plan_;
  std::vector<double> label_features_;
};

/// Energy of the primary and final meshes together.
EnergyBreakdown total_energy(const ImageBuffer& image, const MaskBuffer& mask, const MeshGrid& m_p,
                             const MeshGrid& m_f, const MeshGrid& rigid, const ImageBuffer* label,
                             const EnergyConfig& cfg, const FeatureExtractor& phi);

/// d(total_energy)/d(motion) for both meshes, motions relative to `rigid`.
std::pair<MeshMotion, MeshMotion> energy_gradient(const ImageBuffer& image, const MaskBuffer& mask,
                                                  const MeshMotion& motion_p, const MeshMotion& motion_f,
                                                  const MeshGrid& rigid, const ImageBuffer* label,
                                                  const EnergyConfig& cfg, const FeatureExtractor& phi);

}  // namespace meshrect
