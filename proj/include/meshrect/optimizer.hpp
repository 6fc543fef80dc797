#pragma once

#include <memory>
#include <vector>

#include "meshrect/config.hpp"
#include "meshrect/energy.hpp"
#include "meshrect/features.hpp"
#include "meshrect/image.hpp"
#include "meshrect/mesh.hpp"

namespace meshrect {

/// Outcome of one descent stage.
struct StageResult {
  MeshMotion motion;
  std::vector<EnergyBreakdown> history;  ///< accepted iterates, starting point first
  bool converged = false;
  int iterations = 0;
};

struct SolveResult {
  MeshMotion motion_p;
  MeshMotion motion_f;
  std::vector<EnergyBreakdown> primary_history;   ///< single-mesh energies of m_p
  std::vector<EnergyBreakdown> residual_history;  ///< joint energies of (m_p, m_f)
  bool primary_converged = false;
  bool residual_converged = false;
  bool converged = false;  ///< both stages converged
  int iterations_used = 0;
};

/// Minimizes the single-mesh energy of rigid + motion from zero motion.
///
/// Moment-based steps (Adam-style) scaled by `optimizer.step` pixels. A step
/// that raises the energy is halved up to `max_halvings` times; if none is
/// accepted the iterate stays put and the moment estimates restart.
StageResult solve_primary(const EnergyModel& model);

/// Refines `motion_p` by a residual r from zero; m_p stays frozen and the
/// joint energy of (m_p, m_p + r) is minimized. Returns motion_p + r.
StageResult solve_residual(const EnergyModel& model, const MeshMotion& motion_p);

struct RectangleResult {
  ImageBuffer image;
  SolveResult solve;
  MeshGrid rigid;
  MeshGrid final_mesh;
};

/// Full two-stage rectangling of a stitched image on a rigid grid of its
/// own raster size. `label` enables the content term.
RectangleResult rectangle_image(const ImageBuffer& image, const MaskBuffer& mask, const EnergyConfig& cfg,
                                const ImageBuffer* label = nullptr,
                                std::shared_ptr<const FeatureExtractor> phi = default_feature_extractor());

/// As rectangle_image, but solves on a copy downsampled to at most
/// `max_pixels` and scales the motions back up before warping the full
/// image. A no-op below the threshold.
RectangleResult rectangle_image_downsampled(const ImageBuffer& image, const MaskBuffer& mask,
                                            const EnergyConfig& cfg, const ImageBuffer* label = nullptr,
                                            std::shared_ptr<const FeatureExtractor> phi = default_feature_extractor(),
                                            double max_pixels = 1e6);

/// Area-weighted resize used by the downsampling path.
ImageBuffer resize_area(const ImageBuffer& image, int width, int height);

}  // namespace meshrect
