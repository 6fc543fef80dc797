#pragma once

#include <memory>
#include <span>
#include <vector>

#include "meshrect/image.hpp"

namespace meshrect {

/// Deterministic differentiable map from an image to a flat feature stack.
///
/// Implementations must be pure: `extract` may be called concurrently and
/// `backprop` must return the exact adjoint of `extract` at `image`.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;

  virtual std::vector<double> extract(const ImageBuffer& image) const = 0;

  /// Accumulates d(loss)/d(image) into `image_grad` given d(loss)/d(features).
  /// `image_grad` has the shape of `image`.
  virtual void backprop(const ImageBuffer& image, std::span<const double> feature_grad,
                        ImageBuffer& image_grad) const = 0;
};

/// Features are the raw pixel values; perception loss degenerates to MSE.
class IdentityExtractor final : public FeatureExtractor {
 public:
  std::vector<double> extract(const ImageBuffer& image) const override;
  void backprop(const ImageBuffer& image, std::span<const double> feature_grad,
                ImageBuffer& image_grad) const override;
};

/// Built-in stand-in for a deep feature layer.
///
/// Gray intensity is repeatedly Gaussian blurred (sigma 1, 2, 4) and
/// subsampled by 2; each level contributes its intensity plus central x/y
/// differences. The map is linear, so its adjoint is exact.
class PyramidExtractor final : public FeatureExtractor {
 public:
  PyramidExtractor();
  explicit PyramidExtractor(std::vector<double> sigmas);

  std::vector<double> extract(const ImageBuffer& image) const override;
  void backprop(const ImageBuffer& image, std::span<const double> feature_grad,
                ImageBuffer& image_grad) const override;

  /// Number of features produced for a width x height input.
  std::size_t feature_count(int width, int height) const;

 private:
  std::vector<std::vector<double>> kernels_;
};

std::shared_ptr<const FeatureExtractor> default_feature_extractor();

}  // namespace meshrect
