#include "meshrect/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "meshrect/config.hpp"
#include "meshrect/error.hpp"

namespace meshrect {

ImageBuffer::ImageBuffer(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width <= 0 || height <= 0 || (channels != 1 && channels != 3)) {
    throw InvalidArgument("image needs positive size and 1 or 3 channels");
  }
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

ImageBuffer::ImageBuffer(int width, int height, int channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  if (width <= 0 || height <= 0 || (channels != 1 && channels != 3)) {
    throw InvalidArgument("image needs positive size and 1 or 3 channels");
  }
  if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
    throw InvalidArgument("image data length does not match width*height*channels");
  }
}

void ImageBuffer::require_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) {
      throw InvalidArgument("image contains a non-finite value");
    }
  }
}

std::vector<double> ImageBuffer::to_gray() const {
  if (channels_ == 1) {
    return data_;
  }
  std::vector<double> g(pixel_count());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double* p = &data_[3 * k];
    g[k] = kLumaR * p[0] + kLumaG * p[1] + kLumaB * p[2];
  }
  return g;
}

MaskBuffer::MaskBuffer(int width, int height, double fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) {
    throw InvalidArgument("mask needs positive size");
  }
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

MaskBuffer::MaskBuffer(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width <= 0 || height <= 0) {
    throw InvalidArgument("mask needs positive size");
  }
  if (data_.size() != static_cast<std::size_t>(width) * height) {
    throw InvalidArgument("mask data length does not match width*height");
  }
}

double MaskBuffer::mean() const {
  if (data_.empty()) return 0.0;
  return std::accumulate(data_.begin(), data_.end(), 0.0) / static_cast<double>(data_.size());
}

MaskBuffer MaskBuffer::binarized() const {
  MaskBuffer out = *this;
  for (double& v : out.data_) {
    v = v >= 0.5 ? 1.0 : 0.0;
  }
  return out;
}

MaskBuffer MaskBuffer::eroded(int radius) const {
  const MaskBuffer bin = binarized();
  if (radius <= 0) return bin;
  // Separable min filter; outside the raster counts as void.
  MaskBuffer rows(width_, height_);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      double m = 1.0;
      for (int k = -radius; k <= radius && m > 0.0; ++k) {
        const int xx = x + k;
        m = (xx < 0 || xx >= width_) ? 0.0 : std::min(m, bin.at(xx, y));
      }
      rows.at(x, y) = m;
    }
  }
  MaskBuffer out(width_, height_);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      double m = 1.0;
      for (int k = -radius; k <= radius && m > 0.0; ++k) {
        const int yy = y + k;
        m = (yy < 0 || yy >= height_) ? 0.0 : std::min(m, rows.at(x, yy));
      }
      out.at(x, y) = m;
    }
  }
  return out;
}

void EnergyConfig::validate() const {
  if (mesh_u < 1 || mesh_v < 1) {
    throw InvalidArgument("mesh resolution must be at least 1x1");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidArgument("alpha must lie in (0, 1)");
  }
  if (!(omega_a >= 0.0) || !(omega_p >= 0.0)) {
    throw InvalidArgument("content weights must be non-negative");
  }
  if (image_w <= 0 || image_h <= 0) {
    throw InvalidArgument("image size must be positive");
  }
  const auto& o = optimizer;
  if (!(o.step > 0.0) || o.max_iters < 0 || !(o.tol >= 0.0) || o.patience < 1 || o.max_halvings < 0) {
    throw InvalidArgument("invalid optimizer settings");
  }
}

}  // namespace meshrect
