#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace meshrect {

/// Interleaved row-major raster of intensities, nominally in [0, 1].
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int width, int height, int channels, double fill = 0.0);
  ImageBuffer(int width, int height, int channels, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  double& at(int x, int y, int c) { return data_[index(x, y, c)]; }
  double at(int x, int y, int c) const { return data_[index(x, y, c)]; }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  /// Throws InvalidArgument on any non-finite value.
  void require_finite() const;
  /// Luma (0.299, 0.587, 0.114) for three channels, copy for one.
  std::vector<double> to_gray() const;

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Single-channel validity raster: 1 marks content, 0 marks void.
class MaskBuffer {
 public:
  MaskBuffer() = default;
  MaskBuffer(int width, int height, double fill = 0.0);
  MaskBuffer(int width, int height, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return data_.size(); }

  double& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  double mean() const;
  /// Values >= 0.5 become 1, everything else 0.
  MaskBuffer binarized() const;
  /// Morphological erosion with a (2r+1)^2 square of binarized content.
  MaskBuffer eroded(int radius) const;

  friend bool operator==(const MaskBuffer&, const MaskBuffer&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Gray weights used for color-to-intensity conversion.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

/// Sample coordinates closer than this to a pixel-center lattice line are
/// snapped onto it.
inline constexpr double kLatticeSnap = 1e-9;

/// Bilinear tap layout for one continuous sample position.
///
/// Pixel (x, y) has its center at (x + 0.5, y + 0.5). At the last lattice
/// column/row the left-hand cell is chosen so derivatives at the raster edge
/// are taken from inside the raster.
struct BilinearTaps {
  int x0, y0;
  double fx, fy;

  static BilinearTaps at(double px, double py, int width, int height) {
    BilinearTaps t;
    locate(px - 0.5, width, t.x0, t.fx);
    locate(py - 0.5, height, t.y0, t.fy);
    return t;
  }

 private:
  static void locate(double u, int n, int& i0, double& f) {
    // Beyond one pixel outside the raster every sampling mode is flat.
    if (u < -1.5) u = -1.5;
    if (u > n + 0.5) u = n + 0.5;
    // Rounding noise must not move a lattice-aligned sample into the
    // neighbouring cell, where the one-sided derivative differs.
    const double r = std::round(u);
    if (std::abs(u - r) < kLatticeSnap) u = r;
    const double fl = std::floor(u);
    i0 = static_cast<int>(fl);
    f = u - fl;
    if (i0 == n - 1 && f == 0.0 && n >= 2) {
      i0 = n - 2;
      f = 1.0;
    }
  }
};

}  // namespace meshrect
