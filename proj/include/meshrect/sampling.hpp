#pragma once

#include <algorithm>

#include "meshrect/image.hpp"

namespace meshrect {

/// Bilinear sample of every channel at continuous position (px, py) with
/// edge clamping. `dx`/`dy` receive d(value)/d(px), d(value)/d(py) when set.
inline void sample_clamped(const ImageBuffer& img, double px, double py, double* value, double* dx = nullptr,
                           double* dy = nullptr) {
  const int w = img.width();
  const int h = img.height();
  const int c = img.channels();
  const BilinearTaps t = BilinearTaps::at(px, py, w, h);
  const int x0 = std::clamp(t.x0, 0, w - 1);
  const int x1 = std::clamp(t.x0 + 1, 0, w - 1);
  const int y0 = std::clamp(t.y0, 0, h - 1);
  const int y1 = std::clamp(t.y0 + 1, 0, h - 1);
  const double* d = img.data().data();
  const double* p00 = d + (static_cast<std::size_t>(y0) * w + x0) * c;
  const double* p10 = d + (static_cast<std::size_t>(y0) * w + x1) * c;
  const double* p01 = d + (static_cast<std::size_t>(y1) * w + x0) * c;
  const double* p11 = d + (static_cast<std::size_t>(y1) * w + x1) * c;
  const double fx = t.fx;
  const double fy = t.fy;
  for (int k = 0; k < c; ++k) {
    const double top = p00[k] + fx * (p10[k] - p00[k]);
    const double bot = p01[k] + fx * (p11[k] - p01[k]);
    value[k] = top + fy * (bot - top);
    if (dx) dx[k] = (1.0 - fy) * (p10[k] - p00[k]) + fy * (p11[k] - p01[k]);
    if (dy) dy[k] = bot - top;
  }
}

/// Bilinear sample of a mask where every tap outside the raster reads 0.
inline double sample_zero(const MaskBuffer& mask, double px, double py, double* dx = nullptr, double* dy = nullptr) {
  const int w = mask.width();
  const int h = mask.height();
  const BilinearTaps t = BilinearTaps::at(px, py, w, h);
  auto tap = [&](int x, int y) { return (x < 0 || y < 0 || x >= w || y >= h) ? 0.0 : mask.at(x, y); };
  const double v00 = tap(t.x0, t.y0);
  const double v10 = tap(t.x0 + 1, t.y0);
  const double v01 = tap(t.x0, t.y0 + 1);
  const double v11 = tap(t.x0 + 1, t.y0 + 1);
  const double top = v00 + t.fx * (v10 - v00);
  const double bot = v01 + t.fx * (v11 - v01);
  if (dx) *dx = (1.0 - t.fy) * (v10 - v00) + t.fy * (v11 - v01);
  if (dy) *dy = bot - top;
  return top + t.fy * (bot - top);
}

}  // namespace meshrect
