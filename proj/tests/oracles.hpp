#pragma once

// Straightforward re-implementations used as test oracles. They share no
// code with the library beyond the data containers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "meshrect/image.hpp"
#include "meshrect/mesh.hpp"
#include "meshrect/synth.hpp"

namespace oracle {

using meshrect::ImageBuffer;
using meshrect::MaskBuffer;
using meshrect::MeshGrid;
using meshrect::Vec2;

// Bilinear read with coordinates clamped to the pixel-center hull.
inline double sample_clamp(const ImageBuffer& img, double px, double py, int c) {
  const double u = std::clamp(px - 0.5, 0.0, img.width() - 1.0);
  const double v = std::clamp(py - 0.5, 0.0, img.height() - 1.0);
  const int x0 = static_cast<int>(std::floor(u));
  const int y0 = static_cast<int>(std::floor(v));
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double a = u - x0;
  const double b = v - y0;
  return (1 - a) * (1 - b) * img.at(x0, y0, c) + a * (1 - b) * img.at(x1, y0, c) + (1 - a) * b * img.at(x0, y1, c) +
         a * b * img.at(x1, y1, c);
}

// Bilinear read where pixels outside the raster are 0.
inline double sample_zero(const MaskBuffer& m, double px, double py) {
  const double u = px - 0.5;
  const double v = py - 0.5;
  const int x0 = static_cast<int>(std::floor(u));
  const int y0 = static_cast<int>(std::floor(v));
  const double a = u - x0;
  const double b = v - y0;
  auto tap = [&](int x, int y) { return (x < 0 || y < 0 || x >= m.width() || y >= m.height()) ? 0.0 : m.at(x, y); };
  return (1 - a) * (1 - b) * tap(x0, y0) + a * (1 - b) * tap(x0 + 1, y0) + (1 - a) * b * tap(x0, y0 + 1) +
         a * b * tap(x0 + 1, y0 + 1);
}

// Where output pixel (x, y) of a w x h rigid grid samples the source mesh.
inline Vec2 source_point(const MeshGrid& src, int w, int h, int x, int y) {
  const double cw = static_cast<double>(w) / src.cells_v();
  const double ch = static_cast<double>(h) / src.cells_u();
  const double px = x + 0.5;
  const double py = y + 0.5;
  const int j = std::min(static_cast<int>(px / cw), static_cast<int>(src.cells_v()) - 1);
  const int i = std::min(static_cast<int>(py / ch), static_cast<int>(src.cells_u()) - 1);
  const double s = px / cw - j;
  const double t = py / ch - i;
  const Vec2 a = src.at(i, j);
  const Vec2 b = src.at(i, j + 1);
  const Vec2 c = src.at(i + 1, j);
  const Vec2 d = src.at(i + 1, j + 1);
  return {(1 - s) * (1 - t) * a.x + s * (1 - t) * b.x + (1 - s) * t * c.x + s * t * d.x,
          (1 - s) * (1 - t) * a.y + s * (1 - t) * b.y + (1 - s) * t * c.y + s * t * d.y};
}

inline ImageBuffer warp(const ImageBuffer& img, const MeshGrid& src) {
  ImageBuffer out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const Vec2 p = source_point(src, img.width(), img.height(), x, y);
      for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = sample_clamp(img, p.x, p.y, c);
    }
  }
  return out;
}

inline MaskBuffer warp_mask(const MaskBuffer& m, const MeshGrid& src) {
  MaskBuffer out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      const Vec2 p = source_point(src, m.width(), m.height(), x, y);
      out.at(x, y) = sample_zero(m, p.x, p.y);
    }
  }
  return out;
}

inline std::vector<double> luma(const ImageBuffer& img) {
  std::vector<double> g(img.pixel_count());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const std::size_t k = static_cast<std::size_t>(y) * img.width() + x;
      g[k] = img.channels() == 1 ? img.at(x, y, 0)
                                 : 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
    }
  }
  return g;
}

// Window-by-window SSIM with the 11x11, sigma 1.5 Gaussian.
inline double ssim(const ImageBuffer& a, const ImageBuffer& b) {
  const int w = a.width();
  const int h = a.height();
  const auto ga = luma(a);
  const auto gb = luma(b);
  double kernel[11][11];
  double ks = 0;
  for (int i = 0; i < 11; ++i) {
    for (int j = 0; j < 11; ++j) {
      kernel[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
      ks += kernel[i][j];
    }
  }
  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;
  double total = 0;
  int n = 0;
  for (int y = 0; y + 11 <= h; ++y) {
    for (int x = 0; x + 11 <= w; ++x) {
      double ma = 0, mb = 0;
      for (int i = 0; i < 11; ++i) {
        for (int j = 0; j < 11; ++j) {
          const std::size_t k = static_cast<std::size_t>(y + i) * w + x + j;
          ma += kernel[i][j] / ks * ga[k];
          mb += kernel[i][j] / ks * gb[k];
        }
      }
      double va = 0, vb = 0, cov = 0;
      for (int i = 0; i < 11; ++i) {
        for (int j = 0; j < 11; ++j) {
          const std::size_t k = static_cast<std::size_t>(y + i) * w + x + j;
          va += kernel[i][j] / ks * (ga[k] - ma) * (ga[k] - ma);
          vb += kernel[i][j] / ks * (gb[k] - mb) * (gb[k] - mb);
          cov += kernel[i][j] / ks * (ga[k] - ma) * (gb[k] - mb);
        }
      }
      total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++n;
    }
  }
  return total / n;
}

// Uniform random image in [0, 1].
inline ImageBuffer noise_image(int w, int h, int channels, std::uint64_t seed) {
  meshrect::Rng rng(seed);
  ImageBuffer img(w, h, channels);
  for (double& v : img.data()) v = rng.uniform();
  return img;
}

// Rigid grid with every vertex jittered by up to `amp` pixels, keeping a
// smooth large-scale bend so cells stay unfolded.
inline MeshGrid smooth_random_mesh(double w, double h, std::size_t u, std::size_t v, double amp, std::uint64_t seed) {
  meshrect::Rng rng(seed);
  const double ax = rng.uniform(-amp, amp);
  const double ay = rng.uniform(-amp, amp);
  const double ph = rng.uniform(0.0, 6.283);
  std::vector<Vec2> verts;
  for (std::size_t i = 0; i <= u; ++i) {
    for (std::size_t j = 0; j <= v; ++j) {
      const double x = j * w / v;
      const double y = i * h / u;
      verts.push_back({x + ax * std::sin(3.0 * y / h + ph) + rng.uniform(-amp, amp) / 4,
                       y + ay * std::cos(3.0 * x / w + ph) + rng.uniform(-amp, amp) / 4});
    }
  }
  return {u + 1, v + 1, std::move(verts)};
}

}  // namespace oracle
