#include "meshrect/features.hpp"

#include <algorithm>
#include <cmath>

#include "meshrect/error.hpp"

namespace meshrect {

std::vector<double> IdentityExtractor::extract(const ImageBuffer& image) const {
  return {image.data().begin(), image.data().end()};
}

void IdentityExtractor::backprop(const ImageBuffer& image, std::span<const double> feature_grad,
                                 ImageBuffer& image_grad) const {
  if (feature_grad.size() != image.data().size() || image_grad.data().size() != image.data().size()) {
    throw InvalidArgument("feature gradient shape mismatch");
  }
  auto g = image_grad.data();
  for (std::size_t k = 0; k < g.size(); ++k) {
    g[k] += feature_grad[k];
  }
}

namespace {

std::vector<double> gaussian_kernel(double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + r];
  }
  for (double& v : k) v /= sum;
  return k;
}

int half(int n) { return (n + 1) / 2; }

struct Plane {
  int w = 0;
  int h = 0;
  std::vector<double> v;
  double& at(int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; }
  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

// Blur with edge clamping, keeping only even rows and columns.
Plane blur_subsample(const Plane& in, const std::vector<double>& k) {
  const int r = static_cast<int>(k.size() / 2);
  Plane tmp{half(in.w), in.h, std::vector<double>(static_cast<std::size_t>(half(in.w)) * in.h)};
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < tmp.w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        acc += k[i + r] * in.at(std::clamp(2 * x + i, 0, in.w - 1), y);
      }
      tmp.at(x, y) = acc;
    }
  }
  Plane out{tmp.w, half(in.h), std::vector<double>(static_cast<std::size_t>(tmp.w) * half(in.h))};
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        acc += k[i + r] * tmp.at(x, std::clamp(2 * y + i, 0, in.h - 1));
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

// Adjoint of blur_subsample: scatters `g_out` back onto a (w x h) plane.
Plane blur_subsample_adjoint(const Plane& g_out, int w, int h, const std::vector<double>& k) {
  const int r = static_cast<int>(k.size() / 2);
  Plane tmp{g_out.w, h, std::vector<double>(static_cast<std::size_t>(g_out.w) * h, 0.0)};
  for (int y = 0; y < g_out.h; ++y) {
    for (int x = 0; x < g_out.w; ++x) {
      const double g = g_out.at(x, y);
      for (int i = -r; i <= r; ++i) {
        tmp.at(x, std::clamp(2 * y + i, 0, h - 1)) += k[i + r] * g;
      }
    }
  }
  Plane in{w, h, std::vector<double>(static_cast<std::size_t>(w) * h, 0.0)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < tmp.w; ++x) {
      const double g = tmp.at(x, y);
      for (int i = -r; i <= r; ++i) {
        in.at(std::clamp(2 * x + i, 0, w - 1), y) += k[i + r] * g;
      }
    }
  }
  return in;
}

void append_level(const Plane& p, std::vector<double>& out) {
  out.insert(out.end(), p.v.begin(), p.v.end());
  for (int y = 0; y < p.h; ++y) {
    for (int x = 0; x < p.w; ++x) {
      out.push_back(0.5 * (p.at(std::min(x + 1, p.w - 1), y) - p.at(std::max(x - 1, 0), y)));
    }
  }
  for (int y = 0; y < p.h; ++y) {
    for (int x = 0; x < p.w; ++x) {
      out.push_back(0.5 * (p.at(x, std::min(y + 1, p.h - 1)) - p.at(x, std::max(y - 1, 0))));
    }
  }
}

// Adjoint of append_level for the slice of feature gradients at `g`.
Plane level_adjoint(const double* g, int w, int h) {
  const std::size_t n = static_cast<std::size_t>(w) * h;
  Plane p{w, h, std::vector<double>(g, g + n)};
  const double* gx = g + n;
  const double* gy = g + 2 * n;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double a = 0.5 * gx[static_cast<std::size_t>(y) * w + x];
      p.at(std::min(x + 1, w - 1), y) += a;
      p.at(std::max(x - 1, 0), y) -= a;
      const double b = 0.5 * gy[static_cast<std::size_t>(y) * w + x];
      p.at(x, std::min(y + 1, h - 1)) += b;
      p.at(x, std::max(y - 1, 0)) -= b;
    }
  }
  return p;
}

}  // namespace

PyramidExtractor::PyramidExtractor() : PyramidExtractor({1.0, 2.0, 4.0}) {}

PyramidExtractor::PyramidExtractor(std::vector<double> sigmas) {
  if (sigmas.empty()) {
    throw InvalidArgument("pyramid needs at least one level");
  }
  for (double s : sigmas) {
    if (!(s > 0.0)) throw InvalidArgument("pyramid sigma must be positive");
    kernels_.push_back(gaussian_kernel(s));
  }
}

std::size_t PyramidExtractor::feature_count(int width, int height) const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < kernels_.size(); ++l) {
    width = half(width);
    height = half(height);
    n += 3 * static_cast<std::size_t>(width) * height;
  }
  return n;
}

std::vector<double> PyramidExtractor::extract(const ImageBuffer& image) const {
  std::vector<double> out;
  out.reserve(feature_count(image.width(), image.height()));
  Plane p{image.width(), image.height(), image.to_gray()};
  for (const auto& k : kernels_) {
    p = blur_subsample(p, k);
    append_level(p, out);
  }
  return out;
}

void PyramidExtractor::backprop(const ImageBuffer& image, std::span<const double> feature_grad,
                                ImageBuffer& image_grad) const {
  if (feature_grad.size() != feature_count(image.width(), image.height()) ||
      image_grad.data().size() != image.data().size()) {
    throw InvalidArgument("feature gradient shape mismatch");
  }
  std::vector<std::pair<int, int>> dims{{image.width(), image.height()}};
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (std::size_t l = 0; l < kernels_.size(); ++l) {
    dims.emplace_back(half(dims.back().first), half(dims.back().second));
    offsets.push_back(off);
    off += 3 * static_cast<std::size_t>(dims.back().first) * dims.back().second;
  }

  // Walk the pyramid from the coarsest level back to full resolution.
  Plane g{dims.back().first, dims.back().second, {}};
  g.v.assign(static_cast<std::size_t>(g.w) * g.h, 0.0);
  for (std::size_t l = kernels_.size(); l-- > 0;) {
    const auto [w, h] = dims[l + 1];
    Plane local = level_adjoint(feature_grad.data() + offsets[l], w, h);
    for (std::size_t k = 0; k < local.v.size(); ++k) {
      local.v[k] += g.v[k];
    }
    g = blur_subsample_adjoint(local, dims[l].first, dims[l].second, kernels_[l]);
  }

  auto out = image_grad.data();
  if (image.channels() == 1) {
    for (std::size_t k = 0; k < g.v.size(); ++k) out[k] += g.v[k];
  } else {
    for (std::size_t k = 0; k < g.v.size(); ++k) {
      out[3 * k] += kLumaR * g.v[k];
      out[3 * k + 1] += kLumaG * g.v[k];
      out[3 * k + 2] += kLumaB * g.v[k];
    }
  }
}

std::shared_ptr<const FeatureExtractor> default_feature_extractor() {
  static const auto instance = std::make_shared<const PyramidExtractor>();
  return instance;
}

}  // namespace meshrect
