#include "meshrect/warp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>

#include "meshrect/error.hpp"
#include "meshrect/sampling.hpp"

namespace meshrect {

RigidWarpPlan::RigidWarpPlan(const MeshGrid& rigid) : rows_(rigid.rows()), cols_(rigid.cols()) {
  std::tie(width_, height_) = rigid_raster_size(rigid);
  const std::size_t u = rigid.cells_u();
  const std::size_t v = rigid.cells_v();
  const double cw = static_cast<double>(width_) / static_cast<double>(v);
  const double ch = static_cast<double>(height_) / static_cast<double>(u);

  std::vector<std::size_t> col_of(width_);
  std::vector<double> s_of(width_);
  for (int x = 0; x < width_; ++x) {
    const double px = x + 0.5;
    const std::size_t j = std::min(static_cast<std::size_t>(px / cw), v - 1);
    const double x0 = rigid.at(0, j).x;
    const double x1 = rigid.at(0, j + 1).x;
    col_of[x] = j;
    s_of[x] = (px - x0) / (x1 - x0);
  }
  pixels_.resize(static_cast<std::size_t>(width_) * height_);
  for (int y = 0; y < height_; ++y) {
    const double py = y + 0.5;
    const std::size_t i = std::min(static_cast<std::size_t>(py / ch), u - 1);
    const double y0 = rigid.at(i, 0).y;
    const double y1 = rigid.at(i + 1, 0).y;
    const double t = (py - y0) / (y1 - y0);
    for (int x = 0; x < width_; ++x) {
      const double s = s_of[x];
      Pixel& p = pixels_[static_cast<std::size_t>(y) * width_ + x];
      p.corner = static_cast<std::uint32_t>(i * cols_ + col_of[x]);
      p.weight = {(1.0 - s) * (1.0 - t), s * (1.0 - t), (1.0 - s) * t, s * t};
    }
  }
}

void RigidWarpPlan::require_shape(const MeshGrid& mesh) const {
  if (mesh.rows() != rows_ || mesh.cols() != cols_) {
    throw InvalidArgument("source mesh shape does not match the rigid mesh");
  }
}

ImageBuffer warp_to_rigid(const ImageBuffer& src, const MeshGrid& src_mesh, const MeshGrid& rigid) {
  return warp_to_rigid(src, src_mesh, RigidWarpPlan(rigid));
}

ImageBuffer warp_to_rigid(const ImageBuffer& src, const MeshGrid& src_mesh, const RigidWarpPlan& plan) {
  plan.require_shape(src_mesh);
  ImageBuffer out(plan.width(), plan.height(), src.channels());
  const auto verts = src_mesh.vertices();
  double* dst = out.data().data();
  const int c = src.channels();
  for (const auto& px : plan.pixels()) {
    const Vec2 p = plan.source_position(verts, px);
    sample_clamped(src, p.x, p.y, dst);
    dst += c;
  }
  return out;
}

MaskBuffer warp_mask_to_rigid(const MaskBuffer& mask, const MeshGrid& src_mesh, const MeshGrid& rigid) {
  return warp_mask_to_rigid(mask, src_mesh, RigidWarpPlan(rigid));
}

MaskBuffer warp_mask_to_rigid(const MaskBuffer& mask, const MeshGrid& src_mesh, const RigidWarpPlan& plan) {
  plan.require_shape(src_mesh);
  MaskBuffer out(plan.width(), plan.height());
  const auto verts = src_mesh.vertices();
  auto dst = out.data().begin();
  for (const auto& px : plan.pixels()) {
    const Vec2 p = plan.source_position(verts, px);
    *dst++ = sample_zero(mask, p.x, p.y);
  }
  return out;
}

Vec2 bilinear_point(const Quad& q, double s, double t) {
  return (1.0 - s) * (1.0 - t) * q[0] + s * (1.0 - t) * q[1] + (1.0 - s) * t * q[2] + s * t * q[3];
}

namespace {

constexpr double kInsideSlack = 1e-9;

bool in_unit(double s) { return s >= -kInsideSlack && s <= 1.0 + kInsideSlack; }

// Newton iteration on P(s,t) - p; returns false if the update stays above tol.
bool polish(const Quad& q, Vec2 p, Vec2& st, double tol) {
  const Vec2 e = q[1] - q[0];
  const Vec2 f = q[2] - q[0];
  const Vec2 g = q[0] - q[1] - q[2] + q[3];
  for (int iter = 0; iter < 10; ++iter) {
    const Vec2 r = bilinear_point(q, st.x, st.y) - p;
    const Vec2 js = e + st.y * g;
    const Vec2 jt = f + st.x * g;
    const double det = cross(js, jt);
    if (det == 0.0 || !std::isfinite(det)) return false;
    const double ds = -cross(r, jt) / det;
    const double dt = -cross(js, r) / det;
    st.x += ds;
    st.y += dt;
    if (std::abs(ds) <= tol && std::abs(dt) <= tol) return true;
  }
  return false;
}

}  // namespace

std::optional<Vec2> inverse_bilinear(const Quad& q, Vec2 p, double tol) {
  const Vec2 e = q[1] - q[0];
  const Vec2 f = q[2] - q[0];
  const Vec2 g = q[0] - q[1] - q[2] + q[3];
  const Vec2 h = p - q[0];
  // Crossing h = e s + f t + g s t with (f + g s) eliminates t.
  const double a = cross(e, g);
  const double b = cross(e, f) - cross(h, g);
  const double c = -cross(h, f);

  double roots[2];
  int nroots = 0;
  const double scale = std::abs(b) + std::abs(c) + 1e-300;
  if (std::abs(a) <= 1e-12 * scale) {
    if (b == 0.0) return std::nullopt;
    roots[nroots++] = -c / b;
  } else {
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) {
      if (disc < -1e-12 * b * b) return std::nullopt;
      roots[nroots++] = -b / (2.0 * a);
    } else {
      const double sq = std::sqrt(disc);
      const double qq = -0.5 * (b + (b >= 0.0 ? sq : -sq));
      roots[nroots++] = qq / a;
      if (qq != 0.0) roots[nroots++] = c / qq;
    }
  }

  for (int k = 0; k < nroots; ++k) {
    const double s = roots[k];
    if (!std::isfinite(s) || s < -1e-6 || s > 1.0 + 1e-6) continue;
    const Vec2 d = f + s * g;
    const double dd = dot(d, d);
    if (dd == 0.0) continue;
    const double t = dot(h - s * e, d) / dd;
    if (t < -1e-6 || t > 1.0 + 1e-6) continue;
    Vec2 st{s, t};
    if (!polish(q, p, st, tol)) {
      throw NumericalError("inverse bilinear map did not converge");
    }
    if (in_unit(st.x) && in_unit(st.y)) {
      return Vec2{std::clamp(st.x, 0.0, 1.0), std::clamp(st.y, 0.0, 1.0)};
    }
  }
  return std::nullopt;
}

namespace {

Quad cell_quad(const MeshGrid& m, std::size_t i, std::size_t j) {
  return {m.at(i, j), m.at(i, j + 1), m.at(i + 1, j), m.at(i + 1, j + 1)};
}

double quad_min_jacobian(const Quad& q) {
  const Vec2 top = q[1] - q[0];
  const Vec2 bottom = q[3] - q[2];
  const Vec2 left = q[2] - q[0];
  const Vec2 right = q[3] - q[1];
  return std::min({cross(top, left), cross(top, right), cross(bottom, left), cross(bottom, right)});
}

}  // namespace

double min_corner_jacobian(const MeshGrid& mesh) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < mesh.rows(); ++i) {
    for (std::size_t j = 0; j + 1 < mesh.cols(); ++j) {
      m = std::min(m, quad_min_jacobian(cell_quad(mesh, i, j)));
    }
  }
  return m;
}

void require_unfolded(const MeshGrid& mesh) {
  std::size_t cell = 0;
  for (std::size_t i = 0; i + 1 < mesh.rows(); ++i) {
    for (std::size_t j = 0; j + 1 < mesh.cols(); ++j, ++cell) {
      if (!(quad_min_jacobian(cell_quad(mesh, i, j)) > 0.0)) {
        throw NumericalError("degenerate or folded mesh cell " + std::to_string(cell) + " (row " +
                             std::to_string(i) + ", col " + std::to_string(j) + ")");
      }
    }
  }
}

WarpedRaster warp_from_rigid(const ImageBuffer& src, const MeshGrid& rigid, const MeshGrid& dst_mesh, int out_w,
                             int out_h, double fill) {
  if (rigid.rows() != dst_mesh.rows() || rigid.cols() != dst_mesh.cols()) {
    throw InvalidArgument("destination mesh shape does not match the rigid mesh");
  }
  if (out_w <= 0 || out_h <= 0) {
    throw InvalidArgument("output raster must be non-empty");
  }
  require_unfolded(dst_mesh);

  WarpedRaster out{ImageBuffer(out_w, out_h, src.channels(), fill), MaskBuffer(out_w, out_h, 0.0)};
  for (std::size_t i = 0; i + 1 < dst_mesh.rows(); ++i) {
    for (std::size_t j = 0; j + 1 < dst_mesh.cols(); ++j) {
      const Quad dq = cell_quad(dst_mesh, i, j);
      const Quad rq = cell_quad(rigid, i, j);
      double minx = dq[0].x, maxx = dq[0].x, miny = dq[0].y, maxy = dq[0].y;
      for (const Vec2& v : dq) {
        minx = std::min(minx, v.x);
        maxx = std::max(maxx, v.x);
        miny = std::min(miny, v.y);
        maxy = std::max(maxy, v.y);
      }
      // Pixel centers x + 0.5 inside [minx, maxx].
      const int x0 = std::max(0, static_cast<int>(std::ceil(minx - 0.5 - 1e-9)));
      const int x1 = std::min(out_w - 1, static_cast<int>(std::floor(maxx - 0.5 + 1e-9)));
      const int y0 = std::max(0, static_cast<int>(std::ceil(miny - 0.5 - 1e-9)));
      const int y1 = std::min(out_h - 1, static_cast<int>(std::floor(maxy - 0.5 + 1e-9)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          if (out.mask.at(x, y) != 0.0) continue;
          const auto st = inverse_bilinear(dq, {x + 0.5, y + 0.5});
          if (!st) continue;
          const Vec2 sp = bilinear_point(rq, st->x, st->y);
          sample_clamped(src, sp.x, sp.y, &out.image.at(x, y, 0));
          out.mask.at(x, y) = 1.0;
        }
      }
    }
  }
  return out;
}

}  // namespace meshrect
