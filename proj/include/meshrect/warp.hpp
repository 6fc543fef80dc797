#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "meshrect/image.hpp"
#include "meshrect/mesh.hpp"

namespace meshrect {

/// Precomputed backward-warp layout of a rigid target mesh.
///
/// Every output pixel center lies in exactly one rigid cell; its bilinear
/// weights on that cell's four corners do not depend on the source mesh, so
/// a warp reduces to one small matrix product per pixel:
///   source(p) = sum_k weight_k(p) * src_mesh.vertex(corner_k(p)).
class RigidWarpPlan {
 public:
  struct Pixel {
    std::uint32_t corner;          ///< vertex index of the cell's top-left corner
    std::array<double, 4> weight;  ///< top-left, top-right, bottom-left, bottom-right
  };

  /// Throws InvalidArgument if `rigid` is not a uniform grid over an integral raster.
  explicit RigidWarpPlan(const MeshGrid& rigid);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<const Pixel> pixels() const { return pixels_; }

  Vec2 source_position(std::span<const Vec2> src_vertices, const Pixel& px) const {
    const Vec2* v = src_vertices.data() + px.corner;
    const Vec2 a = v[0], b = v[1], c = v[cols_], d = v[cols_ + 1];
    return {px.weight[0] * a.x + px.weight[1] * b.x + px.weight[2] * c.x + px.weight[3] * d.x,
            px.weight[0] * a.y + px.weight[1] * b.y + px.weight[2] * c.y + px.weight[3] * d.y};
  }

  /// Throws InvalidArgument unless `mesh` has this plan's vertex layout.
  void require_shape(const MeshGrid& mesh) const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Pixel> pixels_;
};

ImageBuffer warp_to_rigid(const ImageBuffer& src, const MeshGrid& src_mesh, const MeshGrid& rigid);
ImageBuffer warp_to_rigid(const ImageBuffer& src, const MeshGrid& src_mesh, const RigidWarpPlan& plan);

MaskBuffer warp_mask_to_rigid(const MaskBuffer& mask, const MeshGrid& src_mesh, const MeshGrid& rigid);
MaskBuffer warp_mask_to_rigid(const MaskBuffer& mask, const MeshGrid& src_mesh, const RigidWarpPlan& plan);

struct WarpedRaster {
  ImageBuffer image;
  MaskBuffer mask;
};

/// Backward warp onto an irregular destination mesh: content of rigid cell k
/// lands in destination quad k. Uncovered pixels get `fill` and mask 0.
///
/// Throws NumericalError naming the cell when a destination quad is folded or
/// degenerate, or when the inverse bilinear map fails to converge.
WarpedRaster warp_from_rigid(const ImageBuffer& src, const MeshGrid& rigid, const MeshGrid& dst_mesh, int out_w,
                             int out_h, double fill = 0.0);

/// Quad corners in bilinear order: (s,t) = (0,0), (1,0), (0,1), (1,1).
using Quad = std::array<Vec2, 4>;

Vec2 bilinear_point(const Quad& q, double s, double t);

/// Solves bilinear_point(q, s, t) == p for (s, t). Analytic quadratic root
/// followed by a Newton polish. Returns nullopt when no root exists near the
/// unit square; throws NumericalError if the polish does not reach `tol`.
std::optional<Vec2> inverse_bilinear(const Quad& q, Vec2 p, double tol = 1e-9);

/// Smallest bilinear Jacobian determinant over all cells (evaluated at the
/// four corners, where the affine-in-(s,t) determinant attains its extrema).
double min_corner_jacobian(const MeshGrid& mesh);

/// Throws NumericalError with the first offending cell index (row-major)
/// when any cell has a non-positive corner Jacobian.
void require_unfolded(const MeshGrid& mesh);

}  // namespace meshrect
