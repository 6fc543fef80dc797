#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace meshrect {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
  Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

/// Grid of (rows x cols) vertices in pixel coordinates, stored row-major.
///
/// Row index runs along the image height (U cells), column index along the
/// width (V cells). Origin is the top-left image corner, y points down.
class MeshGrid {
 public:
  MeshGrid() = default;
  /// Throws InvalidArgument unless rows, cols >= 2, the vertex count matches
  /// and every coordinate is finite.
  MeshGrid(std::size_t rows, std::size_t cols, std::vector<Vec2> vertices);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  /// Number of cells along the height (U) and the width (V).
  std::size_t cells_u() const { return rows_ - 1; }
  std::size_t cells_v() const { return cols_ - 1; }

  Vec2 at(std::size_t row, std::size_t col) const { return vertices_[row * cols_ + col]; }
  std::span<const Vec2> vertices() const { return vertices_; }

  friend bool operator==(const MeshGrid&, const MeshGrid&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Vec2> vertices_;
};

/// Per-vertex displacement relative to a rigid mesh, in pixels.
class MeshMotion {
 public:
  MeshMotion() = default;
  /// Zero motion of the given shape.
  MeshMotion(std::size_t rows, std::size_t cols);
  MeshMotion(std::size_t rows, std::size_t cols, std::vector<Vec2> displacement);

  static MeshMotion zeros_like(const MeshGrid& mesh) { return {mesh.rows(), mesh.cols()}; }
  /// Motion that takes `from` onto `to`.
  static MeshMotion between(const MeshGrid& from, const MeshGrid& to);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return d_.size(); }

  Vec2& at(std::size_t row, std::size_t col) { return d_[row * cols_ + col]; }
  Vec2 at(std::size_t row, std::size_t col) const { return d_[row * cols_ + col]; }
  std::span<Vec2> displacement() { return d_; }
  std::span<const Vec2> displacement() const { return d_; }

  MeshMotion operator+(const MeshMotion& o) const;
  MeshMotion operator-() const;
  MeshMotion scaled(double sx, double sy) const;
  double max_abs() const;

  friend bool operator==(const MeshMotion&, const MeshMotion&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Vec2> d_;
};

/// Uniform grid with vertex (i, j) at (j * width / v, i * height / u).
MeshGrid build_rigid_mesh(double width, double height, std::size_t u, std::size_t v);

MeshGrid apply_motion(const MeshGrid& rigid, const MeshMotion& motion);

struct MeshEdges {
  std::vector<Vec2> horizontal;  ///< (U+1)*V vectors, vertex(i,j+1) - vertex(i,j)
  std::vector<Vec2> vertical;    ///< U*(V+1) vectors, vertex(i+1,j) - vertex(i,j)
};

MeshEdges mesh_edges(const MeshGrid& mesh);

/// True when `rigid` is a uniform grid spanning [0,W]x[0,H] for integral W, H.
bool is_rigid_grid(const MeshGrid& rigid, double tol = 1e-9);

/// Raster size spanned by a rigid mesh (its bottom-right corner).
std::pair<int, int> rigid_raster_size(const MeshGrid& rigid);

/// JSON text of the form {"rows", "cols", "vertices": [[x, y], ...]}.
std::string mesh_to_json(const MeshGrid& mesh);
MeshGrid mesh_from_json(const std::string& text);
void save_mesh(const MeshGrid& mesh, const std::string& path);
MeshGrid load_mesh(const std::string& path);

}  // namespace meshrect
