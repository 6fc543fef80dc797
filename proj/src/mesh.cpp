#include "meshrect/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "meshrect/error.hpp"

namespace meshrect {

MeshGrid::MeshGrid(std::size_t rows, std::size_t cols, std::vector<Vec2> vertices)
    : rows_(rows), cols_(cols), vertices_(std::move(vertices)) {
  if (rows_ < 2 || cols_ < 2) {
    throw InvalidArgument("mesh needs at least 2x2 vertices");
  }
  if (vertices_.size() != rows_ * cols_) {
    throw InvalidArgument("mesh vertex count does not match rows*cols");
  }
  for (const Vec2& p : vertices_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw InvalidArgument("mesh vertex is not finite");
    }
  }
}

MeshMotion::MeshMotion(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), d_(rows * cols) {}

MeshMotion::MeshMotion(std::size_t rows, std::size_t cols, std::vector<Vec2> displacement)
    : rows_(rows), cols_(cols), d_(std::move(displacement)) {
  if (d_.size() != rows_ * cols_) {
    throw InvalidArgument("motion size does not match rows*cols");
  }
}

MeshMotion MeshMotion::between(const MeshGrid& from, const MeshGrid& to) {
  if (from.rows() != to.rows() || from.cols() != to.cols()) {
    throw InvalidArgument("mesh shape mismatch");
  }
  std::vector<Vec2> d(from.vertices().size());
  for (std::size_t k = 0; k < d.size(); ++k) {
    d[k] = to.vertices()[k] - from.vertices()[k];
  }
  return {from.rows(), from.cols(), std::move(d)};
}

MeshMotion MeshMotion::operator+(const MeshMotion& o) const {
  if (rows_ != o.rows_ || cols_ != o.cols_) {
    throw InvalidArgument("motion shape mismatch");
  }
  MeshMotion out = *this;
  for (std::size_t k = 0; k < d_.size(); ++k) {
    out.d_[k] += o.d_[k];
  }
  return out;
}

MeshMotion MeshMotion::operator-() const {
  MeshMotion out = *this;
  for (Vec2& v : out.d_) {
    v = {-v.x, -v.y};
  }
  return out;
}

MeshMotion MeshMotion::scaled(double sx, double sy) const {
  MeshMotion out = *this;
  for (Vec2& v : out.d_) {
    v = {v.x * sx, v.y * sy};
  }
  return out;
}

double MeshMotion::max_abs() const {
  double m = 0.0;
  for (const Vec2& v : d_) {
    m = std::max({m, std::abs(v.x), std::abs(v.y)});
  }
  return m;
}

MeshGrid build_rigid_mesh(double width, double height, std::size_t u, std::size_t v) {
  if (!(width > 0.0) || !(height > 0.0) || u < 1 || v < 1) {
    throw InvalidArgument("rigid mesh needs positive size and at least one cell per axis");
  }
  std::vector<Vec2> verts;
  verts.reserve((u + 1) * (v + 1));
  for (std::size_t i = 0; i <= u; ++i) {
    // Last row/column are assigned exactly so the grid spans the raster.
    const double y = (i == u) ? height : static_cast<double>(i) * height / static_cast<double>(u);
    for (std::size_t j = 0; j <= v; ++j) {
      const double x = (j == v) ? width : static_cast<double>(j) * width / static_cast<double>(v);
      verts.push_back({x, y});
    }
  }
  return {u + 1, v + 1, std::move(verts)};
}

MeshGrid apply_motion(const MeshGrid& rigid, const MeshMotion& motion) {
  if (rigid.rows() != motion.rows() || rigid.cols() != motion.cols()) {
    throw InvalidArgument("mesh/motion shape mismatch");
  }
  std::vector<Vec2> verts(rigid.vertices().begin(), rigid.vertices().end());
  const auto d = motion.displacement();
  for (std::size_t k = 0; k < verts.size(); ++k) {
    verts[k] += d[k];
  }
  return {rigid.rows(), rigid.cols(), std::move(verts)};
}

MeshEdges mesh_edges(const MeshGrid& mesh) {
  MeshEdges edges;
  const std::size_t rows = mesh.rows();
  const std::size_t cols = mesh.cols();
  edges.horizontal.reserve(rows * (cols - 1));
  edges.vertical.reserve((rows - 1) * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j + 1 < cols; ++j) {
      edges.horizontal.push_back(mesh.at(i, j + 1) - mesh.at(i, j));
    }
  }
  for (std::size_t i = 0; i + 1 < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      edges.vertical.push_back(mesh.at(i + 1, j) - mesh.at(i, j));
    }
  }
  return edges;
}

bool is_rigid_grid(const MeshGrid& rigid, double tol) {
  const Vec2 corner = rigid.at(rigid.rows() - 1, rigid.cols() - 1);
  const double w = std::round(corner.x);
  const double h = std::round(corner.y);
  if (w < 1.0 || h < 1.0 || std::abs(corner.x - w) > tol || std::abs(corner.y - h) > tol) {
    return false;
  }
  const double u = static_cast<double>(rigid.cells_u());
  const double v = static_cast<double>(rigid.cells_v());
  const double scale = std::max(w, h);
  for (std::size_t i = 0; i < rigid.rows(); ++i) {
    for (std::size_t j = 0; j < rigid.cols(); ++j) {
      const Vec2 p = rigid.at(i, j);
      if (std::abs(p.x - static_cast<double>(j) * w / v) > tol * scale ||
          std::abs(p.y - static_cast<double>(i) * h / u) > tol * scale) {
        return false;
      }
    }
  }
  return true;
}

std::pair<int, int> rigid_raster_size(const MeshGrid& rigid) {
  if (!is_rigid_grid(rigid)) {
    throw InvalidArgument("target mesh is not a rigid grid spanning an integral raster");
  }
  const Vec2 corner = rigid.at(rigid.rows() - 1, rigid.cols() - 1);
  return {static_cast<int>(std::lround(corner.x)), static_cast<int>(std::lround(corner.y))};
}

std::string mesh_to_json(const MeshGrid& mesh) {
  nlohmann::json verts = nlohmann::json::array();
  for (const Vec2& p : mesh.vertices()) {
    verts.push_back({p.x, p.y});
  }
  nlohmann::json j = {{"rows", mesh.rows()}, {"cols", mesh.cols()}, {"vertices", std::move(verts)}};
  return j.dump(2);
}

MeshGrid mesh_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const auto rows = j.at("rows").get<std::size_t>();
    const auto cols = j.at("cols").get<std::size_t>();
    std::vector<Vec2> verts;
    for (const auto& p : j.at("vertices")) {
      if (p.size() != 2) {
        throw InvalidArgument("mesh vertex must be an [x, y] pair");
      }
      verts.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    return {rows, cols, std::move(verts)};
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed mesh json: ") + e.what());
  }
}

void save_mesh(const MeshGrid& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write " + path);
  }
  out << mesh_to_json(mesh) << '\n';
}

MeshGrid load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot read " + path);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return mesh_from_json(ss.str());
}

}  // namespace meshrect
