#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "meshrect/energy.hpp"
#include "meshrect/error.hpp"
#include "meshrect/features.hpp"
#include "meshrect/metrics.hpp"
#include "meshrect/optimizer.hpp"
#include "meshrect/png_io.hpp"
#include "meshrect/synth.hpp"
#include "meshrect/warp.hpp"

namespace py = pybind11;
using namespace meshrect;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Images cross the boundary as (H, W) or (H, W, C) float64 arrays, masks as
// (H, W), meshes and motions as (rows, cols, 2) in (x, y) order.

ImageBuffer to_image(const Array& a) {
  if (a.ndim() != 2 && a.ndim() != 3) throw InvalidArgument("image must be a 2-D or 3-D array");
  const int h = static_cast<int>(a.shape(0));
  const int w = static_cast<int>(a.shape(1));
  const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
  return ImageBuffer(w, h, c, std::vector<double>(a.data(), a.data() + a.size()));
}

Array from_image(const ImageBuffer& img) {
  Array out({img.height(), img.width(), img.channels()});
  std::copy(img.data().begin(), img.data().end(), out.mutable_data());
  return out;
}

MaskBuffer to_mask(const Array& a) {
  if (a.ndim() != 2) throw InvalidArgument("mask must be a 2-D array");
  return MaskBuffer(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)),
                    std::vector<double>(a.data(), a.data() + a.size()));
}

Array from_mask(const MaskBuffer& m) {
  Array out({m.height(), m.width()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

std::vector<Vec2> to_points(const Array& a) {
  if (a.ndim() != 3 || a.shape(2) != 2) throw InvalidArgument("mesh must have shape (rows, cols, 2)");
  std::vector<Vec2> pts(a.shape(0) * a.shape(1));
  for (std::size_t k = 0; k < pts.size(); ++k) pts[k] = {a.data()[2 * k], a.data()[2 * k + 1]};
  return pts;
}

MeshGrid to_mesh(const Array& a) {
  auto pts = to_points(a);
  return {static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)), std::move(pts)};
}

Array from_points(std::size_t rows, std::size_t cols, std::span<const Vec2> pts) {
  Array out({rows, cols, std::size_t{2}});
  double* d = out.mutable_data();
  for (std::size_t k = 0; k < pts.size(); ++k) {
    d[2 * k] = pts[k].x;
    d[2 * k + 1] = pts[k].y;
  }
  return out;
}

Array from_mesh(const MeshGrid& m) { return from_points(m.rows(), m.cols(), m.vertices()); }
Array from_motion(const MeshMotion& m) { return from_points(m.rows(), m.cols(), m.displacement()); }

EnergyConfig make_config(int width, int height, std::size_t mesh_u, std::size_t mesh_v, double alpha, double omega_a,
                         double omega_p) {
  EnergyConfig cfg;
  cfg.image_w = width;
  cfg.image_h = height;
  cfg.mesh_u = mesh_u;
  cfg.mesh_v = mesh_v;
  cfg.alpha = alpha;
  cfg.omega_a = omega_a;
  cfg.omega_p = omega_p;
  cfg.validate();
  return cfg;
}

py::dict breakdown(const EnergyBreakdown& e) {
  py::dict d;
  d["boundary"] = e.boundary;
  d["mesh_intra"] = e.mesh_intra;
  d["mesh_inter"] = e.mesh_inter;
  d["content_appearance"] = e.content_appearance;
  d["content_perception"] = e.content_perception;
  d["total"] = e.total;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mesh-based rectangling of stitched images";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def(
      "rigid_mesh",
      [](double width, double height, std::size_t u, std::size_t v) {
        return from_mesh(build_rigid_mesh(width, height, u, v));
      },
      py::arg("width"), py::arg("height"), py::arg("u") = 8, py::arg("v") = 6);

  m.def(
      "warp_to_rigid",
      [](const Array& image, const Array& mesh) {
        const ImageBuffer img = to_image(image);
        const MeshGrid src = to_mesh(mesh);
        const MeshGrid rigid = build_rigid_mesh(img.width(), img.height(), src.cells_u(), src.cells_v());
        return from_image(warp_to_rigid(img, src, rigid));
      },
      py::arg("image"), py::arg("mesh"), "Resamples `image` so the cells of `mesh` land on the rigid grid.");

  m.def(
      "warp_mask_to_rigid",
      [](const Array& mask, const Array& mesh) {
        const MaskBuffer mk = to_mask(mask);
        const MeshGrid src = to_mesh(mesh);
        const MeshGrid rigid = build_rigid_mesh(mk.width(), mk.height(), src.cells_u(), src.cells_v());
        return from_mask(warp_mask_to_rigid(mk, src, rigid));
      },
      py::arg("mask"), py::arg("mesh"));

  m.def(
      "energy",
      [](const Array& image, const Array& mask, const Array& m_p, const Array& m_f, std::optional<Array> label,
         double alpha, double omega_a, double omega_p) {
        const ImageBuffer img = to_image(image);
        const MeshGrid mp = to_mesh(m_p);
        const EnergyConfig cfg =
            make_config(img.width(), img.height(), mp.cells_u(), mp.cells_v(), alpha, omega_a, omega_p);
        const MeshGrid rigid = build_rigid_mesh(img.width(), img.height(), cfg.mesh_u, cfg.mesh_v);
        std::optional<ImageBuffer> lab;
        if (label) lab = to_image(*label);
        return breakdown(total_energy(img, to_mask(mask), mp, to_mesh(m_f), rigid, lab ? &*lab : nullptr, cfg,
                                      *default_feature_extractor()));
      },
      py::arg("image"), py::arg("mask"), py::arg("m_p"), py::arg("m_f"), py::arg("label") = py::none(),
      py::arg("alpha") = 0.125, py::arg("omega_a") = 1.0, py::arg("omega_p") = 5e-6,
      "Energy terms of the primary and final meshes together.");

  m.def(
      "rectangle",
      [](const Array& image, const Array& mask, std::optional<Array> label, std::size_t u, std::size_t v,
         double alpha, double omega_a, double omega_p, int iterations, double step) {
        const ImageBuffer img = to_image(image);
        EnergyConfig cfg = make_config(img.width(), img.height(), u, v, alpha, omega_a, omega_p);
        cfg.optimizer.max_iters = iterations;
        cfg.optimizer.step = step;
        cfg.validate();
        std::optional<ImageBuffer> lab;
        if (label) lab = to_image(*label);
        RectangleResult r;
        {
          py::gil_scoped_release release;
          r = rectangle_image(img, to_mask(mask), cfg, lab ? &*lab : nullptr);
        }
        py::dict d;
        d["image"] = from_image(r.image);
        d["mesh"] = from_mesh(r.final_mesh);
        d["motion_p"] = from_motion(r.solve.motion_p);
        d["motion_f"] = from_motion(r.solve.motion_f);
        d["converged"] = r.solve.converged;
        d["iterations"] = r.solve.iterations_used;
        return d;
      },
      py::arg("image"), py::arg("mask"), py::arg("label") = py::none(), py::arg("u") = 8, py::arg("v") = 6,
      py::arg("alpha") = 0.125, py::arg("omega_a") = 1.0, py::arg("omega_p") = 5e-6, py::arg("iterations") = 300,
      py::arg("step") = 0.5, "Two-stage rectangling; returns the warped image, final mesh and motions.");

  m.def("psnr", [](const Array& a, const Array& b) { return psnr(to_image(a), to_image(b)); }, py::arg("a"),
        py::arg("b"));
  m.def("ssim", [](const Array& a, const Array& b) { return ssim(to_image(a), to_image(b)); }, py::arg("a"),
        py::arg("b"));

  m.def(
      "procedural_image",
      [](int width, int height, std::uint64_t seed) { return from_image(procedural_image(width, height, seed)); },
      py::arg("width") = 512, py::arg("height") = 384, py::arg("seed") = 0);

  m.def(
      "synthesize",
      [](const Array& image, std::uint64_t seed, double magnitude, std::size_t u, std::size_t v) {
        const ImageBuffer rect = to_image(image);
        const EnergyConfig cfg = make_config(rect.width(), rect.height(), u, v, 0.125, 1.0, 5e-6);
        const MeshGrid rigid = build_rigid_mesh(rect.width(), rect.height(), u, v);
        const MeshMotion motion = random_deformation(rigid, magnitude, seed, cfg.alpha);
        const Triplet t = synthesize_triplet(rect, motion, cfg, seed);
        py::dict d;
        d["input"] = from_image(t.stitched);
        d["mask"] = from_mask(t.mask);
        d["gt"] = from_image(t.label);
        d["mesh"] = from_mesh(apply_motion(rigid, t.generator_motion));
        return d;
      },
      py::arg("image"), py::arg("seed") = 0, py::arg("magnitude") = 32.0, py::arg("u") = 8, py::arg("v") = 6,
      "Irregular-boundary triplet from a rectangular image; `mesh` warps `input` back onto `gt`.");

  m.def("load_png", [](const std::string& path) { return from_image(load_png(path)); }, py::arg("path"));
  m.def("load_mask_png", [](const std::string& path) { return from_mask(load_mask_png(path)); }, py::arg("path"));
  m.def(
      "save_png",
      [](const Array& a, const std::string& path) {
        if (a.ndim() == 2) {
          save_png(to_mask(a), path);
        } else {
          save_png(to_image(a), path);
        }
      },
      py::arg("image"), py::arg("path"));
}
