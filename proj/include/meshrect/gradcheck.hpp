#pragma once

#include <cstdint>

namespace meshrect {

struct GradCheckOptions {
  std::uint64_t seed = 0;
  int trials = 100;
  double step = 1e-3;         ///< central-difference step in pixels
  double kink_margin = 1e-2;  ///< skip coordinates whose edges are this close to a hinge kink
  double max_motion = 3.0;    ///< random motions are drawn in [-max_motion, max_motion]
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  int trials = 0;
  long coordinates_checked = 0;
  long coordinates_excluded = 0;
};

/// Compares the analytic gradient of the joint (m_p, m_f) energy with
/// central finite differences on random small problems with random mesh
/// resolution, weights and alpha.
///
/// Images, masks and labels are drawn from span{1, x, y, xy} and boundary
/// vertices move inward, so bilinear sampling is smooth in the vertex
/// positions. Coordinates whose stencil crosses a hinge threshold or flips
/// the sign of a warped-minus-label sample are counted as excluded.
/// Relative error is |a - f| / max(|a|, |f|, 1e-12).
GradCheckReport run_gradcheck(const GradCheckOptions& opts);

}  // namespace meshrect
