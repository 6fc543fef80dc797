#pragma once

#include <cstddef>

namespace meshrect {

/// Per-image descent settings. Step sizes are in pixels of vertex motion.
struct OptimizerConfig {
  double step = 0.5;
  int max_iters = 300;
  double tol = 1e-6;
  int patience = 10;       ///< consecutive iterations with |dE| < tol
  int max_halvings = 5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct EnergyConfig {
  std::size_t mesh_u = 8;  ///< cells along the height
  std::size_t mesh_v = 6;  ///< cells along the width
  double omega_a = 1.0;
  double omega_p = 5e-6;
  double alpha = 0.125;
  int image_w = 512;
  int image_h = 384;
  OptimizerConfig optimizer;

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
};

}  // namespace meshrect
