#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "meshrect/config.hpp"
#include "meshrect/image.hpp"
#include "meshrect/mesh.hpp"

namespace meshrect {

/// mt19937_64 (whose output sequence is fixed by the standard) with a
/// hand-rolled float conversion, so draws match across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

/// Mixes a base seed and a stream index into an independent seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct Triplet {
  ImageBuffer stitched;  ///< I: irregular-boundary image, void filled with 0
  MaskBuffer mask;       ///< M: 1 where I holds warped content
  ImageBuffer label;     ///< R: the rectangular source
  MeshMotion generator_motion;
  std::uint64_t seed = 0;
};

struct DeformationLimits {
  double min_void = 0.10;
  double max_void = 0.40;
  int max_attempts = 100;
};

/// Smooth random motion of `rigid` whose displaced mesh is a valid
/// destination for warp_from_rigid: zero intra-grid penalty at `alpha`,
/// positive corner Jacobians everywhere, vertices inside the raster, and a
/// footprint leaving between min_void and max_void of the raster empty.
/// Throws NumericalError naming the seed when no valid draw is found.
MeshMotion random_deformation(const MeshGrid& rigid, double magnitude, std::uint64_t seed, double alpha = 0.125,
                              const DeformationLimits& limits = {});

/// Fraction of the raster outside the footprint polygon of `mesh`.
double footprint_void_fraction(const MeshGrid& mesh, double width, double height);

/// Inverse-deforms a rectangular image: rigid cell content is moved into the
/// cells of rigid + motion.
Triplet synthesize_triplet(const ImageBuffer& rect, const MeshMotion& motion, const EnergyConfig& cfg,
                           std::uint64_t seed = 0);

/// Deterministic RGB test picture: smooth shading, soft-edged shapes and fine
/// stripes, so the appearance term has gradients at several scales.
ImageBuffer procedural_image(int width, int height, std::uint64_t seed);

/// Center crop to (width x height); throws InvalidArgument if smaller.
ImageBuffer center_crop(const ImageBuffer& image, int width, int height);

struct DatasetOptions {
  std::size_t count = 0;
  std::uint64_t seed = 0;
  double magnitude = 32.0;
  EnergyConfig cfg;  ///< raster size, mesh resolution and alpha
  /// Generate this many procedural sources instead of reading a directory.
  std::size_t procedural_sources = 0;
};

/// Writes input_/mask_/gt_ PNGs and mesh_ JSON per triplet plus
/// manifest.json into `out_dir`. Returns the manifest text.
/// Unusable source files are skipped with a warning on stderr.
std::string build_dataset(const std::filesystem::path& src_dir, const std::filesystem::path& out_dir,
                          const DatasetOptions& opts);

/// Per-sample round-trip quality used to accept a triplet: PSNR of
/// warp_to_rigid(I, rigid + motion) against R on the 2-px-eroded mask.
double round_trip_psnr(const Triplet& t, const EnergyConfig& cfg);

}  // namespace meshrect
