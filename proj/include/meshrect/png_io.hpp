#pragma once

#include <string>

#include "meshrect/image.hpp"

namespace meshrect {

/// Reads an 8-bit PNG as gray (1 channel) or RGB (3 channels); alpha is
/// dropped, 16-bit samples are reduced to 8 bits, palettes are expanded.
/// Intensities are mapped linearly to [0, 1]. Throws IoError.
ImageBuffer load_png(const std::string& path);
/// Loads a PNG as a binarized mask (gray >= 0.5 is content).
MaskBuffer load_mask_png(const std::string& path);

/// Values are clamped to [0, 1] and rounded to 8 bits.
void save_png(const ImageBuffer& image, const std::string& path);
void save_png(const MaskBuffer& mask, const std::string& path);

}  // namespace meshrect
