#pragma once

#include <cstdint>
#include <string>

#include "gatedgan/tensor.hpp"

namespace gatedgan {

/// Byte b maps to 2b/255 - 1.
float byte_to_unit(std::uint8_t b);
/// Inverse map with round-half-up and clamping to [0, 255].
std::uint8_t unit_to_byte(float v);

/// Reads a PNG or binary PPM (P6, maxval 255) file into a (1, 3, H, W) tensor
/// in [-1, 1]. The format is detected from the file contents.
TensorF load_image(const std::string& path);

/// Writes a (1, 3, H, W) tensor. The extension selects PNG (.png) or PPM (.ppm).
void save_image(const TensorF& image, const std::string& path);

/// True when the extension names a supported image format.
bool is_image_path(const std::string& path);

}  // namespace gatedgan
