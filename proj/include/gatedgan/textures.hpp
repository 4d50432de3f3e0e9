#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gatedgan/tensor.hpp"

namespace gatedgan {

enum class TextureKind { checkerboard, stripes, dots };

std::string to_string(TextureKind kind);
TextureKind parse_texture_kind(const std::string& text);

/// One (1, 3, size, size) two-colour texture in [-1, 1] with a period of
/// about size / 3. Every kind uses the same two colours. The seed shifts
/// the phase and jitters the period.
TensorF make_texture(TextureKind kind, std::size_t size, std::uint64_t seed);

/// `count` variations of one texture.
std::vector<TensorF> texture_collection(TextureKind kind, std::size_t count, std::size_t size,
                                        std::uint64_t seed);

/// Smooth random content image: a few overlapping coloured blobs over a
/// gradient background.
TensorF make_content(std::size_t size, std::uint64_t seed);

}  // namespace gatedgan
