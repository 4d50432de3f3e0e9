#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gatedgan/training.hpp"

namespace gatedgan {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Serialized form: magic "GGANCKPT", u32 version, u64 header length, JSON
/// header (metadata and tensor manifest), u64 payload length, little-endian
/// f32 payload, u64 FNV-1a checksum of every preceding byte.
std::vector<std::uint8_t> checkpoint_bytes(const TrainState& state);
TrainState checkpoint_from_bytes(const std::vector<std::uint8_t>& bytes, const std::string& source,
                                 std::optional<std::size_t> expected_styles = std::nullopt);

void save_checkpoint(const TrainState& state, const std::string& path);
/// When expected_styles is set, a checkpoint with a different number of style
/// branches is rejected.
TrainState load_checkpoint(const std::string& path,
                           std::optional<std::size_t> expected_styles = std::nullopt);

/// Resolves a style given as an index or a name.
std::size_t resolve_style(const TrainState& state, const std::string& style);

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t size);

}  // namespace gatedgan
