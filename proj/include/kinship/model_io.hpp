#pragma once

// Comparator model file, little-endian throughout:
//
//   "KINC"  u16 version (=1)
//   header: u32 embedding_dim, u32 hidden, u8 activation, f64 dropout,
//           u8 sharing, u8 n_experts, n_experts x u8 relation index,
//           u8 has_attention
//   per expert i: [W1, b1 when expert i owns a hidden layer] W2, b2,
//                 [prelu slope when PReLU and expert i owns a layer]
//   attention (if present): W_a (n_experts x 2d), b_a
//   metadata: u8 has_threshold, f64 threshold
//   u32 CRC32 (zlib polynomial) of every preceding byte
//
// Matrices are row-major f64. Loading validates size, magic, version and
// checksum before decoding anything.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "kinship/comparator.hpp"

namespace kinship {

inline constexpr std::uint16_t kModelVersion = 1;

std::vector<std::uint8_t> serialize_model(const ComparatorParams& params);
/// Throws ModelFormatError; never returns partially decoded parameters.
ComparatorParams deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const ComparatorParams& params, const std::filesystem::path& path);
ComparatorParams load_model(const std::filesystem::path& path);

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);
std::uint32_t file_crc32(const std::filesystem::path& path);
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace kinship
