// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef UFO_SERIALIZE_HPP
#define UFO_SERIALIZE_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ufo/adapter.hpp"
#include "ufo/model.hpp"

namespace ufo {

inline constexpr std::uint8_t kAdapterFormatVersion = 1;
inline constexpr std::uint8_t kModelFormatVersion = 1;

/// UFOA layout, little-endian:
///   "UFOA" | version u8 | fingerprint u64 | d u32 | kind u8 |
///   recommended_alpha f64 | entry count u32 |
///   per entry: name length u16, name bytes, m u32, n u32 |
///   per entry: beta f32, v_det (n x d) f32, v_cor (m x d) f32.
/// Every value after the entry table is one float, so the file is
/// header + 4 * parameter_count() bytes.
std::vector<std::uint8_t> serialize_adapter(const UfoAdapterSet<float>& set);

/// Parses a whole UFOA buffer; any defect raises FormatError with the byte
/// offset and nothing is returned.
UfoAdapterSet<float> deserialize_adapter(std::span<const std::uint8_t> bytes);

/// Size of the UFOA header (everything before the float payload).
std::size_t adapter_header_size(const UfoAdapterSet<float>& set);

void save_adapter(const std::filesystem::path& path, const UfoAdapterSet<float>& set);
UfoAdapterSet<float> load_adapter(const std::filesystem::path& path);

/// UFOM layout: "UFOM" | version u8 | header length u32 | JSON header |
/// float32 payload of every parameter tensor in registry order. The header
/// carries the architecture config, schedule and layer registry.
std::vector<std::uint8_t> serialize_model(const ModelGraph<float>& model);
ModelGraph<float> deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const std::filesystem::path& path, const ModelGraph<float>& model);
ModelGraph<float> load_model(const std::filesystem::path& path);

}  // namespace ufo

#endif  // UFO_SERIALIZE_HPP
