#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>

#include "splatstyle/feature_map.hpp"

namespace splatstyle {

/// Decodes a PNG into a 3-channel map with values in [0, 1]. Gray, palette,
/// alpha and 16-bit inputs are converted to 8-bit RGB first.
FeatureMap load_png(const std::filesystem::path& path);

/// Writes an 8-bit PNG (RGB for C = 3, gray for C = 1). Values are clamped to
/// [0, 1] and rounded to the nearest of 256 levels.
void save_png(const FeatureMap& image, const std::filesystem::path& path);

/// Width and height from the PNG header.
std::pair<std::uint32_t, std::uint32_t> read_png_size(const std::filesystem::path& path);

}  // namespace splatstyle
