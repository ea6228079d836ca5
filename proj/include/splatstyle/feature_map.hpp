#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace splatstyle {

/// H x W x C grid of float values, row-major with interleaved channels.
struct FeatureMap {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t channels = 0;
  std::vector<float> data;

  FeatureMap() = default;
  FeatureMap(std::uint32_t h, std::uint32_t w, std::uint32_t c, float fill = 0.0f)
      : height(h), width(w), channels(c), data(std::size_t{h} * w * c, fill) {}

  std::size_t pixel_count() const { return std::size_t{height} * width; }

  std::span<float> pixel(std::uint32_t row, std::uint32_t col) {
    return {data.data() + (std::size_t{row} * width + col) * channels, channels};
  }
  std::span<const float> pixel(std::uint32_t row, std::uint32_t col) const {
    return {data.data() + (std::size_t{row} * width + col) * channels, channels};
  }

  /// True for the channel counts of the two supported modes (RGB and relu3_1).
  bool has_standard_channels() const { return channels == 3 || channels == 256; }

  /// Throws InvariantError if the buffer size disagrees with the shape or any value is non-finite.
  void validate() const;

  bool operator==(const FeatureMap&) const = default;
};

/// Per-pixel z-depth (distance along the optical axis). 0 marks an invalid pixel.
struct DepthMap {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<float> values;

  DepthMap() = default;
  DepthMap(std::uint32_t h, std::uint32_t w, float fill = 0.0f)
      : height(h), width(w), values(std::size_t{h} * w, fill) {}

  float at(std::uint32_t row, std::uint32_t col) const {
    return values[std::size_t{row} * width + col];
  }
  float& at(std::uint32_t row, std::uint32_t col) {
    return values[std::size_t{row} * width + col];
  }
  bool valid(std::uint32_t row, std::uint32_t col) const { return at(row, col) > 0.0f; }

  std::size_t valid_count() const;

  /// Throws InvariantError on non-finite or negative values.
  void validate() const;

  /// Nearest-neighbour decimation by an integer factor: output pixel (r, c) takes the
  /// source pixel containing its center, (r * f + f / 2, c * f + f / 2).
  DepthMap downsample_nearest(std::uint32_t factor) const;

  bool operator==(const DepthMap&) const = default;
};

}  // namespace splatstyle
