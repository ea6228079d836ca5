#include "splatstyle/feature_map.hpp"

#include <algorithm>
#include <cmath>

#include "splatstyle/error.hpp"

namespace splatstyle {

void FeatureMap::validate() const {
  if (data.size() != pixel_count() * channels) {
    throw InvariantError("feature map buffer size does not match its shape");
  }
  if (!std::all_of(data.begin(), data.end(), [](float v) { return std::isfinite(v); })) {
    throw InvariantError("feature map contains non-finite values");
  }
}

std::size_t DepthMap::valid_count() const {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [](float d) { return d > 0.0f; }));
}

void DepthMap::validate() const {
  if (values.size() != std::size_t{height} * width) {
    throw InvariantError("depth map buffer size does not match its shape");
  }
  for (float d : values) {
    if (!std::isfinite(d) || d < 0.0f) {
      throw InvariantError("depth map contains a non-finite or negative value");
    }
  }
}

DepthMap DepthMap::downsample_nearest(std::uint32_t factor) const {
  if (factor == 0) throw InvariantError("downsample factor must be >= 1");
  if (factor == 1) return *this;
  DepthMap out(height / factor, width / factor);
  const std::uint32_t half = factor / 2;
  for (std::uint32_t r = 0; r < out.height; ++r) {
    for (std::uint32_t c = 0; c < out.width; ++c) {
      out.at(r, c) = at(r * factor + half, c * factor + half);
    }
  }
  return out;
}

}  // namespace splatstyle
