#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "splatstyle/camera.hpp"
#include "splatstyle/feature_map.hpp"
#include "splatstyle/point_cloud.hpp"

namespace splatstyle {

inline constexpr double kDefaultZNear = 1e-4;

/// Continuous pixel coordinates (pixel centers at +0.5) and camera-space depth.
struct Projection {
  double u = 0.0;
  double v = 0.0;
  double z = 0.0;
};

/// x_cam = R X + t; points with z <= z_near are behind the camera (nullopt).
std::optional<Projection> project_point(const Eigen::Vector3d& world, const Camera& camera,
                                        double z_near = kDefaultZNear);

enum class Blend { nearest, inverse_depth };

const char* to_string(Blend blend);
Blend parse_blend(const std::string& text);

struct SplatConfig {
  double splat_radius_px = 2.0;
  std::size_t zbuffer_size = 128;
  Blend blend = Blend::nearest;
  std::vector<float> background{0.0f};  // one value per channel, or one value for all
  double z_near = kDefaultZNear;
  std::uint32_t tile_size = 32;
  bool clamp_unit = false;  // RGB output: clamp covered values to [0, 1]

  void validate() const;
};

/// A rendered image or feature map with per-pixel coverage and front depth.
/// Uncovered pixels hold the background and +infinity depth.
struct RenderedView {
  FeatureMap data;
  std::vector<std::uint8_t> mask;  // H * W, 1 = covered
  std::vector<float> depth;        // H * W
  Camera camera;

  bool covered(std::uint32_t row, std::uint32_t col) const {
    return mask[std::size_t{row} * data.width + col] != 0;
  }
  float depth_at(std::uint32_t row, std::uint32_t col) const {
    return depth[std::size_t{row} * data.width + col];
  }
  std::size_t coverage_count() const;

  /// Depth buffer as a DepthMap (uncovered pixels become 0).
  DepthMap depth_map() const;
  /// Coverage as a 1-channel map of 0 / 1 values.
  FeatureMap mask_image() const;
};

/// Per-channel background values broadcast to `channels`.
std::vector<float> expand_background(const std::vector<float>& background, std::uint32_t channels);

/// Z-buffered disc splatting. Every point stamps the pixels whose centers lie
/// within splat_radius_px of its projection. Per pixel the zbuffer_size nearest
/// candidates are kept (ties in depth broken by feature values, then index, so
/// the output does not depend on point order). `nearest` takes the front
/// candidate's feature, `inverse_depth` the 1/z-weighted mean of the kept ones.
RenderedView render_view(const FeaturePointCloud& cloud, const Camera& camera,
                         const SplatConfig& cfg);

/// View data where covered, `background` elsewhere.
FeatureMap composite_over(const RenderedView& view, const FeatureMap& background);

}  // namespace splatstyle
