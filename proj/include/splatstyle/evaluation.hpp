#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "splatstyle/camera.hpp"
#include "splatstyle/feature_map.hpp"
#include "splatstyle/point_cloud.hpp"
#include "splatstyle/renderer.hpp"
#include "splatstyle/scene_io.hpp"
#include "splatstyle/style_transform.hpp"

namespace splatstyle {

inline constexpr double kDefaultDepthTolerance = 0.01;

/// A source view resampled into a target view. Unmasked pixels hold 0.
struct WarpResult {
  FeatureMap warped;
  std::vector<std::uint8_t> mask;

  std::size_t valid_count() const;
};

/// Resamples `source` into the target camera using the target's depth as proxy
/// geometry. A target pixel is valid when its back-projected point lands inside
/// the source image, all bilinear taps with non-zero weight are covered, and the
/// projected depth agrees with the sampled source depth within tau * depth.
WarpResult warp_view(const RenderedView& source, const Camera& target_camera,
                     const DepthMap& target_depth, double tau = kDefaultDepthTolerance);

struct WarpError {
  double rmse = 0.0;
  double valid_fraction = 0.0;  // valid pixels / all target pixels
  std::size_t valid_pixels = 0;
};

/// Masked RMSE between `target` and `source` warped into the target view, over
/// pixels valid in the warp and covered in `target`. Throws UndefinedMetricError
/// when no pixel is valid.
WarpError warping_error(const RenderedView& target, const RenderedView& source,
                        const DepthMap& target_depth, double tau = kDefaultDepthTolerance);

/// ||G(a) - G(b)||_F with G(x) = X^T X / (H W) over flattened pixels.
double gram_distance(const FeatureMap& a, const FeatureMap& b);

struct ConsistencyReport {
  struct Pair {
    std::size_t from = 0;  // v' (earlier frame)
    std::size_t to = 0;    // v (later frame, warp target)
    std::size_t offset = 0;
    bool defined = false;  // false when the warp mask was empty
    double rmse = 0.0;
    double valid_fraction = 0.0;
  };
  struct Summary {
    std::size_t offset = 0;
    std::size_t pairs = 0;
    std::size_t defined_pairs = 0;
    double mean_rmse = 0.0;  // over defined pairs
  };

  std::string protocol;  // "short", "long" or "custom"
  std::vector<Pair> pairs;
  std::vector<Summary> summary;

  const Summary& for_offset(std::size_t offset) const;
  double mean_rmse() const;  // over all defined pairs

  std::string to_text() const;
  std::string to_csv() const;
};

struct ProtocolConfig {
  SplatConfig splat;
  double tau = kDefaultDepthTolerance;
};

/// "short" for {1}, "long" for {7}, otherwise "custom".
std::string protocol_tag(std::span<const std::size_t> offsets);

/// Warping error for every (t - o, t) pair of already rendered, ordered views.
/// `depths[t]` is the proxy depth of view t at render resolution.
ConsistencyReport evaluate_views(std::span<const RenderedView> views,
                                 std::span<const DepthMap> depths,
                                 std::span<const std::size_t> offsets,
                                 double tau = kDefaultDepthTolerance);

/// Renders the cloud at every manifest view and scores all (t - o, t) pairs
/// against the manifest depth maps. Throws InvariantError when the scene has
/// fewer than max(offsets) + 1 views.
ConsistencyReport run_protocol(const SceneManifest& scene, const FeaturePointCloud& cloud,
                               std::span<const std::size_t> offsets, const ProtocolConfig& cfg);

/// Per-view 2D stylization of a rendered view: the transform is fitted on this
/// view's covered pixels alone and applied to them. This is the independent
/// per-frame baseline that cross-view consistency is compared against.
/// `clamp_unit` clamps the stylized values to [0, 1] as RGB renders are.
RenderedView stylize_view_2d(const RenderedView& view, const FeatureMap& style,
                             const TransformOptions& opts, bool clamp_unit = false);

}  // namespace splatstyle
