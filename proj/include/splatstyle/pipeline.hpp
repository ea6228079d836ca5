#pragma once

#include <cstdint>
#include <optional>

#include "splatstyle/aggregation.hpp"
#include "splatstyle/point_cloud.hpp"
#include "splatstyle/scene_io.hpp"
#include "splatstyle/style_transform.hpp"

namespace splatstyle {

/// Back-projects every view of the manifest and merges the results in view
/// order; optionally downsamples uniformly to `downsample` points.
FeaturePointCloud build_scene_cloud(const SceneManifest& manifest,
                                    std::optional<std::size_t> downsample = std::nullopt,
                                    std::uint64_t seed = 0);

struct StylizeParams {
  AggregationPipelineConfig aggregation = AggregationPipelineConfig::defaults();
  TransformOptions transform;
  /// When unset: 32 for clouds with more than 32 channels, none otherwise.
  bool auto_compression = true;
};

/// Compressed dimension used when StylizeParams::auto_compression is set.
std::optional<std::size_t> default_compressed_dim(std::uint32_t channels);

struct StylizeResult {
  FeaturePointCloud cloud;
  StyleTransform transform;
  TransformDiagnostics diagnostics;
  std::size_t aggregated_points = 0;
};

/// Aggregates the cloud, fits the transform between the aggregated content and
/// the style sample, and applies it to the full cloud.
StylizeResult stylize_cloud(const FeaturePointCloud& cloud, const FeatureMap& style,
                            const StylizeParams& params, std::uint64_t seed = 0);

}  // namespace splatstyle
