#include "splatstyle/pipeline.hpp"

#include "splatstyle/error.hpp"

namespace splatstyle {

FeaturePointCloud build_scene_cloud(const SceneManifest& manifest,
                                    std::optional<std::size_t> downsample, std::uint64_t seed) {
  std::vector<FeaturePointCloud> parts;
  parts.reserve(manifest.views.size());
  for (std::size_t i = 0; i < manifest.views.size(); ++i) {
    const LoadedView view = load_view(manifest, i);
    parts.push_back(back_project(view.features, view.depth, view.camera,
                                 static_cast<std::uint32_t>(i)));
  }
  FeaturePointCloud cloud = merge(parts);
  if (downsample) cloud = uniform_downsample(cloud, *downsample, seed);
  return cloud;
}

std::optional<std::size_t> default_compressed_dim(std::uint32_t channels) {
  if (channels > 32) return 32;
  return std::nullopt;
}

StylizeResult stylize_cloud(const FeaturePointCloud& cloud, const FeatureMap& style,
                            const StylizeParams& params, std::uint64_t seed) {
  if (cloud.channels != style.channels) {
    throw DimensionError("cloud has " + std::to_string(cloud.channels) +
                         " channels but the style input has " + std::to_string(style.channels));
  }
  StylizeResult result;
  const FeaturePointCloud aggregated = aggregate_pipeline(cloud, params.aggregation, seed);
  result.aggregated_points = aggregated.size();
  TransformOptions opts = params.transform;
  if (params.auto_compression && !opts.compressed_dim) {
    opts.compressed_dim = default_compressed_dim(cloud.channels);
    if (opts.compressed_dim && aggregated.size() < *opts.compressed_dim) opts.compressed_dim.reset();
  }
  result.transform = build_transform(aggregated, style, opts, &result.diagnostics);
  result.cloud = apply_transform(cloud, result.transform);
  return result;
}

}  // namespace splatstyle
