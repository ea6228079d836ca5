#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "splatstyle/point_cloud.hpp"
#include "splatstyle/voxel_grid.hpp"

namespace splatstyle {

enum class Pooling { max, mean };

const char* to_string(Pooling pooling);
Pooling parse_pooling(const std::string& text);

/// One set-abstraction stage: farthest-point sample `num_samples` centroids,
/// group up to `max_group_size` neighbours within `radius`, pool their features.
struct AggregationStageConfig {
  std::size_t num_samples = 1024;
  double radius = 0.2;
  std::size_t max_group_size = 64;
  Pooling pooling = Pooling::mean;

  void validate() const;
};

struct AggregationPipelineConfig {
  std::vector<AggregationStageConfig> stages;

  /// (4096, 0.05) -> (2048, 0.1) -> (1024, 0.2), k = 64, mean pooling.
  static AggregationPipelineConfig defaults();

  /// Non-empty, every stage valid, sample counts strictly decreasing.
  void validate() const;
};

/// Greedy farthest point sampling over xyz-interleaved positions. The first pick
/// is `start_index`; each next pick maximizes the distance to the picked set,
/// ties going to the lowest index. Returns min(n, N) indices in pick order.
std::vector<std::size_t> farthest_point_sample(std::span<const float> positions, std::size_t n,
                                               std::size_t start_index = 0);

/// Radius grouping backed by a VoxelGrid with cell size equal to the radius.
class BallQuery {
 public:
  BallQuery(std::span<const float> positions, double radius, std::size_t max_group_size);

  /// Up to k indices within the radius, nearest first (ties by index). When no
  /// point is in range the single nearest point is returned, so groups are never empty.
  std::vector<std::size_t> operator()(const Eigen::Vector3d& centroid) const;

 private:
  std::span<const float> positions_;
  double radius_;
  std::size_t max_group_size_;
  VoxelGrid grid_;
};

/// One-shot convenience over BallQuery.
std::vector<std::size_t> ball_query(std::span<const float> positions,
                                    const Eigen::Vector3d& centroid, double radius,
                                    std::size_t max_group_size);

/// Largest side of the cloud's axis-aligned bounding box (1 for degenerate clouds).
double bounding_extent(const FeaturePointCloud& cloud);

/// FPS start index for a seed: seed 0 starts at point 0, other seeds draw uniformly.
std::size_t fps_start_index(std::size_t n, std::uint64_t seed);

/// Runs one stage with the radius in the cloud's own coordinate units.
/// Output positions are the sampled centroids themselves, features the pooled groups.
FeaturePointCloud aggregate_stage(const FeaturePointCloud& cloud,
                                  const AggregationStageConfig& cfg, std::uint64_t seed);

/// Runs the stages in order. Radii are read in a frame where the cloud's bounding
/// box is scaled to the unit cube; output positions stay in world coordinates.
FeaturePointCloud aggregate_pipeline(const FeaturePointCloud& cloud,
                                     const AggregationPipelineConfig& cfg, std::uint64_t seed);

}  // namespace splatstyle
