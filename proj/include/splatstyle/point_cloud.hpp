#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "splatstyle/camera.hpp"
#include "splatstyle/feature_map.hpp"

namespace splatstyle {

/// World-space points with one C-dimensional feature each: the single scene
/// representation that gets stylized once and rendered from any view.
struct FeaturePointCloud {
  std::uint32_t channels = 0;
  std::vector<float> positions;           // 3 * N, xyz interleaved
  std::vector<float> features;            // C * N, point-major
  std::vector<std::uint32_t> source_view;  // N

  FeaturePointCloud() = default;
  explicit FeaturePointCloud(std::uint32_t c) : channels(c) {}

  std::size_t size() const { return source_view.size(); }
  bool empty() const { return source_view.empty(); }

  Eigen::Map<const Eigen::Vector3f> position(std::size_t i) const {
    return Eigen::Map<const Eigen::Vector3f>(positions.data() + 3 * i);
  }
  std::span<const float> feature(std::size_t i) const {
    return {features.data() + i * channels, channels};
  }
  std::span<float> feature(std::size_t i) { return {features.data() + i * channels, channels}; }

  void reserve(std::size_t n);
  void push_back(const Eigen::Vector3f& p, std::span<const float> f, std::uint32_t view);

  /// Copy of the points at `indices`, in that order.
  FeaturePointCloud select(std::span<const std::size_t> indices) const;

  /// Throws InvariantError when array sizes disagree or any value is non-finite.
  void validate() const;

  bool operator==(const FeaturePointCloud&) const = default;
};

/// World point seen at continuous pixel coordinates (px, py) with z-depth `depth`:
/// X = R^T (K^-1 * depth * [px, py, 1]^T - t).
Eigen::Vector3d unproject(const Camera& camera, double px, double py, double depth);

/// Lifts every valid-depth pixel (taken at its center) to a world point carrying
/// that pixel's feature. An all-invalid depth map gives an empty cloud.
FeaturePointCloud back_project(const FeatureMap& features, const DepthMap& depth,
                               const Camera& camera, std::uint32_t view_index);

/// Concatenation in input order. Empty inputs are skipped; throws
/// DimensionError when non-empty inputs disagree on C.
FeaturePointCloud merge(std::span<const FeaturePointCloud> clouds);

/// Indices of a uniformly random subset of size `target` out of `n`, ascending.
/// Deterministic in (n, target, seed).
std::vector<std::size_t> sample_subset(std::size_t n, std::size_t target, std::uint64_t seed);

/// Returns the input unchanged when it has at most `target` points, otherwise a
/// uniformly random subset of exactly `target` points (original order kept).
FeaturePointCloud uniform_downsample(const FeaturePointCloud& cloud, std::size_t target,
                                     std::uint64_t seed);

// FPCL: "FPCL" | version u32 | N u64 | C u32 | positions f32 x 3N | features f32 x CN |
// source_view u32 x N, little endian.
void save_cloud(const FeaturePointCloud& cloud, const std::filesystem::path& path);
FeaturePointCloud load_cloud(const std::filesystem::path& path);

}  // namespace splatstyle
