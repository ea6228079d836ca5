#include "splatstyle/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <unordered_map>

#include "binary_io.hpp"
#include "splatstyle/error.hpp"
#include "splatstyle/random.hpp"

namespace splatstyle {

namespace {
constexpr std::uint32_t kCloudVersion = 1;
}

void FeaturePointCloud::reserve(std::size_t n) {
  positions.reserve(3 * n);
  features.reserve(std::size_t{channels} * n);
  source_view.reserve(n);
}

void FeaturePointCloud::push_back(const Eigen::Vector3f& p, std::span<const float> f,
                                  std::uint32_t view) {
  if (f.size() != channels) throw DimensionError("feature length does not match cloud channels");
  positions.insert(positions.end(), {p.x(), p.y(), p.z()});
  features.insert(features.end(), f.begin(), f.end());
  source_view.push_back(view);
}

FeaturePointCloud FeaturePointCloud::select(std::span<const std::size_t> indices) const {
  FeaturePointCloud out(channels);
  out.positions.resize(3 * indices.size());
  out.features.resize(std::size_t{channels} * indices.size());
  out.source_view.resize(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    std::copy_n(positions.begin() + 3 * i, 3, out.positions.begin() + 3 * k);
    std::copy_n(features.begin() + i * channels, channels, out.features.begin() + k * channels);
    out.source_view[k] = source_view[i];
  }
  return out;
}

void FeaturePointCloud::validate() const {
  const std::size_t n = source_view.size();
  if (positions.size() != 3 * n || features.size() != std::size_t{channels} * n) {
    throw InvariantError("point cloud arrays disagree in length");
  }
  const auto finite = [](float v) { return std::isfinite(v); };
  if (!std::all_of(positions.begin(), positions.end(), finite) ||
      !std::all_of(features.begin(), features.end(), finite)) {
    throw InvariantError("point cloud contains non-finite values");
  }
}

Eigen::Vector3d unproject(const Camera& camera, double px, double py, double depth) {
  const auto& k = camera.intrinsics;
  const Eigen::Vector3d cam((px - k.cx) / k.fx * depth, (py - k.cy) / k.fy * depth, depth);
  return camera.pose.R.transpose() * (cam - camera.pose.t);
}

FeaturePointCloud back_project(const FeatureMap& features, const DepthMap& depth,
                               const Camera& camera, std::uint32_t view_index) {
  if (features.width != depth.width || features.height != depth.height) {
    throw DimensionError("depth " + std::to_string(depth.width) + "x" +
                         std::to_string(depth.height) + " does not match features " +
                         std::to_string(features.width) + "x" + std::to_string(features.height));
  }
  camera.pose.validate();

  const std::uint32_t h = depth.height;
  const std::uint32_t w = depth.width;
  const std::uint32_t c = features.channels;

  // Row offsets into the output so rows can be filled independently.
  std::vector<std::size_t> row_start(h + 1, 0);
  for (std::uint32_t r = 0; r < h; ++r) {
    std::size_t count = 0;
    for (std::uint32_t col = 0; col < w; ++col) count += depth.valid(r, col) ? 1 : 0;
    row_start[r + 1] = row_start[r] + count;
  }
  const std::size_t n = row_start[h];

  FeaturePointCloud cloud(c);
  cloud.positions.resize(3 * n);
  cloud.features.resize(std::size_t{c} * n);
  cloud.source_view.assign(n, view_index);
  if (n == 0) {
    std::cerr << "warning: view " << view_index << " has no valid depth; no points produced\n";
    return cloud;
  }

#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < static_cast<std::int64_t>(h); ++r) {
    std::size_t out = row_start[r];
    for (std::uint32_t col = 0; col < w; ++col) {
      const float d = depth.at(static_cast<std::uint32_t>(r), col);
      if (!(d > 0.0f)) continue;
      const Eigen::Vector3d x = unproject(camera, col + 0.5, r + 0.5, d);
      cloud.positions[3 * out + 0] = static_cast<float>(x.x());
      cloud.positions[3 * out + 1] = static_cast<float>(x.y());
      cloud.positions[3 * out + 2] = static_cast<float>(x.z());
      const auto f = features.pixel(static_cast<std::uint32_t>(r), col);
      std::copy(f.begin(), f.end(), cloud.features.begin() + out * c);
      ++out;
    }
  }
  return cloud;
}

FeaturePointCloud merge(std::span<const FeaturePointCloud> clouds) {
  FeaturePointCloud out(clouds.empty() ? 0 : clouds.front().channels);
  bool have_channels = false;
  std::size_t total = 0;
  for (const auto& cloud : clouds) {
    if (cloud.empty()) continue;
    if (!have_channels) {
      out.channels = cloud.channels;
      have_channels = true;
    } else if (cloud.channels != out.channels) {
      throw DimensionError("cannot merge clouds with " + std::to_string(out.channels) + " and " +
                           std::to_string(cloud.channels) + " channels");
    }
    total += cloud.size();
  }
  out.reserve(total);
  for (const auto& cloud : clouds) {
    if (cloud.empty()) continue;
    out.positions.insert(out.positions.end(), cloud.positions.begin(), cloud.positions.end());
    out.features.insert(out.features.end(), cloud.features.begin(), cloud.features.end());
    out.source_view.insert(out.source_view.end(), cloud.source_view.begin(),
                           cloud.source_view.end());
  }
  return out;
}

std::vector<std::size_t> sample_subset(std::size_t n, std::size_t target, std::uint64_t seed) {
  if (target >= n) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  // Partial Fisher-Yates over a virtual identity array; only displaced slots are stored.
  Rng rng(seed);
  std::unordered_map<std::size_t, std::size_t> displaced;
  const auto slot = [&](std::size_t i) {
    const auto it = displaced.find(i);
    return it == displaced.end() ? i : it->second;
  };
  std::vector<std::size_t> picked;
  picked.reserve(target);
  for (std::size_t i = 0; i < target; ++i) {
    const std::size_t j = i + uniform_index(rng, n - i);
    const std::size_t at_i = slot(i);
    picked.push_back(slot(j));
    displaced[j] = at_i;
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

FeaturePointCloud uniform_downsample(const FeaturePointCloud& cloud, std::size_t target,
                                     std::uint64_t seed) {
  if (target == 0) throw InvariantError("downsample target must be >= 1");
  if (cloud.size() <= target) return cloud;
  const auto indices = sample_subset(cloud.size(), target, seed);
  return cloud.select(indices);
}

void save_cloud(const FeaturePointCloud& cloud, const std::filesystem::path& path) {
  cloud.validate();
  detail::BinaryWriter out(path);
  out.magic("FPCL");
  out.scalar(kCloudVersion);
  out.scalar(static_cast<std::uint64_t>(cloud.size()));
  out.scalar(cloud.channels);
  out.array<float>(cloud.positions);
  out.array<float>(cloud.features);
  out.array<std::uint32_t>(cloud.source_view);
  out.finish();
}

FeaturePointCloud load_cloud(const std::filesystem::path& path) {
  detail::BinaryReader in(path);
  in.expect_magic("FPCL");
  const auto version = in.scalar<std::uint32_t>();
  if (version != kCloudVersion) {
    throw FormatError("unsupported cloud version " + std::to_string(version) + " in " +
                      path.string());
  }
  const auto n = in.scalar<std::uint64_t>();
  FeaturePointCloud cloud(in.scalar<std::uint32_t>());
  cloud.positions = in.array<float>(3 * n);
  cloud.features = in.array<float>(std::size_t{cloud.channels} * n);
  cloud.source_view = in.array<std::uint32_t>(n);
  in.expect_end();
  try {
    cloud.validate();
  } catch (const InvariantError& e) {
    throw InvariantError(path.string() + ": " + e.what());
  }
  return cloud;
}

}  // namespace splatstyle
