#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace splatstyle {

/// Uniform voxel grid over a fixed point set (xyz-interleaved floats) for
/// radius queries. Points are sorted by cell key; a hash map locates each
/// occupied cell's run, so a query touches only the cells overlapping its ball.
class VoxelGrid {
 public:
  VoxelGrid(std::span<const float> positions, double cell_size);

  /// Indices (unordered) of points with squared distance <= radius^2 from `center`,
  /// paired with that squared distance.
  void radius_search(const Eigen::Vector3d& center, double radius,
                     std::vector<std::pair<double, std::size_t>>& out) const;

  double cell_size() const { return cell_size_; }
  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    std::uint64_t key;
    std::uint32_t index;
  };

  std::int64_t cell_coord(double value, int axis) const;
  static std::uint64_t pack(std::int64_t ix, std::int64_t iy, std::int64_t iz);

  std::span<const float> positions_;
  double cell_size_ = 1.0;
  Eigen::Vector3d origin_ = Eigen::Vector3d::Zero();
  std::int64_t max_cell_ = 0;
  std::vector<Entry> entries_;
  std::unordered_map<std::uint64_t, std::pair<std::uint32_t, std::uint32_t>> cells_;
};

/// Squared Euclidean distance between a stored float point and a query, in double.
inline double squared_distance(const float* p, const Eigen::Vector3d& q) {
  const double dx = static_cast<double>(p[0]) - q.x();
  const double dy = static_cast<double>(p[1]) - q.y();
  const double dz = static_cast<double>(p[2]) - q.z();
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace splatstyle
