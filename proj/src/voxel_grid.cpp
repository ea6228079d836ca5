#include "splatstyle/voxel_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "splatstyle/error.hpp"

namespace splatstyle {

namespace {
constexpr int kKeyBits = 21;
constexpr std::int64_t kMaxCells = (std::int64_t{1} << kKeyBits) - 1;
}  // namespace

VoxelGrid::VoxelGrid(std::span<const float> positions, double cell_size)
    : positions_(positions) {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    throw InvariantError("voxel cell size must be positive");
  }
  if (positions.size() % 3 != 0) throw DimensionError("positions must be xyz triples");
  const std::size_t n = positions.size() / 3;
  if (n > std::numeric_limits<std::uint32_t>::max()) {
    throw DimensionError("voxel grid supports at most 2^32 - 1 points");
  }

  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], static_cast<double>(positions[3 * i + a]));
      hi[a] = std::max(hi[a], static_cast<double>(positions[3 * i + a]));
    }
  }
  if (n == 0) lo = hi = Eigen::Vector3d::Zero();
  origin_ = lo;
  // Coarsen the grid if the key space would overflow; queries stay exact.
  const double extent = (hi - lo).maxCoeff();
  cell_size_ = std::max(cell_size, extent / static_cast<double>(kMaxCells - 2));
  max_cell_ = kMaxCells;

  entries_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const float* p = positions.data() + 3 * i;
    entries_[i] = {pack(cell_coord(p[0], 0), cell_coord(p[1], 1), cell_coord(p[2], 2)),
                   static_cast<std::uint32_t>(i)};
  }
  std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
    return a.key != b.key ? a.key < b.key : a.index < b.index;
  });
  for (std::uint32_t begin = 0; begin < entries_.size();) {
    std::uint32_t end = begin;
    while (end < entries_.size() && entries_[end].key == entries_[begin].key) ++end;
    cells_.emplace(entries_[begin].key, std::make_pair(begin, end));
    begin = end;
  }
}

std::int64_t VoxelGrid::cell_coord(double value, int axis) const {
  return static_cast<std::int64_t>(std::floor((value - origin_[axis]) / cell_size_));
}

std::uint64_t VoxelGrid::pack(std::int64_t ix, std::int64_t iy, std::int64_t iz) {
  return (static_cast<std::uint64_t>(ix) << (2 * kKeyBits)) |
         (static_cast<std::uint64_t>(iy) << kKeyBits) | static_cast<std::uint64_t>(iz);
}

void VoxelGrid::radius_search(const Eigen::Vector3d& center, double radius,
                              std::vector<std::pair<double, std::size_t>>& out) const {
  out.clear();
  if (entries_.empty() || !(radius >= 0.0)) return;
  const double r2 = radius * radius;
  std::int64_t lo[3];
  std::int64_t hi[3];
  for (int a = 0; a < 3; ++a) {
    const double l = std::floor((center[a] - radius - origin_[a]) / cell_size_);
    const double h = std::floor((center[a] + radius - origin_[a]) / cell_size_);
    if (h < 0.0 || l > static_cast<double>(max_cell_)) return;  // ball misses the grid
    lo[a] = static_cast<std::int64_t>(std::max(l, 0.0));
    hi[a] = static_cast<std::int64_t>(std::min(h, static_cast<double>(max_cell_)));
  }
  const double box_cells = static_cast<double>(hi[0] - lo[0] + 1) *
                           static_cast<double>(hi[1] - lo[1] + 1) *
                           static_cast<double>(hi[2] - lo[2] + 1);
  if (box_cells > static_cast<double>(cells_.size())) {
    // Ball spans more cells than are occupied: scanning all points is cheaper.
    for (const Entry& e : entries_) {
      const double d2 = squared_distance(positions_.data() + 3 * std::size_t{e.index}, center);
      if (d2 <= r2) out.emplace_back(d2, e.index);
    }
    return;
  }
  for (std::int64_t ix = lo[0]; ix <= hi[0]; ++ix) {
    for (std::int64_t iy = lo[1]; iy <= hi[1]; ++iy) {
      for (std::int64_t iz = lo[2]; iz <= hi[2]; ++iz) {
        const auto it = cells_.find(pack(ix, iy, iz));
        if (it == cells_.end()) continue;
        for (std::uint32_t e = it->second.first; e < it->second.second; ++e) {
          const std::size_t idx = entries_[e].index;
          const double d2 = squared_distance(positions_.data() + 3 * idx, center);
          if (d2 <= r2) out.emplace_back(d2, idx);
        }
      }
    }
  }
}

}  // namespace splatstyle
