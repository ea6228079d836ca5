#pragma once

// Test fixtures and brute-force reference implementations. The references
// share no code with the library beyond plain data types.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <unistd.h>

#include "splatstyle/camera.hpp"
#include "splatstyle/feature_map.hpp"
#include "splatstyle/point_cloud.hpp"

namespace testing {

namespace fs = std::filesystem;

/// Fresh directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("splatstyle_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << bytes;
}

inline std::vector<float> random_positions(std::size_t n, std::uint64_t seed, float lo = 0.0f,
                                           float hi = 1.0f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  std::vector<float> p(3 * n);
  for (auto& v : p) v = u(rng);
  return p;
}

inline splatstyle::FeaturePointCloud random_cloud(std::size_t n, std::uint32_t c,
                                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  splatstyle::FeaturePointCloud cloud(c);
  std::vector<float> f(c);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3f p(u(rng), u(rng), u(rng));
    for (auto& v : f) v = u(rng);
    cloud.push_back(p, f, static_cast<std::uint32_t>(i % 7));
  }
  return cloud;
}

inline splatstyle::Camera simple_camera(std::uint32_t size, double f,
                                        const Eigen::Vector3d& eye = {0, 0, -3}) {
  splatstyle::Camera cam;
  cam.intrinsics = {f, f, size / 2.0, size / 2.0, size, size};
  cam.pose = splatstyle::look_at(eye, Eigen::Vector3d::Zero());
  return cam;
}

/// Random rotation via a normalized random quaternion.
inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::Vector4d q(g(rng), g(rng), g(rng), g(rng));
  q.normalize();
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w),
      2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
      2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y);
  return r;
}

inline double dist2(const std::vector<float>& pos, std::size_t i, const Eigen::Vector3d& q) {
  double s = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double d = static_cast<double>(pos[3 * i + a]) - q[a];
    s += d * d;
  }
  return s;
}

inline Eigen::Vector3d point(const std::vector<float>& pos, std::size_t i) {
  return {pos[3 * i], pos[3 * i + 1], pos[3 * i + 2]};
}

/// Greedy farthest point sampling straight from the definition: every step
/// recomputes each candidate's distance to every picked point.
inline std::vector<std::size_t> fps_oracle(const std::vector<float>& pos, std::size_t n,
                                           std::size_t start) {
  const std::size_t total = pos.size() / 3;
  std::vector<std::size_t> picked{start};
  std::vector<bool> used(total, false);
  used[start] = true;
  while (picked.size() < std::min(n, total)) {
    double best = -1.0;
    std::size_t arg = total;
    for (std::size_t i = 0; i < total; ++i) {
      if (used[i]) continue;
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t p : picked) nearest = std::min(nearest, dist2(pos, i, point(pos, p)));
      if (nearest > best) {
        best = nearest;
        arg = i;
      }
    }
    used[arg] = true;
    picked.push_back(arg);
  }
  return picked;
}

/// Distance filter, sorted nearest-first (ties by index), truncated to k; the
/// single nearest point when nothing is in range.
inline std::vector<std::size_t> ball_query_oracle(const std::vector<float>& pos,
                                                  const Eigen::Vector3d& c, double r,
                                                  std::size_t k) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t i = 0; i < pos.size() / 3; ++i) all.emplace_back(dist2(pos, i, c), i);
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> out;
  for (const auto& [d2, i] : all) {
    if (d2 <= r * r && out.size() < k) out.push_back(i);
  }
  if (out.empty()) out.push_back(all.front().second);
  return out;
}

struct BruteRender {
  std::vector<std::optional<std::size_t>> winner;  // per pixel
  std::vector<double> depth;
};

/// Every pixel tests every point: covered when the pixel center lies within
/// `radius` of the projection; the winner has the smallest depth, then the
/// lexicographically smallest feature, then the smallest index.
inline BruteRender brute_splat(const splatstyle::FeaturePointCloud& cloud,
                               const splatstyle::Camera& cam, double radius,
                               double z_near = 1e-4) {
  const auto& k = cam.intrinsics;
  const std::size_t n = cloud.size();
  std::vector<double> u(n), v(n), z(n);
  std::vector<bool> front(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d x =
        cam.pose.R * cloud.position(i).cast<double>() + cam.pose.t;
    if (!(x.z() > z_near)) continue;
    front[i] = true;
    u[i] = k.fx * x.x() / x.z() + k.cx;
    v[i] = k.fy * x.y() / x.z() + k.cy;
    z[i] = x.z();
  }
  BruteRender out;
  out.winner.resize(std::size_t{k.width} * k.height);
  out.depth.assign(out.winner.size(), std::numeric_limits<double>::infinity());
  for (std::uint32_t r = 0; r < k.height; ++r) {
    for (std::uint32_t c = 0; c < k.width; ++c) {
      std::optional<std::size_t> best;
      for (std::size_t i = 0; i < n; ++i) {
        if (!front[i]) continue;
        const double dx = c + 0.5 - u[i];
        const double dy = r + 0.5 - v[i];
        if (dx * dx + dy * dy > radius * radius) continue;
        if (!best) {
          best = i;
          continue;
        }
        const std::size_t b = *best;
        bool better;
        if (z[i] != z[b]) {
          better = z[i] < z[b];
        } else {
          const auto fi = cloud.feature(i);
          const auto fb = cloud.feature(b);
          better = std::lexicographical_compare(fi.begin(), fi.end(), fb.begin(), fb.end()) ||
                   (std::equal(fi.begin(), fi.end(), fb.begin()) && i < b);
        }
        if (better) best = i;
      }
      const std::size_t p = std::size_t{r} * k.width + c;
      out.winner[p] = best;
      if (best) out.depth[p] = z[*best];
    }
  }
  return out;
}

/// Pixels with a depth jump above `rel` (relative) or a coverage change
/// anywhere within Chebyshev distance `band`.
inline std::vector<bool> near_discontinuity(const std::vector<float>& depth, std::uint32_t w,
                                            std::uint32_t h, int band, double rel = 0.05) {
  std::vector<bool> edge(depth.size(), false);
  for (std::uint32_t r = 0; r < h; ++r) {
    for (std::uint32_t c = 0; c < w; ++c) {
      const float d = depth[std::size_t{r} * w + c];
      bool jump = false;
      for (int dy = -1; dy <= 1 && !jump; ++dy) {
        for (int dx = -1; dx <= 1 && !jump; ++dx) {
          const int rr = static_cast<int>(r) + dy;
          const int cc = static_cast<int>(c) + dx;
          if (rr < 0 || cc < 0 || rr >= static_cast<int>(h) || cc >= static_cast<int>(w)) continue;
          const float e = depth[std::size_t(rr) * w + std::size_t(cc)];
          const bool valid_d = d > 0.0f && std::isfinite(d);
          const bool valid_e = e > 0.0f && std::isfinite(e);
          if (valid_d != valid_e) jump = true;
          else if (valid_d && std::abs(d - e) > rel * std::min(d, e)) jump = true;
        }
      }
      if (!jump) continue;
      for (int dy = -band; dy <= band; ++dy) {
        for (int dx = -band; dx <= band; ++dx) {
          const int rr = static_cast<int>(r) + dy;
          const int cc = static_cast<int>(c) + dx;
          if (rr < 0 || cc < 0 || rr >= static_cast<int>(h) || cc >= static_cast<int>(w)) continue;
          edge[std::size_t(rr) * w + std::size_t(cc)] = true;
        }
      }
    }
  }
  return edge;
}

/// Population covariance computed from the definition, one sample per row.
inline Eigen::MatrixXd naive_cov(const Eigen::MatrixXd& x) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(x.cols(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::RowVectorXd d = x.row(i) - mean;
    cov += d.transpose() * d;
  }
  return cov / static_cast<double>(x.rows());
}

inline Eigen::MatrixXd as_matrix(const std::vector<float>& data, std::size_t c) {
  const auto n = static_cast<Eigen::Index>(data.size() / c);
  Eigen::MatrixXd m(n, static_cast<Eigen::Index>(c));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(c); ++j) m(i, j) = data[i * c + j];
  }
  return m;
}

/// k-NN density (k / volume of the k-th neighbour ball) coefficient of variation.
inline double knn_density_cv(const std::vector<float>& pos, std::size_t k) {
  const std::size_t n = pos.size() / 3;
  std::vector<double> density(n);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) d2[j] = dist2(pos, j, point(pos, i));
    std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(k), d2.end());
    const double rk = std::sqrt(d2[k]);
    density[i] = static_cast<double>(k) / (rk * rk * rk);
  }
  double mean = 0.0;
  for (double d : density) mean += d;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double d : density) var += (d - mean) * (d - mean);
  var /= static_cast<double>(n);
  return std::sqrt(var) / mean;
}

/// Two Gaussian blobs with a 10:1 point-count imbalance; features carry a
/// per-blob offset so the clusters are distinguishable.
inline splatstyle::FeaturePointCloud imbalanced_cloud(std::size_t dense, std::size_t sparse,
                                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 0.15f);
  splatstyle::FeaturePointCloud cloud(3);
  for (std::size_t i = 0; i < dense + sparse; ++i) {
    const bool first = i < dense;
    const float cx = first ? -0.6f : 0.6f;
    const Eigen::Vector3f p(cx + g(rng), g(rng), g(rng));
    const float f[3] = {first ? 1.0f : 0.0f, g(rng), g(rng)};
    cloud.push_back(p, f, 0);
  }
  return cloud;
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace testing

namespace fs = std::filesystem;
