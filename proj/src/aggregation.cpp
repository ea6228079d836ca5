#include "splatstyle/aggregation.hpp"

#include <algorithm>
#include <limits>

#include "splatstyle/error.hpp"
#include "splatstyle/random.hpp"

namespace splatstyle {

namespace {

using Candidate = std::pair<double, std::size_t>;  // (squared distance, index)

std::size_t point_count(std::span<const float> positions) {
  if (positions.size() % 3 != 0) throw DimensionError("positions must be xyz triples");
  return positions.size() / 3;
}

Eigen::Vector3d point_at(std::span<const float> positions, std::size_t i) {
  return {positions[3 * i], positions[3 * i + 1], positions[3 * i + 2]};
}

FeaturePointCloud run_stage(const FeaturePointCloud& cloud, const AggregationStageConfig& cfg,
                            double radius, std::uint64_t seed) {
  if (cloud.empty()) throw InsufficientSamplesError("aggregation needs a non-empty cloud");
  const std::size_t n = cloud.size();
  const auto centers = farthest_point_sample(cloud.positions, cfg.num_samples,
                                             fps_start_index(n, seed));
  const BallQuery query(cloud.positions, radius, cfg.max_group_size);
  const std::uint32_t c = cloud.channels;

  FeaturePointCloud out = cloud.select(centers);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t s = 0; s < static_cast<std::int64_t>(centers.size()); ++s) {
    const auto group = query(point_at(cloud.positions, centers[s]));
    auto pooled = out.feature(static_cast<std::size_t>(s));
    for (std::uint32_t ch = 0; ch < c; ++ch) {
      if (cfg.pooling == Pooling::max) {
        float best = -std::numeric_limits<float>::infinity();
        for (std::size_t g : group) best = std::max(best, cloud.features[g * c + ch]);
        pooled[ch] = best;
      } else {
        double sum = 0.0;
        for (std::size_t g : group) sum += cloud.features[g * c + ch];
        pooled[ch] = static_cast<float>(sum / static_cast<double>(group.size()));
      }
    }
  }
  return out;
}

}  // namespace

const char* to_string(Pooling pooling) { return pooling == Pooling::max ? "max" : "mean"; }

Pooling parse_pooling(const std::string& text) {
  if (text == "max") return Pooling::max;
  if (text == "mean") return Pooling::mean;
  throw InvariantError("unknown pooling \"" + text + "\" (expected max or mean)");
}

void AggregationStageConfig::validate() const {
  if (num_samples < 1) throw InvariantError("stage needs num_samples >= 1");
  if (!(radius > 0.0)) throw InvariantError("stage radius must be > 0");
  if (max_group_size < 1) throw InvariantError("stage needs max_group_size >= 1");
}

AggregationPipelineConfig AggregationPipelineConfig::defaults() {
  AggregationPipelineConfig cfg;
  cfg.stages = {{4096, 0.05, 64, Pooling::mean},
                {2048, 0.1, 64, Pooling::mean},
                {1024, 0.2, 64, Pooling::mean}};
  return cfg;
}

void AggregationPipelineConfig::validate() const {
  if (stages.empty()) throw InvariantError("aggregation pipeline needs at least one stage");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    stages[i].validate();
    if (i > 0 && stages[i].num_samples >= stages[i - 1].num_samples) {
      throw InvariantError("stage sample counts must be strictly decreasing");
    }
  }
}

std::vector<std::size_t> farthest_point_sample(std::span<const float> positions, std::size_t n,
                                               std::size_t start_index) {
  const std::size_t total = point_count(positions);
  if (total == 0) throw InsufficientSamplesError("farthest point sampling on an empty set");
  if (start_index >= total) throw InvariantError("FPS start index out of range");
  const std::size_t count = std::min(n, total);

  // Squared distance to the picked set; picked points are marked with -1.
  std::vector<double> min_d2(total, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> picks;
  picks.reserve(count);
  std::size_t last = start_index;

  while (picks.size() < count) {
    picks.push_back(last);
    min_d2[last] = -1.0;
    if (picks.size() == count) break;
    const Eigen::Vector3d anchor = point_at(positions, last);

    Candidate best{-2.0, total};
#pragma omp parallel
    {
      Candidate local{-2.0, total};
#pragma omp for schedule(static) nowait
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(total); ++i) {
        double& d = min_d2[i];
        if (d < 0.0) continue;
        d = std::min(d, squared_distance(positions.data() + 3 * i, anchor));
        if (d > local.first) local = {d, static_cast<std::size_t>(i)};
      }
#pragma omp critical
      if (local.first > best.first || (local.first == best.first && local.second < best.second)) {
        best = local;
      }
    }
    last = best.second;
  }
  return picks;
}

BallQuery::BallQuery(std::span<const float> positions, double radius,
                     std::size_t max_group_size)
    : positions_(positions),
      radius_(radius),
      max_group_size_(max_group_size),
      grid_(positions, radius) {
  if (!(radius > 0.0)) throw InvariantError("ball query radius must be > 0");
  if (max_group_size < 1) throw InvariantError("ball query cap must be >= 1");
}

std::vector<std::size_t> BallQuery::operator()(const Eigen::Vector3d& centroid) const {
  const std::size_t total = positions_.size() / 3;
  if (total == 0) throw InsufficientSamplesError("ball query on an empty set");

  std::vector<Candidate> hits;
  grid_.radius_search(centroid, radius_, hits);
  if (hits.empty()) {
    Candidate nearest{std::numeric_limits<double>::infinity(), 0};
    for (std::size_t i = 0; i < total; ++i) {
      const double d2 = squared_distance(positions_.data() + 3 * i, centroid);
      if (d2 < nearest.first) nearest = {d2, i};
    }
    return {nearest.second};
  }
  const std::size_t keep = std::min(max_group_size_, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end());
  std::vector<std::size_t> group(keep);
  for (std::size_t i = 0; i < keep; ++i) group[i] = hits[i].second;
  return group;
}

std::vector<std::size_t> ball_query(std::span<const float> positions,
                                    const Eigen::Vector3d& centroid, double radius,
                                    std::size_t max_group_size) {
  return BallQuery(positions, radius, max_group_size)(centroid);
}

double bounding_extent(const FeaturePointCloud& cloud) {
  if (cloud.empty()) return 1.0;
  Eigen::Vector3d lo = cloud.position(0).cast<double>();
  Eigen::Vector3d hi = lo;
  for (std::size_t i = 1; i < cloud.size(); ++i) {
    const Eigen::Vector3d p = cloud.position(i).cast<double>();
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double extent = (hi - lo).maxCoeff();
  return extent > 0.0 ? extent : 1.0;
}

std::size_t fps_start_index(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InsufficientSamplesError("no points to start sampling from");
  if (seed == 0) return 0;
  Rng rng(seed);
  return static_cast<std::size_t>(uniform_index(rng, n));
}

FeaturePointCloud aggregate_stage(const FeaturePointCloud& cloud,
                                  const AggregationStageConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  return run_stage(cloud, cfg, cfg.radius, seed);
}

FeaturePointCloud aggregate_pipeline(const FeaturePointCloud& cloud,
                                     const AggregationPipelineConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (cloud.empty()) throw InsufficientSamplesError("aggregation needs a non-empty cloud");
  // Scaling radii by the extent is the same as normalizing coordinates to the unit cube.
  const double scale = bounding_extent(cloud);
  FeaturePointCloud current = cloud;
  for (const auto& stage : cfg.stages) {
    current = run_stage(current, stage, stage.radius * scale, seed);
  }
  return current;
}

}  // namespace splatstyle
