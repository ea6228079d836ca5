#include "splatstyle/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "splatstyle/error.hpp"

namespace splatstyle {

namespace {

// Snap coordinates that are integral up to round-off so that exact
// correspondences do not pick up a zero-weight neighbour tap.
double snap(double x) {
  const double r = std::round(x);
  return std::abs(x - r) < 1e-6 ? r : x;
}

std::string format_number(double value) {
  if (!std::isfinite(value)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

}  // namespace

std::size_t WarpResult::valid_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

WarpResult warp_view(const RenderedView& source, const Camera& target_camera,
                     const DepthMap& target_depth, double tau) {
  if (!(tau >= 0.0)) throw InvariantError("depth tolerance must be >= 0");
  const std::uint32_t h = target_depth.height;
  const std::uint32_t w = target_depth.width;
  if (target_camera.intrinsics.width != w || target_camera.intrinsics.height != h) {
    throw DimensionError("target depth does not match the target camera's image size");
  }
  const std::uint32_t c = source.data.channels;
  const std::int64_t sw = source.data.width;
  const std::int64_t sh = source.data.height;

  WarpResult result;
  result.warped = FeatureMap(h, w, c, 0.0f);
  result.mask.assign(std::size_t{h} * w, 0);

#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < static_cast<std::int64_t>(h); ++r) {
    for (std::uint32_t col = 0; col < w; ++col) {
      const float d = target_depth.at(static_cast<std::uint32_t>(r), col);
      if (!(d > 0.0f)) continue;
      const Eigen::Vector3d world = unproject(target_camera, col + 0.5, r + 0.5, d);
      const auto proj = project_point(world, source.camera);
      if (!proj) continue;

      const double sx = snap(proj->u - 0.5);
      const double sy = snap(proj->v - 0.5);
      if (!(sx > -1.0 && sy > -1.0 && sx < static_cast<double>(sw) &&
            sy < static_cast<double>(sh))) {
        continue;
      }
      const auto x0 = static_cast<std::int64_t>(std::floor(sx));
      const auto y0 = static_cast<std::int64_t>(std::floor(sy));
      const double fx = sx - static_cast<double>(x0);
      const double fy = sy - static_cast<double>(y0);
      const std::int64_t tx[4] = {x0, x0 + 1, x0, x0 + 1};
      const std::int64_t ty[4] = {y0, y0, y0 + 1, y0 + 1};
      const double tw[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};

      bool ok = true;
      double sampled_depth = 0.0;
      for (int k = 0; k < 4 && ok; ++k) {
        if (tw[k] == 0.0) continue;
        ok = tx[k] >= 0 && ty[k] >= 0 && tx[k] < sw && ty[k] < sh &&
             source.covered(static_cast<std::uint32_t>(ty[k]), static_cast<std::uint32_t>(tx[k]));
        if (ok) {
          sampled_depth += tw[k] * source.depth_at(static_cast<std::uint32_t>(ty[k]),
                                                   static_cast<std::uint32_t>(tx[k]));
        }
      }
      if (!ok || std::abs(proj->z - sampled_depth) > tau * proj->z) continue;

      auto out = result.warped.pixel(static_cast<std::uint32_t>(r), col);
      for (std::uint32_t ch = 0; ch < c; ++ch) {
        double value = 0.0;
        for (int k = 0; k < 4; ++k) {
          if (tw[k] == 0.0) continue;
          value += tw[k] * source.data.pixel(static_cast<std::uint32_t>(ty[k]),
                                             static_cast<std::uint32_t>(tx[k]))[ch];
        }
        out[ch] = static_cast<float>(value);
      }
      result.mask[static_cast<std::size_t>(r) * w + col] = 1;
    }
  }
  return result;
}

WarpError warping_error(const RenderedView& target, const RenderedView& source,
                        const DepthMap& target_depth, double tau) {
  if (target.data.channels != source.data.channels) {
    throw DimensionError("views disagree in channel count");
  }
  if (target_depth.width != target.data.width || target_depth.height != target.data.height) {
    throw DimensionError("target depth does not match the target view");
  }
  const WarpResult warp = warp_view(source, target.camera, target_depth, tau);
  const std::uint32_t c = target.data.channels;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < warp.mask.size(); ++p) {
    if (!warp.mask[p] || !target.mask[p]) continue;
    for (std::uint32_t ch = 0; ch < c; ++ch) {
      const double diff = static_cast<double>(target.data.data[p * c + ch]) -
                          static_cast<double>(warp.warped.data[p * c + ch]);
      sum += diff * diff;
    }
    ++count;
  }
  if (count == 0) throw UndefinedMetricError("warping error undefined: no valid warped pixels");
  WarpError err;
  err.valid_pixels = count;
  err.valid_fraction = static_cast<double>(count) / static_cast<double>(warp.mask.size());
  err.rmse = std::sqrt(sum / static_cast<double>(count * c));
  return err;
}

double gram_distance(const FeatureMap& a, const FeatureMap& b) {
  if (a.channels != b.channels) throw DimensionError("gram distance needs equal channel counts");
  const auto gram = [](const FeatureMap& m) {
    const auto rows = static_cast<Eigen::Index>(m.pixel_count());
    const auto cols = static_cast<Eigen::Index>(m.channels);
    if (rows == 0) throw InsufficientSamplesError("gram matrix of an empty map");
    const Eigen::MatrixXd x =
        Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            m.data.data(), rows, cols)
            .cast<double>();
    return Eigen::MatrixXd(x.transpose() * x / static_cast<double>(rows));
  };
  return (gram(a) - gram(b)).norm();
}

const ConsistencyReport::Summary& ConsistencyReport::for_offset(std::size_t offset) const {
  for (const auto& s : summary) {
    if (s.offset == offset) return s;
  }
  throw InvariantError("no summary for offset " + std::to_string(offset));
}

double ConsistencyReport::mean_rmse() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& p : pairs) {
    if (!p.defined) continue;
    sum += p.rmse;
    ++n;
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

std::string ConsistencyReport::to_text() const {
  std::ostringstream out;
  out << "protocol: " << protocol << "\n";
  out << "  from    to  offset        rmse  valid_fraction\n";
  for (const auto& p : pairs) {
    char line[128];
    if (p.defined) {
      std::snprintf(line, sizeof(line), "%6zu %5zu %7zu %11.6f %15.4f\n", p.from, p.to, p.offset,
                    p.rmse, p.valid_fraction);
    } else {
      std::snprintf(line, sizeof(line), "%6zu %5zu %7zu %11s %15.4f\n", p.from, p.to, p.offset,
                    "undefined", p.valid_fraction);
    }
    out << line;
  }
  for (const auto& s : summary) {
    out << "offset " << s.offset << ": mean rmse "
        << (s.defined_pairs ? format_number(s.mean_rmse) : std::string("undefined")) << " over "
        << s.defined_pairs << "/" << s.pairs << " pairs\n";
  }
  return out.str();
}

std::string ConsistencyReport::to_csv() const {
  std::ostringstream out;
  out << "from,to,offset,defined,rmse,valid_fraction\n";
  for (const auto& p : pairs) {
    out << p.from << ',' << p.to << ',' << p.offset << ',' << (p.defined ? 1 : 0) << ','
        << (p.defined ? format_number(p.rmse) : std::string("nan")) << ','
        << format_number(p.valid_fraction) << '\n';
  }
  return out.str();
}

std::string protocol_tag(std::span<const std::size_t> offsets) {
  if (offsets.size() == 1 && offsets[0] == 1) return "short";
  if (offsets.size() == 1 && offsets[0] == 7) return "long";
  return "custom";
}

ConsistencyReport evaluate_views(std::span<const RenderedView> views,
                                 std::span<const DepthMap> depths,
                                 std::span<const std::size_t> offsets, double tau) {
  if (views.size() != depths.size()) throw DimensionError("need one depth map per view");
  if (offsets.empty()) throw InvariantError("protocol needs at least one offset");
  std::size_t max_offset = 0;
  for (std::size_t o : offsets) {
    if (o == 0) throw InvariantError("protocol offsets must be >= 1");
    max_offset = std::max(max_offset, o);
  }
  if (views.size() < max_offset + 1) {
    throw InvariantError("protocol with offset " + std::to_string(max_offset) + " needs " +
                         std::to_string(max_offset + 1) + " views, scene has " +
                         std::to_string(views.size()));
  }

  ConsistencyReport report;
  report.protocol = protocol_tag(offsets);
  for (std::size_t o : offsets) {
    for (std::size_t t = o; t < views.size(); ++t) {
      ConsistencyReport::Pair pair;
      pair.from = t - o;
      pair.to = t;
      pair.offset = o;
      report.pairs.push_back(pair);
    }
  }

#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(report.pairs.size()); ++i) {
    auto& pair = report.pairs[i];
    try {
      const WarpError err = warping_error(views[pair.to], views[pair.from], depths[pair.to], tau);
      pair.defined = true;
      pair.rmse = err.rmse;
      pair.valid_fraction = err.valid_fraction;
    } catch (const UndefinedMetricError&) {
      pair.defined = false;
    }
  }

  for (std::size_t o : offsets) {
    ConsistencyReport::Summary s;
    s.offset = o;
    double sum = 0.0;
    for (const auto& p : report.pairs) {
      if (p.offset != o) continue;
      ++s.pairs;
      if (!p.defined) continue;
      ++s.defined_pairs;
      sum += p.rmse;
    }
    s.mean_rmse = s.defined_pairs ? sum / static_cast<double>(s.defined_pairs)
                                  : std::numeric_limits<double>::quiet_NaN();
    report.summary.push_back(s);
  }
  return report;
}

ConsistencyReport run_protocol(const SceneManifest& scene, const FeaturePointCloud& cloud,
                               std::span<const std::size_t> offsets, const ProtocolConfig& cfg) {
  std::size_t max_offset = 0;
  for (std::size_t o : offsets) max_offset = std::max(max_offset, o);
  if (scene.views.size() < max_offset + 1) {
    throw InvariantError("protocol with offset " + std::to_string(max_offset) + " needs " +
                         std::to_string(max_offset + 1) + " views, scene has " +
                         std::to_string(scene.views.size()));
  }
  SplatConfig splat = cfg.splat;
  splat.clamp_unit = splat.clamp_unit || scene.mode == SceneMode::rgb;
  std::vector<RenderedView> views;
  std::vector<DepthMap> depths;
  views.reserve(scene.views.size());
  depths.reserve(scene.views.size());
  for (std::size_t i = 0; i < scene.views.size(); ++i) {
    views.push_back(render_view(cloud, view_camera(scene, i), splat));
    depths.push_back(load_view_depth(scene, i));
  }
  return evaluate_views(views, depths, offsets, cfg.tau);
}

RenderedView stylize_view_2d(const RenderedView& view, const FeatureMap& style,
                             const TransformOptions& opts, bool clamp_unit) {
  const std::uint32_t c = view.data.channels;
  std::vector<float> covered;
  for (std::size_t p = 0; p < view.mask.size(); ++p) {
    if (!view.mask[p]) continue;
    covered.insert(covered.end(), view.data.data.begin() + p * c,
                   view.data.data.begin() + (p + 1) * c);
  }
  RenderedView out = view;
  if (covered.size() < 2 * std::size_t{c}) return out;
  const SampleView content{covered, c};
  const StyleTransform xf = build_transform(content, samples_of(style), opts);
  std::vector<float> styled = apply_transform(content, xf);
  if (clamp_unit) {
    for (float& v : styled) v = std::clamp(v, 0.0f, 1.0f);
  }
  std::size_t k = 0;
  for (std::size_t p = 0; p < view.mask.size(); ++p) {
    if (!view.mask[p]) continue;
    std::copy_n(styled.begin() + k * c, c, out.data.data.begin() + p * c);
    ++k;
  }
  return out;
}

}  // namespace splatstyle
