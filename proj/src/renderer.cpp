#include "splatstyle/renderer.hpp"

#include <algorithm>
#include <cmath>

#include "splatstyle/error.hpp"

namespace splatstyle {

namespace {

struct Splat {
  double u = 0.0;
  double v = 0.0;
  double z = 0.0;
  std::int32_t x0 = 0, x1 = -1;  // inclusive pixel bounds of the footprint, clipped
  std::int32_t y0 = 0, y1 = -1;
};

// Strict front-to-back order used for visibility.
class FrontOrder {
 public:
  FrontOrder(const std::vector<Splat>& splats, const FeaturePointCloud& cloud)
      : splats_(splats), cloud_(cloud) {}

  bool operator()(std::uint32_t a, std::uint32_t b) const {
    if (splats_[a].z != splats_[b].z) return splats_[a].z < splats_[b].z;
    const auto fa = cloud_.feature(a);
    const auto fb = cloud_.feature(b);
    const auto diff = std::mismatch(fa.begin(), fa.end(), fb.begin());
    if (diff.first != fa.end()) return *diff.first < *diff.second;
    return a < b;
  }

 private:
  const std::vector<Splat>& splats_;
  const FeaturePointCloud& cloud_;
};

}  // namespace

std::optional<Projection> project_point(const Eigen::Vector3d& world, const Camera& camera,
                                        double z_near) {
  const Eigen::Vector3d x = camera.pose.R * world + camera.pose.t;
  if (!(x.z() > z_near)) return std::nullopt;
  const auto& k = camera.intrinsics;
  return Projection{k.fx * x.x() / x.z() + k.cx, k.fy * x.y() / x.z() + k.cy, x.z()};
}

const char* to_string(Blend blend) {
  return blend == Blend::nearest ? "nearest" : "inverse_depth";
}

Blend parse_blend(const std::string& text) {
  if (text == "nearest") return Blend::nearest;
  if (text == "inverse_depth" || text == "weighted") return Blend::inverse_depth;
  throw InvariantError("unknown blend \"" + text + "\" (expected nearest or inverse_depth)");
}

void SplatConfig::validate() const {
  if (!(splat_radius_px >= 0.0) || !std::isfinite(splat_radius_px)) {
    throw InvariantError("splat radius must be finite and >= 0");
  }
  if (zbuffer_size < 1) throw InvariantError("z-buffer size must be >= 1");
  if (!(z_near > 0.0)) throw InvariantError("z_near must be > 0");
  if (tile_size < 1) throw InvariantError("tile size must be >= 1");
}

std::size_t RenderedView::coverage_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

DepthMap RenderedView::depth_map() const {
  DepthMap out(data.height, data.width);
  for (std::size_t i = 0; i < depth.size(); ++i) out.values[i] = mask[i] ? depth[i] : 0.0f;
  return out;
}

FeatureMap RenderedView::mask_image() const {
  FeatureMap out(data.height, data.width, 1);
  for (std::size_t i = 0; i < mask.size(); ++i) out.data[i] = mask[i] ? 1.0f : 0.0f;
  return out;
}

std::vector<float> expand_background(const std::vector<float>& background,
                                     std::uint32_t channels) {
  if (background.empty()) return std::vector<float>(channels, 0.0f);
  if (background.size() == 1) return std::vector<float>(channels, background.front());
  if (background.size() != channels) {
    throw DimensionError("background has " + std::to_string(background.size()) +
                         " values for " + std::to_string(channels) + " channels");
  }
  return background;
}

RenderedView render_view(const FeaturePointCloud& cloud, const Camera& camera,
                         const SplatConfig& cfg) {
  cfg.validate();
  camera.validate();
  const auto& k = camera.intrinsics;
  const std::uint32_t width = k.width;
  const std::uint32_t height = k.height;
  const std::uint32_t c = cloud.channels;
  const std::vector<float> background = expand_background(cfg.background, c);

  RenderedView view;
  view.camera = camera;
  view.data = FeatureMap(height, width, c);
  for (std::size_t p = 0; p < view.data.pixel_count(); ++p) {
    std::copy(background.begin(), background.end(), view.data.data.begin() + p * c);
  }
  view.mask.assign(std::size_t{width} * height, 0);
  view.depth.assign(std::size_t{width} * height, std::numeric_limits<float>::infinity());

  const std::size_t n = cloud.size();
  if (n > std::numeric_limits<std::uint32_t>::max()) {
    throw DimensionError("renderer supports at most 2^32 - 1 points");
  }
  const double radius = cfg.splat_radius_px;
  const double r2 = radius * radius;

  // 1. Project every point and clip its footprint to the image.
  std::vector<Splat> splats(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    Splat& s = splats[i];
    const auto proj = project_point(cloud.position(i).cast<double>(), camera, cfg.z_near);
    if (!proj) continue;
    s.u = proj->u;
    s.v = proj->v;
    s.z = proj->z;
    // Pixel x is covered when |x + 0.5 - u| <= radius.
    const double fx0 = std::ceil(s.u - radius - 0.5);
    const double fx1 = std::floor(s.u + radius - 0.5);
    const double fy0 = std::ceil(s.v - radius - 0.5);
    const double fy1 = std::floor(s.v + radius - 0.5);
    if (!(fx1 >= 0.0 && fy1 >= 0.0 && fx0 < width && fy0 < height)) continue;
    s.x0 = static_cast<std::int32_t>(std::max(fx0, 0.0));
    s.x1 = static_cast<std::int32_t>(std::min(fx1, width - 1.0));
    s.y0 = static_cast<std::int32_t>(std::max(fy0, 0.0));
    s.y1 = static_cast<std::int32_t>(std::min(fy1, height - 1.0));
  }

  // 2. Bin splats into tiles (CSR layout, point order preserved).
  const std::uint32_t tile = cfg.tile_size;
  const std::uint32_t tiles_x = (width + tile - 1) / tile;
  const std::uint32_t tiles_y = (height + tile - 1) / tile;
  std::vector<std::size_t> bin_start(std::size_t{tiles_x} * tiles_y + 1, 0);
  const auto for_each_tile = [&](const Splat& s, auto&& fn) {
    for (std::int32_t ty = s.y0 / static_cast<std::int32_t>(tile);
         ty <= s.y1 / static_cast<std::int32_t>(tile); ++ty) {
      for (std::int32_t tx = s.x0 / static_cast<std::int32_t>(tile);
           tx <= s.x1 / static_cast<std::int32_t>(tile); ++tx) {
        fn(static_cast<std::size_t>(ty) * tiles_x + static_cast<std::size_t>(tx));
      }
    }
  };
  for (const Splat& s : splats) {
    if (s.x1 < s.x0) continue;
    for_each_tile(s, [&](std::size_t t) { ++bin_start[t + 1]; });
  }
  for (std::size_t t = 0; t + 1 < bin_start.size(); ++t) bin_start[t + 1] += bin_start[t];
  std::vector<std::uint32_t> bins(bin_start.back());
  {
    std::vector<std::size_t> fill(bin_start.begin(), bin_start.end() - 1);
    for (std::uint32_t i = 0; i < n; ++i) {
      if (splats[i].x1 < splats[i].x0) continue;
      for_each_tile(splats[i], [&](std::size_t t) { bins[fill[t]++] = i; });
    }
  }

  // 3. Rasterize tiles independently; each tile owns its pixels.
  const FrontOrder front(splats, cloud);
  const std::size_t tile_count = std::size_t{tiles_x} * tiles_y;
  const std::size_t cap = cfg.zbuffer_size;

#pragma omp parallel
  {
    std::vector<std::vector<std::uint32_t>> pixel_lists;
    std::vector<std::int64_t> best;
    std::vector<double> accum(c);
#pragma omp for schedule(dynamic, 1)
    for (std::int64_t t = 0; t < static_cast<std::int64_t>(tile_count); ++t) {
      const std::uint32_t tx = static_cast<std::uint32_t>(t) % tiles_x;
      const std::uint32_t ty = static_cast<std::uint32_t>(t) / tiles_x;
      const std::int32_t px0 = static_cast<std::int32_t>(tx * tile);
      const std::int32_t py0 = static_cast<std::int32_t>(ty * tile);
      const std::int32_t px1 = std::min<std::int32_t>(px0 + tile, width) - 1;
      const std::int32_t py1 = std::min<std::int32_t>(py0 + tile, height) - 1;
      const std::size_t tw = static_cast<std::size_t>(px1 - px0 + 1);
      const std::size_t th = static_cast<std::size_t>(py1 - py0 + 1);

      if (cfg.blend == Blend::nearest) {
        best.assign(tw * th, -1);
      } else {
        pixel_lists.resize(tw * th);
        for (auto& l : pixel_lists) l.clear();
      }

      for (std::size_t b = bin_start[t]; b < bin_start[t + 1]; ++b) {
        const std::uint32_t i = bins[b];
        const Splat& s = splats[i];
        for (std::int32_t y = std::max(s.y0, py0); y <= std::min(s.y1, py1); ++y) {
          const double dy = y + 0.5 - s.v;
          for (std::int32_t x = std::max(s.x0, px0); x <= std::min(s.x1, px1); ++x) {
            const double dx = x + 0.5 - s.u;
            if (dx * dx + dy * dy > r2) continue;
            const std::size_t local = static_cast<std::size_t>(y - py0) * tw +
                                      static_cast<std::size_t>(x - px0);
            if (cfg.blend == Blend::nearest) {
              if (best[local] < 0 || front(i, static_cast<std::uint32_t>(best[local]))) {
                best[local] = i;
              }
            } else {
              // Max-heap on front order keeps the `cap` front-most candidates.
              auto& heap = pixel_lists[local];
              if (heap.size() < cap) {
                heap.push_back(i);
                std::push_heap(heap.begin(), heap.end(), front);
              } else if (front(i, heap.front())) {
                std::pop_heap(heap.begin(), heap.end(), front);
                heap.back() = i;
                std::push_heap(heap.begin(), heap.end(), front);
              }
            }
          }
        }
      }

      for (std::size_t ly = 0; ly < th; ++ly) {
        for (std::size_t lx = 0; lx < tw; ++lx) {
          const std::size_t local = ly * tw + lx;
          const std::size_t pix = (static_cast<std::size_t>(py0) + ly) * width +
                                  static_cast<std::size_t>(px0) + lx;
          float* out = view.data.data.data() + pix * c;
          if (cfg.blend == Blend::nearest) {
            if (best[local] < 0) continue;
            const auto idx = static_cast<std::uint32_t>(best[local]);
            const auto f = cloud.feature(idx);
            std::copy(f.begin(), f.end(), out);
            view.depth[pix] = static_cast<float>(splats[idx].z);
          } else {
            auto& list = pixel_lists[local];
            if (list.empty()) continue;
            std::sort(list.begin(), list.end(), front);
            std::fill(accum.begin(), accum.end(), 0.0);
            double weight_sum = 0.0;
            for (std::uint32_t idx : list) {
              const double w = 1.0 / splats[idx].z;
              const auto f = cloud.feature(idx);
              for (std::uint32_t ch = 0; ch < c; ++ch) accum[ch] += w * f[ch];
              weight_sum += w;
            }
            for (std::uint32_t ch = 0; ch < c; ++ch) {
              out[ch] = static_cast<float>(accum[ch] / weight_sum);
            }
            view.depth[pix] = static_cast<float>(splats[list.front()].z);
          }
          if (cfg.clamp_unit) {
            for (std::uint32_t ch = 0; ch < c; ++ch) out[ch] = std::clamp(out[ch], 0.0f, 1.0f);
          }
          view.mask[pix] = 1;
        }
      }
    }
  }
  return view;
}

FeatureMap composite_over(const RenderedView& view, const FeatureMap& background) {
  if (background.height != view.data.height || background.width != view.data.width ||
      background.channels != view.data.channels) {
    throw DimensionError("background does not match the rendered view's shape");
  }
  FeatureMap out = background;
  const std::uint32_t c = view.data.channels;
  for (std::size_t p = 0; p < view.mask.size(); ++p) {
    if (!view.mask[p]) continue;
    std::copy_n(view.data.data.begin() + p * c, c, out.data.begin() + p * c);
  }
  return out;
}

}  // namespace splatstyle
