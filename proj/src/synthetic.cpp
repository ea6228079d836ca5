#include "splatstyle/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "splatstyle/error.hpp"
#include "splatstyle/image_io.hpp"
#include "splatstyle/random.hpp"

namespace splatstyle {

namespace fs = std::filesystem;

namespace {

double radians(double deg) { return deg * std::numbers::pi / 180.0; }

std::pair<Eigen::Vector3d, Eigen::Vector3d> checker_colors(std::uint64_t seed) {
  if (seed == 0) return {{0.85, 0.75, 0.30}, {0.20, 0.35, 0.60}};
  Rng rng(seed);
  const auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  Eigen::Vector3d a;
  Eigen::Vector3d b;
  for (int i = 0; i < 3; ++i) a[i] = 0.55 + 0.4 * unit();
  for (int i = 0; i < 3; ++i) b[i] = 0.05 + 0.4 * unit();
  return {a, b};
}

std::string view_name(std::size_t i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "view_%03zu.%s", i, ext);
  return buf;
}

}  // namespace

SyntheticShape parse_synthetic_shape(const std::string& text) {
  if (text == "cube") return SyntheticShape::cube;
  if (text == "plane") return SyntheticShape::plane;
  throw InvariantError("unknown shape \"" + text + "\" (expected cube or plane)");
}

SyntheticTexture parse_synthetic_texture(const std::string& text) {
  if (text == "checker") return SyntheticTexture::checker;
  if (text == "gradient") return SyntheticTexture::gradient;
  throw InvariantError("unknown texture \"" + text + "\" (expected checker or gradient)");
}

double SyntheticSceneSpec::elevation() const {
  return elevation_deg.value_or(shape == SyntheticShape::cube ? 20.0 : 0.0);
}

double SyntheticSceneSpec::half_size() const {
  return shape == SyntheticShape::cube ? 1.0 : plane_half_size;
}

Camera synthetic_camera(const SyntheticSceneSpec& spec, double azimuth_deg) {
  const double az = radians(azimuth_deg);
  const double el = radians(spec.elevation());
  const Eigen::Vector3d eye = spec.distance * Eigen::Vector3d(std::sin(az) * std::cos(el),
                                                              std::sin(el),
                                                              std::cos(az) * std::cos(el));
  Camera cam;
  cam.pose = look_at(eye, Eigen::Vector3d::Zero());
  const double res = spec.resolution;
  const double f = 0.5 * res / std::tan(0.5 * radians(spec.fov_deg));
  cam.intrinsics = {f, f, 0.5 * res, 0.5 * res, spec.resolution, spec.resolution};
  return cam;
}

std::vector<Camera> synthetic_cameras(const SyntheticSceneSpec& spec) {
  std::vector<Camera> cams;
  for (std::size_t i = 0; i < spec.n_views; ++i) {
    cams.push_back(synthetic_camera(spec, spec.start_azimuth_deg +
                                              spec.arc_step_deg * static_cast<double>(i)));
  }
  return cams;
}

std::optional<SurfaceHit> raycast(const SyntheticSceneSpec& spec, const Camera& camera, double px,
                                  double py) {
  const auto& k = camera.intrinsics;
  // Camera-space direction with unit z, so the ray parameter is the z-depth.
  const Eigen::Vector3d dir_cam((px - k.cx) / k.fx, (py - k.cy) / k.fy, 1.0);
  const Eigen::Vector3d dir = camera.pose.R.transpose() * dir_cam;
  const Eigen::Vector3d origin = camera.pose.center();
  const double half = spec.half_size();

  SurfaceHit hit;
  if (spec.shape == SyntheticShape::plane) {
    if (dir.z() == 0.0) return std::nullopt;
    const double s = -origin.z() / dir.z();
    if (!(s > 0.0)) return std::nullopt;
    hit.point = origin + s * dir;
    if (std::abs(hit.point.x()) > half || std::abs(hit.point.y()) > half) return std::nullopt;
    hit.point.z() = 0.0;
    hit.depth = s;
    hit.face = 0;
    return hit;
  }

  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  int enter_axis = -1;
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (std::abs(origin[a]) > half) return std::nullopt;
      continue;
    }
    double t0 = (-half - origin[a]) / dir[a];
    double t1 = (half - origin[a]) / dir[a];
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > t_enter) {
      t_enter = t0;
      enter_axis = a;
    }
    t_exit = std::min(t_exit, t1);
  }
  if (enter_axis < 0 || !(t_enter <= t_exit) || !(t_enter > 0.0)) return std::nullopt;
  hit.depth = t_enter;
  hit.point = origin + t_enter * dir;
  const bool positive = origin[enter_axis] > 0.0;
  hit.point[enter_axis] = positive ? half : -half;
  hit.face = 2 * enter_axis + (positive ? 1 : 0);
  return hit;
}

Eigen::Vector3d shade(const SyntheticSceneSpec& spec, const Eigen::Vector3d& point, int /*face*/) {
  const double half = spec.half_size();
  if (spec.texture == SyntheticTexture::gradient) {
    Eigen::Vector3d rgb;
    for (int i = 0; i < 3; ++i) rgb[i] = 0.2 + 0.3 * (point[i] / half + 1.0);
    return rgb;
  }
  const double p = spec.checker_period;
  const long parity = static_cast<long>(std::floor(point.x() / p)) +
                      static_cast<long>(std::floor(point.y() / p)) +
                      static_cast<long>(std::floor(point.z() / p));
  const auto [a, b] = checker_colors(spec.seed);
  return (parity % 2 == 0) ? a : b;
}

AnalyticView analytic_render(const SyntheticSceneSpec& spec, const Camera& camera,
                             bool quantize) {
  const std::uint32_t w = camera.intrinsics.width;
  const std::uint32_t h = camera.intrinsics.height;
  AnalyticView view;
  view.image = FeatureMap(h, w, 3, 0.0f);
  view.depth = DepthMap(h, w, 0.0f);
  view.face.assign(std::size_t{w} * h, -1);
  for (std::uint32_t r = 0; r < h; ++r) {
    for (std::uint32_t c = 0; c < w; ++c) {
      const auto hit = raycast(spec, camera, c + 0.5, r + 0.5);
      if (!hit) continue;
      const Eigen::Vector3d rgb = shade(spec, hit->point, hit->face);
      auto px = view.image.pixel(r, c);
      for (int i = 0; i < 3; ++i) {
        const double v = std::clamp(rgb[i], 0.0, 1.0);
        px[i] = quantize ? static_cast<float>(std::lround(static_cast<float>(v) * 255.0f)) / 255.0f
                         : static_cast<float>(v);
      }
      view.depth.at(r, c) = static_cast<float>(hit->depth);
      view.face[std::size_t{r} * w + c] = hit->face;
    }
  }
  return view;
}

SyntheticScene make_synthetic_scene(const SyntheticSceneSpec& spec, const fs::path& out_dir) {
  if (spec.n_views < 1) throw InvariantError("synthetic scene needs at least one view");
  if (spec.resolution < 1) throw InvariantError("synthetic scene resolution must be >= 1");
  fs::create_directories(out_dir);

  SceneManifest manifest;
  manifest.scene_name = spec.name;
  manifest.mode = SceneMode::rgb;
  manifest.base_dir = out_dir;
  const auto cams = synthetic_cameras(spec);
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const AnalyticView view = analytic_render(spec, cams[i], false);
    ViewEntry entry;
    entry.image = view_name(i, "png");
    entry.depth = view_name(i, "dmap");
    entry.camera = cams[i];
    save_png(view.image, out_dir / entry.image);
    save_depth_map(view.depth, out_dir / entry.depth);
    manifest.views.push_back(std::move(entry));
  }
  SyntheticScene scene;
  scene.spec = spec;
  scene.manifest_path = out_dir / "manifest.json";
  save_manifest(manifest, scene.manifest_path);
  scene.manifest = load_manifest(scene.manifest_path);
  return scene;
}

}  // namespace splatstyle
