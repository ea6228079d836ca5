#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "splatstyle/camera.hpp"
#include "splatstyle/feature_map.hpp"
#include "splatstyle/scene_io.hpp"

namespace splatstyle {

enum class SyntheticShape { plane, cube };
enum class SyntheticTexture { checker, gradient };

SyntheticShape parse_synthetic_shape(const std::string& text);
SyntheticTexture parse_synthetic_texture(const std::string& text);

/// Analytic test scene: an axis-aligned cube [-1, 1]^3, or a square in the z = 0
/// plane facing +z, seen by cameras on a horizontal arc around the y axis.
struct SyntheticSceneSpec {
  SyntheticShape shape = SyntheticShape::cube;
  SyntheticTexture texture = SyntheticTexture::checker;
  std::size_t n_views = 3;
  std::uint32_t resolution = 64;
  std::uint64_t seed = 0;  // 0 keeps the default checker colours
  double arc_step_deg = 15.0;
  double start_azimuth_deg = 0.0;
  std::optional<double> elevation_deg;  // default 20 for the cube, 0 for the plane
  double distance = 7.0;
  double fov_deg = 30.0;
  double checker_period = 0.5;
  double plane_half_size = 4.0;
  std::string name = "synthetic";

  double elevation() const;
  double half_size() const;  // 1 for the cube, plane_half_size for the plane
};

struct SurfaceHit {
  double depth = 0.0;  // z-depth in the ray's camera
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  int face = -1;       // cube: 2 * axis + (positive side ? 1 : 0); plane: 0
};

/// Camera of view `index` on the arc.
Camera synthetic_camera(const SyntheticSceneSpec& spec, double azimuth_deg);
std::vector<Camera> synthetic_cameras(const SyntheticSceneSpec& spec);

/// First surface hit of the ray through continuous pixel (px, py) of `camera`.
std::optional<SurfaceHit> raycast(const SyntheticSceneSpec& spec, const Camera& camera, double px,
                                  double py);

/// Texture colour (RGB in [0, 1]) at a surface point.
Eigen::Vector3d shade(const SyntheticSceneSpec& spec, const Eigen::Vector3d& point, int face);

/// Exact per-pixel rendering: colour, z-depth (0 on background) and face id (-1 on background).
struct AnalyticView {
  FeatureMap image;
  DepthMap depth;
  std::vector<int> face;
};

/// With `quantize` the colours are rounded to 8 bits exactly as the PNG fixture stores them.
AnalyticView analytic_render(const SyntheticSceneSpec& spec, const Camera& camera,
                             bool quantize = true);

struct SyntheticScene {
  SyntheticSceneSpec spec;
  SceneManifest manifest;
  std::filesystem::path manifest_path;
};

/// Writes view_NNN.png / view_NNN.dmap and manifest.json into `out_dir` (created
/// if needed) and returns the re-loaded manifest.
SyntheticScene make_synthetic_scene(const SyntheticSceneSpec& spec,
                                    const std::filesystem::path& out_dir);

}  // namespace splatstyle
