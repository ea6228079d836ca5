#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "splatstyle/camera.hpp"
#include "splatstyle/feature_map.hpp"

namespace splatstyle {

enum class SceneMode { rgb, feature };

const char* to_string(SceneMode mode);
SceneMode parse_scene_mode(const std::string& text);

struct ViewEntry {
  std::string image;                    // relative to the manifest directory
  std::string depth;                    // DMAP file at image resolution
  std::optional<std::string> features;  // FMAP file, required in feature mode
  Camera camera;                        // intrinsics at image resolution

  bool operator==(const ViewEntry&) const = default;
};

/// Scene description on disk. Stored as JSON:
///
///   {
///     "scene": "cube",
///     "mode": "rgb",                 // or "feature"
///     "feature_scale": 4,            // feature mode only; image px per feature px
///     "views": [
///       { "image": "view_000.png", "depth": "view_000.dmap", "features": "...",
///         "intrinsics": {"fx":..,"fy":..,"cx":..,"cy":..,"width":..,"height":..},
///         "pose": {"R": [[r00,r01,r02],[..],[..]], "t": [tx,ty,tz]} }
///     ]
///   }
///
/// Poses map world to camera (x_cam = R X + t); depth maps hold z-depth with 0 = invalid.
struct SceneManifest {
  std::string scene_name;
  SceneMode mode = SceneMode::rgb;
  std::uint32_t feature_scale = 4;
  std::vector<ViewEntry> views;
  std::filesystem::path base_dir;  // directory that relative paths resolve against

  std::filesystem::path resolve(const std::string& relative) const { return base_dir / relative; }

  bool operator==(const SceneManifest& o) const {
    return scene_name == o.scene_name && mode == o.mode && feature_scale == o.feature_scale &&
           views == o.views;
  }
};

/// Parses and fully validates a manifest: referenced files exist, poses are
/// orthonormal, and depth / image / feature dimensions agree.
SceneManifest load_manifest(const std::filesystem::path& path);

/// Writes the manifest text. Paths are written verbatim (relative to the manifest).
void save_manifest(const SceneManifest& manifest, const std::filesystem::path& path);

std::string manifest_to_string(const SceneManifest& manifest);

/// Camera JSON object as used in manifest views: {"intrinsics": {...}, "pose": {...}}.
Camera load_camera(const std::filesystem::path& path);
void save_camera(const Camera& camera, const std::filesystem::path& path);

// FMAP: "FMAP" | version u32 | H u32 | W u32 | C u32 | H*W*C float32, all little endian.
FeatureMap load_feature_map(const std::filesystem::path& path);
void save_feature_map(const FeatureMap& map, const std::filesystem::path& path);

// DMAP: same container with magic "DMAP" and C = 1.
DepthMap load_depth_map(const std::filesystem::path& path);
void save_depth_map(const DepthMap& depth, const std::filesystem::path& path);

struct GridShape {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t channels = 0;
};

/// Reads only the header of an FMAP ("FMAP") or DMAP ("DMAP") file.
GridShape read_grid_header(const std::filesystem::path& path, const char (&magic)[5]);

/// One view ready for back-projection: features, depth and camera share a resolution.
/// In feature mode the depth is decimated and the intrinsics scaled to the feature grid.
struct LoadedView {
  FeatureMap features;
  DepthMap depth;
  Camera camera;
};

LoadedView load_view(const SceneManifest& manifest, std::size_t index);

/// Depth of a view at back-projection resolution (decimated in feature mode).
DepthMap load_view_depth(const SceneManifest& manifest, std::size_t index);

/// Camera of a view at back-projection resolution without reading any pixel data.
Camera view_camera(const SceneManifest& manifest, std::size_t index);

}  // namespace splatstyle
