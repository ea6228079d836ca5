#include "splatstyle/scene_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "binary_io.hpp"
#include "splatstyle/error.hpp"
#include "splatstyle/image_io.hpp"

namespace splatstyle {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr std::uint32_t kGridVersion = 1;

const Json& require(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw FormatError(where + ": missing field \"" + key + "\"");
  }
  return obj.at(key);
}

template <typename T>
T get_as(const Json& obj, const char* key, const std::string& where) {
  try {
    return require(obj, key, where).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(where + ": malformed field \"" + key + "\": " + e.what());
  }
}

Json camera_to_json(const Camera& cam) {
  const auto& k = cam.intrinsics;
  Json intr = {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx},
               {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
  Json rot = Json::array();
  for (int r = 0; r < 3; ++r) {
    rot.push_back({cam.pose.R(r, 0), cam.pose.R(r, 1), cam.pose.R(r, 2)});
  }
  Json pose = {{"R", rot}, {"t", {cam.pose.t.x(), cam.pose.t.y(), cam.pose.t.z()}}};
  return {{"intrinsics", intr}, {"pose", pose}};
}

Camera camera_from_json(const Json& obj, const std::string& where) {
  Camera cam;
  const Json& intr = require(obj, "intrinsics", where);
  const std::string iw = where + ".intrinsics";
  cam.intrinsics.fx = get_as<double>(intr, "fx", iw);
  cam.intrinsics.fy = get_as<double>(intr, "fy", iw);
  cam.intrinsics.cx = get_as<double>(intr, "cx", iw);
  cam.intrinsics.cy = get_as<double>(intr, "cy", iw);
  cam.intrinsics.width = get_as<std::uint32_t>(intr, "width", iw);
  cam.intrinsics.height = get_as<std::uint32_t>(intr, "height", iw);

  const Json& pose = require(obj, "pose", where);
  const std::string pw = where + ".pose";
  const auto rot = get_as<std::vector<std::vector<double>>>(pose, "R", pw);
  const auto trans = get_as<std::vector<double>>(pose, "t", pw);
  if (rot.size() != 3 || trans.size() != 3) throw FormatError(pw + ": R must be 3x3 and t a 3-vector");
  for (int r = 0; r < 3; ++r) {
    if (rot[r].size() != 3) throw FormatError(pw + ": R must be 3x3");
    for (int c = 0; c < 3; ++c) cam.pose.R(r, c) = rot[r][c];
    cam.pose.t(r) = trans[r];
  }
  try {
    cam.validate();
  } catch (const InvariantError& e) {
    throw InvariantError(where + ": " + e.what());
  }
  return cam;
}

Json parse_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw IoError("missing " + what + " file: " + path.string());
}

void write_grid(const fs::path& path, const char (&magic)[5], std::uint32_t h, std::uint32_t w,
                std::uint32_t c, std::span<const float> payload) {
  detail::BinaryWriter out(path);
  out.magic(magic);
  out.scalar(kGridVersion);
  out.scalar(h);
  out.scalar(w);
  out.scalar(c);
  out.array(payload);
  out.finish();
}

GridShape read_header(detail::BinaryReader& in, const char (&magic)[5]) {
  in.expect_magic(magic);
  const auto version = in.scalar<std::uint32_t>();
  if (version != kGridVersion) {
    throw FormatError("unsupported version " + std::to_string(version) + " in " +
                      in.path().string());
  }
  GridShape shape;
  shape.height = in.scalar<std::uint32_t>();
  shape.width = in.scalar<std::uint32_t>();
  shape.channels = in.scalar<std::uint32_t>();
  return shape;
}

}  // namespace

const char* to_string(SceneMode mode) { return mode == SceneMode::rgb ? "rgb" : "feature"; }

SceneMode parse_scene_mode(const std::string& text) {
  if (text == "rgb") return SceneMode::rgb;
  if (text == "feature") return SceneMode::feature;
  throw FormatError("unknown mode \"" + text + "\" (expected rgb or feature)");
}

std::string manifest_to_string(const SceneManifest& manifest) {
  Json root;
  root["scene"] = manifest.scene_name;
  root["mode"] = to_string(manifest.mode);
  if (manifest.mode == SceneMode::feature) root["feature_scale"] = manifest.feature_scale;
  Json views = Json::array();
  for (const auto& view : manifest.views) {
    Json v;
    v["image"] = view.image;
    v["depth"] = view.depth;
    if (view.features) v["features"] = *view.features;
    const Json cam = camera_to_json(view.camera);
    v["intrinsics"] = cam["intrinsics"];
    v["pose"] = cam["pose"];
    views.push_back(std::move(v));
  }
  root["views"] = std::move(views);
  return root.dump(2) + "\n";
}

void save_manifest(const SceneManifest& manifest, const fs::path& path) {
  write_text(path, manifest_to_string(manifest));
}

SceneManifest load_manifest(const fs::path& path) {
  require_file(path, "manifest");
  const Json root = parse_json_file(path);
  const std::string where = path.string();

  SceneManifest manifest;
  manifest.base_dir = path.parent_path();
  manifest.scene_name = get_as<std::string>(root, "scene", where);
  manifest.mode = parse_scene_mode(get_as<std::string>(root, "mode", where));
  if (manifest.mode == SceneMode::feature) {
    manifest.feature_scale = root.contains("feature_scale")
                                 ? get_as<std::uint32_t>(root, "feature_scale", where)
                                 : 4u;
    if (manifest.feature_scale == 0) throw FormatError(where + ": feature_scale must be >= 1");
  }

  const Json& views = require(root, "views", where);
  if (!views.is_array() || views.empty()) throw FormatError(where + ": need at least one view");

  for (std::size_t i = 0; i < views.size(); ++i) {
    const std::string vw = where + ": views[" + std::to_string(i) + "]";
    const Json& v = views[i];
    ViewEntry entry;
    entry.image = get_as<std::string>(v, "image", vw);
    entry.depth = get_as<std::string>(v, "depth", vw);
    if (v.contains("features")) entry.features = get_as<std::string>(v, "features", vw);
    entry.camera = camera_from_json(v, vw);

    const auto image_path = manifest.resolve(entry.image);
    const auto depth_path = manifest.resolve(entry.depth);
    require_file(image_path, "image");
    require_file(depth_path, "depth");

    const auto& k = entry.camera.intrinsics;
    const auto [img_w, img_h] = read_png_size(image_path);
    if (img_w != k.width || img_h != k.height) {
      throw DimensionError(vw + ": image " + image_path.string() + " is " + std::to_string(img_w) +
                           "x" + std::to_string(img_h) + ", intrinsics say " +
                           std::to_string(k.width) + "x" + std::to_string(k.height));
    }
    const GridShape depth = read_grid_header(depth_path, "DMAP");
    if (depth.channels != 1 || depth.width != k.width || depth.height != k.height) {
      throw DimensionError(vw + ": depth " + depth_path.string() + " does not match image size");
    }

    if (manifest.mode == SceneMode::feature) {
      if (!entry.features) throw FormatError(vw + ": feature mode requires a \"features\" path");
      const auto feat_path = manifest.resolve(*entry.features);
      require_file(feat_path, "feature");
      const GridShape feat = read_grid_header(feat_path, "FMAP");
      const auto s = manifest.feature_scale;
      if (feat.width * s != depth.width || feat.height * s != depth.height) {
        throw DimensionError(vw + ": depth " + std::to_string(depth.width) + "x" +
                             std::to_string(depth.height) + " != feature map " +
                             std::to_string(feat.width) + "x" + std::to_string(feat.height) +
                             " times scale " + std::to_string(s));
      }
    }
    manifest.views.push_back(std::move(entry));
  }
  return manifest;
}

Camera load_camera(const fs::path& path) {
  require_file(path, "camera");
  return camera_from_json(parse_json_file(path), path.string());
}

void save_camera(const Camera& camera, const fs::path& path) {
  write_text(path, camera_to_json(camera).dump(2) + "\n");
}

GridShape read_grid_header(const fs::path& path, const char (&magic)[5]) {
  detail::BinaryReader in(path);
  return read_header(in, magic);
}

FeatureMap load_feature_map(const fs::path& path) {
  detail::BinaryReader in(path);
  const GridShape shape = read_header(in, "FMAP");
  FeatureMap map;
  map.height = shape.height;
  map.width = shape.width;
  map.channels = shape.channels;
  map.data = in.array<float>(std::size_t{shape.height} * shape.width * shape.channels);
  in.expect_end();
  try {
    map.validate();
  } catch (const InvariantError& e) {
    throw InvariantError(path.string() + ": " + e.what());
  }
  return map;
}

void save_feature_map(const FeatureMap& map, const fs::path& path) {
  map.validate();
  write_grid(path, "FMAP", map.height, map.width, map.channels, map.data);
}

DepthMap load_depth_map(const fs::path& path) {
  detail::BinaryReader in(path);
  const GridShape shape = read_header(in, "DMAP");
  if (shape.channels != 1) throw FormatError(path.string() + ": depth map must have C = 1");
  DepthMap depth;
  depth.height = shape.height;
  depth.width = shape.width;
  depth.values = in.array<float>(std::size_t{shape.height} * shape.width);
  in.expect_end();
  try {
    depth.validate();
  } catch (const InvariantError& e) {
    throw InvariantError(path.string() + ": " + e.what());
  }
  return depth;
}

void save_depth_map(const DepthMap& depth, const fs::path& path) {
  depth.validate();
  write_grid(path, "DMAP", depth.height, depth.width, 1, depth.values);
}

Camera view_camera(const SceneManifest& manifest, std::size_t index) {
  Camera cam = manifest.views.at(index).camera;
  if (manifest.mode == SceneMode::feature) {
    cam.intrinsics = cam.intrinsics.downscaled(manifest.feature_scale);
  }
  return cam;
}

DepthMap load_view_depth(const SceneManifest& manifest, std::size_t index) {
  DepthMap depth = load_depth_map(manifest.resolve(manifest.views.at(index).depth));
  return manifest.mode == SceneMode::feature ? depth.downsample_nearest(manifest.feature_scale)
                                             : depth;
}

LoadedView load_view(const SceneManifest& manifest, std::size_t index) {
  const ViewEntry& entry = manifest.views.at(index);
  LoadedView view;
  view.camera = view_camera(manifest, index);
  DepthMap depth = load_depth_map(manifest.resolve(entry.depth));
  if (manifest.mode == SceneMode::rgb) {
    view.features = load_png(manifest.resolve(entry.image));
    view.depth = std::move(depth);
  } else {
    if (!entry.features) throw FormatError("view " + std::to_string(index) + " has no feature map");
    view.features = load_feature_map(manifest.resolve(*entry.features));
    view.depth = depth.downsample_nearest(manifest.feature_scale);
  }
  if (view.depth.width != view.features.width || view.depth.height != view.features.height) {
    throw DimensionError("view " + std::to_string(index) + ": depth and features disagree in size");
  }
  return view;
}

}  // namespace splatstyle
