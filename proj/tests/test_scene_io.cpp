#include <doctest.h>

#include <cstring>

#include <json.hpp>

#include "splatstyle/error.hpp"
#include "splatstyle/image_io.hpp"
#include "splatstyle/scene_io.hpp"
#include "splatstyle/synthetic.hpp"
#include "support.hpp"

using namespace splatstyle;
using testing::TempDir;
using testing::read_bytes;
using testing::write_bytes;

namespace {

// Writes a minimal scene: one 4x4 view with identity pose.
SceneManifest tiny_scene(const TempDir& dir, SceneMode mode = SceneMode::rgb) {
  FeatureMap img(4, 4, 3, 0.5f);
  save_png(img, dir / "img.png");
  save_depth_map(DepthMap(4, 4, 1.0f), dir / "depth.dmap");
  SceneManifest m;
  m.scene_name = "tiny";
  m.mode = mode;
  m.base_dir = dir.path();
  ViewEntry v;
  v.image = "img.png";
  v.depth = "depth.dmap";
  v.camera.intrinsics = {2.0, 2.0, 2.0, 2.0, 4, 4};
  if (mode == SceneMode::feature) {
    m.feature_scale = 2;
    save_feature_map(FeatureMap(2, 2, 8, 0.25f), dir / "feat.fmap");
    v.features = "feat.fmap";
  }
  m.views.push_back(v);
  save_manifest(m, dir / "scene.json");
  return m;
}

std::string header(const char* magic, std::uint32_t version, std::uint32_t h, std::uint32_t w,
                   std::uint32_t c) {
  std::string s(magic, 4);
  for (std::uint32_t v : {version, h, w, c}) {
    for (int b = 0; b < 4; ++b) s.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
  }
  return s;
}

}  // namespace

TEST_CASE("camera intrinsics and pose validation") {
  CameraIntrinsics k{1.0, 1.0, 0.5, 0.5, 1, 1};
  CHECK_NOTHROW(k.validate());
  k.fx = 0.0;
  CHECK_THROWS_AS(k.validate(), InvariantError);
  k = {1.0, 1.0, 1.0, 0.5, 1, 1};  // cx == width
  CHECK_THROWS_AS(k.validate(), InvariantError);

  CameraPose pose;
  CHECK_NOTHROW(pose.validate());
  pose.R(0, 0) = -1.0;  // reflection, det -1
  CHECK_THROWS_AS(pose.validate(), InvariantError);
  pose.R = Eigen::Matrix3d::Identity() * 1.01;
  CHECK_THROWS_AS(pose.validate(), InvariantError);
}

TEST_CASE("look_at puts the target on the optical axis") {
  const Eigen::Vector3d eye(3, 2, -5);
  const CameraPose pose = look_at(eye, Eigen::Vector3d(0.5, 0, 1));
  CHECK_NOTHROW(pose.validate());
  const Eigen::Vector3d x = pose.R * Eigen::Vector3d(0.5, 0, 1) + pose.t;
  CHECK(std::abs(x.x()) < 1e-12);
  CHECK(std::abs(x.y()) < 1e-12);
  CHECK(x.z() > 0.0);
  CHECK((pose.center() - eye).norm() < 1e-12);
}

TEST_CASE("downscaled intrinsics keep pixel-center geometry") {
  const CameraIntrinsics k{100.0, 80.0, 32.0, 24.0, 64, 48};
  const CameraIntrinsics s = k.downscaled(4);
  CHECK(s.fx == 25.0);
  CHECK(s.fy == 20.0);
  CHECK(s.cx == 8.0);
  CHECK(s.cy == 6.0);
  CHECK(s.width == 16);
  CHECK(s.height == 12);
}

TEST_CASE("feature map: zero payload from a raw header") {
  TempDir dir;
  write_bytes(dir / "z.fmap", header("FMAP", 1, 2, 2, 3) + std::string(12 * 4, '\0'));
  const FeatureMap m = load_feature_map(dir / "z.fmap");
  CHECK(m.height == 2);
  CHECK(m.width == 2);
  CHECK(m.channels == 3);
  REQUIRE(m.data.size() == 12);
  for (float v : m.data) CHECK(v == 0.0f);
}

TEST_CASE("feature map: little-endian layout is row-major, channel-interleaved") {
  TempDir dir;
  FeatureMap m(1, 2, 2);
  m.data = {1.0f, 2.0f, 3.0f, 4.0f};
  save_feature_map(m, dir / "m.fmap");
  const std::string bytes = read_bytes(dir / "m.fmap");
  REQUIRE(bytes.size() == 20 + 16);
  CHECK(bytes.substr(0, 20) == header("FMAP", 1, 1, 2, 2));
  float third;
  std::memcpy(&third, bytes.data() + 20 + 8, 4);
  CHECK(third == 3.0f);
}

TEST_CASE("feature map round trips") {
  TempDir dir;
  SUBCASE("1x1x3 values") {
    FeatureMap m(1, 1, 3);
    m.data = {0.5f, 0.25f, 1.0f};
    save_feature_map(m, dir / "a.fmap");
    CHECK(load_feature_map(dir / "a.fmap") == m);
  }
  SUBCASE("16x16x256 random map is bit exact") {
    std::mt19937_64 rng(7);
    std::normal_distribution<float> g(0.0f, 3.0f);
    FeatureMap m(16, 16, 256);
    for (auto& v : m.data) v = g(rng);
    save_feature_map(m, dir / "b.fmap");
    const FeatureMap back = load_feature_map(dir / "b.fmap");
    REQUIRE(back.data.size() == m.data.size());
    CHECK(std::memcmp(back.data.data(), m.data.data(), m.data.size() * 4) == 0);
    CHECK(back.has_standard_channels());
  }
}

TEST_CASE("feature map errors") {
  TempDir dir;
  SUBCASE("NaN is rejected before anything is written") {
    FeatureMap m(1, 1, 3, 0.0f);
    m.data[1] = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(save_feature_map(m, dir / "nan.fmap"), InvariantError);
    CHECK_FALSE(fs::exists(dir / "nan.fmap"));
  }
  SUBCASE("bad magic") {
    write_bytes(dir / "bad.fmap", header("FMAQ", 1, 1, 1, 1) + std::string(4, '\0'));
    CHECK_THROWS_AS(load_feature_map(dir / "bad.fmap"), FormatError);
  }
  SUBCASE("truncated payload") {
    write_bytes(dir / "short.fmap", header("FMAP", 1, 2, 2, 3) + std::string(11 * 4, '\0'));
    CHECK_THROWS_AS(load_feature_map(dir / "short.fmap"), FormatError);
  }
  SUBCASE("trailing bytes") {
    write_bytes(dir / "long.fmap", header("FMAP", 1, 1, 1, 1) + std::string(8, '\0'));
    CHECK_THROWS_AS(load_feature_map(dir / "long.fmap"), FormatError);
  }
  SUBCASE("non-finite payload on disk") {
    const float inf = std::numeric_limits<float>::infinity();
    std::string payload(4, '\0');
    std::memcpy(payload.data(), &inf, 4);
    write_bytes(dir / "inf.fmap", header("FMAP", 1, 1, 1, 1) + payload);
    CHECK_THROWS_AS(load_feature_map(dir / "inf.fmap"), InvariantError);
  }
  SUBCASE("unknown version") {
    write_bytes(dir / "v2.fmap", header("FMAP", 2, 1, 1, 1) + std::string(4, '\0'));
    CHECK_THROWS_AS(load_feature_map(dir / "v2.fmap"), FormatError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_feature_map(dir / "nope.fmap"), IoError);
  }
  SUBCASE("non-standard channel counts load but are flagged") {
    save_feature_map(FeatureMap(1, 1, 5, 1.0f), dir / "c5.fmap");
    CHECK_FALSE(load_feature_map(dir / "c5.fmap").has_standard_channels());
  }
}

TEST_CASE("depth map container") {
  TempDir dir;
  DepthMap d(2, 3);
  d.values = {0.0f, 1.0f, 2.5f, 3.0f, 0.0f, 4.0f};
  save_depth_map(d, dir / "d.dmap");
  CHECK(load_depth_map(dir / "d.dmap") == d);
  CHECK(d.valid_count() == 4);
  CHECK(read_grid_header(dir / "d.dmap", "DMAP").channels == 1);
  CHECK_THROWS_AS(load_feature_map(dir / "d.dmap"), FormatError);

  write_bytes(dir / "c2.dmap", header("DMAP", 1, 1, 1, 2) + std::string(8, '\0'));
  CHECK_THROWS_AS(load_depth_map(dir / "c2.dmap"), FormatError);

  DepthMap neg(1, 1, -1.0f);
  CHECK_THROWS_AS(save_depth_map(neg, dir / "neg.dmap"), InvariantError);
}

TEST_CASE("nearest-neighbour depth decimation picks the pixel containing each center") {
  DepthMap d(8, 8);
  for (std::uint32_t r = 0; r < 8; ++r) {
    for (std::uint32_t c = 0; c < 8; ++c) d.at(r, c) = static_cast<float>(10 * r + c + 1);
  }
  const DepthMap s = d.downsample_nearest(4);
  REQUIRE(s.width == 2);
  REQUIRE(s.height == 2);
  CHECK(s.at(0, 0) == d.at(2, 2));
  CHECK(s.at(1, 0) == d.at(6, 2));
  CHECK(s.at(1, 1) == d.at(6, 6));
}

TEST_CASE("PNG round trip quantizes to 8 bits") {
  TempDir dir;
  FeatureMap img(3, 5, 3);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> u(0, 255);
  for (auto& v : img.data) v = static_cast<float>(u(rng)) / 255.0f;
  save_png(img, dir / "x.png");
  const FeatureMap back = load_png(dir / "x.png");
  CHECK(back == img);
  CHECK(read_png_size(dir / "x.png") == std::pair<std::uint32_t, std::uint32_t>{5, 3});

  FeatureMap out_of_range(1, 1, 3);
  out_of_range.data = {-0.5f, 2.0f, 0.5f};
  save_png(out_of_range, dir / "clamp.png");
  const FeatureMap clamped = load_png(dir / "clamp.png");
  CHECK(clamped.data[0] == 0.0f);
  CHECK(clamped.data[1] == 1.0f);
  CHECK(clamped.data[2] == 128.0f / 255.0f);

  CHECK_THROWS_AS(save_png(FeatureMap(1, 1, 2), dir / "c2.png"), DimensionError);
  write_bytes(dir / "junk.png", "not a png");
  CHECK_THROWS_AS(load_png(dir / "junk.png"), FormatError);
}

TEST_CASE("gray PNG loads as three equal channels") {
  TempDir dir;
  FeatureMap gray(2, 2, 1);
  gray.data = {0.0f, 1.0f, 64.0f / 255.0f, 200.0f / 255.0f};
  save_png(gray, dir / "g.png");
  const FeatureMap rgb = load_png(dir / "g.png");
  REQUIRE(rgb.channels == 3);
  for (std::size_t p = 0; p < 4; ++p) {
    for (int c = 0; c < 3; ++c) CHECK(rgb.data[3 * p + c] == gray.data[p]);
  }
}

TEST_CASE("manifest: minimal single-view scene") {
  TempDir dir;
  const SceneManifest written = tiny_scene(dir);
  const SceneManifest m = load_manifest(dir / "scene.json");
  CHECK(m.views.size() == 1);
  CHECK(m.mode == SceneMode::rgb);
  CHECK(m.scene_name == "tiny");
  CHECK(m == written);
  CHECK(m.views[0].camera.pose.R == Eigen::Matrix3d::Identity());
}

TEST_CASE("manifest: rotation with det -1 is rejected") {
  TempDir dir;
  tiny_scene(dir);
  auto j = nlohmann::json::parse(read_bytes(dir / "scene.json"));
  j["views"][0]["pose"]["R"][2][2] = -1.0;
  write_bytes(dir / "scene.json", j.dump());
  CHECK_THROWS_AS(load_manifest(dir / "scene.json"), InvariantError);
}

TEST_CASE("manifest error paths") {
  TempDir dir;
  tiny_scene(dir);
  const std::string good = read_bytes(dir / "scene.json");

  SUBCASE("missing depth file names the file") {
    fs::remove(dir / "depth.dmap");
    try {
      load_manifest(dir / "scene.json");
      FAIL("expected an error");
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find("depth.dmap") != std::string::npos);
    }
  }
  SUBCASE("missing manifest") {
    CHECK_THROWS_AS(load_manifest(dir / "none.json"), IoError);
  }
  SUBCASE("malformed field") {
    auto j = nlohmann::json::parse(good);
    j["views"][0]["intrinsics"]["fx"] = "two";
    write_bytes(dir / "scene.json", j.dump());
    CHECK_THROWS_AS(load_manifest(dir / "scene.json"), FormatError);
  }
  SUBCASE("not JSON") {
    write_bytes(dir / "scene.json", "{ views: ");
    CHECK_THROWS_AS(load_manifest(dir / "scene.json"), FormatError);
  }
  SUBCASE("no views") {
    write_bytes(dir / "scene.json", R"({"scene": "x", "mode": "rgb", "views": []})");
    CHECK_THROWS_AS(load_manifest(dir / "scene.json"), FormatError);
  }
  SUBCASE("image size disagrees with intrinsics") {
    save_png(FeatureMap(5, 4, 3), dir / "img.png");
    CHECK_THROWS_AS(load_manifest(dir / "scene.json"), DimensionError);
  }
  SUBCASE("depth size disagrees with image") {
    save_depth_map(DepthMap(4, 5, 1.0f), dir / "depth.dmap");
    CHECK_THROWS_AS(load_manifest(dir / "scene.json"), DimensionError);
  }
  SUBCASE("unknown mode") {
    auto j = nlohmann::json::parse(good);
    j["mode"] = "lidar";
    write_bytes(dir / "scene.json", j.dump());
    CHECK_THROWS_AS(load_manifest(dir / "scene.json"), FormatError);
  }
}

TEST_CASE("manifest: feature mode checks depth = features x scale") {
  TempDir dir;
  tiny_scene(dir, SceneMode::feature);
  const SceneManifest m = load_manifest(dir / "scene.json");
  CHECK(m.feature_scale == 2);
  const LoadedView v = load_view(m, 0);
  CHECK(v.features.channels == 8);
  CHECK(v.depth.width == 2);
  CHECK(v.camera.intrinsics.fx == 1.0);
  CHECK(v.camera.intrinsics.width == 2);
  CHECK(view_camera(m, 0) == v.camera);
  CHECK(load_view_depth(m, 0) == v.depth);

  save_feature_map(FeatureMap(3, 2, 8, 0.0f), dir / "feat.fmap");
  CHECK_THROWS_AS(load_manifest(dir / "scene.json"), DimensionError);
  fs::remove(dir / "feat.fmap");
  CHECK_THROWS_AS(load_manifest(dir / "scene.json"), IoError);
}

TEST_CASE("manifest and camera text round trip byte-exactly") {
  TempDir dir;
  SyntheticSceneSpec spec;
  spec.n_views = 3;
  spec.resolution = 24;
  const SyntheticScene scene = make_synthetic_scene(spec, dir.path());
  CHECK(scene.manifest.views.size() == 3);
  CHECK(scene.manifest.mode == SceneMode::rgb);

  const std::string text = read_bytes(scene.manifest_path);
  CHECK(manifest_to_string(scene.manifest) == text);
  save_manifest(scene.manifest, dir / "again.json");
  CHECK(read_bytes(dir / "again.json") == text);
  CHECK(load_manifest(dir / "again.json") == scene.manifest);

  const Camera cam = scene.manifest.views[1].camera;
  save_camera(cam, dir / "cam.json");
  CHECK(load_camera(dir / "cam.json") == cam);
}
