#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "splatstyle/error.hpp"
#include "splatstyle/evaluation.hpp"
#include "splatstyle/image_io.hpp"
#include "splatstyle/pipeline.hpp"
#include "splatstyle/renderer.hpp"
#include "splatstyle/scene_io.hpp"
#include "splatstyle/synthetic.hpp"

namespace splatstyle::cli {

namespace fs = std::filesystem;

namespace {

/// Every knob of a run. Flags fill it first; a --config JSON file then overrides
/// whichever keys it names.
struct RunConfig {
  std::uint64_t seed = 0;

  std::string manifest;
  std::string cloud;
  std::string style;
  std::string out;
  std::string out_dir;
  std::string transform_out;
  std::string camera;
  std::string mask_out;
  std::string depth_out;
  std::string text_out;
  int view = -1;

  std::size_t downsample = 0;  // 0 = keep every point

  std::vector<std::size_t> samples{4096, 2048, 1024};
  std::vector<double> radii{0.05, 0.1, 0.2};
  std::size_t group_size = 64;
  std::string pooling = "mean";

  double eps = -1.0;  // < 0: default regularizer
  int dim = -1;       // < 0: automatic, 0: off
  double alpha = 1.0;

  double splat_radius = 2.0;
  std::size_t zbuffer = 128;
  std::string blend = "nearest";
  std::vector<float> background{0.0f};

  std::vector<std::size_t> offsets{1, 7};
  double tau = kDefaultDepthTolerance;

  std::string shape = "cube";
  std::string texture = "checker";
  std::size_t n_views = 3;
  std::uint32_t resolution = 64;
  double arc_step = 15.0;
  double start_azimuth = 0.0;
  double elevation = std::numeric_limits<double>::quiet_NaN();  // NaN: shape default
  double distance = 7.0;
  double fov = 30.0;
};

template <typename T>
void override_from(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

// Rejects keys outside `allowed` so typos do not silently fall back to defaults.
void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!j.is_object()) throw FormatError(where + " must be a JSON object");
  for (const auto& item : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) throw FormatError(where + ": unknown key \"" + item.key() + "\"");
  }
}

void apply_config_file(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    check_keys(j,
               {"seed", "manifest", "cloud", "style", "out", "out_dir", "downsample", "offsets",
                "tau", "aggregation", "transform", "splat"},
               "config file " + path);
    override_from(j, "seed", cfg.seed);
    override_from(j, "manifest", cfg.manifest);
    override_from(j, "cloud", cfg.cloud);
    override_from(j, "style", cfg.style);
    override_from(j, "out", cfg.out);
    override_from(j, "out_dir", cfg.out_dir);
    override_from(j, "downsample", cfg.downsample);
    override_from(j, "offsets", cfg.offsets);
    override_from(j, "tau", cfg.tau);
    if (j.contains("aggregation")) {
      const auto& a = j.at("aggregation");
      check_keys(a, {"samples", "radii", "k", "pooling"}, "config aggregation");
      override_from(a, "samples", cfg.samples);
      override_from(a, "radii", cfg.radii);
      override_from(a, "k", cfg.group_size);
      override_from(a, "pooling", cfg.pooling);
    }
    if (j.contains("transform")) {
      const auto& t = j.at("transform");
      check_keys(t, {"eps", "dim", "alpha"}, "config transform");
      override_from(t, "eps", cfg.eps);
      override_from(t, "dim", cfg.dim);
      override_from(t, "alpha", cfg.alpha);
    }
    if (j.contains("splat")) {
      const auto& s = j.at("splat");
      check_keys(s, {"radius", "zbuffer", "blend", "background"}, "config splat");
      override_from(s, "radius", cfg.splat_radius);
      override_from(s, "zbuffer", cfg.zbuffer);
      override_from(s, "blend", cfg.blend);
      override_from(s, "background", cfg.background);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("config file " + path + ": " + e.what());
  }
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw InvariantError(std::string("missing required option ") + flag);
}

AggregationPipelineConfig aggregation_config(const RunConfig& cfg) {
  if (cfg.samples.size() != cfg.radii.size()) {
    throw InvariantError("--samples and --radii need the same number of stages");
  }
  AggregationPipelineConfig out;
  for (std::size_t i = 0; i < cfg.samples.size(); ++i) {
    out.stages.push_back({cfg.samples[i], cfg.radii[i], cfg.group_size, parse_pooling(cfg.pooling)});
  }
  out.validate();
  return out;
}

StylizeParams stylize_params(const RunConfig& cfg) {
  StylizeParams params;
  params.aggregation = aggregation_config(cfg);
  if (cfg.eps >= 0.0) params.transform.eps = cfg.eps;
  params.transform.alpha = cfg.alpha;
  if (cfg.dim == 0) {
    params.auto_compression = false;
  } else if (cfg.dim > 0) {
    params.transform.compressed_dim = static_cast<std::size_t>(cfg.dim);
  }
  return params;
}

SplatConfig splat_config(const RunConfig& cfg) {
  SplatConfig splat;
  splat.splat_radius_px = cfg.splat_radius;
  splat.zbuffer_size = cfg.zbuffer;
  splat.blend = parse_blend(cfg.blend);
  splat.background = cfg.background;
  splat.validate();
  return splat;
}

bool has_extension(const std::string& path, const char* ext) {
  return fs::path(path).extension() == ext;
}

FeatureMap load_style_input(const std::string& path) {
  return has_extension(path, ".png") ? load_png(path) : load_feature_map(path);
}

void write_rendered(const RenderedView& view, const std::string& path) {
  if (has_extension(path, ".png")) {
    save_png(view.data, path);
  } else {
    save_feature_map(view.data, path);
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

void print_diagnostics(std::ostream& out, const StylizeResult& r) {
  const auto& d = r.diagnostics;
  out << "aggregated points: " << r.aggregated_points << "\n"
      << "transform size: " << r.transform.T.rows() << "x" << r.transform.T.cols()
      << (r.transform.basis ? " (compressed)" : "") << "\n"
      << "content condition: " << d.content_condition << " (eps " << d.content_eps << ")\n"
      << "style condition: " << d.style_condition << " (eps " << d.style_eps << ")\n"
      << "transform spectral norm: " << d.transform_norm << "\n";
}

int cmd_build(const RunConfig& cfg, std::ostream& out) {
  require(cfg.manifest, "--manifest");
  require(cfg.out, "--out");
  const SceneManifest manifest = load_manifest(cfg.manifest);
  std::optional<std::size_t> target;
  if (cfg.downsample > 0) target = cfg.downsample;
  const FeaturePointCloud cloud = build_scene_cloud(manifest, target, cfg.seed);
  save_cloud(cloud, cfg.out);
  out << "points: " << cloud.size() << "\n";
  return 0;
}

int cmd_stylize(const RunConfig& cfg, std::ostream& out) {
  require(cfg.cloud, "--cloud");
  require(cfg.style, "--style");
  require(cfg.out, "--out");
  const FeaturePointCloud cloud = load_cloud(cfg.cloud);
  const FeatureMap style = load_style_input(cfg.style);
  const StylizeResult result = stylize_cloud(cloud, style, stylize_params(cfg), cfg.seed);
  save_cloud(result.cloud, cfg.out);
  if (!cfg.transform_out.empty()) save_transform(result.transform, cfg.transform_out);
  print_diagnostics(out, result);
  return 0;
}

Camera render_camera(const RunConfig& cfg) {
  if (!cfg.camera.empty()) return load_camera(cfg.camera);
  if (cfg.manifest.empty() || cfg.view < 0) {
    throw InvariantError("render needs --camera, or --manifest with --view");
  }
  const SceneManifest manifest = load_manifest(cfg.manifest);
  if (static_cast<std::size_t>(cfg.view) >= manifest.views.size()) {
    throw InvariantError("view index " + std::to_string(cfg.view) + " out of range (scene has " +
                         std::to_string(manifest.views.size()) + " views)");
  }
  return view_camera(manifest, static_cast<std::size_t>(cfg.view));
}

int cmd_render(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require(cfg.cloud, "--cloud");
  require(cfg.out, "--out");
  const FeaturePointCloud cloud = load_cloud(cfg.cloud);
  const Camera camera = render_camera(cfg);
  SplatConfig splat = splat_config(cfg);
  splat.clamp_unit = cloud.channels == 3;
  const RenderedView view = render_view(cloud, camera, splat);
  write_rendered(view, cfg.out);
  if (!cfg.mask_out.empty()) save_png(view.mask_image(), cfg.mask_out);
  if (!cfg.depth_out.empty()) save_depth_map(view.depth_map(), cfg.depth_out);
  const std::size_t covered = view.coverage_count();
  if (covered == 0) err << "warning: render covers no pixels (points behind or outside the camera)\n";
  out << "covered pixels: " << covered << "/" << view.mask.size() << "\n";
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
  require(cfg.cloud, "--cloud");
  require(cfg.manifest, "--manifest");
  require(cfg.out, "--out");
  const FeaturePointCloud cloud = load_cloud(cfg.cloud);
  const SceneManifest manifest = load_manifest(cfg.manifest);
  const ConsistencyReport report =
      run_protocol(manifest, cloud, cfg.offsets, {splat_config(cfg), cfg.tau});
  write_text(cfg.out, report.to_csv());
  if (!cfg.text_out.empty()) write_text(cfg.text_out, report.to_text());
  out << report.to_text();
  return 0;
}

int cmd_pipeline(const RunConfig& cfg, std::ostream& out) {
  require(cfg.manifest, "--manifest");
  require(cfg.style, "--style");
  require(cfg.out_dir, "--out-dir");
  const fs::path dir = cfg.out_dir;
  fs::create_directories(dir);

  const SceneManifest manifest = load_manifest(cfg.manifest);
  std::optional<std::size_t> target;
  if (cfg.downsample > 0) target = cfg.downsample;
  const FeaturePointCloud cloud = build_scene_cloud(manifest, target, cfg.seed);
  save_cloud(cloud, dir / "cloud.fpcl");
  out << "points: " << cloud.size() << "\n";

  const StylizeResult styled =
      stylize_cloud(cloud, load_style_input(cfg.style), stylize_params(cfg), cfg.seed);
  save_cloud(styled.cloud, dir / "stylized.fpcl");
  save_transform(styled.transform, dir / "transform.stfm");
  print_diagnostics(out, styled);

  SplatConfig splat = splat_config(cfg);
  splat.clamp_unit = manifest.mode == SceneMode::rgb;
  const char* ext = styled.cloud.channels == 3 ? "png" : "fmap";
  std::vector<RenderedView> views;
  std::vector<DepthMap> depths;
  for (std::size_t i = 0; i < manifest.views.size(); ++i) {
    views.push_back(render_view(styled.cloud, view_camera(manifest, i), splat));
    depths.push_back(load_view_depth(manifest, i));
    char name[32];
    std::snprintf(name, sizeof(name), "render_%03zu.%s", i, ext);
    write_rendered(views.back(), (dir / name).string());
  }

  std::size_t max_offset = 0;
  for (std::size_t o : cfg.offsets) max_offset = std::max(max_offset, o);
  if (manifest.views.size() > max_offset) {
    const ConsistencyReport report = evaluate_views(views, depths, cfg.offsets, cfg.tau);
    write_text((dir / "report.csv").string(), report.to_csv());
    write_text((dir / "report.txt").string(), report.to_text());
    out << report.to_text();
  } else {
    out << "skipping evaluation: scene has too few views for offsets\n";
  }
  return 0;
}

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
  require(cfg.out_dir, "--out-dir");
  SyntheticSceneSpec spec;
  spec.shape = parse_synthetic_shape(cfg.shape);
  spec.texture = parse_synthetic_texture(cfg.texture);
  spec.n_views = cfg.n_views;
  spec.resolution = cfg.resolution;
  spec.seed = cfg.seed;
  spec.arc_step_deg = cfg.arc_step;
  spec.start_azimuth_deg = cfg.start_azimuth;
  if (!std::isnan(cfg.elevation)) spec.elevation_deg = cfg.elevation;
  spec.distance = cfg.distance;
  spec.fov_deg = cfg.fov;
  spec.name = cfg.shape;
  const SyntheticScene scene = make_synthetic_scene(spec, cfg.out_dir);
  out << "manifest: " << scene.manifest_path.string() << "\n";
  return 0;
}

void add_aggregation_flags(CLI::App* app, RunConfig& cfg) {
  app->add_option("--samples", cfg.samples, "points kept per aggregation stage")
      ->delimiter(',')
      ->capture_default_str();
  app->add_option("--radii", cfg.radii, "grouping radius per stage (unit-cube frame)")
      ->delimiter(',')
      ->capture_default_str();
  app->add_option("-k,--group-size", cfg.group_size, "max points per group")->capture_default_str();
  app->add_option("--pooling", cfg.pooling, "group pooling: mean or max")->capture_default_str();
  app->add_option("--eps", cfg.eps, "eigenvalue regularizer (default 1e-8 trace/C')");
  app->add_option("--dim", cfg.dim, "compressed dimension (0 = off, default auto)");
  app->add_option("--alpha", cfg.alpha, "stylization strength in [0, 1]")->capture_default_str();
}

void add_splat_flags(CLI::App* app, RunConfig& cfg) {
  app->add_option("--radius", cfg.splat_radius, "splat radius in pixels")->capture_default_str();
  app->add_option("--zbuffer", cfg.zbuffer, "candidates kept per pixel")->capture_default_str();
  app->add_option("--blend", cfg.blend, "nearest or inverse_depth")->capture_default_str();
  app->add_option("--background", cfg.background, "background value(s)")->delimiter(',');
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stylize a scene once as a feature point cloud and render consistent views"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string config_path;
  app.add_option("--config", config_path, "JSON run config; its keys override flags");
  app.add_option("--seed", cfg.seed, "seed for every random choice")->capture_default_str();

  auto* build = app.add_subcommand("build", "back-project a manifest into a feature point cloud");
  build->add_option("--manifest", cfg.manifest, "scene manifest");
  build->add_option("-o,--out", cfg.out, "output cloud (.fpcl)");
  build->add_option("--downsample", cfg.downsample, "uniformly keep at most N points (0 = all)");

  auto* stylize = app.add_subcommand("stylize", "stylize a point cloud with a reference style");
  stylize->add_option("--cloud", cfg.cloud, "input cloud (.fpcl)");
  stylize->add_option("--style", cfg.style, "style image (.png, RGB) or feature map (.fmap)");
  stylize->add_option("-o,--out", cfg.out, "output cloud (.fpcl)");
  stylize->add_option("--transform-out", cfg.transform_out, "also save the transform (.stfm)");
  add_aggregation_flags(stylize, cfg);

  auto* render = app.add_subcommand("render", "render a cloud from a camera");
  render->add_option("--cloud", cfg.cloud, "input cloud (.fpcl)");
  render->add_option("--camera", cfg.camera, "camera JSON");
  render->add_option("--manifest", cfg.manifest, "take the camera from this manifest");
  render->add_option("--view", cfg.view, "view index in the manifest");
  render->add_option("-o,--out", cfg.out, "output image (.png) or feature map (.fmap)");
  render->add_option("--mask-out", cfg.mask_out, "coverage mask (.png)");
  render->add_option("--depth-out", cfg.depth_out, "depth buffer (.dmap)");
  add_splat_flags(render, cfg);

  auto* evaluate = app.add_subcommand("evaluate", "warping-error protocol over manifest views");
  evaluate->add_option("--cloud", cfg.cloud, "stylized cloud (.fpcl)");
  evaluate->add_option("--manifest", cfg.manifest, "scene manifest with ordered views");
  evaluate->add_option("--offsets", cfg.offsets, "frame gaps")->delimiter(',')->capture_default_str();
  evaluate->add_option("--tau", cfg.tau, "relative depth tolerance")->capture_default_str();
  evaluate->add_option("-o,--out", cfg.out, "report CSV");
  evaluate->add_option("--text-out", cfg.text_out, "report as text");
  add_splat_flags(evaluate, cfg);

  auto* pipeline = app.add_subcommand("pipeline", "build, stylize, render every view, evaluate");
  pipeline->add_option("--manifest", cfg.manifest, "scene manifest");
  pipeline->add_option("--style", cfg.style, "style image (.png) or feature map (.fmap)");
  pipeline->add_option("--out-dir", cfg.out_dir, "directory for all outputs");
  pipeline->add_option("--downsample", cfg.downsample, "uniformly keep at most N points (0 = all)");
  pipeline->add_option("--offsets", cfg.offsets, "frame gaps")->delimiter(',')->capture_default_str();
  pipeline->add_option("--tau", cfg.tau, "relative depth tolerance")->capture_default_str();
  add_aggregation_flags(pipeline, cfg);
  add_splat_flags(pipeline, cfg);

  auto* synth = app.add_subcommand("synth", "write an analytic synthetic scene");
  synth->add_option("--out-dir", cfg.out_dir, "output directory");
  synth->add_option("--shape", cfg.shape, "cube or plane")->capture_default_str();
  synth->add_option("--texture", cfg.texture, "checker or gradient")->capture_default_str();
  synth->add_option("--views", cfg.n_views, "number of views")->capture_default_str();
  synth->add_option("--resolution", cfg.resolution, "image size in pixels")->capture_default_str();
  synth->add_option("--arc-step", cfg.arc_step, "degrees between views")->capture_default_str();
  synth->add_option("--start-azimuth", cfg.start_azimuth, "azimuth of view 0 in degrees")
      ->capture_default_str();
  synth->add_option("--elevation", cfg.elevation, "camera elevation in degrees (default by shape)");
  synth->add_option("--distance", cfg.distance, "camera distance from the origin")
      ->capture_default_str();
  synth->add_option("--fov", cfg.fov, "horizontal field of view in degrees")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (!config_path.empty()) apply_config_file(config_path, cfg);
    if (build->parsed()) return cmd_build(cfg, out);
    if (stylize->parsed()) return cmd_stylize(cfg, out);
    if (render->parsed()) return cmd_render(cfg, out, err);
    if (evaluate->parsed()) return cmd_evaluate(cfg, out);
    if (pipeline->parsed()) return cmd_pipeline(cfg, out);
    if (synth->parsed()) return cmd_synth(cfg, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace splatstyle::cli
