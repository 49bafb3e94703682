#include "cli.hpp"

#include "topview/analytics.hpp"
#include "topview/io.hpp"
#include "topview/pipeline.hpp"
#include "topview/service.hpp"
#include "topview/synth.hpp"

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include <future>
#include <iostream>
#include <optional>
#include <regex>

namespace topview::cli {

namespace {

using ojson = nlohmann::ordered_json;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::SchemaError:
    case ErrorCode::ParseError:
    case ErrorCode::EmptyInput:
    case ErrorCode::InvalidArgument:
      return kSchemaError;
    case ErrorCode::UnknownCamera:
    case ErrorCode::MissingGeoAnchor:
    case ErrorCode::MixedCalibration:
      return kReferenceError;
    default:
      return kEstimationFailure;
  }
}

ImageSize parse_image_size(const std::string& text) {
  static const std::regex re(R"(^\s*([0-9]+(?:\.[0-9]*)?)\s*[xX]\s*([0-9]+(?:\.[0-9]*)?)\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, re))
    throw Error(ErrorCode::InvalidArgument, "image size must look like WIDTHxHEIGHT, got '" + text + "'");
  return {std::stod(m[1]), std::stod(m[2])};
}

struct GridOptions {
  double alpha = 0.25;
  int subdivisions = 8;
  double bev_width = 20.0;
  double bev_depth = 40.0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--alpha", alpha, "Upper grid line position between VP row (0) and bottom edge (1)")->capture_default_str();
    cmd->add_option("--subdivisions", subdivisions, "Bottom-line subdivisions")->capture_default_str();
    cmd->add_option("--bev-width", bev_width, "BEV rectangle width, abstract units")->capture_default_str();
    cmd->add_option("--bev-depth", bev_depth, "BEV rectangle depth, abstract units")->capture_default_str();
  }
  GridParams params() const { return {alpha, subdivisions, bev_width, bev_depth}; }
};

struct VpOptions {
  std::string segments;
  std::string sidecar;
  std::string image_size;
  RansacConfig ransac;
};

int cmd_vp(const VpOptions& o, std::ostream& out) {
  ojson report;
  if (!o.sidecar.empty()) {
    const VanishingPoint vp = load_vp_sidecar(o.sidecar);
    report["x"] = vp.x;
    report["y"] = vp.y;
    report["confidence"] = vp.confidence;
    report["source"] = "sidecar";
  } else {
    const auto segments = load_segments(o.segments);
    const VpEstimate est = estimate_vp_ransac(segments, o.ransac);
    report["x"] = est.vp.x;
    report["y"] = est.vp.y;
    report["confidence"] = est.vp.confidence;
    report["source"] = "ransac";
    report["inliers"] = est.inlier_count;
    report["segments"] = segments.size();
    report["residual"] = est.residual;
  }
  if (!o.image_size.empty()) {
    const ImageSize size = parse_image_size(o.image_size);
    const VanishingPoint n = normalize_vp({report["x"].get<double>(), report["y"].get<double>(), 1.0}, size.width, size.height);
    report["normalized"] = {{"x", n.x}, {"y", n.y}};
    report["horizon_y"] = horizon_line(ImagePoint{report["x"].get<double>(), report["y"].get<double>()}).y;
  }
  out << report.dump() << '\n';
  return kOk;
}

struct ProjectOptions {
  std::string detections;
  std::string vp;
  std::string image_size;
  std::string calib;
  double fps = 25.0;
  std::string out_tokens;
  std::string out_geojson;
  std::string geojson_mode = "linestrings";
  double threshold = 2.0;
  GridOptions grid;
};

int cmd_project(const ProjectOptions& o, std::ostream& out, std::ostream& err) {
  const ImageSize size = parse_image_size(o.image_size);
  const VanishingPoint vp = load_vp_sidecar(o.vp);
  const CalibrationParams cal = o.calib.empty() ? CalibrationParams{} : load_calibration(o.calib);
  PipelineConfig config;
  config.grid = o.grid.params();

  std::vector<Detection> detections;
  try {
    detections = load_detections(o.detections, {o.fps});
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EmptyInput) throw;
    err << "warning: " << e.what() << '\n';
  }

  const PreparedScene scene = prepare_scene(detections, config);
  const SceneOutput result = project_scene(scene, vp, size, cal, config);
  if (result.above_horizon > 0)
    err << "warning: AboveHorizon: dropped " << result.above_horizon << " samples at or above the horizon\n";

  io::write_file(o.out_tokens, export_tokens(result.tokens));
  if (!o.out_geojson.empty()) {
    const GeoJsonMode mode = o.geojson_mode == "points" ? GeoJsonMode::Points : GeoJsonMode::LineStrings;
    io::write_file(o.out_geojson, export_geojson(result.tokens, mode));
  }
  const auto report = detect_violations(result.tokens, cal, o.threshold);
  out << "tracks=" << result.tokens.size() << " states=" << result.samples
      << " above_horizon=" << result.above_horizon << " violations=" << report.events.size() << '\n';
  return kOk;
}

struct AnalyzeOptions {
  std::vector<std::string> tokens;
  double threshold = 2.0;
  int min_duration = 1;
  double grid = 0.0;
  std::string registry;
  std::string calib;
  std::string out;
};

ojson event_json(const ViolationEvent& e) {
  ojson j;
  j["frame"] = e.frame;
  j["end_frame"] = e.end_frame;
  j["t"] = e.t;
  j["pair"] = {e.pair.first, e.pair.second};
  j["distance"] = e.distance;
  return j;
}

int cmd_analyze(const AnalyzeOptions& o, std::ostream& out) {
  const CalibrationParams cal = o.calib.empty() ? CalibrationParams{} : load_calibration(o.calib);

  struct FileResult {
    std::vector<TokenStream> streams;
    ViolationReport report;
  };
  // Files are independent; results are merged in input order.
  std::vector<std::future<FileResult>> jobs;
  for (const auto& path : o.tokens)
    jobs.push_back(std::async(std::launch::async, [&, path] {
      FileResult r;
      r.streams = load_tokens(path);
      r.report = detect_violations(r.streams, cal, o.threshold, o.min_duration);
      return r;
    }));
  std::vector<FileResult> results;
  for (auto& j : jobs) results.push_back(j.get());

  std::size_t total = 0;
  for (const auto& r : results) total += r.report.events.size();

  if (!o.registry.empty()) {
    const auto registry = parse_camera_registry(io::read_file(o.registry));
    std::vector<CameraResult> cams;
    for (std::size_t i = 0; i < o.tokens.size(); ++i)
      cams.push_back({std::filesystem::path(o.tokens[i]).stem().string(), results[i].report.events.size()});
    const CitySummary summary = aggregate_scenes(cams, registry);
    io::write_file(o.out, summary_geojson(summary));
    out << "cameras=" << cams.size() << " violations=" << summary.total << '\n';
    return kOk;
  }

  ojson doc;
  ojson files = ojson::array();
  for (std::size_t i = 0; i < o.tokens.size(); ++i) {
    ojson f;
    f["file"] = o.tokens[i];
    ojson events = ojson::array();
    for (const auto& e : results[i].report.events) events.push_back(event_json(e));
    f["violations"] = std::move(events);
    f["count"] = results[i].report.events.size();
    f["contacts"] = results[i].report.contacts;
    files.push_back(std::move(f));
  }
  doc["threshold"] = o.threshold;
  doc["files"] = std::move(files);
  doc["total_violations"] = total;
  if (o.grid > 0) {
    std::vector<TokenStream> all;
    for (auto& r : results) all.insert(all.end(), r.streams.begin(), r.streams.end());
    doc["occupancy"] = ojson::parse(dump_occupancy(occupancy(all, cal, o.grid)));
  }
  io::write_file(o.out, doc.dump() + "\n");
  out << "files=" << o.tokens.size() << " violations=" << total << '\n';
  return kOk;
}

struct SynthOptions {
  std::string scenario;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::optional<double> bbox_sigma;
  std::optional<double> dropout;
  bool remove_ids = false;
};

int cmd_synth(const SynthOptions& o, std::ostream& out) {
  synth::Scenario s = synth::load_scenario(o.scenario);
  if (o.bbox_sigma) s.noise.bbox_sigma = *o.bbox_sigma;
  if (o.dropout) s.noise.dropout = *o.dropout;
  if (o.remove_ids) s.noise.remove_ids = true;
  s.validate();
  const auto result = synth::emit_scenario(s, o.seed);
  synth::write_outputs(s, result, o.out_dir);
  out << "detections=" << result.detections.size() << " agents=" << s.agents.size() << " vp=(" << result.vp.x << ", "
      << result.vp.y << ")\n";
  return kOk;
}

struct CalibrateOptions {
  std::string points;
  std::string vp;
  std::string image_size;
  std::string calib;
  std::string out;
  GridOptions grid;
};

// Points file: [{"image": [x, y], "ground": [east, north]}, ...]
int cmd_calibrate(const CalibrateOptions& o, std::ostream& out) {
  const ImageSize size = parse_image_size(o.image_size);
  const VanishingPoint vp = load_vp_sidecar(o.vp);
  const CalibrationParams base = o.calib.empty() ? CalibrationParams{} : load_calibration(o.calib);
  const PerspectiveGrid grid = build_perspective_grid(vp.point(), size.width, size.height, o.grid.params());

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(io::read_file(o.points));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, o.points + ": " + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorCode::SchemaError, o.points + ": expected an array of references");
  std::vector<GroundReference> refs;
  for (const auto& item : doc) {
    if (!item.contains("image") || !item.contains("ground") || item["image"].size() != 2 || item["ground"].size() != 2)
      throw Error(ErrorCode::SchemaError, o.points + ": each reference needs image [x, y] and ground [x, y]");
    const ImagePoint px{item["image"][0].get<double>(), item["image"][1].get<double>()};
    refs.push_back({to_bev(px, grid, CalibrationParams{}), {item["ground"][0].get<double>(), item["ground"][1].get<double>()}});
  }
  const CalibrationParams fitted = fit_calibration_scale(refs, base);
  io::write_file(o.out, dump_calibration(fitted));
  out << "z_value=" << fitted.z_value << " meters_per_unit=" << fitted.meters_per_unit << '\n';
  return kOk;
}

struct ServeOptions {
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string scene_dir;
  GridOptions grid;
};

int cmd_serve(const ServeOptions& o, std::ostream& out, std::ostream& err) {
  PipelineConfig config;
  config.grid = o.grid.params();
  SceneService service(o.scene_dir, config);
  httplib::Server server;
  service.mount(server);
  out << "listening on http://" << o.host << ':' << o.port << '\n' << std::flush;
  if (!server.listen(o.host, o.port)) {
    err << "error: cannot listen on " << o.host << ':' << o.port << '\n';
    return kEstimationFailure;
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"topview: bird's-eye-view mapping of road users from uncalibrated street cameras"};
  app.set_config("--config", "", "TOML-style file mirroring the command-line flags; flags take precedence");
  app.require_subcommand(1);

  VpOptions vp_opts;
  auto* vp = app.add_subcommand("vp", "Load or estimate the vanishing point");
  auto* seg_opt = vp->add_option("--segments", vp_opts.segments, "JSON segment file for RANSAC estimation");
  auto* side_opt = vp->add_option("--sidecar", vp_opts.sidecar, "JSON VP sidecar to pass through");
  seg_opt->excludes(side_opt);
  vp->add_option("--image-size", vp_opts.image_size, "WIDTHxHEIGHT; adds normalized coordinates");
  vp->add_option("--iterations", vp_opts.ransac.iterations, "RANSAC rounds")->capture_default_str();
  vp->add_option("--threshold", vp_opts.ransac.threshold, "Inlier distance, px")->capture_default_str();
  vp->add_option("--min-inlier-ratio", vp_opts.ransac.min_inlier_ratio, "Minimum consensus fraction")->capture_default_str();
  vp->add_option("--seed", vp_opts.ransac.seed, "RANSAC seed")->capture_default_str();

  ProjectOptions pr;
  auto* project = app.add_subcommand("project", "Track, lift to 3D boxes and project detections into the BEV");
  project->add_option("--detections", pr.detections, "Newline-delimited JSON detections")->required();
  project->add_option("--vp", pr.vp, "VP sidecar JSON")->required();
  project->add_option("--image-size", pr.image_size, "WIDTHxHEIGHT")->required();
  project->add_option("--calib", pr.calib, "Calibration JSON");
  project->add_option("--fps", pr.fps, "Timebase for records without t")->capture_default_str();
  project->add_option("--out-tokens", pr.out_tokens, "Token stream output (NDJSON)")->required();
  project->add_option("--out-geojson", pr.out_geojson, "GeoJSON output (needs camera_lat/camera_lon)");
  project->add_option("--geojson-mode", pr.geojson_mode, "points or linestrings")
      ->check(CLI::IsMember({"points", "linestrings"}))
      ->capture_default_str();
  project->add_option("--threshold", pr.threshold, "Distance threshold for the summary violation count, m")
      ->capture_default_str();
  pr.grid.add_to(project);

  AnalyzeOptions an;
  auto* analyze = app.add_subcommand("analyze", "Social-distancing violations, occupancy and city-scale aggregation");
  analyze->add_option("--tokens", an.tokens, "Token files; with --registry the file stem is the camera id")
      ->required()
      ->expected(1, -1);
  analyze->add_option("--threshold", an.threshold, "Violation distance, m")->capture_default_str();
  analyze->add_option("--min-duration", an.min_duration, "Minimum run length, frames")->capture_default_str();
  analyze->add_option("--grid", an.grid, "Occupancy cell size, m (0 disables)")->capture_default_str();
  analyze->add_option("--registry", an.registry, "Camera registry CSV camera_id,lat,lon,heading");
  analyze->add_option("--calib", an.calib, "Calibration JSON supplying meters_per_unit");
  analyze->add_option("--out", an.out, "Output JSON / GeoJSON")->required();

  SynthOptions sy;
  auto* synth_cmd = app.add_subcommand("synth", "Emit a synthetic pinhole-camera scenario");
  synth_cmd->add_option("--scenario", sy.scenario, "Scenario JSON")->required();
  synth_cmd->add_option("--out-dir", sy.out_dir, "Output directory")->required();
  synth_cmd->add_option("--seed", sy.seed, "Noise seed")->capture_default_str();
  synth_cmd->add_option("--bbox-sigma", sy.bbox_sigma, "Bounding-box jitter, px");
  synth_cmd->add_option("--dropout", sy.dropout, "Detection dropout probability");
  synth_cmd->add_flag("--remove-ids", sy.remove_ids, "Strip track ids from the detections");

  CalibrateOptions ca;
  auto* calibrate = app.add_subcommand("calibrate", "Fit z_value and meters_per_unit from known ground points");
  calibrate->add_option("--points", ca.points, "JSON [{\"image\": [x, y], \"ground\": [x, y]}, ...]")->required();
  calibrate->add_option("--vp", ca.vp, "VP sidecar JSON")->required();
  calibrate->add_option("--image-size", ca.image_size, "WIDTHxHEIGHT")->required();
  calibrate->add_option("--calib", ca.calib, "Starting calibration JSON");
  calibrate->add_option("--out", ca.out, "Calibration JSON output")->required();
  ca.grid.add_to(calibrate);

  ServeOptions sv;
  auto* serve = app.add_subcommand("serve", "HTTP/JSON service for the calibration tool");
  serve->add_option("--port", sv.port, "Port")->capture_default_str();
  serve->add_option("--host", sv.host, "Bind address")->capture_default_str();
  serve->add_option("--scene-dir", sv.scene_dir, "Directory of scene directories")->required();
  sv.grid.add_to(serve);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kSchemaError;
  }
  if (vp->parsed() && vp_opts.segments.empty() && vp_opts.sidecar.empty()) {
    err << "error: vp needs --segments or --sidecar\n";
    return kSchemaError;
  }

  try {
    if (vp->parsed()) return cmd_vp(vp_opts, out);
    if (project->parsed()) return cmd_project(pr, out, err);
    if (analyze->parsed()) return cmd_analyze(an, out);
    if (synth_cmd->parsed()) return cmd_synth(sy, out);
    if (calibrate->parsed()) return cmd_calibrate(ca, out);
    if (serve->parsed()) return cmd_serve(sv, out, err);
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return exit_code_for(e.code());
  }
  return kOk;
}

}  // namespace topview::cli
