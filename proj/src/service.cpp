#include "topview/service.hpp"

#include "topview/io.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <charconv>

namespace topview {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

HttpResponse error_response(int status, const std::string& message) {
  ojson body;
  body["error"] = message;
  return {status, "application/json", body.dump() + "\n"};
}

HttpResponse not_found(const std::string& id) { return error_response(404, "unknown scene '" + id + "'"); }

ojson grid_summary(const PerspectiveGrid& g) {
  ojson doc;
  doc["vp"] = {{"x", g.vp.x}, {"y", g.vp.y}};
  ojson src = ojson::array();
  for (const auto& c : g.src.corners) src.push_back({c.x, c.y});
  doc["src"] = std::move(src);
  doc["dst"] = {{"width", g.bev_width}, {"depth", g.bev_depth}};
  doc["upper_y"] = g.upper_y;
  ojson h = ojson::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) h.push_back(g.homography(r, c));
  doc["homography"] = std::move(h);
  return doc;
}

}  // namespace

SceneData load_scene(const std::filesystem::path& dir, const PipelineConfig& config) {
  SceneData scene;
  scene.id = dir.filename().string();
  scene.dir = dir;

  json meta;
  try {
    meta = json::parse(io::read_file(dir / "scene.json"));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, (dir / "scene.json").string() + ": " + e.what());
  }
  if (!meta.is_object() || !meta.contains("image_width") || !meta.contains("image_height") ||
      !meta["image_width"].is_number() || !meta["image_height"].is_number())
    throw Error(ErrorCode::SchemaError, (dir / "scene.json").string() + ": needs numeric image_width and image_height");
  scene.image = {meta["image_width"].get<double>(), meta["image_height"].get<double>()};
  if (meta.contains("fps") && meta["fps"].is_number()) scene.fps = meta["fps"].get<double>();

  scene.vp = load_vp_sidecar(dir / "vp.json");
  if (std::filesystem::exists(dir / "calibration.json")) scene.calibration = load_calibration(dir / "calibration.json");

  std::vector<Detection> detections;
  try {
    detections = load_detections(dir / "detections.ndjson", {scene.fps});
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EmptyInput) throw;
  }
  scene.prepared = prepare_scene(detections, config);
  return scene;
}

SceneService::SceneService(const std::filesystem::path& scene_dir, PipelineConfig config) : config_(config) {
  if (!std::filesystem::is_directory(scene_dir))
    throw Error(ErrorCode::MissingFile, "scene directory " + scene_dir.string() + " does not exist");
  for (const auto& entry : std::filesystem::directory_iterator(scene_dir)) {
    if (!entry.is_directory() || !std::filesystem::exists(entry.path() / "scene.json")) continue;
    auto e = std::make_unique<Entry>();
    e->scene = load_scene(entry.path(), config_);
    e->session = std::make_shared<const Session>(Session{e->scene.calibration, e->scene.vp});
    scenes_.emplace(e->scene.id, std::move(e));
  }
}

const SceneService::Entry* SceneService::find(const std::string& id) const {
  const auto it = scenes_.find(id);
  return it == scenes_.end() ? nullptr : it->second.get();
}

SceneService::Entry* SceneService::find(const std::string& id) {
  const auto it = scenes_.find(id);
  return it == scenes_.end() ? nullptr : it->second.get();
}

std::shared_ptr<const SceneService::Session> SceneService::snapshot(const Entry& e) const {
  std::lock_guard lock(e.mutex);
  return e.session;
}

SceneOutput SceneService::compute(const Entry& e, const Session& s) const {
  return project_scene(e.scene.prepared, s.vp, e.scene.image, s.calibration, config_);
}

HttpResponse SceneService::list_scenes() const {
  ojson arr = ojson::array();
  for (const auto& [id, e] : scenes_) {
    const auto s = snapshot(*e);
    const auto& p = e->scene.prepared;
    ojson item;
    item["id"] = id;
    item["first_frame"] = p.empty() ? 0 : p.min_frame;
    item["last_frame"] = p.empty() ? -1 : p.max_frame;
    item["frame_count"] = p.empty() ? 0 : p.max_frame - p.min_frame + 1;
    ojson classes = ojson::array();
    for (auto c : p.classes) classes.push_back(to_string(c));
    item["classes"] = std::move(classes);
    item["vp"] = {{"x", s->vp.x}, {"y", s->vp.y}};
    item["image_width"] = e->scene.image.width;
    item["image_height"] = e->scene.image.height;
    arr.push_back(std::move(item));
  }
  return {200, "application/json", arr.dump() + "\n"};
}

HttpResponse SceneService::bev(const std::string& id, const std::optional<std::string>& frame_text) const {
  const Entry* e = find(id);
  if (!e) return not_found(id);
  if (!frame_text) return error_response(400, "query parameter 'frame' is required");
  int frame = 0;
  const auto* first = frame_text->data();
  const auto* last = first + frame_text->size();
  const auto [ptr, ec] = std::from_chars(first, last, frame);
  if (ec != std::errc() || ptr != last) return error_response(400, "frame must be an integer");
  const auto& p = e->scene.prepared;
  if (p.empty() || frame < p.min_frame || frame > p.max_frame)
    return error_response(416, "frame " + *frame_text + " is out of range");
  const auto s = snapshot(*e);
  try {
    const auto out = compute(*e, *s);
    return {200, "application/json", export_frame(frame_objects(out.tokens, frame))};
  } catch (const Error& err) {
    return error_response(422, err.what());
  }
}

HttpResponse SceneService::put_calibration(const std::string& id, const std::string& body) {
  Entry* e = find(id);
  if (!e) return not_found(id);
  CalibrationParams cal;
  try {
    cal = parse_calibration(body);
  } catch (const Error& err) {
    return error_response(err.code() == ErrorCode::ParseError ? 400 : 422, err.what());
  }
  {
    std::lock_guard lock(e->mutex);
    e->session = std::make_shared<const Session>(Session{cal, e->session->vp});
  }
  return {200, "application/json", dump_calibration(cal)};
}

HttpResponse SceneService::put_vp(const std::string& id, const std::string& body) {
  Entry* e = find(id);
  if (!e) return not_found(id);
  VanishingPoint vp;
  try {
    vp = parse_vp_sidecar(body);
  } catch (const Error& err) {
    return error_response(400, err.what());
  }
  PerspectiveGrid grid;
  try {
    grid = build_perspective_grid(vp.point(), e->scene.image.width, e->scene.image.height, config_.grid);
  } catch (const Error& err) {
    return error_response(422, err.what());
  }
  {
    std::lock_guard lock(e->mutex);
    e->session = std::make_shared<const Session>(Session{e->session->calibration, vp});
  }
  return {200, "application/json", grid_summary(grid).dump() + "\n"};
}

HttpResponse SceneService::tokens(const std::string& id) const {
  const Entry* e = find(id);
  if (!e) return not_found(id);
  const auto s = snapshot(*e);
  try {
    const auto out = compute(*e, *s);
    return {200, "application/x-ndjson", export_tokens(out.tokens)};
  } catch (const Error& err) {
    return error_response(422, err.what());
  }
}

HttpResponse SceneService::geojson(const std::string& id, const std::optional<std::string>& mode) const {
  const Entry* e = find(id);
  if (!e) return not_found(id);
  GeoJsonMode m = GeoJsonMode::LineStrings;
  if (mode) {
    if (*mode == "points") m = GeoJsonMode::Points;
    else if (*mode != "linestrings") return error_response(400, "mode must be 'points' or 'linestrings'");
  }
  const auto s = snapshot(*e);
  try {
    const auto out = compute(*e, *s);
    return {200, "application/geo+json", export_geojson(out.tokens, m)};
  } catch (const Error& err) {
    return error_response(422, err.what());
  }
}

HttpResponse SceneService::save_calibration(const std::string& id) const {
  const Entry* e = find(id);
  if (!e) return not_found(id);
  const auto s = snapshot(*e);
  const std::string text = dump_calibration(s->calibration);
  try {
    io::write_file(e->scene.dir / "calibration.json", text);
  } catch (const Error& err) {
    return error_response(500, err.what());
  }
  return {200, "application/json", text};
}

void SceneService::mount(httplib::Server& server) {
  const auto reply = [](httplib::Response& res, const HttpResponse& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  const auto param = [](const httplib::Request& req, const char* key) -> std::optional<std::string> {
    if (!req.has_param(key)) return std::nullopt;
    return req.get_param_value(key);
  };

  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, PUT, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Get("/scenes", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, list_scenes()); });
  server.Get(R"(/scenes/([^/]+)/bev)", [this, reply, param](const httplib::Request& req, httplib::Response& res) {
    reply(res, bev(req.matches[1], param(req, "frame")));
  });
  server.Put(R"(/scenes/([^/]+)/calibration)", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, put_calibration(req.matches[1], req.body));
  });
  server.Post(R"(/scenes/([^/]+)/calibration/save)", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, save_calibration(req.matches[1]));
  });
  server.Put(R"(/scenes/([^/]+)/vp)", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, put_vp(req.matches[1], req.body));
  });
  server.Get(R"(/scenes/([^/]+)/tokens)", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, tokens(req.matches[1]));
  });
  server.Get(R"(/scenes/([^/]+)/geojson)", [this, reply, param](const httplib::Request& req, httplib::Response& res) {
    reply(res, geojson(req.matches[1], param(req, "mode")));
  });
}

}  // namespace topview
