#ifndef TOPVIEW_SERVICE_HPP
#define TOPVIEW_SERVICE_HPP

#include "topview/pipeline.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace httplib {
class Server;
}

namespace topview {

/// A scene directory holds detections.ndjson, vp.json, scene.json
/// ({"image_width", "image_height", "fps"?}) and optionally calibration.json.
struct SceneData {
  std::string id;
  std::filesystem::path dir;
  ImageSize image;
  double fps = 25.0;
  VanishingPoint vp;
  CalibrationParams calibration;
  PreparedScene prepared;
};

SceneData load_scene(const std::filesystem::path& dir, const PipelineConfig& config = {});

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// HTTP/JSON backend of the calibration tool. Scenes are loaded once and never
/// change; each scene has a session (calibration + VP override) that is
/// replaced as a whole on every update.
class SceneService {
 public:
  explicit SceneService(const std::filesystem::path& scene_dir, PipelineConfig config = {});

  HttpResponse list_scenes() const;
  HttpResponse bev(const std::string& id, const std::optional<std::string>& frame) const;
  HttpResponse put_calibration(const std::string& id, const std::string& body);
  HttpResponse put_vp(const std::string& id, const std::string& body);
  HttpResponse tokens(const std::string& id) const;
  HttpResponse geojson(const std::string& id, const std::optional<std::string>& mode) const;
  HttpResponse save_calibration(const std::string& id) const;

  /// Registers every route plus permissive CORS headers.
  void mount(httplib::Server& server);

 private:
  struct Session {
    CalibrationParams calibration;
    VanishingPoint vp;
  };
  struct Entry {
    SceneData scene;
    mutable std::mutex mutex;
    std::shared_ptr<const Session> session;
  };

  const Entry* find(const std::string& id) const;
  Entry* find(const std::string& id);
  std::shared_ptr<const Session> snapshot(const Entry& e) const;
  SceneOutput compute(const Entry& e, const Session& s) const;

  PipelineConfig config_;
  std::map<std::string, std::unique_ptr<Entry>> scenes_;
};

}  // namespace topview

#endif  // TOPVIEW_SERVICE_HPP
