#include "svs/scene/config.hpp"

#include <fstream>
#include <set>

#include "svs/core/error.hpp"

namespace svs::scene {

const char* to_string(EventKind k) {
  return k == EventKind::object_anomaly ? "object_anomaly" : "behavior_anomaly";
}

void validate(const ScenarioConfig& cfg) {
  if (cfg.cameras.empty()) throw ValidationError("cameras must not be empty");
  if (!(cfg.duration > 0)) throw ValidationError("duration must be > 0");
  if (cfg.density_level < 0 || cfg.density_level > 9)
    throw ValidationError("density_level must be in [0, 9]");
  if (!(cfg.time_scale > 0)) throw ValidationError("time_scale must be > 0");
  if (cfg.feature_dim <= 0) throw ValidationError("feature_dim must be > 0");
  if (cfg.detector_noise.miss_rate < 0 || cfg.detector_noise.miss_rate > 1)
    throw ValidationError("detector_noise.miss_rate must be in [0, 1]");
  if (cfg.detector_noise.box_jitter_px < 0)
    throw ValidationError("detector_noise.box_jitter_px must be >= 0");

  std::set<int> ids;
  for (size_t i = 0; i < cfg.cameras.size(); ++i) {
    const auto& cam = cfg.cameras[i];
    const std::string at = "cameras[" + std::to_string(i) + "].";
    if (cam.camera_id < 1) throw ValidationError(at + "camera_id must be >= 1");
    if (!ids.insert(cam.camera_id).second)
      throw ValidationError(at + "camera_id duplicates another camera");
    if (!(cam.fps > 0)) throw ValidationError(at + "fps must be > 0");
    if (cam.width <= 0) throw ValidationError(at + "width must be > 0");
    if (cam.height <= 0) throw ValidationError(at + "height must be > 0");
    if (cam.ingress_delay < 0)
      throw ValidationError(at + "ingress_delay must be >= 0");
  }

  for (const auto& [cam_id, segs] : cfg.density_schedule) {
    if (cam_id != 0 && !ids.count(cam_id))
      throw ValidationError("density_schedule camera_id " +
                            std::to_string(cam_id) + " does not exist");
    for (const auto& seg : segs)
      if (seg.level < 0 || seg.level > 9)
        throw ValidationError("density_schedule level must be in [0, 9]");
  }

  for (size_t i = 0; i < cfg.events.size(); ++i) {
    const auto& ev = cfg.events[i];
    const std::string at = "events[" + std::to_string(i) + "].";
    if (!ids.count(ev.camera_id))
      throw ValidationError(at + "camera_id does not exist in cameras");
    if (ev.appearance_time < 0)
      throw ValidationError(at + "appearance_time must be >= 0");
    if (!(ev.duration > 0)) throw ValidationError(at + "duration must be > 0");
    if (ev.appearance_time >= cfg.duration)
      throw RangeError(at + "appearance_time lies outside the scenario duration");
    if (ev.kind == EventKind::object_anomaly) {
      if (ev.object_class.empty())
        throw ValidationError(at + "payload (object class) must be set");
      if (!cfg.anomaly_classes.count(ev.object_class))
        throw ValidationError(at + "payload \"" + ev.object_class +
                              "\" is not a configured anomaly class");
    } else if (ev.person_uid < 0) {
      throw ValidationError(at + "payload (person_uid) must be >= 0");
    }
  }
  if (cfg.person_pool < 0) throw ValidationError("person_pool must be >= 0");
}

namespace {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

}  // namespace

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  ScenarioConfig cfg;
  if (j.contains("cameras")) {
    for (const auto& jc : j.at("cameras")) {
      CameraConfig cam;
      cam.camera_id = get_or(jc, "camera_id", cam.camera_id);
      cam.fps = get_or(jc, "fps", cam.fps);
      cam.width = get_or(jc, "width", cam.width);
      cam.height = get_or(jc, "height", cam.height);
      cam.ingress_delay = get_or(jc, "ingress_delay", cam.ingress_delay);
      cam.location_tag = get_or<std::string>(jc, "location_tag", cam.location_tag);
      cfg.cameras.push_back(std::move(cam));
    }
  }
  cfg.duration = get_or(j, "duration", cfg.duration);
  cfg.density_level = get_or(j, "density_level", cfg.density_level);
  if (j.contains("density_schedule")) {
    for (const auto& js : j.at("density_schedule")) {
      DensitySegment seg;
      seg.start = get_or(js, "start", 0.0);
      seg.level = get_or(js, "level", 0);
      cfg.density_schedule[get_or(js, "camera_id", 0)].push_back(seg);
    }
  }
  if (j.contains("events")) {
    for (const auto& je : j.at("events")) {
      GroundTruthEvent ev;
      ev.event_id = get_or<long>(je, "event_id", 0);
      const std::string kind = get_or<std::string>(je, "kind", "object_anomaly");
      if (kind == "object_anomaly")
        ev.kind = EventKind::object_anomaly;
      else if (kind == "behavior_anomaly")
        ev.kind = EventKind::behavior_anomaly;
      else
        throw ValidationError("events[].kind \"" + kind + "\" is unknown");
      ev.camera_id = get_or(je, "camera_id", 0);
      ev.appearance_time = get_or(je, "appearance_time", 0.0);
      ev.duration = get_or(je, "duration", 0.0);
      if (je.contains("payload")) {
        const auto& p = je.at("payload");
        if (p.is_string())
          ev.object_class = p.get<std::string>();
        else
          ev.person_uid = p.get<long>();
      }
      cfg.events.push_back(std::move(ev));
    }
  }
  cfg.seed = get_or<uint64_t>(j, "seed", 0);
  if (j.contains("detector_noise")) {
    const auto& jn = j.at("detector_noise");
    cfg.detector_noise.miss_rate = get_or(jn, "miss_rate", 0.0);
    cfg.detector_noise.box_jitter_px = get_or(jn, "box_jitter_px", 0.0);
  }
  cfg.time_scale = get_or(j, "time_scale", cfg.time_scale);
  cfg.feature_dim = get_or(j, "feature_dim", cfg.feature_dim);
  cfg.feature_noise_sigma = get_or(j, "feature_noise_sigma", cfg.feature_noise_sigma);
  cfg.person_pool = get_or<long>(j, "person_pool", cfg.person_pool);
  if (j.contains("anomaly_classes"))
    cfg.anomaly_classes =
        j.at("anomaly_classes").get<std::map<std::string, int>>();
  if (j.contains("motion")) {
    const auto& jm = j.at("motion");
    cfg.motion.dwell_min_s = get_or(jm, "dwell_min_s", cfg.motion.dwell_min_s);
    cfg.motion.dwell_max_s = get_or(jm, "dwell_max_s", cfg.motion.dwell_max_s);
    cfg.motion.transit_min_s = get_or(jm, "transit_min_s", cfg.motion.transit_min_s);
    cfg.motion.transit_max_s = get_or(jm, "transit_max_s", cfg.motion.transit_max_s);
    cfg.motion.transfer_prob = get_or(jm, "transfer_prob", cfg.motion.transfer_prob);
    cfg.motion.amp_px = get_or(jm, "amp_px", cfg.motion.amp_px);
    cfg.motion.anomaly_amp_factor =
        get_or(jm, "anomaly_amp_factor", cfg.motion.anomaly_amp_factor);
  }
  return cfg;
}

nlohmann::json scenario_to_json(const ScenarioConfig& cfg) {
  nlohmann::json j;
  auto& jcams = j["cameras"] = nlohmann::json::array();
  for (const auto& cam : cfg.cameras) {
    jcams.push_back({{"camera_id", cam.camera_id},
                     {"fps", cam.fps},
                     {"width", cam.width},
                     {"height", cam.height},
                     {"ingress_delay", cam.ingress_delay},
                     {"location_tag", cam.location_tag}});
  }
  j["duration"] = cfg.duration;
  j["density_level"] = cfg.density_level;
  if (!cfg.density_schedule.empty()) {
    auto& js = j["density_schedule"] = nlohmann::json::array();
    for (const auto& [cam_id, segs] : cfg.density_schedule)
      for (const auto& seg : segs)
        js.push_back({{"camera_id", cam_id}, {"start", seg.start}, {"level", seg.level}});
  }
  if (!cfg.events.empty()) {
    auto& je = j["events"] = nlohmann::json::array();
    for (const auto& ev : cfg.events) {
      nlohmann::json e{{"event_id", ev.event_id},
                       {"kind", to_string(ev.kind)},
                       {"camera_id", ev.camera_id},
                       {"appearance_time", ev.appearance_time},
                       {"duration", ev.duration}};
      if (ev.kind == EventKind::object_anomaly)
        e["payload"] = ev.object_class;
      else
        e["payload"] = ev.person_uid;
      je.push_back(std::move(e));
    }
  }
  j["seed"] = cfg.seed;
  j["detector_noise"] = {{"miss_rate", cfg.detector_noise.miss_rate},
                         {"box_jitter_px", cfg.detector_noise.box_jitter_px}};
  j["time_scale"] = cfg.time_scale;
  j["feature_dim"] = cfg.feature_dim;
  j["feature_noise_sigma"] = cfg.feature_noise_sigma;
  if (cfg.person_pool > 0) j["person_pool"] = cfg.person_pool;
  j["anomaly_classes"] = cfg.anomaly_classes;
  return j;
}

ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file: " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded())
    throw ValidationError("scenario file is not valid JSON: " + path);
  return scenario_from_json(j);
}

}  // namespace svs::scene
