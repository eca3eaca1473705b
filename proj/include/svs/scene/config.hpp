#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace svs::scene {

struct CameraConfig {
  int camera_id = 1;
  double fps = 30.0;
  int width = 1280;
  int height = 720;
  double ingress_delay = 3.0;  // seconds from capture to AI-node arrival
  std::string location_tag = "untagged";
};

enum class EventKind { object_anomaly, behavior_anomaly };

const char* to_string(EventKind k);

struct GroundTruthEvent {
  long event_id = 0;
  EventKind kind = EventKind::object_anomaly;
  int camera_id = 0;
  double appearance_time = 0.0;  // scenario clock, seconds
  double duration = 0.0;
  // payload variant, selected by kind:
  std::string object_class;  // object_anomaly: anomalous class label
  long person_uid = 0;       // behavior_anomaly: target; 0 = bind at appearance
};

// Level holds from `start` (seconds) until the next segment.
struct DensitySegment {
  double start = 0.0;
  int level = 0;
};

struct DetectorNoise {
  double miss_rate = 0.0;
  double box_jitter_px = 0.0;
};

// Knobs of the synthetic population and motion model. Defaults are frozen;
// tests depend on them only through recorded values.
struct MotionModel {
  double dwell_min_s = 8.0;    // time a person stays on one camera
  double dwell_max_s = 16.0;
  double transit_min_s = 2.0;  // camera-to-camera walk time
  double transit_max_s = 6.0;
  double transfer_prob = 0.5;  // departure heads to another camera
  double stale_after_s = 60.0; // pending transfer expires
  double amp_px = 3.0;         // normal keypoint oscillation amplitude
  double anomaly_amp_factor = 4.0;
  double anomaly_gait_hz = 2.0;
  double gait_min_hz = 1.4;
  double gait_max_hz = 2.2;
};

struct ScenarioConfig {
  std::vector<CameraConfig> cameras;
  double duration = 0.0;  // seconds
  int density_level = 0;  // persons per camera; 0..9
  // Optional piecewise-constant overrides; camera_id 0 applies to all.
  std::map<int, std::vector<DensitySegment>> density_schedule;
  std::vector<GroundTruthEvent> events;
  uint64_t seed = 0;
  DetectorNoise detector_noise;
  double time_scale = 1.0;

  int feature_dim = 512;
  double feature_noise_sigma = 0.0;
  long person_pool = 0;  // > 0: closed world with exactly this many identities
  std::map<std::string, int> anomaly_classes = {{"knife", 43}, {"gun", 80}};
  MotionModel motion;
};

// Throws ValidationError naming the offending field.
void validate(const ScenarioConfig& cfg);

ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioConfig& cfg);
ScenarioConfig load_scenario_file(const std::string& path);

}  // namespace svs::scene
