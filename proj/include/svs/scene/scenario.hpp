#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "svs/scene/config.hpp"

namespace svs::scene {

struct Keypoint {
  float x = 0, y = 0, conf = 0;
};

struct PersonState {
  long uid = 0;
  std::array<double, 4> bbox{};      // x, y, w, h (top-left corner)
  std::array<double, 2> velocity{};  // px/frame, post-reflection direction
  std::array<Keypoint, 17> keypoints{};
  const std::vector<float>* feature = nullptr;  // unit-norm, stable per uid
  bool behavior_anomalous = false;
};

struct ObjectState {
  int class_id = 0;
  std::string label;
  std::array<double, 4> bbox{};
  long event_id = 0;
};

struct FrameTruth {
  int camera_id = 0;
  long frame_index = 0;
  double t = 0.0;  // capture time, scenario clock
  std::vector<PersonState> persons;
  std::vector<ObjectState> objects;
  std::vector<long> active_event_ids;
};

// Deterministic multi-camera ground truth. Built once from a config; after
// that, per-camera frame access is a pure function and safe to call from
// any number of threads concurrently.
class Scenario {
 public:
  static Scenario build(ScenarioConfig cfg);

  const ScenarioConfig& config() const { return cfg_; }
  uint64_t seed() const { return cfg_.seed; }

  long frame_count(int camera_id) const;
  double fps(int camera_id) const;
  FrameTruth frame(int camera_id, long frame_index) const;

  // Returns a new scenario with the event added (scenarios are immutable).
  Scenario with_event(GroundTruthEvent ev) const;

  // Events with behavior targets bound to concrete person uids.
  const std::vector<GroundTruthEvent>& resolved_events() const { return events_; }

  const std::vector<float>& feature_of(long uid) const;

  // Configured density level at a frame (the exact person count outside
  // event overlays).
  int level_at(int camera_id, long frame_index) const;

  // FNV-1a over quantized person state; used by determinism checks.
  uint64_t stream_hash(int camera_id, long frames) const;

 private:
  struct Motion {
    double w = 48, h = 144;
    double x0 = 0, y0 = 0;
    double vx = 0, vy = 0;  // px/frame
    double gait_hz = 1.8;
    std::array<float, 17> phase{};
  };
  struct Stay {
    long uid = 0;
    long enter = 0, exit = 0;  // [enter, exit) in frames
    Motion motion;
  };
  struct CamPlan {
    CameraConfig cam;
    long frames = 0;
    std::vector<DensitySegment> levels;  // sorted by start
    std::vector<Stay> stays;
    std::vector<long> epoch_starts;
    std::vector<std::vector<int>> epoch_stays;
    std::vector<int> event_idx;  // events on this camera
  };

  int cam_slot(int camera_id) const;  // throws NotFoundError
  void build_population();
  void overlay_events();
  void build_epochs();
  void build_features();
  Motion draw_motion(uint64_t seed, const CameraConfig& cam) const;

  ScenarioConfig cfg_;
  std::vector<GroundTruthEvent> events_;
  std::vector<CamPlan> cams_;
  std::map<int, int> cam_index_;
  std::map<long, std::vector<float>> features_;
  long next_uid_ = 1;
};

}  // namespace svs::scene
