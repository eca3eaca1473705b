#pragma once

#include <array>
#include <optional>
#include <set>
#include <vector>

#include "svs/scene/scenario.hpp"

namespace svs::ainode {

struct Detection {
  int camera_id = 0;
  long frame_index = 0;
  double frame_time = 0.0;
  int class_id = 0;  // 0 = human
  std::array<double, 4> bbox{};
  double confidence = 0.0;
  bool has_keypoints = false;
  std::array<scene::Keypoint, 17> keypoints{};
  std::vector<float> feature;  // filled by the extractor stage
  long person_uid = 0;         // ground-truth linkage in reference mode
  long local_id = 0;           // assigned by the tracker
  std::string label;           // non-human classes
};

struct FrameDetections {
  long frame_index = 0;
  double t = 0.0;
  std::vector<Detection> dets;

  int human_count() const {
    int n = 0;
    for (const auto& d : dets) n += d.class_id == 0 ? 1 : 0;
    return n;
  }
};

struct FrameBatch {
  int camera_id = 0;
  long batch_index = 0;
  std::vector<scene::FrameTruth> frames;  // exactly B
  double start_time = 0.0, end_time = 0.0;
};

struct Tracklet {
  long local_id = 0;
  int camera_id = 0;
  std::vector<Detection> detections;  // strictly time-increasing
  double last_seen = 0.0;
};

struct PoseWindow {
  int camera_id = 0;
  long window_index = 0;
  long start_frame = 0;  // = window_index * stride
  int length = 0;        // = window size W
  // Per-person keypoint tracks, relative to the box center.
  struct Sample {
    long frame_index;
    std::array<float, 34> rel;  // x0,y0,x1,y1,... box-relative keypoints
    std::array<float, 17> conf;
  };
  struct PersonTrack {
    long local_id = 0;
    std::vector<Sample> samples;
  };
  std::vector<PersonTrack> persons;
  std::optional<double> scene_score;
};

// Windows of size W advance by stride S over the per-camera frame history:
// none until W frames exist, then one per stride.
inline long window_count(long frames_available, int window, int stride) {
  if (frames_available < window) return 0;
  return (frames_available - window) / stride + 1;
}

struct ObjectAlertInfo {
  int camera_id = 0;
  long batch_index = 0;
  int class_id = 0;
  std::string label;
  double frame_time = 0.0;  // first detection of this class in the batch
  long frame_index = 0;
};

inline double intersection_over_union(const std::array<double, 4>& a,
                                      const std::array<double, 4>& b) {
  const double x1 = std::max(a[0], b[0]);
  const double y1 = std::max(a[1], b[1]);
  const double x2 = std::min(a[0] + a[2], b[0] + b[2]);
  const double y2 = std::min(a[1] + a[3], b[1] + b[3]);
  const double iw = std::max(0.0, x2 - x1);
  const double ih = std::max(0.0, y2 - y1);
  const double inter = iw * ih;
  const double uni = a[2] * a[3] + b[2] * b[3] - inter;
  return uni > 0 ? inter / uni : 0.0;
}

}  // namespace svs::ainode
