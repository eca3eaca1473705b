#pragma once

#include <map>
#include <vector>

#include "svs/ainode/types.hpp"

namespace svs::ainode {

struct TrackerConfig {
  double confidence_split = 0.5;  // high/low association stages
  double iou_min = 0.3;
  double timeout_s = 1.0;         // close tracks unseen this long
  long keep_detections = 90;      // trim history older than this many frames
};

// Two-stage greedy IoU associator: confident detections are matched against
// all open tracks first, the remainder against whatever is left. Unmatched
// detections open new tracklets; local ids are monotone and never reused
// within a session.
class IouTracker {
 public:
  IouTracker(int camera_id, TrackerConfig cfg = {})
      : camera_id_(camera_id), cfg_(cfg) {}

  // One camera, one frame; assigns det.local_id in place.
  void update(double frame_time, std::vector<Detection>& detections);

  const std::map<long, Tracklet>& open_tracks() const { return open_; }
  long tracks_created() const { return next_local_ - 1; }
  long tracks_closed() const { return closed_; }

 private:
  int camera_id_;
  TrackerConfig cfg_;
  std::map<long, Tracklet> open_;
  long next_local_ = 1;
  long closed_ = 0;
};

}  // namespace svs::ainode
