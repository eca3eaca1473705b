#pragma once

#include <deque>
#include <map>
#include <optional>

#include "svs/ainode/stages.hpp"
#include "svs/ainode/tracker.hpp"
#include "svs/server/record.hpp"

namespace svs::ainode {

struct AiNodeConfig {
  int batch_size = 30;
  int window = 30;
  int stride = 20;
  TrackerConfig tracker;
  StageCostModel cost;
  std::set<int> anomaly_class_ids = {43, 80};
  bool instrument_hops = false;  // carry per-hop timestamps on records/alerts
};

// Groups an ordered frame stream into consecutive batches of exactly B
// frames; the final partial batch is held, never emitted.
class Batcher {
 public:
  Batcher(int camera_id, int batch_size, double fps)
      : camera_id_(camera_id), batch_size_(batch_size), fps_(fps) {}

  // Returns a full batch every batch_size frames. Throws ValidationError on
  // an out-of-order frame, naming the offending indices.
  std::optional<FrameBatch> push(scene::FrameTruth frame);

  long pending() const { return static_cast<long>(partial_.size()); }
  long frames_consumed() const { return frames_consumed_; }
  long batches_emitted() const { return batches_emitted_; }

 private:
  int camera_id_;
  int batch_size_;
  double fps_;
  std::vector<scene::FrameTruth> partial_;
  long next_frame_ = 0;
  long frames_consumed_ = 0;
  long batches_emitted_ = 0;
};

// A batch moving through the five perception stages.
struct ProcessedBatch {
  int camera_id = 0;
  long batch_index = 0;
  double start_time = 0, end_time = 0;
  double batch_ready_time = 0;  // ingest: last frame available at the node
  std::vector<FrameDetections> frames;
  double mean_density = 0;  // mean human detections per frame
  std::vector<ObjectAlertInfo> alerts;
  double t_detect_done = 0;  // hop stamps, set by the executor
  double t_emit = 0;
};

struct EmitResult {
  std::vector<server::MetadataRecord> records;
  long keyframe_index = -1;  // frame index within the camera stream
  double keyframe_time = 0;
  std::optional<double> keyframe_score;
};

// Timing-free data path of one per-camera pipeline. The simulation and the
// live runner both drive these transforms; they own no clock.
class PipelineLogic {
 public:
  PipelineLogic(const scene::Scenario* scenario, int camera_id, AiNodeConfig cfg);
  PipelineLogic(const scene::Scenario* scenario, int camera_id, AiNodeConfig cfg,
                StageSet stages);

  ProcessedBatch detect(const FrameBatch& batch);          // stage 1 + fast path flags
  void track(ProcessedBatch& b);                           // stage 2
  std::vector<PoseWindow> score_windows(ProcessedBatch& b);  // stage 3
  void extract(ProcessedBatch& b);                         // stage 4
  EmitResult keyframe_and_emit(const ProcessedBatch& b);   // stage 5

  // Minimum over completed windows covering the frame; absent when none
  // carries a score.
  std::optional<double> frame_score(long frame_index) const;

  const AiNodeConfig& config() const { return cfg_; }
  const IouTracker& tracker() const { return tracker_; }
  long windows_scored() const { return next_window_; }

 private:
  PoseWindow build_window(long window_index);

  const scene::Scenario* scenario_;
  int camera_id_;
  AiNodeConfig cfg_;
  StageSet stages_;
  IouTracker tracker_;

  // Frame history ring, independent of batching.
  std::deque<FrameDetections> ring_;
  long ring_base_ = 0;
  long frames_seen_ = 0;
  long next_window_ = 0;
  std::map<long, std::optional<double>> window_scores_;
};

}  // namespace svs::ainode
