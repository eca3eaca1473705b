#include "svs/ainode/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "svs/core/error.hpp"

namespace svs::ainode {

std::optional<FrameBatch> Batcher::push(scene::FrameTruth frame) {
  if (frame.frame_index != next_frame_)
    throw ValidationError("out-of-order frame on camera " +
                          std::to_string(camera_id_) + ": expected index " +
                          std::to_string(next_frame_) + ", got " +
                          std::to_string(frame.frame_index));
  ++next_frame_;
  ++frames_consumed_;
  partial_.push_back(std::move(frame));
  if (static_cast<int>(partial_.size()) < batch_size_) return std::nullopt;

  FrameBatch batch;
  batch.camera_id = camera_id_;
  batch.batch_index = batches_emitted_;
  batch.frames = std::move(partial_);
  partial_.clear();
  batch.start_time = batch.frames.front().t;
  batch.end_time = batch.frames.back().t + 1.0 / fps_;
  ++batches_emitted_;
  return batch;
}

PipelineLogic::PipelineLogic(const scene::Scenario* scenario, int camera_id,
                             AiNodeConfig cfg)
    : PipelineLogic(scenario, camera_id, cfg, StageSet::reference(scenario)) {}

PipelineLogic::PipelineLogic(const scene::Scenario* scenario, int camera_id,
                             AiNodeConfig cfg, StageSet stages)
    : scenario_(scenario),
      camera_id_(camera_id),
      cfg_(cfg),
      stages_(std::move(stages)),
      tracker_(camera_id, cfg.tracker) {}

ProcessedBatch PipelineLogic::detect(const FrameBatch& batch) {
  ProcessedBatch out;
  out.camera_id = batch.camera_id;
  out.batch_index = batch.batch_index;
  out.start_time = batch.start_time;
  out.end_time = batch.end_time;
  out.frames.reserve(batch.frames.size());

  long humans = 0;
  std::map<int, ObjectAlertInfo> alert_by_class;  // dedup per (camera, class)
  for (const auto& truth : batch.frames) {
    FrameDetections fd;
    fd.frame_index = truth.frame_index;
    fd.t = truth.t;
    fd.dets = stages_.detector->detect(truth);
    for (const auto& d : fd.dets) {
      if (d.class_id == 0) {
        ++humans;
      } else if (cfg_.anomaly_class_ids.count(d.class_id) &&
                 !alert_by_class.count(d.class_id)) {
        ObjectAlertInfo info;
        info.camera_id = batch.camera_id;
        info.batch_index = batch.batch_index;
        info.class_id = d.class_id;
        info.label = d.label;
        info.frame_time = d.frame_time;
        info.frame_index = d.frame_index;
        alert_by_class.emplace(d.class_id, std::move(info));
      }
    }
    out.frames.push_back(std::move(fd));
  }
  out.mean_density =
      batch.frames.empty() ? 0.0 : double(humans) / double(batch.frames.size());
  for (auto& [cls, info] : alert_by_class) out.alerts.push_back(std::move(info));
  return out;
}

void PipelineLogic::track(ProcessedBatch& b) {
  for (auto& fd : b.frames) tracker_.update(fd.t, fd.dets);
}

PoseWindow PipelineLogic::build_window(long w) {
  PoseWindow win;
  win.camera_id = camera_id_;
  win.window_index = w;
  win.start_frame = w * cfg_.stride;
  win.length = cfg_.window;

  std::map<long, PoseWindow::PersonTrack> tracks;
  for (long f = win.start_frame; f < win.start_frame + cfg_.window; ++f) {
    const long off = f - ring_base_;
    if (off < 0 || off >= static_cast<long>(ring_.size())) continue;
    for (const auto& d : ring_[off].dets) {
      if (d.class_id != 0 || d.local_id == 0 || !d.has_keypoints) continue;
      auto& track = tracks[d.local_id];
      track.local_id = d.local_id;
      PoseWindow::Sample s;
      s.frame_index = f;
      const double cx = d.bbox[0] + d.bbox[2] / 2;
      const double cy = d.bbox[1] + d.bbox[3] / 2;
      for (int j = 0; j < 17; ++j) {
        s.rel[2 * j] = static_cast<float>(d.keypoints[j].x - cx);
        s.rel[2 * j + 1] = static_cast<float>(d.keypoints[j].y - cy);
        s.conf[j] = d.keypoints[j].conf;
      }
      track.samples.push_back(std::move(s));
    }
  }
  for (auto& [id, track] : tracks) win.persons.push_back(std::move(track));
  return win;
}

std::vector<PoseWindow> PipelineLogic::score_windows(ProcessedBatch& b) {
  for (auto& fd : b.frames) {
    ring_.push_back(fd);
    ++frames_seen_;
  }

  std::vector<PoseWindow> done;
  while (window_count(frames_seen_, cfg_.window, cfg_.stride) > next_window_) {
    PoseWindow win = build_window(next_window_);
    // A frame only receives a scene score if it contains person detections;
    // a window with no usable tracks but visible persons scores the
    // no-anomaly ceiling.
    bool any_person = false;
    for (long f = win.start_frame; f < win.start_frame + cfg_.window; ++f) {
      const long off = f - ring_base_;
      if (off < 0 || off >= static_cast<long>(ring_.size())) continue;
      if (ring_[off].human_count() > 0) any_person = true;
    }
    if (any_person) {
      double best = std::numeric_limits<double>::infinity();
      bool scored = false;
      for (const auto& track : win.persons) {
        const auto s = stages_.scorer->score_person(track);
        if (s) {
          best = std::min(best, *s);
          scored = true;
        }
      }
      win.scene_score = scored ? best : 40.0;
    }
    window_scores_[win.window_index] = win.scene_score;
    ++next_window_;
    done.push_back(std::move(win));
  }

  // Trim history the next window can no longer reach.
  const long keep_from = next_window_ * cfg_.stride;
  while (ring_base_ < keep_from && !ring_.empty()) {
    ring_.pop_front();
    ++ring_base_;
  }
  while (window_scores_.size() > 64) window_scores_.erase(window_scores_.begin());
  return done;
}

void PipelineLogic::extract(ProcessedBatch& b) {
  for (auto& fd : b.frames)
    for (auto& d : fd.dets)
      if (d.class_id == 0) stages_.extractor->extract(d);
}

std::optional<double> PipelineLogic::frame_score(long f) const {
  const int W = cfg_.window;
  const int S = cfg_.stride;
  long w_lo = (f - W + 1 + S - 1) / S;  // ceil((f - W + 1) / S)
  if (f - W + 1 <= 0) w_lo = 0;
  const long w_hi = f / S;
  std::optional<double> best;
  for (long w = w_lo; w <= w_hi && w < next_window_; ++w) {
    auto it = window_scores_.find(w);
    if (it == window_scores_.end() || !it->second) continue;
    if (!best || *it->second < *best) best = it->second;
  }
  return best;
}

EmitResult PipelineLogic::keyframe_and_emit(const ProcessedBatch& b) {
  EmitResult out;

  // Most informative frame: max person count, then lowest scene score,
  // then earliest.
  int best_count = 0;
  double best_score = std::numeric_limits<double>::infinity();
  const FrameDetections* chosen = nullptr;
  for (const auto& fd : b.frames) {
    const int count = fd.human_count();
    if (count == 0) continue;
    const auto score = frame_score(fd.frame_index);
    const double s = score ? *score : std::numeric_limits<double>::infinity();
    if (count > best_count || (count == best_count && s < best_score)) {
      best_count = count;
      best_score = s;
      chosen = &fd;
    }
  }
  if (!chosen) {
    // No persons anywhere: allow an anomalous-object-only keyframe so the
    // record path still covers object evidence.
    for (const auto& fd : b.frames)
      if (!fd.dets.empty()) {
        chosen = &fd;
        break;
      }
  }
  if (!chosen) return out;

  out.keyframe_index = chosen->frame_index;
  out.keyframe_time = chosen->t;
  out.keyframe_score = frame_score(chosen->frame_index);

  for (const auto& d : chosen->dets) {
    server::MetadataRecord rec;
    rec.record_time = server::round_ms(d.frame_time);
    rec.camera_id = d.camera_id;
    rec.class_id = d.class_id;
    rec.bbox = d.bbox;
    if (d.class_id == 0) {
      rec.feature = d.feature;
      rec.anomaly_score = out.keyframe_score;
    }
    rec.local_id = d.local_id;
    out.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace svs::ainode
