#include "svs/ainode/tracker.hpp"

#include <algorithm>

namespace svs::ainode {

namespace {

struct Candidate {
  double iou;
  long track_id;
  size_t det_idx;
};

// Repeatedly picks the best remaining (track, detection) pair. Ties go to
// the lower track id, then the earlier detection.
void greedy_match(const std::vector<std::pair<long, const Tracklet*>>& tracks,
                  const std::vector<size_t>& det_idx,
                  const std::vector<Detection>& dets, double iou_min,
                  std::map<long, size_t>& matches, std::vector<bool>& det_taken) {
  std::vector<bool> track_taken(tracks.size(), false);
  while (true) {
    double best_iou = -1.0;
    int best_t = -1;
    int best_d = -1;
    for (size_t ti = 0; ti < tracks.size(); ++ti) {
      if (track_taken[ti]) continue;
      const auto& last = tracks[ti].second->detections.back();
      for (size_t k = 0; k < det_idx.size(); ++k) {
        if (det_taken[det_idx[k]]) continue;
        const double v = intersection_over_union(last.bbox, dets[det_idx[k]].bbox);
        // Strict > keeps the first-found pair on ties: tracks iterate in
        // ascending id order, detections in frame order. IoU >= iou_min
        // qualifies a match.
        if (v >= iou_min && v > best_iou) {
          best_iou = v;
          best_t = static_cast<int>(ti);
          best_d = static_cast<int>(det_idx[k]);
        }
      }
    }
    if (best_t < 0) break;
    track_taken[best_t] = true;
    det_taken[best_d] = true;
    matches[tracks[best_t].first] = static_cast<size_t>(best_d);
  }
}

}  // namespace

void IouTracker::update(double frame_time, std::vector<Detection>& detections) {
  // Close tracks that have been unseen too long.
  for (auto it = open_.begin(); it != open_.end();) {
    if (frame_time - it->second.last_seen > cfg_.timeout_s) {
      ++closed_;
      it = open_.erase(it);
    } else {
      ++it;
    }
  }

  std::vector<size_t> humans;
  for (size_t i = 0; i < detections.size(); ++i)
    if (detections[i].class_id == 0) humans.push_back(i);

  std::vector<std::pair<long, const Tracklet*>> candidates;
  for (const auto& [id, trk] : open_) candidates.emplace_back(id, &trk);

  std::vector<size_t> confident, tentative;
  for (size_t i : humans)
    (detections[i].confidence >= cfg_.confidence_split ? confident : tentative)
        .push_back(i);

  std::map<long, size_t> matches;
  std::vector<bool> det_taken(detections.size(), false);
  greedy_match(candidates, confident, detections, cfg_.iou_min, matches, det_taken);

  std::vector<std::pair<long, const Tracklet*>> unmatched;
  for (const auto& [id, trk] : candidates)
    if (!matches.count(id)) unmatched.emplace_back(id, trk);
  greedy_match(unmatched, tentative, detections, cfg_.iou_min, matches, det_taken);

  for (const auto& [track_id, di] : matches) {
    Detection& d = detections[di];
    d.local_id = track_id;
    Tracklet& trk = open_[track_id];
    trk.detections.push_back(d);
    trk.last_seen = frame_time;
    if (static_cast<long>(trk.detections.size()) > cfg_.keep_detections * 2) {
      trk.detections.erase(
          trk.detections.begin(),
          trk.detections.end() - cfg_.keep_detections);
    }
  }

  for (size_t i : humans) {
    if (det_taken[i]) continue;
    Detection& d = detections[i];
    d.local_id = next_local_++;
    Tracklet trk;
    trk.local_id = d.local_id;
    trk.camera_id = camera_id_;
    trk.detections.push_back(d);
    trk.last_seen = frame_time;
    open_.emplace(d.local_id, std::move(trk));
  }
}

}  // namespace svs::ainode
