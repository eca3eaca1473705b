#include "svs/ainode/stages.hpp"

#include <algorithm>
#include <cmath>

#include "svs/core/error.hpp"
#include "svs/core/rng.hpp"

namespace svs::ainode {

ReferenceDetector::ReferenceDetector(const scene::Scenario* scenario,
                                     double human_confidence,
                                     double object_confidence)
    : scenario_(scenario),
      human_conf_(human_confidence),
      object_conf_(object_confidence) {}

std::vector<Detection> ReferenceDetector::detect(const scene::FrameTruth& truth) {
  const auto& noise = scenario_->config().detector_noise;
  const uint64_t seed = scenario_->seed();
  const auto& cam = scenario_->config().cameras;
  double width = 1280, height = 720;
  for (const auto& c : cam)
    if (c.camera_id == truth.camera_id) {
      width = c.width;
      height = c.height;
    }

  std::vector<Detection> out;
  out.reserve(truth.persons.size() + truth.objects.size());
  for (const auto& p : truth.persons) {
    if (noise.miss_rate > 0) {
      Rng miss(mix64(seed, 0x315ull, uint64_t(truth.camera_id),
                     mix64(uint64_t(truth.frame_index), uint64_t(p.uid))));
      if (miss.uniform() < noise.miss_rate) continue;
    }
    Detection d;
    d.camera_id = truth.camera_id;
    d.frame_index = truth.frame_index;
    d.frame_time = truth.t;
    d.class_id = 0;
    d.bbox = p.bbox;
    if (noise.box_jitter_px > 0) {
      Rng jit(mix64(seed, 0x717ull, uint64_t(truth.camera_id),
                    mix64(uint64_t(truth.frame_index), uint64_t(p.uid))));
      d.bbox[0] += jit.normal(0, noise.box_jitter_px);
      d.bbox[1] += jit.normal(0, noise.box_jitter_px);
      d.bbox[0] = std::clamp(d.bbox[0], 0.0, std::max(0.0, width - d.bbox[2]));
      d.bbox[1] = std::clamp(d.bbox[1], 0.0, std::max(0.0, height - d.bbox[3]));
    }
    d.confidence = human_conf_;
    d.has_keypoints = true;
    d.keypoints = p.keypoints;
    d.person_uid = p.uid;
    out.push_back(std::move(d));
  }
  for (const auto& o : truth.objects) {
    Detection d;
    d.camera_id = truth.camera_id;
    d.frame_index = truth.frame_index;
    d.frame_time = truth.t;
    d.class_id = o.class_id;
    d.label = o.label;
    d.bbox = o.bbox;
    d.confidence = object_conf_;
    out.push_back(std::move(d));
  }
  return out;
}

ReferenceExtractor::ReferenceExtractor(const scene::Scenario* scenario)
    : scenario_(scenario) {}

void ReferenceExtractor::extract(Detection& det) {
  if (det.class_id != 0) return;
  if (det.person_uid == 0)
    throw StageError("reference extractor: detection has no ground-truth linkage",
                     det.camera_id, -1);
  std::vector<float> f = scenario_->feature_of(det.person_uid);
  const double sigma = scenario_->config().feature_noise_sigma;
  if (sigma > 0) {
    Rng rng(mix64(scenario_->seed(), 0xFE0ull, uint64_t(det.camera_id),
                  mix64(uint64_t(det.frame_index), uint64_t(det.person_uid))));
    // sigma is the expected norm of the whole perturbation, so the
    // per-component spread shrinks with the dimension.
    const double per_component = sigma / std::sqrt(double(f.size()));
    double norm2 = 0;
    for (auto& v : f) {
      v += static_cast<float>(rng.normal(0, per_component));
      norm2 += double(v) * v;
    }
    const double inv = 1.0 / std::sqrt(std::max(norm2, 1e-30));
    for (auto& v : f) v = static_cast<float>(v * inv);
  }
  det.feature = std::move(f);
}

double VarianceScorer::velocity_variance(const PoseWindow::PersonTrack& track) {
  // Mean square of frame-to-frame displacements of box-relative keypoints,
  // over consecutive-frame sample pairs where the joint is visible in both.
  double sum = 0;
  long count = 0;
  for (size_t i = 1; i < track.samples.size(); ++i) {
    const auto& a = track.samples[i - 1];
    const auto& b = track.samples[i];
    if (b.frame_index != a.frame_index + 1) continue;
    for (int j = 0; j < 17; ++j) {
      if (a.conf[j] <= 0 || b.conf[j] <= 0) continue;
      const double dx = double(b.rel[2 * j]) - a.rel[2 * j];
      const double dy = double(b.rel[2 * j + 1]) - a.rel[2 * j + 1];
      sum += dx * dx + dy * dy;
      count += 2;
    }
  }
  return count > 0 ? sum / double(count) : 0.0;
}

std::optional<double> VarianceScorer::score_person(
    const PoseWindow::PersonTrack& track) {
  if (track.samples.size() < 2) return std::nullopt;
  const double v = velocity_variance(track);
  return ceiling_ - k_ * std::max(0.0, v - v0_);
}

StageSet StageSet::reference(const scene::Scenario* scenario) {
  StageSet s;
  s.detector = std::make_unique<ReferenceDetector>(scenario);
  s.extractor = std::make_unique<ReferenceExtractor>(scenario);
  s.scorer = std::make_unique<VarianceScorer>();
  return s;
}

}  // namespace svs::ainode
