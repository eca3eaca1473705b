#pragma once

#include <memory>
#include <string>

#include "svs/ainode/types.hpp"

namespace svs::ainode {

// Synthetic per-stage compute cost in virtual time. The per-detection term
// scales with the batch's mean concurrent person detections per frame (the
// density metric), which is what drives the pose stage in practice.
struct StageCostModel {
  double c0_ms = 50.0;
  double c1_ms = 20.0;

  double stage_seconds(double mean_density) const {
    return (c0_ms + c1_ms * mean_density) / 1000.0;
  }
};

class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::vector<Detection> detect(const scene::FrameTruth& truth) = 0;
};

class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual void extract(Detection& det) = 0;
};

class BehaviorScorer {
 public:
  virtual ~BehaviorScorer() = default;
  // No value when the window holds no usable person track.
  virtual std::optional<double> score_person(const PoseWindow::PersonTrack&) = 0;
};

// Reads ground truth and applies the configured miss rate and box jitter.
// Draws are keyed by (seed, camera, frame, uid) so results do not depend on
// processing order or parallelism.
class ReferenceDetector : public Detector {
 public:
  ReferenceDetector(const scene::Scenario* scenario, double human_confidence = 0.9,
                    double object_confidence = 0.95);
  std::vector<Detection> detect(const scene::FrameTruth& truth) override;

 private:
  const scene::Scenario* scenario_;
  double human_conf_;
  double object_conf_;
};

// Copies the ground-truth identity feature, optionally perturbed by
// Gaussian noise and re-normalized.
class ReferenceExtractor : public FeatureExtractor {
 public:
  explicit ReferenceExtractor(const scene::Scenario* scenario);
  void extract(Detection& det) override;

 private:
  const scene::Scenario* scenario_;
};

// Surrogate behavioral scorer: per-person score = ceiling - k * max(0, v - v0)
// where v is the variance of box-relative keypoint velocities over the
// window. Calibrated against the generator's normal gait so undisturbed
// windows score exactly the no-anomaly ceiling.
class VarianceScorer : public BehaviorScorer {
 public:
  // Defaults frozen from the calibration run against the generator's normal
  // template: normal tracks stay in v = [0.06, 0.17], the anomalous template
  // lands in v = [2.1, 2.2], so v0 = 0.5 never penalizes normal gait and
  // k = 18 puts anomalous windows near a score of 10.
  explicit VarianceScorer(double v0 = 0.5, double k = 18.0, double ceiling = 40.0)
      : v0_(v0), k_(k), ceiling_(ceiling) {}

  std::optional<double> score_person(const PoseWindow::PersonTrack& track) override;

  static double velocity_variance(const PoseWindow::PersonTrack& track);

  double ceiling() const { return ceiling_; }

 private:
  double v0_, k_, ceiling_;
};

struct StageSet {
  std::unique_ptr<Detector> detector;
  std::unique_ptr<FeatureExtractor> extractor;
  std::unique_ptr<BehaviorScorer> scorer;

  static StageSet reference(const scene::Scenario* scenario);
};

}  // namespace svs::ainode
