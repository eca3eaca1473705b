#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include <json.hpp>

namespace svs::server {

// One database row, mirroring the aggregator's schema: timestamp, camera,
// class, box, feature, local ID, global ID, anomaly score.
struct MetadataRecord {
  double record_time = 0.0;  // virtual seconds, ms precision
  int camera_id = 0;
  int class_id = 0;  // 0 = human (COCO convention)
  std::array<double, 4> bbox{};
  std::vector<float> feature;  // humans only; empty otherwise
  long local_id = 0;           // 0 for untracked (non-human) detections
  long global_id = 0;          // 0 = unassigned; the server assigns >= 1001
  std::optional<double> anomaly_score;  // <= 40; absent when unscored

  // Per-hop instrumentation carried for end-to-end latency decomposition;
  // empty outside bench runs.
  nlohmann::json hops = nlohmann::json::object();

  bool is_human() const { return class_id == 0; }
};

inline double round_ms(double t_seconds) {
  return std::round(t_seconds * 1000.0) / 1000.0;
}

inline nlohmann::json record_to_json(const MetadataRecord& r) {
  nlohmann::json j{{"record_time", r.record_time},
                   {"camera_id", r.camera_id},
                   {"class_id", r.class_id},
                   {"bbox", r.bbox},
                   {"local_id", r.local_id},
                   {"global_id", r.global_id}};
  if (!r.feature.empty())
    j["feature"] = r.feature;
  else
    j["feature"] = nullptr;
  if (r.anomaly_score)
    j["anomaly_score"] = *r.anomaly_score;
  else
    j["anomaly_score"] = nullptr;
  if (!r.hops.empty()) j["hops"] = r.hops;
  return j;
}

inline MetadataRecord record_from_json(const nlohmann::json& j) {
  MetadataRecord r;
  r.record_time = j.at("record_time").get<double>();
  r.camera_id = j.at("camera_id").get<int>();
  r.class_id = j.at("class_id").get<int>();
  r.bbox = j.at("bbox").get<std::array<double, 4>>();
  if (j.contains("feature") && !j.at("feature").is_null())
    r.feature = j.at("feature").get<std::vector<float>>();
  r.local_id = j.at("local_id").get<long>();
  r.global_id = j.at("global_id").get<long>();
  if (j.contains("anomaly_score") && !j.at("anomaly_score").is_null())
    r.anomaly_score = j.at("anomaly_score").get<double>();
  if (j.contains("hops")) r.hops = j.at("hops");
  return r;
}

}  // namespace svs::server
