#include "svs/server/server_node.hpp"

#include <algorithm>
#include <cmath>

namespace svs::server {

double cosine_similarity(const std::vector<float>& a, const std::vector<float>& b) {
  const size_t n = std::min(a.size(), b.size());
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < n; ++i) {
    dot += double(a[i]) * b[i];
    na += double(a[i]) * a[i];
    nb += double(b[i]) * b[i];
  }
  for (size_t i = n; i < a.size(); ++i) na += double(a[i]) * a[i];
  for (size_t i = n; i < b.size(); ++i) nb += double(b[i]) * b[i];
  const double denom = std::sqrt(na) * std::sqrt(nb);
  return denom > 0 ? dot / denom : 0.0;
}

long IdentityGallery::assign(const std::vector<float>& feature, int camera_id,
                             double now) {
  // Compact once expired entries dominate; they can never match again.
  size_t expired = 0;
  for (const auto& e : entries_)
    expired += (now - e.last_seen > horizon_) ? 1 : 0;
  if (expired > 64 && expired * 2 > entries_.size()) {
    std::erase_if(entries_, [&](const GlobalIdentity& e) {
      return now - e.last_seen > horizon_;
    });
  }

  GlobalIdentity* best = nullptr;
  double best_sim = -1;
  for (auto& e : entries_) {
    if (now - e.last_seen > horizon_) continue;
    const double sim = cosine_similarity(feature, e.representative);
    if (sim > best_sim) {
      best_sim = sim;
      best = &e;
    }
  }
  if (best && best_sim >= theta_) {
    // Running mean, re-normalized.
    const double n = double(best->observations);
    double norm2 = 0;
    for (size_t i = 0; i < best->representative.size(); ++i) {
      const double v = (double(best->representative[i]) * n + feature[i]) / (n + 1);
      best->representative[i] = static_cast<float>(v);
      norm2 += v * v;
    }
    const double inv = 1.0 / std::sqrt(std::max(norm2, 1e-30));
    for (auto& v : best->representative) v = static_cast<float>(v * inv);
    ++best->observations;
    best->last_seen = std::max(best->last_seen, now);
    best->cameras_seen.insert(camera_id);
    return best->global_id;
  }

  GlobalIdentity fresh;
  fresh.global_id = next_id_++;
  fresh.representative = feature;
  double norm2 = 0;
  for (const auto& v : fresh.representative) norm2 += double(v) * v;
  const double inv = 1.0 / std::sqrt(std::max(norm2, 1e-30));
  for (auto& v : fresh.representative) v = static_cast<float>(v * inv);
  fresh.observations = 1;
  fresh.last_seen = now;
  fresh.cameras_seen.insert(camera_id);
  entries_.push_back(std::move(fresh));
  return entries_.back().global_id;
}

ServerNodeCore::ServerNodeCore(ServerConfig cfg, double start_time)
    : cfg_(cfg),
      started_(start_time),
      uptime_anchor_(start_time),
      gallery_(cfg.theta, cfg.horizon_s, cfg.first_global_id) {}

ResetEvent ServerNodeCore::do_reset(double now, const char* reason) {
  ResetEvent ev;
  ev.t = now;
  ev.rows_cleared = static_cast<long>(rows_.size());
  ev.identities_cleared = static_cast<long>(gallery_.size());
  ev.reason = reason;
  rows_.clear();
  by_camera_.clear();
  gallery_.clear();  // the global id counter survives
  confirm_.clear();
  uptime_anchor_ = now;
  resets_.push_back(ev);
  if (audit)
    audit({{"event", "reset"},
           {"t", now},
           {"reason", ev.reason},
           {"rows_cleared", ev.rows_cleared},
           {"identities_cleared", ev.identities_cleared},
           {"next_global_id", gallery_.next_id()}});
  return ev;
}

std::optional<BehaviorAlert> ServerNodeCore::observe_score(const MetadataRecord& rec) {
  ConfirmState& st = confirm_[rec.camera_id];
  // One observation per keyframe: records of one keyframe share a
  // record_time and a score.
  if (rec.record_time == st.last_scored_time) return std::nullopt;
  st.last_scored_time = rec.record_time;

  if (*rec.anomaly_score < cfg_.tau) {
    if (st.run_length == 0) {
      st.run_first_time = rec.record_time;
      st.run_first_hops = rec.hops;
    }
    ++st.run_length;
    if (st.run_length >= 3 && !st.notified) {
      st.notified = true;
      BehaviorAlert alert;
      alert.camera_id = rec.camera_id;
      alert.origin_time = st.run_first_time;
      alert.record_time = rec.record_time;
      alert.score = *rec.anomaly_score;
      alert.hops = st.run_first_hops;
      return alert;
    }
  } else {
    st.run_length = 0;
    st.notified = false;
  }
  return std::nullopt;
}

IngestResult ServerNodeCore::ingest(MetadataRecord rec, double now) {
  IngestResult result;
  if (rec.anomaly_score && *rec.anomaly_score > 40.0) {
    ++rejected_;
    result.reject_reason = "anomaly_score exceeds the 40 ceiling";
    return result;
  }
  if (rec.is_human()) {
    if (rec.feature.empty()) {
      ++rejected_;
      result.reject_reason = "human record without feature";
      return result;
    }
    double norm2 = 0;
    for (const auto& v : rec.feature) norm2 += double(v) * v;
    if (norm2 <= 0) {
      ++rejected_;
      result.reject_reason = "zero-norm feature";
      return result;
    }
  } else if (!rec.feature.empty()) {
    ++rejected_;
    result.reject_reason = "non-human record carries a feature";
    return result;
  }

  if (rec.is_human())
    rec.global_id = gallery_.assign(rec.feature, rec.camera_id, now);

  if (rec.anomaly_score) result.notification = observe_score(rec);

  const size_t row_id = rows_.size();
  by_camera_[rec.camera_id].push_back(row_id);
  rows_.push_back(std::move(rec));
  ++total_ingested_;
  result.stored = true;
  result.global_id = rows_.back().global_id;

  if (result.notification) {
    ++notifications_;
    if (audit)
      audit({{"event", "notification"},
             {"t", now},
             {"camera_id", result.notification->camera_id},
             {"origin_time", result.notification->origin_time},
             {"score", result.notification->score}});
  }

  if (static_cast<long>(rows_.size()) >= cfg_.reset_rows)
    result.reset = do_reset(now, "rows");
  else if (now - uptime_anchor_ >= cfg_.reset_hours * 3600.0)
    result.reset = do_reset(now, "uptime");
  return result;
}

std::optional<ResetEvent> ServerNodeCore::tick(double now) {
  if (now - uptime_anchor_ >= cfg_.reset_hours * 3600.0)
    return do_reset(now, "uptime");
  return std::nullopt;
}

StatsReport ServerNodeCore::statistics(double t0, double t1) const {
  StatsReport report;
  report.t0 = t0;
  report.t1 = t1;
  const int grid = cfg_.heatmap_grid;

  std::map<int, std::set<long>> ids_per_camera;
  std::map<std::string, std::set<long>> ids_per_tag;
  for (const auto& [cam, row_ids] : by_camera_) {
    auto dims_it = cfg_.camera_dims.find(cam);
    const double width = dims_it != cfg_.camera_dims.end() ? dims_it->second.first : 1280;
    const double height = dims_it != cfg_.camera_dims.end() ? dims_it->second.second : 720;
    auto& cells = report.heatmap[cam];
    cells.assign(size_t(grid) * grid, 0);
    for (size_t row_id : row_ids) {
      const MetadataRecord& r = rows_[row_id];
      if (r.record_time < t0 || r.record_time >= t1) continue;
      ++report.records;
      const double cx = r.bbox[0] + r.bbox[2] / 2;
      const double cy = r.bbox[1] + r.bbox[3] / 2;
      const int gx = std::clamp(int(cx / width * grid), 0, grid - 1);
      const int gy = std::clamp(int(cy / height * grid), 0, grid - 1);
      ++cells[size_t(gy) * grid + gx];
      if (r.is_human() && r.global_id > 0) {
        ids_per_camera[cam].insert(r.global_id);
        auto tag_it = cfg_.camera_tags.find(cam);
        ids_per_tag[tag_it != cfg_.camera_tags.end() ? tag_it->second : "untagged"]
            .insert(r.global_id);
      }
    }
    report.headcount[cam] = static_cast<long>(ids_per_camera[cam].size());
  }
  for (const auto& [tag, ids] : ids_per_tag)
    report.occupancy[tag] =
        double(ids.size()) / std::max(1, cfg_.default_capacity);
  return report;
}

nlohmann::json StatsReport::to_json() const {
  nlohmann::json j{{"t0", t0}, {"t1", t1}, {"records", records}};
  auto& jh = j["headcount"] = nlohmann::json::object();
  for (const auto& [cam, n] : headcount) jh[std::to_string(cam)] = n;
  auto& jo = j["occupancy"] = nlohmann::json::object();
  for (const auto& [tag, v] : occupancy) jo[tag] = v;
  auto& jm = j["heatmap"] = nlohmann::json::object();
  for (const auto& [cam, cells] : heatmap) jm[std::to_string(cam)] = cells;
  return j;
}

}  // namespace svs::server
