#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "svs/server/record.hpp"

namespace svs::server {

struct ServerConfig {
  double theta = 0.7;        // cosine similarity threshold for re-ID
  double horizon_s = 600.0;  // gallery entries older than this are ignored
  double tau = 20.0;         // behavioral anomaly threshold
  long reset_rows = 50000;
  double reset_hours = 24.0;
  long first_global_id = 1001;
  int heatmap_grid = 16;
  int default_capacity = 10;  // occupancy denominator per location tag
  std::map<int, std::string> camera_tags;
  std::map<int, std::pair<int, int>> camera_dims;  // width, height
};

struct GlobalIdentity {
  long global_id = 0;
  std::vector<float> representative;  // unit-norm running mean
  long observations = 0;
  double last_seen = 0.0;
  std::set<int> cameras_seen;
};

// Cross-camera identity gallery; cosine similarity against entries seen
// within the horizon. The id counter survives clear().
class IdentityGallery {
 public:
  IdentityGallery(double theta, double horizon_s, long first_id)
      : theta_(theta), horizon_(horizon_s), next_id_(first_id) {}

  long assign(const std::vector<float>& feature, int camera_id, double now);
  void clear() { entries_.clear(); }

  size_t size() const { return entries_.size(); }
  long next_id() const { return next_id_; }
  const std::vector<GlobalIdentity>& entries() const { return entries_; }

 private:
  double theta_;
  double horizon_;
  long next_id_;
  std::vector<GlobalIdentity> entries_;
};

struct ResetEvent {
  double t = 0;
  long rows_cleared = 0;
  long identities_cleared = 0;
  std::string reason;  // "rows" | "uptime"
};

struct BehaviorAlert {
  int camera_id = 0;
  double origin_time = 0;  // record_time of the run's first sub-threshold score
  double record_time = 0;  // the confirming record
  double score = 0;
  nlohmann::json hops = nlohmann::json::object();
};

struct IngestResult {
  bool stored = false;
  std::string reject_reason;
  long global_id = 0;
  std::optional<BehaviorAlert> notification;
  std::optional<ResetEvent> reset;
};

struct StatsReport {
  double t0 = 0, t1 = 0;
  long records = 0;
  std::map<int, long> headcount;             // camera -> distinct global ids
  std::map<std::string, double> occupancy;   // location tag -> load factor
  std::map<int, std::vector<long>> heatmap;  // camera -> G*G counts, row-major
  nlohmann::json to_json() const;
};

// The aggregation tier: one ordered in-process store per deployment,
// single-writer ingest, snapshot reads.
class ServerNodeCore {
 public:
  explicit ServerNodeCore(ServerConfig cfg, double start_time = 0.0);

  IngestResult ingest(MetadataRecord rec, double now);
  std::optional<ResetEvent> tick(double now);  // periodic uptime check
  StatsReport statistics(double t0, double t1) const;

  long row_count() const { return static_cast<long>(rows_.size()); }
  long total_ingested() const { return total_ingested_; }
  long rejected() const { return rejected_; }
  long next_global_id() const { return gallery_.next_id(); }
  const std::vector<MetadataRecord>& rows() const { return rows_; }
  const std::vector<ResetEvent>& resets() const { return resets_; }
  long notifications_sent() const { return notifications_; }
  const ServerConfig& config() const { return cfg_; }

  // Receives one NDJSON-able object per audit event (resets, notifications).
  std::function<void(const nlohmann::json&)> audit;

 private:
  ResetEvent do_reset(double now, const char* reason);
  std::optional<BehaviorAlert> observe_score(const MetadataRecord& rec);

  ServerConfig cfg_;
  double started_;
  double uptime_anchor_;
  std::vector<MetadataRecord> rows_;
  std::map<int, std::vector<size_t>> by_camera_;
  IdentityGallery gallery_;
  std::vector<ResetEvent> resets_;
  long total_ingested_ = 0;
  long rejected_ = 0;
  long notifications_ = 0;

  struct ConfirmState {
    int run_length = 0;
    bool notified = false;
    double run_first_time = 0;
    double last_scored_time = -1;
    nlohmann::json run_first_hops = nlohmann::json::object();
  };
  std::map<int, ConfirmState> confirm_;
};

// cos(a, b) with double accumulation; vectors need not be unit length.
double cosine_similarity(const std::vector<float>& a, const std::vector<float>& b);

}  // namespace svs::server
