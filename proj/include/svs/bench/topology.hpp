#pragma once

#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "svs/ainode/pipeline.hpp"
#include "svs/bench/metrics.hpp"
#include "svs/cloud/cloud_node.hpp"
#include "svs/core/sim.hpp"
#include "svs/scene/scenario.hpp"
#include "svs/server/server_node.hpp"

namespace svs::bench {

// Shared execution capacity for perception stages across all pipelines
// (models the fixed GPU/CPU budget of one deployment). FIFO across the
// whole deployment.
class ComputePool {
 public:
  ComputePool(Simulator& sim, int workers) : sim_(sim), free_(workers) {}

  void submit(double cost_s, std::function<void()> done);
  long peak_waiting() const { return peak_waiting_; }

 private:
  struct Job {
    double cost_s;
    std::function<void()> done;
  };
  void start(Job job);

  Simulator& sim_;
  int free_;
  std::deque<Job> waiting_;
  long peak_waiting_ = 0;
};

struct WorldConfig {
  ainode::AiNodeConfig ainode;
  server::ServerConfig server;
  cloud::LatencyProfile cloud_latency;
  int cloud_node_count = 4;  // fanout tier, normally the camera count
  int compute_workers = 4;
  double link_ai_server_s = 0.005;
  double link_ai_cloud_s = 0.005;
  double link_server_cloud_s = 0.005;
  int subscribers = 0;
  std::string subscriber_pattern = "anomaly/*";
  bool analytics_push = false;
  double tick_period_s = 60.0;
  double time_scale = 0.0;  // pacing; 0 = unpaced
  // labels stamped onto samples
  int label_node_count = 0;
  int label_density = 0;
  // When set, samples stream to the sink instead of accumulating in memory
  // (long endurance runs aggregate online).
  std::function<void(const MetricSample&)> on_sample;
  bool record_emit_times = true;
  // Optional stage plug-in point; default is the reference stage set.
  std::function<ainode::StageSet(const scene::Scenario*, int camera_id)>
      stage_factory;
};

struct Receipt {
  long subscriber_id = 0;
  std::string topic;
  std::string kind;  // "object" | "behavior"
  int camera_id = 0;
  double origin_time = 0;
  double publish_time = 0;
  double receipt_time = 0;
  nlohmann::json hops;
};

struct AlertTrace {
  std::string kind;
  int camera_id = 0;
  double enqueue_time = 0;  // arrival at the broker
  long batch_index = -1;    // object alerts: originating batch
};

// One deployment on the discrete-event clock: cameras feeding per-camera
// pipelines, the aggregation server, the cloud tier, and subscribers.
class SimWorld {
 public:
  // Owns the scenario for the lifetime of the run.
  SimWorld(scene::Scenario scenario, WorldConfig cfg);
  ~SimWorld();

  void run_to_drain();
  void run_until(double t_end);

  const std::vector<MetricSample>& samples() const { return samples_; }
  const std::vector<Receipt>& receipts() const { return receipts_; }
  const std::vector<AlertTrace>& alert_traces() const { return alert_traces_; }
  const server::ServerNodeCore& server() const { return *server_core_; }
  const std::vector<std::string>& audit_log() const { return audit_log_; }

  long frames_completed() const { return frames_completed_; }
  long batches_dropped() const { return drops_; }
  long expected_batches() const { return expected_batches_; }
  long emitted_batches() const { return emitted_batches_; }
  // Emission time of a given batch on a camera, for ordering assertions.
  double emit_time(int camera_id, long batch_index) const;

  double now() const { return sim_.now(); }

 private:
  struct Pipeline;
  friend struct Pipeline;

  void on_object_alerts(Pipeline& p, const ainode::ProcessedBatch& b);
  void on_records(Pipeline& p, const ainode::ProcessedBatch& b,
                  ainode::EmitResult emit);
  void publish_at_cloud(cloud::NotificationMessage msg, const std::string& kind);
  void schedule_tick();

  const scene::Scenario scenario_;
  WorldConfig cfg_;
  Simulator sim_;
  ComputePool pool_;
  std::unique_ptr<server::ServerNodeCore> server_core_;
  cloud::TopicBroker broker_;
  cloud::CloudTables tables_;
  std::vector<std::unique_ptr<Pipeline>> pipelines_;
  std::vector<long> subscriber_ids_;

  std::vector<MetricSample> samples_;
  std::vector<Receipt> receipts_;
  std::vector<AlertTrace> alert_traces_;
  std::vector<std::string> audit_log_;
  std::map<std::pair<int, long>, double> emit_times_;

  long frames_completed_ = 0;
  long drops_ = 0;
  long expected_batches_ = 0;
  long emitted_batches_ = 0;
  double last_stats_push_ = 0;
  bool draining_ = false;
  double horizon_ = 0;
};

}  // namespace svs::bench
