#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "svs/bench/metrics.hpp"
#include "svs/scene/config.hpp"
#include "svs/server/server_node.hpp"

namespace svs::bench {

struct ExperimentConfig {
  std::string kind = "load_stress";  // load_stress | endurance | pcp
  std::vector<int> node_counts = {1, 4, 8, 12};
  std::vector<int> density_levels = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  double duration = 150.0;  // per load-stress cell, seconds
  double fps = 30.0;
  int warmup_batches = 25;
  int cooldown_batches = 25;
  int runs = 20;        // pcp repetitions per cell
  int subscribers = 3;  // pcp endpoints
  std::string anomaly_kind = "both";  // object | behavior | both
  double time_scale = 0.0;            // 0 = unpaced
  uint64_t seed = 42;
  int jobs = 1;

  // deployment knobs
  int compute_workers = 4;
  double cost_c0_ms = 50.0;
  double cost_c1_ms = 20.0;
  double ingress_delay = 3.0;
  int feature_dim = 64;  // bench scenarios; 512 is the scenario-file default
  int batch = 30, window = 30, stride = 20;

  // endurance
  double endurance_hours = 21.0;
  std::vector<scene::DensitySegment> density_timeline;  // default: diurnal curve

  // pcp
  int pcp_density = 2;
  double pcp_event_min_s = 15.0;
  double pcp_event_max_s = 45.0;
  double pcp_timeout_s = 120.0;
  double object_event_duration_s = 2.0;
  double behavior_event_duration_s = 8.0;

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static ExperimentConfig load_file(const std::string& path);
  void validate() const;
};

struct CellSummary {
  int node_count = 0;
  int density = 0;
  SummaryStats latency;
  double throughput_total_fps = 0;
  double throughput_per_node_fps = 0;
  double mean_detections = 0;
  bool failed = false;
  std::string error;
};

// Per-batch series aggregated across a cell's cameras (one row per batch).
struct CellBatchRow {
  int node_count = 0;
  int density = 0;
  long batch_index = 0;
  double latency_s = 0;
  double throughput_fps = 0;  // system-wide instantaneous
  double detections = 0;
  double ts = 0;
};

struct LoadStressResult {
  ExperimentConfig cfg;
  std::vector<CellBatchRow> rows;
  std::vector<CellSummary> cells;
  std::vector<std::string> check_failures;
};

struct MinuteSample {
  int node_count = 0;
  long minute = 0;
  long batches = 0;
  double latency_s = 0;  // mean over the minute's completions
  double throughput_fps = 0;
  double detections = 0;
  long resets_so_far = 0;
};

struct EnduranceResult {
  ExperimentConfig cfg;
  std::vector<MinuteSample> minutes;
  struct ResetRow {
    int node_count;
    server::ResetEvent event;
  };
  std::vector<ResetRow> resets;
  std::vector<std::string> audit;
  std::vector<std::string> check_failures;
};

struct PcpCellStats {
  std::string kind;
  int node_count = 0;
  SummaryStats stats;
  long lost = 0;
};

struct PcpResult {
  ExperimentConfig cfg;
  std::vector<PcpSample> samples;
  std::vector<PcpCellStats> cells;
  std::vector<std::string> check_failures;
};

LoadStressResult run_load_stress(const ExperimentConfig& cfg);
EnduranceResult run_endurance(const ExperimentConfig& cfg);
PcpResult run_pcp(const ExperimentConfig& cfg);

// Default diurnal shape used when no timeline is configured: low overnight,
// building to an early-afternoon peak (mirrors a daily traffic curve).
std::vector<scene::DensitySegment> diurnal_timeline(double hours, int peak_level);

}  // namespace svs::bench
