#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace svs::bench {

struct MetricSample {
  int node_count = 0;
  int density = 0;
  int camera_id = 0;
  long batch_index = 0;
  double latency_s = 0;        // batch ingest -> record emission
  double throughput_fps = 0;   // instantaneous per-node rate at emission
  double detections = 0;       // mean concurrent person detections per frame
  double ts = 0;               // emission time, virtual seconds
};

struct SummaryStats {
  size_t count = 0;
  double mean = 0, min = 0, max = 0, stddev = 0;
};

// Mean/min/max/sigma over samples[warmup : n - cooldown]. Throws
// ValidationError naming the required minimum when too few samples remain.
SummaryStats summarize_middle(const std::vector<double>& samples, int warmup,
                              int cooldown);

// System throughput: frames completing the pipeline across all nodes
// divided by the window.
double compute_throughput(long frames_completed, double window_s);

struct PcpSample {
  std::string kind;  // "object" | "behavior"
  int node_count = 0;
  long run = 0;
  long event_id = 0;
  long subscriber_id = 0;
  double origin_time = 0;
  double receipt_time = 0;
  double pcp_latency = 0;
  double hop_sum = 0;  // instrumented per-hop decomposition total
  bool lost = false;
};

}  // namespace svs::bench
