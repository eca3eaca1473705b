#include "svs/bench/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <thread>

#include "svs/bench/topology.hpp"
#include "svs/core/error.hpp"
#include "svs/core/rng.hpp"

namespace svs::bench {

namespace {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

// Runs tasks[0..n) on `jobs` threads. Each task writes into its own result
// slot, so outputs are identical no matter how many threads run.
void run_tasks(std::vector<std::function<void()>>& tasks, int jobs) {
  if (jobs <= 1) {
    for (auto& t : tasks) t();
    return;
  }
  std::atomic<size_t> next{0};
  auto worker = [&] {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      tasks[i]();
    }
  };
  std::vector<std::thread> pool;
  for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

scene::ScenarioConfig base_scenario(const ExperimentConfig& cfg, int nodes,
                                    uint64_t seed) {
  scene::ScenarioConfig sc;
  for (int i = 1; i <= nodes; ++i) {
    scene::CameraConfig cam;
    cam.camera_id = i;
    cam.fps = cfg.fps;
    cam.ingress_delay = cfg.ingress_delay;
    cam.location_tag = i % 4 == 0 ? "parking" : "hallway";
    sc.cameras.push_back(cam);
  }
  sc.duration = cfg.duration;
  sc.seed = seed;
  sc.feature_dim = cfg.feature_dim;
  sc.time_scale = 1.0;
  return sc;
}

WorldConfig base_world(const ExperimentConfig& cfg, int nodes, int density) {
  WorldConfig wc;
  wc.ainode.batch_size = cfg.batch;
  wc.ainode.window = cfg.window;
  wc.ainode.stride = cfg.stride;
  wc.ainode.cost.c0_ms = cfg.cost_c0_ms;
  wc.ainode.cost.c1_ms = cfg.cost_c1_ms;
  wc.compute_workers = cfg.compute_workers;
  wc.cloud_node_count = nodes;
  wc.label_node_count = nodes;
  wc.label_density = density;
  wc.time_scale = cfg.time_scale;
  return wc;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (kind != "load_stress" && kind != "endurance" && kind != "pcp")
    throw ValidationError("kind must be load_stress, endurance or pcp");
  if (node_counts.empty()) throw ValidationError("node_counts must not be empty");
  for (int n : node_counts)
    if (n < 1 || n > 16)
      throw ValidationError("node_counts entries must be in [1, 16] "
                            "(16-pipeline deployment cap)");
  for (int d : density_levels)
    if (d < 0 || d > 9)
      throw ValidationError("density_levels entries must be in [0, 9]");
  if (!(duration > 0)) throw ValidationError("duration must be > 0");
  if (!(fps > 0)) throw ValidationError("fps must be > 0");
  if (runs < 1) throw ValidationError("runs must be >= 1");
  if (warmup_batches < 0 || cooldown_batches < 0)
    throw ValidationError("warmup/cooldown must be >= 0");
  const long total_batches = lround(duration * fps) / batch;
  if (kind == "load_stress" && warmup_batches + cooldown_batches >= total_batches)
    throw ValidationError("warmup + cooldown must be < total batches (" +
                          std::to_string(total_batches) + ")");
  if (anomaly_kind != "object" && anomaly_kind != "behavior" &&
      anomaly_kind != "both")
    throw ValidationError("anomaly_kind must be object, behavior or both");
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.kind = get_or<std::string>(j, "kind", c.kind);
  c.node_counts = get_or(j, "node_counts", c.node_counts);
  c.density_levels = get_or(j, "density_levels", c.density_levels);
  c.duration = get_or(j, "duration", c.duration);
  c.fps = get_or(j, "fps", c.fps);
  c.warmup_batches = get_or(j, "warmup_batches", c.warmup_batches);
  c.cooldown_batches = get_or(j, "cooldown_batches", c.cooldown_batches);
  c.runs = get_or(j, "runs", c.runs);
  c.subscribers = get_or(j, "subscribers", c.subscribers);
  c.anomaly_kind = get_or<std::string>(j, "anomaly_kind", c.anomaly_kind);
  c.time_scale = get_or(j, "time_scale", c.time_scale);
  c.seed = get_or<uint64_t>(j, "seed", c.seed);
  c.jobs = get_or(j, "jobs", c.jobs);
  c.compute_workers = get_or(j, "compute_workers", c.compute_workers);
  c.cost_c0_ms = get_or(j, "cost_c0_ms", c.cost_c0_ms);
  c.cost_c1_ms = get_or(j, "cost_c1_ms", c.cost_c1_ms);
  c.ingress_delay = get_or(j, "ingress_delay", c.ingress_delay);
  c.feature_dim = get_or(j, "feature_dim", c.feature_dim);
  c.batch = get_or(j, "batch", c.batch);
  c.window = get_or(j, "window", c.window);
  c.stride = get_or(j, "stride", c.stride);
  c.endurance_hours = get_or(j, "endurance_hours", c.endurance_hours);
  if (j.contains("density_timeline"))
    for (const auto& js : j.at("density_timeline"))
      c.density_timeline.push_back(
          {js.at("start").get<double>(), js.at("level").get<int>()});
  c.pcp_density = get_or(j, "pcp_density", c.pcp_density);
  c.pcp_event_min_s = get_or(j, "pcp_event_min_s", c.pcp_event_min_s);
  c.pcp_event_max_s = get_or(j, "pcp_event_max_s", c.pcp_event_max_s);
  c.pcp_timeout_s = get_or(j, "pcp_timeout_s", c.pcp_timeout_s);
  c.object_event_duration_s =
      get_or(j, "object_event_duration_s", c.object_event_duration_s);
  c.behavior_event_duration_s =
      get_or(j, "behavior_event_duration_s", c.behavior_event_duration_s);
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j{{"kind", kind},
                   {"node_counts", node_counts},
                   {"density_levels", density_levels},
                   {"duration", duration},
                   {"fps", fps},
                   {"warmup_batches", warmup_batches},
                   {"cooldown_batches", cooldown_batches},
                   {"runs", runs},
                   {"subscribers", subscribers},
                   {"anomaly_kind", anomaly_kind},
                   {"time_scale", time_scale},
                   {"seed", seed},
                   {"jobs", jobs},
                   {"compute_workers", compute_workers},
                   {"cost_c0_ms", cost_c0_ms},
                   {"cost_c1_ms", cost_c1_ms},
                   {"ingress_delay", ingress_delay},
                   {"feature_dim", feature_dim},
                   {"endurance_hours", endurance_hours},
                   {"pcp_density", pcp_density}};
  if (!density_timeline.empty()) {
    auto& js = j["density_timeline"] = nlohmann::json::array();
    for (const auto& seg : density_timeline)
      js.push_back({{"start", seg.start}, {"level", seg.level}});
  }
  return j;
}

ExperimentConfig ExperimentConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open experiment config: " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded())
    throw ValidationError("experiment config is not valid JSON: " + path);
  ExperimentConfig c = from_json(j);
  c.validate();
  return c;
}

std::vector<scene::DensitySegment> diurnal_timeline(double hours, int peak_level) {
  // Quiet start, ramp to a mid-run peak, taper off.
  std::vector<scene::DensitySegment> t;
  const double h = 3600.0;
  const double mid = hours / 2.0;
  t.push_back({0.0, 1});
  t.push_back({(mid - 6) * h, 2});
  t.push_back({(mid - 3) * h, std::max(1, peak_level - 2)});
  t.push_back({(mid - 1) * h, peak_level});
  t.push_back({(mid + 1) * h, std::max(1, peak_level - 2)});
  t.push_back({(mid + 4) * h, 2});
  t.push_back({(mid + 7) * h, 1});
  std::vector<scene::DensitySegment> out;
  for (const auto& seg : t)
    if (seg.start >= 0 && seg.start < hours * h) out.push_back(seg);
  return out;
}

LoadStressResult run_load_stress(const ExperimentConfig& cfg) {
  cfg.validate();
  LoadStressResult result;
  result.cfg = cfg;

  struct Cell {
    int nodes, density;
    std::vector<MetricSample> samples;
    CellSummary summary;
    long frames_completed = 0;
  };
  std::vector<Cell> cells;
  for (int n : cfg.node_counts)
    for (int d : cfg.density_levels) cells.push_back({n, d, {}, {}, 0});

  std::vector<std::function<void()>> tasks;
  for (auto& cell : cells) {
    tasks.push_back([&cfg, &cell] {
      cell.summary.node_count = cell.nodes;
      cell.summary.density = cell.density;
      try {
        scene::ScenarioConfig sc =
            base_scenario(cfg, cell.nodes,
                          mix64(cfg.seed, 0x10AD, uint64_t(cell.nodes),
                                uint64_t(cell.density)));
        sc.density_level = cell.density;
        const scene::Scenario scenario = scene::Scenario::build(sc);
        SimWorld world(scenario, base_world(cfg, cell.nodes, cell.density));
        world.run_to_drain();
        cell.samples = world.samples();
        cell.frames_completed = world.frames_completed();
      } catch (const std::exception& e) {
        cell.summary.failed = true;
        cell.summary.error = e.what();
      }
    });
  }
  run_tasks(tasks, cfg.jobs);

  for (auto& cell : cells) {
    if (cell.summary.failed) {
      result.cells.push_back(cell.summary);
      result.check_failures.push_back(
          "cell (" + std::to_string(cell.nodes) + ", " +
          std::to_string(cell.density) + ") failed: " + cell.summary.error);
      continue;
    }
    // Aggregate per batch index across the cell's cameras.
    std::map<long, std::vector<const MetricSample*>> by_batch;
    for (const auto& s : cell.samples) by_batch[s.batch_index].push_back(&s);
    std::vector<double> latency_series;
    std::vector<double> mean_dets;
    for (const auto& [batch, group] : by_batch) {
      CellBatchRow row;
      row.node_count = cell.nodes;
      row.density = cell.density;
      row.batch_index = batch;
      for (const auto* s : group) {
        row.latency_s += s->latency_s;
        row.throughput_fps += s->throughput_fps;
        row.detections += s->detections;
        row.ts = std::max(row.ts, s->ts);
      }
      row.latency_s /= double(group.size());
      row.detections /= double(group.size());
      result.rows.push_back(row);
      latency_series.push_back(row.latency_s);
      mean_dets.push_back(row.detections);
    }
    cell.summary.latency = summarize_middle(latency_series, cfg.warmup_batches,
                                            cfg.cooldown_batches);

    // Per-node throughput over the middle batches: per camera, frames over
    // the span between the last pre-window emission and the last middle one.
    std::map<int, std::vector<const MetricSample*>> by_cam;
    for (const auto& s : cell.samples) by_cam[s.camera_id].push_back(&s);
    const long total_batches = long(by_batch.size());
    const long lo = cfg.warmup_batches;
    const long hi = total_batches - cfg.cooldown_batches;  // exclusive
    double fps_sum = 0;
    int fps_nodes = 0;
    for (const auto& [cam, list] : by_cam) {
      std::map<long, double> emit_at;
      for (const auto* s : list) emit_at[s->batch_index] = s->ts;
      if (!emit_at.count(lo - 1) || !emit_at.count(hi - 1)) continue;
      const double span = emit_at[hi - 1] - emit_at[lo - 1];
      if (span <= 0) continue;
      fps_sum += double((hi - lo) * cfg.batch) / span;
      ++fps_nodes;
    }
    cell.summary.throughput_per_node_fps = fps_nodes ? fps_sum / fps_nodes : 0;
    cell.summary.throughput_total_fps = fps_sum;
    double det_sum = 0;
    for (double d : mean_dets) det_sum += d;
    cell.summary.mean_detections = mean_dets.empty() ? 0 : det_sum / mean_dets.size();
    result.cells.push_back(cell.summary);
  }

  // Embedded shape checks: throughput per node must not rise with density.
  for (int n : cfg.node_counts) {
    const CellSummary* prev = nullptr;
    for (const auto& c : result.cells) {
      if (c.node_count != n || c.failed) continue;
      if (prev && c.throughput_per_node_fps > prev->throughput_per_node_fps + 1e-6)
        result.check_failures.push_back(
            "throughput rose with density at node_count " + std::to_string(n) +
            " (density " + std::to_string(c.density) + ")");
      prev = &c;
    }
  }
  return result;
}

EnduranceResult run_endurance(const ExperimentConfig& cfg) {
  cfg.validate();
  EnduranceResult result;
  result.cfg = cfg;

  const double duration = cfg.endurance_hours * 3600.0;
  const auto timeline = cfg.density_timeline.empty()
                            ? diurnal_timeline(cfg.endurance_hours, 5)
                            : cfg.density_timeline;

  for (int nodes : cfg.node_counts) {
    scene::ScenarioConfig sc =
        base_scenario(cfg, nodes, mix64(cfg.seed, 0xE4D, uint64_t(nodes)));
    sc.duration = duration;
    sc.density_schedule[0] = timeline;
    const scene::Scenario scenario = scene::Scenario::build(sc);

    const long total_minutes = std::max<long>(1, lround(duration / 60.0));
    struct Acc {
      long batches = 0;
      double latency = 0, detections = 0;
      long frames = 0;
    };
    std::vector<Acc> acc;
    acc.resize(size_t(total_minutes));

    WorldConfig wc = base_world(cfg, nodes, 0);
    wc.analytics_push = true;
    wc.record_emit_times = false;
    long emitted = 0;
    wc.on_sample = [&acc, total_minutes, &emitted](const MetricSample& s) {
      const long minute = std::min<long>(total_minutes - 1, long(s.ts / 60.0));
      Acc& a = acc[size_t(minute)];
      ++a.batches;
      a.latency += s.latency_s;
      a.detections += s.detections;
      a.frames += 30;
      ++emitted;
    };
    SimWorld world(scenario, wc);
    world.run_to_drain();

    long resets_so_far = 0;
    std::vector<double> reset_times;
    for (const auto& ev : world.server().resets()) {
      result.resets.push_back({nodes, ev});
      reset_times.push_back(ev.t);
    }
    for (long m = 0; m < total_minutes; ++m) {
      MinuteSample s;
      s.node_count = nodes;
      s.minute = m;
      s.batches = acc[m].batches;
      s.latency_s = acc[m].batches ? acc[m].latency / acc[m].batches : 0;
      s.throughput_fps = compute_throughput(acc[m].frames, 60.0);
      s.detections = acc[m].batches ? acc[m].detections / acc[m].batches : 0;
      while (resets_so_far < long(reset_times.size()) &&
             reset_times[resets_so_far] < double(m + 1) * 60.0)
        ++resets_so_far;
      s.resets_so_far = resets_so_far;
      result.minutes.push_back(s);
    }
    for (const auto& line : world.audit_log()) result.audit.push_back(line);

    // Embedded checks: resets fire at exactly the row cap or the uptime cap,
    // the id counter never regresses, and no sample is lost across resets.
    long last_next_id = 0;
    for (const auto& line : world.audit_log()) {
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || j.value("event", "") != "reset") continue;
      const long next_id = j.value("next_global_id", 0L);
      if (next_id < last_next_id)
        result.check_failures.push_back("global id counter regressed after reset");
      last_next_id = next_id;
    }
    const long row_cap = wc.server.reset_rows;
    for (const auto& row : result.resets) {
      if (row.node_count != nodes) continue;
      const bool by_rows =
          row.event.reason == "rows" && row.event.rows_cleared == row_cap;
      const bool by_time = row.event.reason == "uptime";
      if (!by_rows && !by_time)
        result.check_failures.push_back(
            "reset at t=" + std::to_string(row.event.t) +
            " matched neither the row cap nor the uptime cap");
    }
    if (world.emitted_batches() != emitted)
      result.check_failures.push_back("sample accounting lost batches across resets");
  }
  return result;
}

PcpResult run_pcp(const ExperimentConfig& cfg) {
  cfg.validate();
  PcpResult result;
  result.cfg = cfg;

  std::vector<std::string> kinds;
  if (cfg.anomaly_kind == "both") {
    kinds = {"object", "behavior"};
  } else {
    kinds = {cfg.anomaly_kind};
  }

  struct RunSlot {
    std::string kind;
    int nodes = 0;
    long run = 0;
    std::vector<PcpSample> samples;
    std::string error;
  };
  std::vector<RunSlot> slots;
  for (const auto& kind : kinds)
    for (int n : cfg.node_counts)
      for (long r = 0; r < cfg.runs; ++r) slots.push_back({kind, n, r, {}, {}});

  std::vector<std::function<void()>> tasks;
  for (auto& slot : slots) {
    tasks.push_back([&cfg, &slot] {
      try {
        // Matched pairs: the scenario seed and the event time depend on the
        // (nodes, run) pair only, not on the anomaly kind.
        const uint64_t run_seed =
            mix64(cfg.seed, 0x9C9, uint64_t(slot.nodes), uint64_t(slot.run));
        Rng ev_rng(mix64(run_seed, 0xE0));
        const double event_t =
            ev_rng.uniform(cfg.pcp_event_min_s, cfg.pcp_event_max_s);
        const int event_cam = 1 + int(slot.run % slot.nodes);

        scene::ScenarioConfig sc = base_scenario(cfg, slot.nodes, run_seed);
        sc.density_level = cfg.pcp_density;
        sc.duration = cfg.pcp_event_max_s + cfg.pcp_timeout_s + 40.0;

        scene::GroundTruthEvent ev;
        ev.event_id = 1000 + slot.run;
        ev.camera_id = event_cam;
        ev.appearance_time = event_t;
        if (slot.kind == "object") {
          ev.kind = scene::EventKind::object_anomaly;
          ev.duration = cfg.object_event_duration_s;
          ev.object_class = "knife";
        } else {
          ev.kind = scene::EventKind::behavior_anomaly;
          ev.duration = cfg.behavior_event_duration_s;
          ev.person_uid = 0;  // bind to whoever is on camera
        }
        sc.events.push_back(ev);
        const scene::Scenario scenario = scene::Scenario::build(sc);

        WorldConfig wc = base_world(cfg, slot.nodes, cfg.pcp_density);
        wc.subscribers = cfg.subscribers;
        wc.ainode.instrument_hops = true;
        SimWorld world(scenario, wc);
        world.run_until(event_t + cfg.pcp_timeout_s + 5.0);

        std::map<long, const Receipt*> first_receipt;  // per subscriber
        for (const auto& r : world.receipts())
          if (r.kind == slot.kind && !first_receipt.count(r.subscriber_id))
            first_receipt[r.subscriber_id] = &r;

        for (int sub = 1; sub <= cfg.subscribers; ++sub) {
          PcpSample s;
          s.kind = slot.kind;
          s.node_count = slot.nodes;
          s.run = slot.run;
          s.event_id = ev.event_id;
          s.subscriber_id = sub;
          s.origin_time = event_t;
          auto it = first_receipt.find(sub);
          if (it == first_receipt.end() ||
              it->second->receipt_time - event_t > cfg.pcp_timeout_s) {
            s.lost = true;
          } else {
            const Receipt& r = *it->second;
            s.receipt_time = r.receipt_time;
            s.pcp_latency = r.receipt_time - event_t;
            // Telescoped per-hop decomposition, anchored at the physical
            // appearance.
            static const char* kChain[] = {"t_capture",       "t_batch_ready",
                                           "t_detect",        "t_emit",
                                           "t_server_ingest", "t_publish",
                                           "t_receipt"};
            double prev = event_t;
            double sum = 0;
            for (const char* name : kChain) {
              if (!r.hops.contains(name)) continue;
              const double t = r.hops[name].get<double>();
              sum += t - prev;
              prev = t;
            }
            s.hop_sum = sum;
            const bool via_server = r.hops.contains("t_server_ingest");
            if (slot.kind == "behavior" && !via_server)
              throw std::runtime_error("behavior notification skipped the server");
            if (slot.kind == "object" && via_server)
              throw std::runtime_error("object notification routed via the server");
          }
          slot.samples.push_back(std::move(s));
        }
      } catch (const std::exception& e) {
        slot.error = e.what();
      }
    });
  }
  run_tasks(tasks, cfg.jobs);

  std::map<std::pair<std::string, int>, std::vector<double>> per_cell;
  std::map<std::pair<std::string, int>, long> lost;
  for (auto& slot : slots) {
    if (!slot.error.empty()) {
      result.check_failures.push_back("pcp run (" + slot.kind + ", " +
                                      std::to_string(slot.nodes) + ", run " +
                                      std::to_string(slot.run) +
                                      ") failed: " + slot.error);
      continue;
    }
    for (auto& s : slot.samples) {
      if (s.lost) {
        ++lost[{s.kind, s.node_count}];
        result.check_failures.push_back(
            "lost pcp sample (" + s.kind + ", " + std::to_string(s.node_count) +
            " nodes, run " + std::to_string(s.run) + ")");
      } else {
        per_cell[{s.kind, s.node_count}].push_back(s.pcp_latency);
        if (std::abs(s.hop_sum - s.pcp_latency) >
            0.05 * std::max(1e-9, s.pcp_latency))
          result.check_failures.push_back(
              "hop decomposition mismatch in (" + s.kind + ", " +
              std::to_string(s.node_count) + ", run " + std::to_string(s.run) + ")");
      }
      result.samples.push_back(std::move(s));
    }
  }

  for (const auto& kind : kinds) {
    double prev_mean = -1;
    for (int n : cfg.node_counts) {
      auto it = per_cell.find({kind, n});
      PcpCellStats cell;
      cell.kind = kind;
      cell.node_count = n;
      cell.lost = lost.count({kind, n}) ? lost[{kind, n}] : 0;
      if (it != per_cell.end() && !it->second.empty()) {
        cell.stats = summarize_middle(it->second, 0, 0);
        if (prev_mean >= 0 && cell.stats.mean <= prev_mean)
          result.check_failures.push_back(
              "mean pcp latency did not increase with node count (" + kind +
              ", " + std::to_string(n) + " nodes)");
        prev_mean = cell.stats.mean;
      }
      result.cells.push_back(cell);
    }
  }
  if (cfg.anomaly_kind == "both") {
    for (int n : cfg.node_counts) {
      double obj = -1, beh = -1;
      for (const auto& c : result.cells) {
        if (c.node_count != n) continue;
        if (c.kind == "object") obj = c.stats.mean;
        if (c.kind == "behavior") beh = c.stats.mean;
      }
      if (obj >= 0 && beh >= 0 && beh - obj < 2.0 * cfg.stride / cfg.fps)
        result.check_failures.push_back(
            "behavioral pcp did not exceed object pcp by 2*stride/fps at " +
            std::to_string(n) + " nodes");
    }
  }
  return result;
}

}  // namespace svs::bench
