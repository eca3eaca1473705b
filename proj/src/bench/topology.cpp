#include "svs/bench/topology.hpp"

#include <cmath>

#include "svs/core/error.hpp"

namespace svs::bench {

void ComputePool::submit(double cost_s, std::function<void()> done) {
  if (free_ > 0) {
    --free_;
    start(Job{cost_s, std::move(done)});
  } else {
    waiting_.push_back(Job{cost_s, std::move(done)});
    peak_waiting_ = std::max(peak_waiting_, long(waiting_.size()));
  }
}

void ComputePool::start(Job job) {
  sim_.after(job.cost_s, [this, done = std::move(job.done)]() {
    done();
    if (!waiting_.empty()) {
      Job next = std::move(waiting_.front());
      waiting_.pop_front();
      start(std::move(next));
    } else {
      ++free_;
    }
  });
}

// One per-camera pipeline: five serviced stages with bounded queues
// (capacity 4 batches) between them. Backpressure holds finished work at
// the producing stage instead of dropping it, so overload shows up as
// latency, not loss. The ingress buffer is unbounded: a camera cannot be
// paused, frames keep their capture timestamps while they wait.
struct SimWorld::Pipeline {
  static constexpr int kStages = 5;
  static constexpr size_t kQueueCap = 4;

  SimWorld& world;
  int camera_id;
  double fps;
  double ingress_delay;
  ainode::PipelineLogic logic;
  ainode::Batcher batcher;

  std::deque<ainode::FrameBatch> ingress;
  struct Stage {
    std::deque<ainode::ProcessedBatch> queue;
    bool busy = false;
    bool output_blocked = false;
    std::optional<ainode::ProcessedBatch> held;
  };
  Stage stages[kStages];
  std::deque<ainode::FrameBatch> stage0_queue;

  double prev_emit = 0;
  long full_batches = 0;

  Pipeline(SimWorld& w, int cam, double fps_, double ingress_s,
           ainode::AiNodeConfig cfg)
      : world(w),
        camera_id(cam),
        fps(fps_),
        ingress_delay(ingress_s),
        logic(&w.scenario_, cam, cfg,
              w.cfg_.stage_factory
                  ? w.cfg_.stage_factory(&w.scenario_, cam)
                  : ainode::StageSet::reference(&w.scenario_)),
        batcher(cam, cfg.batch_size, fps_) {
    prev_emit = ingress_s;
  }

  void schedule_capture() {
    const long frames = world.scenario_.frame_count(camera_id);
    const int B = logic.config().batch_size;
    full_batches = frames / B;
    for (long b = 0; b < full_batches; ++b) {
      const long last = b * B + B - 1;
      const double ready = double(last) / fps + 1.0 / fps + ingress_delay;
      world.sim_.at(ready, [this, b] { capture_batch(b); });
    }
  }

  void capture_batch(long b) {
    const int B = logic.config().batch_size;
    std::optional<ainode::FrameBatch> batch;
    for (long f = b * B; f < (b + 1) * B; ++f) {
      auto out = batcher.push(world.scenario_.frame(camera_id, f));
      if (out) batch = std::move(out);
    }
    if (!batch) return;
    ingress.push_back(std::move(*batch));
    pump_ingress();
  }

  void pump_ingress() {
    while (!ingress.empty() && stage0_queue.size() < kQueueCap) {
      stage0_queue.push_back(std::move(ingress.front()));
      ingress.pop_front();
    }
    try_start_detect();
  }

  double stage_cost(double density) const {
    return logic.config().cost.stage_seconds(density);
  }

  void try_start_detect() {
    Stage& st = stages[0];
    if (st.busy || st.output_blocked || stage0_queue.empty()) return;
    st.busy = true;
    ainode::FrameBatch batch = std::move(stage0_queue.front());
    stage0_queue.pop_front();
    pump_ingress_only();
    // The detector's cost tracks what it is about to process: the
    // ground-truth crowd (identical to realized detections at zero noise).
    double persons = 0;
    for (const auto& fr : batch.frames) persons += double(fr.persons.size());
    const double density = batch.frames.empty() ? 0 : persons / double(batch.frames.size());
    const double ready_time = world.sim_.now();
    world.pool_.submit(stage_cost(density),
                       [this, b = std::move(batch), ready_time]() mutable {
                         finish_detect(std::move(b), ready_time);
                       });
  }

  // Refill stage-0 queue without recursing into try_start_detect.
  void pump_ingress_only() {
    while (!ingress.empty() && stage0_queue.size() < kQueueCap) {
      stage0_queue.push_back(std::move(ingress.front()));
      ingress.pop_front();
    }
  }

  void finish_detect(ainode::FrameBatch batch, double ready_time) {
    Stage& st = stages[0];
    st.busy = false;
    try {
      ainode::ProcessedBatch pb = logic.detect(batch);
      pb.batch_ready_time = ready_time;
      pb.t_detect_done = world.sim_.now();
      world.on_object_alerts(*this, pb);  // fast path, ahead of later stages
      push_downstream(0, std::move(pb));
    } catch (const StageError&) {
      ++world.drops_;
    }
    try_start_detect();
  }

  void push_downstream(int s, ainode::ProcessedBatch pb) {
    Stage& next = stages[s + 1];
    if (next.queue.size() < kQueueCap) {
      next.queue.push_back(std::move(pb));
      try_start(s + 1);
    } else {
      stages[s].held = std::move(pb);
      stages[s].output_blocked = true;
    }
  }

  void try_start(int s) {
    Stage& st = stages[s];
    if (st.busy || st.output_blocked || st.queue.empty()) return;
    st.busy = true;
    ainode::ProcessedBatch pb = std::move(st.queue.front());
    st.queue.pop_front();
    unblock_upstream(s);
    const double cost = stage_cost(pb.mean_density);
    world.pool_.submit(cost, [this, s, b = std::move(pb)]() mutable {
      finish_stage(s, std::move(b));
    });
  }

  void unblock_upstream(int s) {
    if (s == 1) {
      Stage& up = stages[0];
      if (up.output_blocked && stages[1].queue.size() < kQueueCap) {
        stages[1].queue.push_back(std::move(*up.held));
        up.held.reset();
        up.output_blocked = false;
        try_start(1);
        try_start_detect();
      }
      return;
    }
    if (s >= 2) {
      Stage& up = stages[s - 1];
      if (up.output_blocked && stages[s].queue.size() < kQueueCap) {
        stages[s].queue.push_back(std::move(*up.held));
        up.held.reset();
        up.output_blocked = false;
        try_start(s);
        try_start(s - 1);
      }
    }
  }

  void finish_stage(int s, ainode::ProcessedBatch pb) {
    Stage& st = stages[s];
    st.busy = false;
    try {
      switch (s) {
        case 1:
          logic.track(pb);
          break;
        case 2:
          logic.score_windows(pb);
          break;
        case 3:
          logic.extract(pb);
          break;
        case 4: {
          pb.t_emit = world.sim_.now();
          ainode::EmitResult emit = logic.keyframe_and_emit(pb);
          world.on_records(*this, pb, std::move(emit));
          try_start(4);
          return;
        }
        default:
          break;
      }
      push_downstream(s, std::move(pb));
    } catch (const StageError&) {
      ++world.drops_;
    }
    try_start(s);
  }
};

SimWorld::SimWorld(scene::Scenario scenario, WorldConfig cfg)
    : scenario_(std::move(scenario)),
      cfg_(cfg),
      pool_(sim_, cfg.compute_workers),
      broker_(cfg.cloud_latency, cfg.cloud_node_count),
      tables_(cfg.cloud_latency) {
  sim_.set_time_scale(cfg_.time_scale);

  // The server learns camera placement from the deployment config.
  for (const auto& cam : scenario_.config().cameras) {
    cfg_.server.camera_tags[cam.camera_id] = cam.location_tag;
    cfg_.server.camera_dims[cam.camera_id] = {cam.width, cam.height};
  }
  server_core_ = std::make_unique<server::ServerNodeCore>(cfg_.server);
  server_core_->audit = [this](const nlohmann::json& j) {
    audit_log_.push_back(j.dump());
  };

  for (int i = 0; i < cfg_.subscribers; ++i)
    subscriber_ids_.push_back(broker_.subscribe(cfg_.subscriber_pattern));

  double horizon = 0;
  for (const auto& cam : scenario_.config().cameras) {
    auto p = std::make_unique<Pipeline>(*this, cam.camera_id, cam.fps,
                                        cam.ingress_delay, cfg_.ainode);
    p->schedule_capture();
    expected_batches_ += p->full_batches;
    horizon = std::max(horizon, scenario_.config().duration + cam.ingress_delay);
    pipelines_.push_back(std::move(p));
  }
  horizon_ = horizon;
  if (cfg_.analytics_push || cfg_.server.reset_hours * 3600.0 < 1e12)
    schedule_tick();
}

SimWorld::~SimWorld() = default;

void SimWorld::schedule_tick() {
  sim_.after(cfg_.tick_period_s, [this] {
    server_core_->tick(sim_.now());
    if (cfg_.analytics_push) {
      const double t1 = sim_.now();
      const double t0 = t1 - cfg_.tick_period_s;
      const auto report = server_core_->statistics(t0, t1);
      for (const auto& [cam, count] : report.headcount) {
        cloud::CloudTableRow row;
        row.table = "analytics";
        row.camera_id = cam;
        row.timestamp = t1;
        row.value = {{"headcount", count}, {"records", report.records}};
        tables_.put(row, sim_.now());
      }
    }
    // Keep ticking while work remains; otherwise let the queue drain.
    if (!draining_ || emitted_batches_ + drops_ < expected_batches_ ||
        sim_.now() < horizon_)
      schedule_tick();
  });
}

void SimWorld::on_object_alerts(Pipeline& p, const ainode::ProcessedBatch& b) {
  for (const auto& alert : b.alerts) {
    cloud::NotificationMessage msg;
    msg.topic = "anomaly/object/" + alert.label;
    msg.origin_time = alert.frame_time;
    msg.camera_id = p.camera_id;
    msg.severity = "critical";
    msg.body = {{"via", "ai"},
                {"camera_id", p.camera_id},
                {"class_id", alert.class_id},
                {"label", alert.label},
                {"batch_index", alert.batch_index}};
    if (cfg_.ainode.instrument_hops)
      msg.body["hops"] = {{"t_capture", alert.frame_time},
                          {"t_batch_ready", b.batch_ready_time},
                          {"t_detect", b.t_detect_done}};
    const long batch_index = alert.batch_index;
    sim_.after(cfg_.link_ai_cloud_s, [this, msg = std::move(msg), batch_index] {
      AlertTrace trace;
      trace.kind = "object";
      trace.camera_id = msg.camera_id;
      trace.enqueue_time = sim_.now();
      trace.batch_index = batch_index;
      alert_traces_.push_back(trace);
      publish_at_cloud(msg, "object");
    });
  }
}

void SimWorld::on_records(Pipeline& p, const ainode::ProcessedBatch& b,
                          ainode::EmitResult emit) {
  ++emitted_batches_;
  frames_completed_ += static_cast<long>(b.frames.size());
  if (cfg_.record_emit_times)
    emit_times_[{p.camera_id, b.batch_index}] = b.t_emit;

  MetricSample sample;
  sample.node_count = cfg_.label_node_count;
  sample.density = cfg_.label_density;
  sample.camera_id = p.camera_id;
  sample.batch_index = b.batch_index;
  sample.latency_s = b.t_emit - b.batch_ready_time;
  const double gap = b.t_emit - p.prev_emit;
  sample.throughput_fps = gap > 0 ? double(b.frames.size()) / gap : 0.0;
  p.prev_emit = b.t_emit;
  sample.detections = b.mean_density;
  sample.ts = b.t_emit;
  if (cfg_.on_sample)
    cfg_.on_sample(sample);
  else
    samples_.push_back(sample);

  if (emit.records.empty()) return;
  if (cfg_.ainode.instrument_hops) {
    for (auto& rec : emit.records)
      rec.hops = {{"t_capture", emit.keyframe_time},
                  {"t_batch_ready", b.batch_ready_time},
                  {"t_detect", b.t_detect_done},
                  {"t_emit", b.t_emit}};
  }
  sim_.after(cfg_.link_ai_server_s, [this, recs = std::move(emit.records)]() mutable {
    for (auto& rec : recs) {
      auto result = server_core_->ingest(std::move(rec), sim_.now());
      if (result.notification) {
        const auto& alert = *result.notification;
        cloud::NotificationMessage msg;
        msg.topic = "anomaly/behavior";
        msg.origin_time = alert.origin_time;
        msg.camera_id = alert.camera_id;
        msg.severity = "warning";
        msg.body = {{"via", "server"},
                    {"camera_id", alert.camera_id},
                    {"score", alert.score},
                    {"record_time", alert.record_time}};
        if (cfg_.ainode.instrument_hops) {
          nlohmann::json hops = alert.hops;
          hops["t_server_ingest"] = sim_.now();
          msg.body["hops"] = std::move(hops);
        }
        sim_.after(cfg_.link_server_cloud_s, [this, msg = std::move(msg)] {
          AlertTrace trace;
          trace.kind = "behavior";
          trace.camera_id = msg.camera_id;
          trace.enqueue_time = sim_.now();
          alert_traces_.push_back(trace);
          publish_at_cloud(msg, "behavior");
        });
      }
    }
  });
}

void SimWorld::publish_at_cloud(cloud::NotificationMessage msg,
                                const std::string& kind) {
  auto deliveries = broker_.publish(std::move(msg), sim_.now());
  for (auto& d : deliveries) {
    sim_.at(d.deliver_at, [this, d = std::move(d), kind] {
      Receipt r;
      r.subscriber_id = d.subscription_id;
      r.topic = d.message.topic;
      r.kind = kind;
      r.camera_id = d.message.camera_id;
      r.origin_time = d.message.origin_time;
      r.publish_time = d.message.publish_time;
      r.receipt_time = sim_.now();
      if (d.message.body.contains("hops")) {
        r.hops = d.message.body["hops"];
        r.hops["t_publish"] = d.message.publish_time;
        r.hops["t_receipt"] = r.receipt_time;
      }
      receipts_.push_back(std::move(r));
    });
  }
}

double SimWorld::emit_time(int camera_id, long batch_index) const {
  auto it = emit_times_.find({camera_id, batch_index});
  return it != emit_times_.end() ? it->second : -1.0;
}

void SimWorld::run_to_drain() {
  draining_ = true;
  sim_.run();
}

void SimWorld::run_until(double t_end) {
  draining_ = true;
  horizon_ = std::min(horizon_, t_end);
  sim_.run_until(t_end);
}

}  // namespace svs::bench
