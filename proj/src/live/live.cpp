#include "svs/live/live.hpp"

#include <fstream>

#include "svs/ainode/pipeline.hpp"
#include "svs/core/error.hpp"
#include "svs/transport/retry.hpp"

namespace svs::live {

using transport::Message;
using transport::MsgType;

// ---------------------------------------------------------------- server --

ServeNode::ServeNode(ServeOptions opts) : opts_(opts), clock_(opts.time_scale) {
  listener_ = std::make_unique<transport::TcpListener>(
      transport::parse_address(opts_.listen));
  core_ = std::make_unique<server::ServerNodeCore>(opts_.server, clock_.now());
  if (!opts_.cloud.empty()) {
    cloud_conn_ = transport::TcpConn::connect(transport::parse_address(opts_.cloud));
    if (!cloud_conn_) throw TransportError("serve: cannot reach cloud at " + opts_.cloud);
  }
  if (!opts_.audit_path.empty()) {
    auto path = opts_.audit_path;
    core_->audit = [path](const nlohmann::json& j) {
      std::ofstream out(path, std::ios::app);
      out << j.dump() << '\n';
    };
  }
  accept_thread_ = std::thread([this] { accept_loop(); });
  tick_thread_ = std::thread([this] { tick_loop(); });
}

ServeNode::~ServeNode() { stop(); }

void ServeNode::stop() {
  if (stop_.exchange(true)) return;
  listener_->close();
  if (accept_thread_.joinable()) accept_thread_.join();
  if (tick_thread_.joinable()) tick_thread_.join();
  {
    std::lock_guard lock(conn_mu_);
    for (auto& c : conns_) c->close();
  }
  for (auto& t : conn_threads_)
    if (t.joinable()) t.join();
}

long ServeNode::rows_seen() const {
  std::lock_guard lock(mu_);
  return core_->total_ingested();
}

void ServeNode::accept_loop() {
  while (!stop_) {
    auto conn = listener_->accept();
    if (!conn) return;
    std::shared_ptr<transport::TcpConn> shared(std::move(conn));
    std::lock_guard lock(conn_mu_);
    conns_.push_back(shared);
    conn_threads_.emplace_back([this, shared] { conn_loop(shared); });
  }
}

void ServeNode::tick_loop() {
  while (!stop_) {
    {
      std::lock_guard lock(mu_);
      core_->tick(clock_.now());
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
  }
}

void ServeNode::conn_loop(std::shared_ptr<transport::TcpConn> conn) {
  while (!stop_) {
    auto result = conn->recv();
    if (!result) return;
    if (std::holds_alternative<transport::FrameError>(*result)) continue;
    Message& msg = std::get<Message>(*result);
    if (msg.type == MsgType::record) {
      server::MetadataRecord rec = server::record_from_json(msg.body);
      std::optional<server::BehaviorAlert> alert;
      {
        std::lock_guard lock(mu_);
        auto res = core_->ingest(std::move(rec), clock_.now());
        alert = res.notification;
      }
      if (alert && cloud_conn_) {
        ++notifications_;
        cloud::NotificationMessage nm;
        nm.topic = "anomaly/behavior";
        nm.origin_time = alert->origin_time;
        nm.camera_id = alert->camera_id;
        nm.severity = "warning";
        nm.body = {{"via", "server"},
                   {"score", alert->score},
                   {"record_time", alert->record_time}};
        Message out;
        out.type = MsgType::behavior_alert;
        out.ts = clock_.now();
        out.body = nm.to_json();
        cloud_conn_->send(out);
      }
    } else if (msg.type == MsgType::stats) {
      const double t0 = msg.body.value("t0", 0.0);
      const double t1 = msg.body.value("t1", clock_.now());
      Message ack;
      ack.type = MsgType::ack;
      ack.ts = clock_.now();
      {
        std::lock_guard lock(mu_);
        ack.body = {{"ok", true}, {"report", core_->statistics(t0, t1).to_json()}};
      }
      conn->send(ack);
    }
  }
}

// ----------------------------------------------------------------- cloud --

CloudNode::CloudNode(CloudOptions opts)
    : opts_(opts),
      clock_(opts.time_scale),
      broker_(opts.profile, opts.node_count, opts.endpoint_cap),
      tables_(opts.profile) {
  listener_ = std::make_unique<transport::TcpListener>(
      transport::parse_address(opts_.listen));
  accept_thread_ = std::thread([this] { accept_loop(); });
}

CloudNode::~CloudNode() { stop(); }

void CloudNode::stop() {
  if (stop_.exchange(true)) return;
  listener_->close();
  if (accept_thread_.joinable()) accept_thread_.join();
  {
    std::lock_guard lock(conn_mu_);
    for (auto& c : conns_) c->close();
  }
  for (auto& t : conn_threads_)
    if (t.joinable()) t.join();
}

long CloudNode::published() const {
  return const_cast<CloudNode*>(this)->broker_.published();
}

void CloudNode::accept_loop() {
  while (!stop_) {
    auto conn = listener_->accept();
    if (!conn) return;
    std::shared_ptr<transport::TcpConn> shared(std::move(conn));
    std::lock_guard lock(conn_mu_);
    conns_.push_back(shared);
    conn_threads_.emplace_back([this, shared] { conn_loop(shared); });
  }
}

void CloudNode::publish(const cloud::NotificationMessage& msg) {
  std::vector<cloud::Delivery> deliveries;
  {
    std::lock_guard lock(mu_);
    deliveries = broker_.publish(msg, clock_.now());
  }
  if (deliveries.empty()) return;
  clock_.sleep_for(deliveries.front().deliver_at - clock_.now());
  std::lock_guard lock(mu_);
  for (const auto& d : deliveries) {
    auto it = endpoints_.find(d.subscription_id);
    if (it == endpoints_.end()) continue;
    Message out;
    out.type = d.message.topic == "anomaly/behavior" ? MsgType::behavior_alert
                                                     : MsgType::object_alert;
    out.ts = clock_.now();
    out.body = d.message.to_json();
    it->second->send(out);
  }
}

void CloudNode::conn_loop(std::shared_ptr<transport::TcpConn> conn) {
  long sub_id = 0;
  while (!stop_) {
    auto result = conn->recv();
    if (!result) break;
    if (std::holds_alternative<transport::FrameError>(*result)) continue;
    Message& msg = std::get<Message>(*result);
    Message ack;
    ack.type = MsgType::ack;
    switch (msg.type) {
      case MsgType::subscribe: {
        clock_.sleep_for(opts_.profile.api_action_ms / 1000.0);
        try {
          std::lock_guard lock(mu_);
          sub_id = broker_.subscribe(msg.body.value("pattern", ""));
          endpoints_[sub_id] = conn;
          ack.body = {{"ok", true}, {"subscription_id", sub_id}};
        } catch (const RequestError& e) {
          ack.body = {{"ok", false}, {"error", e.what()}};
        }
        ack.ts = clock_.now();
        conn->send(ack);
        break;
      }
      case MsgType::object_alert:
      case MsgType::behavior_alert: {
        publish(cloud::NotificationMessage::from_json(msg.body));
        break;
      }
      case MsgType::put: {
        cloud::CloudTableRow row;
        row.table = msg.body.value("table", "");
        row.camera_id = msg.body.value("camera_id", 0);
        row.timestamp = msg.body.value("timestamp", 0.0);
        row.value = msg.body.value("value", nlohmann::json::object());
        try {
          double ack_at;
          {
            std::lock_guard lock(mu_);
            ack_at = tables_.put(row, clock_.now()).ack_at;
          }
          clock_.sleep_until(ack_at);
          ack.body = {{"ok", true}};
        } catch (const RequestError& e) {
          ack.body = {{"ok", false}, {"error", e.what()}};
        }
        ack.ts = clock_.now();
        conn->send(ack);
        break;
      }
      case MsgType::get: {
        try {
          cloud::CloudTables::GetResult r;
          {
            std::lock_guard lock(mu_);
            r = tables_.get(msg.body.value("table", ""),
                            msg.body.value("camera_id", 0),
                            msg.body.value("timestamp", 0.0), clock_.now());
          }
          clock_.sleep_until(r.respond_at);
          ack.body = {{"ok", true}};
          ack.body["value"] = r.value ? *r.value : nlohmann::json();
        } catch (const RequestError& e) {
          ack.body = {{"ok", false}, {"error", e.what()}};
        }
        ack.ts = clock_.now();
        conn->send(ack);
        break;
      }
      case MsgType::query: {
        try {
          cloud::CloudTables::QueryResult r;
          {
            std::lock_guard lock(mu_);
            r = tables_.query_stats(msg.body.value("camera_id", 0),
                                    msg.body.value("t0", 0.0),
                                    msg.body.value("t1", 0.0), clock_.now());
          }
          clock_.sleep_until(r.respond_at);
          auto rows = nlohmann::json::array();
          for (const auto& row : r.rows)
            rows.push_back({{"camera_id", row.camera_id},
                            {"timestamp", row.timestamp},
                            {"value", row.value}});
          ack.body = {{"ok", true}, {"rows", rows}};
        } catch (const RequestError& e) {
          ack.body = {{"ok", false}, {"error", e.what()}};
        }
        ack.ts = clock_.now();
        conn->send(ack);
        break;
      }
      default:
        break;
    }
  }
  if (sub_id > 0) {
    std::lock_guard lock(mu_);
    broker_.unsubscribe(sub_id);
    endpoints_.erase(sub_id);
  }
}

// --------------------------------------------------------------- ai node --

long run_ai_node(const AiNodeOptions& opts) {
  const scene::ScenarioConfig cfg = scene::load_scenario_file(opts.scenario_path);
  const scene::Scenario scenario = scene::Scenario::build(cfg);

  ainode::AiNodeConfig node_cfg;
  node_cfg.batch_size = opts.batch;
  node_cfg.window = opts.window;
  node_cfg.stride = opts.stride;
  ainode::PipelineLogic logic(&scenario, opts.camera_id, node_cfg);
  ainode::Batcher batcher(opts.camera_id, opts.batch, scenario.fps(opts.camera_id));

  const double time_scale =
      opts.time_scale > 0 ? opts.time_scale : cfg.time_scale;
  VirtualClock clock(time_scale);

  auto server_conn =
      transport::TcpConn::connect(transport::parse_address(opts.server_addr));
  auto cloud_conn =
      transport::TcpConn::connect(transport::parse_address(opts.cloud_addr));
  if (!server_conn) throw TransportError("ai-node: cannot reach server");
  if (!cloud_conn) throw TransportError("ai-node: cannot reach cloud");

  transport::RetrySender record_sender(
      [&](const Message& m) { return server_conn->send(m); },
      [&](double s) { clock.sleep_for(s); },
      transport::RetrySender::OnFailure::spill);
  transport::RetrySender alert_sender(
      [&](const Message& m) { return cloud_conn->send(m); },
      [&](double s) { clock.sleep_for(s); },
      transport::RetrySender::OnFailure::dead_letter);

  double ingress = 3.0;
  for (const auto& cam : cfg.cameras)
    if (cam.camera_id == opts.camera_id) ingress = cam.ingress_delay;

  const long frames = scenario.frame_count(opts.camera_id);
  long emitted = 0;
  for (long f = 0; f < frames; ++f) {
    auto maybe_batch = batcher.push(scenario.frame(opts.camera_id, f));
    if (!maybe_batch) continue;
    ainode::FrameBatch batch = std::move(*maybe_batch);
    clock.sleep_until(batch.end_time + ingress);

    ainode::ProcessedBatch pb = logic.detect(batch);
    const double stage_cost =
        node_cfg.cost.stage_seconds(pb.mean_density) * opts.stage_cost_scale;
    clock.sleep_for(stage_cost);
    for (const auto& alert : pb.alerts) {
      cloud::NotificationMessage nm;
      nm.topic = "anomaly/object/" + alert.label;
      nm.origin_time = alert.frame_time;
      nm.camera_id = alert.camera_id;
      nm.severity = "critical";
      nm.body = {{"via", "ai"},
                 {"label", alert.label},
                 {"class_id", alert.class_id},
                 {"batch_index", alert.batch_index}};
      Message m;
      m.type = MsgType::object_alert;
      m.ts = clock.now();
      m.body = nm.to_json();
      alert_sender.send(m);
    }
    logic.track(pb);
    clock.sleep_for(stage_cost);
    logic.score_windows(pb);
    clock.sleep_for(stage_cost);
    logic.extract(pb);
    clock.sleep_for(stage_cost);
    auto emit = logic.keyframe_and_emit(pb);
    clock.sleep_for(stage_cost);
    record_sender.replay();
    for (const auto& rec : emit.records) {
      Message m;
      m.type = MsgType::record;
      m.ts = clock.now();
      m.body = server::record_to_json(rec);
      record_sender.send(m);
    }
    ++emitted;
  }
  return emitted;
}

// -------------------------------------------------------------- notifier --

NotifyClient::NotifyClient(NotifyOptions opts)
    : opts_(opts), clock_(opts.time_scale) {
  conn_ = transport::TcpConn::connect(transport::parse_address(opts_.cloud_addr));
  if (!conn_) throw TransportError("notify: cannot reach cloud");
  Message sub;
  sub.type = MsgType::subscribe;
  sub.ts = clock_.now();
  sub.body = {{"pattern", opts_.pattern}};
  conn_->send(sub);
  if (!opts_.log_path.empty()) {
    std::ofstream out(opts_.log_path, std::ios::trunc);
    out << "topic,origin_time,receipt_time\n";
  }
  thread_ = std::thread([this] { recv_loop(); });
}

NotifyClient::~NotifyClient() { stop(); }

void NotifyClient::stop() {
  if (stop_.exchange(true)) return;
  conn_->close();
  if (thread_.joinable()) thread_.join();
}

void NotifyClient::recv_loop() {
  while (!stop_) {
    auto result = conn_->recv();
    if (!result) return;
    if (std::holds_alternative<transport::FrameError>(*result)) continue;
    Message& msg = std::get<Message>(*result);
    if (msg.type != MsgType::object_alert && msg.type != MsgType::behavior_alert)
      continue;
    ++received_;
    if (!opts_.log_path.empty()) {
      const auto nm = cloud::NotificationMessage::from_json(msg.body);
      std::ofstream out(opts_.log_path, std::ios::app);
      out << nm.topic << ',' << nm.origin_time << ',' << clock_.now() << '\n';
    }
  }
}

}  // namespace svs::live
