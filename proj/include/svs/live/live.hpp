#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "svs/cloud/cloud_node.hpp"
#include "svs/core/clock.hpp"
#include "svs/scene/scenario.hpp"
#include "svs/server/server_node.hpp"
#include "svs/transport/tcp.hpp"

namespace svs::live {

// Socket-facing wrappers around the cores, for running the tiers as real
// processes. Timing comes from a wall clock mapped to virtual seconds via
// time_scale.

struct ServeOptions {
  std::string listen = "127.0.0.1:0";
  std::string cloud;  // optional; confirmed behavioral alerts forward here
  server::ServerConfig server;
  std::string audit_path;  // optional NDJSON sink
  double time_scale = 1.0;
};

class ServeNode {
 public:
  explicit ServeNode(ServeOptions opts);
  ~ServeNode();
  void stop();
  int port() const { return listener_->bound_port(); }
  long rows_seen() const;
  long notifications() const { return notifications_; }

 private:
  void accept_loop();
  void conn_loop(std::shared_ptr<transport::TcpConn> conn);
  void tick_loop();

  ServeOptions opts_;
  VirtualClock clock_;
  std::unique_ptr<transport::TcpListener> listener_;
  std::unique_ptr<transport::TcpConn> cloud_conn_;
  std::unique_ptr<server::ServerNodeCore> core_;
  mutable std::mutex mu_;
  std::atomic<bool> stop_{false};
  std::atomic<long> notifications_{0};
  std::thread accept_thread_;
  std::thread tick_thread_;
  std::mutex conn_mu_;
  std::vector<std::shared_ptr<transport::TcpConn>> conns_;
  std::vector<std::thread> conn_threads_;
};

struct CloudOptions {
  std::string listen = "127.0.0.1:0";
  cloud::LatencyProfile profile;
  int node_count = 4;
  int endpoint_cap = 50;
  double time_scale = 1.0;
};

class CloudNode {
 public:
  explicit CloudNode(CloudOptions opts);
  ~CloudNode();
  void stop();
  int port() const { return listener_->bound_port(); }
  long published() const;

 private:
  void accept_loop();
  void conn_loop(std::shared_ptr<transport::TcpConn> conn);
  void publish(const cloud::NotificationMessage& msg);

  CloudOptions opts_;
  VirtualClock clock_;
  std::unique_ptr<transport::TcpListener> listener_;
  cloud::TopicBroker broker_;
  cloud::CloudTables tables_;
  std::mutex mu_;
  std::map<long, std::shared_ptr<transport::TcpConn>> endpoints_;
  std::atomic<bool> stop_{false};
  std::thread accept_thread_;
  std::mutex conn_mu_;
  std::vector<std::shared_ptr<transport::TcpConn>> conns_;
  std::vector<std::thread> conn_threads_;
};

struct AiNodeOptions {
  int camera_id = 1;
  std::string scenario_path;
  std::string server_addr;
  std::string cloud_addr;
  int batch = 30, window = 30, stride = 20;
  double time_scale = 1.0;
  double stage_cost_scale = 1.0;  // 0 skips the synthetic stage sleeps
};

// Runs the per-camera pipeline against live endpoints until the scenario is
// exhausted. Returns the number of emitted batches.
long run_ai_node(const AiNodeOptions& opts);

struct NotifyOptions {
  std::string cloud_addr;
  std::string pattern = "anomaly/*";
  std::string log_path;
  double time_scale = 1.0;
};

class NotifyClient {
 public:
  explicit NotifyClient(NotifyOptions opts);
  ~NotifyClient();
  void stop();
  long received() const { return received_; }

 private:
  void recv_loop();

  NotifyOptions opts_;
  VirtualClock clock_;
  std::unique_ptr<transport::TcpConn> conn_;
  std::atomic<bool> stop_{false};
  std::atomic<long> received_{0};
  std::thread thread_;
};

}  // namespace svs::live
