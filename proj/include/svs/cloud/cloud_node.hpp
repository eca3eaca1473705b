#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace svs::cloud {

// Injected service latencies (milliseconds of virtual time). Fanout is keyed
// by deployment node-count tiers and looked up exactly, no interpolation;
// values outside the table fall back to the nearest tier (ties go lower).
struct LatencyProfile {
  double table_get_ms = 14.6;
  double table_put_ms = 17.5;
  std::map<int, double> notify_fanout_ms = {
      {4, 140.0}, {8, 150.5}, {12, 186.0}, {16, 172.0}};
  double api_action_ms = 105.0;
  double api_statistical_ms = 14.4;

  double fanout_seconds(int node_count) const;

  static LatencyProfile from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static LatencyProfile load_file(const std::string& path);
};

// Anomaly notification routed through topics. Topics follow one of two
// schemas: "anomaly/object/<class>" or "anomaly/behavior".
struct NotificationMessage {
  std::string topic;
  double origin_time = 0;   // anomaly appearance, virtual seconds
  double publish_time = 0;  // stamped by the broker
  int camera_id = 0;
  std::string severity = "warning";
  nlohmann::json body = nlohmann::json::object();

  nlohmann::json to_json() const;
  static NotificationMessage from_json(const nlohmann::json& j);
};

bool valid_topic(const std::string& topic);

// Pattern = literal segments plus an optional trailing "*" matching one or
// more remaining segments.
bool topic_matches(const std::string& pattern, const std::string& topic);
bool valid_pattern(const std::string& pattern);

struct Delivery {
  long subscription_id = 0;
  double deliver_at = 0;
  NotificationMessage message;
};

class TopicBroker {
 public:
  explicit TopicBroker(LatencyProfile profile = {}, int node_count = 4,
                       int endpoint_cap = 50)
      : profile_(profile), node_count_(node_count), cap_(endpoint_cap) {}

  // Throws RequestError on an invalid pattern or when the endpoint cap is
  // exceeded.
  long subscribe(const std::string& pattern);
  void unsubscribe(long subscription_id);

  // Stamps publish_time = now and returns one delivery per live matching
  // subscriber, due after the fanout delay. Throws RequestError on an
  // invalid topic.
  std::vector<Delivery> publish(NotificationMessage msg, double now);

  long unrouted() const { return unrouted_; }
  long published() const { return published_; }
  size_t subscription_count() const { return subs_.size(); }

 private:
  LatencyProfile profile_;
  int node_count_;
  int cap_;
  long next_sub_ = 1;
  std::map<long, std::string> subs_;
  long unrouted_ = 0;
  long published_ = 0;
};

struct CloudTableRow {
  std::string table;  // "tracking" | "analytics"
  int camera_id = 0;
  double timestamp = 0;
  nlohmann::json value;
};

// Two table families indexed by (camera_id, timestamp).
class CloudTables {
 public:
  explicit CloudTables(LatencyProfile profile = {}) : profile_(profile) {}

  struct PutResult {
    double ack_at;
  };
  struct GetResult {
    std::optional<nlohmann::json> value;
    double respond_at;
  };
  struct QueryResult {
    std::vector<CloudTableRow> rows;  // ascending timestamps
    double respond_at;
  };

  PutResult put(const CloudTableRow& row, double now);
  GetResult get(const std::string& table, int camera_id, double timestamp,
                double now) const;
  QueryResult query_stats(int camera_id, double t0, double t1, double now) const;

  size_t size(const std::string& table) const;

 private:
  using Key = std::pair<int, double>;
  const std::map<Key, nlohmann::json>& family(const std::string& table) const;
  std::map<Key, nlohmann::json>& family(const std::string& table);

  LatencyProfile profile_;
  std::map<Key, nlohmann::json> tracking_;
  std::map<Key, nlohmann::json> analytics_;
};

}  // namespace svs::cloud
