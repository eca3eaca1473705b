#include "svs/cloud/cloud_node.hpp"

#include <cmath>
#include <fstream>

#include "svs/core/error.hpp"

namespace svs::cloud {

double LatencyProfile::fanout_seconds(int node_count) const {
  if (notify_fanout_ms.empty()) return 0.0;
  auto it = notify_fanout_ms.find(node_count);
  if (it != notify_fanout_ms.end()) return it->second / 1000.0;
  // Nearest listed tier; ties go to the lower one.
  auto best = notify_fanout_ms.begin();
  for (auto cur = notify_fanout_ms.begin(); cur != notify_fanout_ms.end(); ++cur)
    if (std::abs(cur->first - node_count) < std::abs(best->first - node_count))
      best = cur;
  return best->second / 1000.0;
}

LatencyProfile LatencyProfile::from_json(const nlohmann::json& j) {
  LatencyProfile p;
  if (j.contains("table_get_ms")) p.table_get_ms = j.at("table_get_ms").get<double>();
  if (j.contains("table_put_ms")) p.table_put_ms = j.at("table_put_ms").get<double>();
  if (j.contains("notify_fanout_ms")) {
    p.notify_fanout_ms.clear();
    for (const auto& [k, v] : j.at("notify_fanout_ms").items())
      p.notify_fanout_ms[std::stoi(k)] = v.get<double>();
  }
  if (j.contains("api_action_ms")) p.api_action_ms = j.at("api_action_ms").get<double>();
  if (j.contains("api_statistical_ms"))
    p.api_statistical_ms = j.at("api_statistical_ms").get<double>();
  for (const auto& [k, v] : p.notify_fanout_ms)
    if (v < 0) throw ValidationError("notify_fanout_ms must be >= 0");
  if (p.table_get_ms < 0 || p.table_put_ms < 0 || p.api_action_ms < 0 ||
      p.api_statistical_ms < 0)
    throw ValidationError("latency profile values must be >= 0");
  return p;
}

nlohmann::json LatencyProfile::to_json() const {
  nlohmann::json fan = nlohmann::json::object();
  for (const auto& [k, v] : notify_fanout_ms) fan[std::to_string(k)] = v;
  return {{"table_get_ms", table_get_ms},
          {"table_put_ms", table_put_ms},
          {"notify_fanout_ms", fan},
          {"api_action_ms", api_action_ms},
          {"api_statistical_ms", api_statistical_ms}};
}

LatencyProfile LatencyProfile::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open latency profile: " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded())
    throw ValidationError("latency profile is not valid JSON: " + path);
  return from_json(j);
}

nlohmann::json NotificationMessage::to_json() const {
  return {{"topic", topic},
          {"origin_time", origin_time},
          {"publish_time", publish_time},
          {"camera_id", camera_id},
          {"severity", severity},
          {"body", body}};
}

NotificationMessage NotificationMessage::from_json(const nlohmann::json& j) {
  NotificationMessage m;
  m.topic = j.at("topic").get<std::string>();
  m.origin_time = j.at("origin_time").get<double>();
  m.publish_time = j.value("publish_time", 0.0);
  m.camera_id = j.at("camera_id").get<int>();
  m.severity = j.value("severity", "warning");
  m.body = j.value("body", nlohmann::json::object());
  return m;
}

namespace {

std::vector<std::string> split_topic(const std::string& s) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t slash = s.find('/', start);
    if (slash == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, slash - start));
    start = slash + 1;
  }
}

}  // namespace

bool valid_topic(const std::string& topic) {
  const auto seg = split_topic(topic);
  if (seg.size() == 2) return seg[0] == "anomaly" && seg[1] == "behavior";
  if (seg.size() == 3)
    return seg[0] == "anomaly" && seg[1] == "object" && !seg[2].empty();
  return false;
}

bool valid_pattern(const std::string& pattern) {
  if (pattern.empty()) return false;
  const auto seg = split_topic(pattern);
  for (size_t i = 0; i < seg.size(); ++i) {
    if (seg[i].empty()) return false;
    if (seg[i] == "*" && i + 1 != seg.size()) return false;  // trailing only
  }
  return true;
}

bool topic_matches(const std::string& pattern, const std::string& topic) {
  const auto ps = split_topic(pattern);
  const auto ts = split_topic(topic);
  for (size_t i = 0; i < ps.size(); ++i) {
    if (ps[i] == "*") return ts.size() >= i + 1;  // one or more remaining
    if (i >= ts.size() || ps[i] != ts[i]) return false;
  }
  return ps.size() == ts.size();
}

long TopicBroker::subscribe(const std::string& pattern) {
  if (!valid_pattern(pattern))
    throw RequestError("invalid subscription pattern: \"" + pattern + "\"");
  if (static_cast<int>(subs_.size()) >= cap_)
    throw RequestError("endpoint cap reached (" + std::to_string(cap_) + ")");
  const long id = next_sub_++;
  subs_[id] = pattern;
  return id;
}

void TopicBroker::unsubscribe(long subscription_id) {
  subs_.erase(subscription_id);
}

std::vector<Delivery> TopicBroker::publish(NotificationMessage msg, double now) {
  if (!valid_topic(msg.topic))
    throw RequestError("invalid topic: \"" + msg.topic + "\"");
  msg.publish_time = now;
  ++published_;
  std::vector<Delivery> out;
  const double due = now + profile_.fanout_seconds(node_count_);
  for (const auto& [id, pattern] : subs_) {
    if (!topic_matches(pattern, msg.topic)) continue;
    Delivery d;
    d.subscription_id = id;
    d.deliver_at = due;
    d.message = msg;
    out.push_back(std::move(d));
  }
  if (out.empty()) ++unrouted_;
  return out;
}

const std::map<CloudTables::Key, nlohmann::json>& CloudTables::family(
    const std::string& table) const {
  if (table == "tracking") return tracking_;
  if (table == "analytics") return analytics_;
  throw RequestError("unknown table \"" + table + "\"");
}

std::map<CloudTables::Key, nlohmann::json>& CloudTables::family(
    const std::string& table) {
  return const_cast<std::map<Key, nlohmann::json>&>(
      static_cast<const CloudTables*>(this)->family(table));
}

CloudTables::PutResult CloudTables::put(const CloudTableRow& row, double now) {
  family(row.table)[{row.camera_id, row.timestamp}] = row.value;
  return {now + profile_.table_put_ms / 1000.0};
}

CloudTables::GetResult CloudTables::get(const std::string& table, int camera_id,
                                        double timestamp, double now) const {
  const auto& fam = family(table);
  auto it = fam.find({camera_id, timestamp});
  GetResult r;
  r.respond_at = now + profile_.table_get_ms / 1000.0;
  if (it != fam.end()) r.value = it->second;
  return r;
}

CloudTables::QueryResult CloudTables::query_stats(int camera_id, double t0,
                                                  double t1, double now) const {
  if (t1 < t0) throw RequestError("inverted query range");
  QueryResult r;
  r.respond_at = now + profile_.api_statistical_ms / 1000.0;
  const auto& fam = analytics_;
  for (auto it = fam.lower_bound({camera_id, t0});
       it != fam.end() && it->first.first == camera_id && it->first.second <= t1;
       ++it) {
    CloudTableRow row;
    row.table = "analytics";
    row.camera_id = camera_id;
    row.timestamp = it->first.second;
    row.value = it->second;
    r.rows.push_back(std::move(row));
  }
  return r;
}

size_t CloudTables::size(const std::string& table) const {
  return family(table).size();
}

}  // namespace svs::cloud
