#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

namespace svs::transport {

inline constexpr size_t kMaxPayloadBytes = 16ull * 1024 * 1024;  // 16 MiB

enum class MsgType {
  record,
  object_alert,
  behavior_alert,
  put,
  get,
  query,
  subscribe,
  ack,
  stats,
};

const char* to_string(MsgType t);
std::optional<MsgType> msg_type_from(std::string_view s);

// One logical frame on the wire. The payload is a JSON object with the
// mandatory fields {"type", "ts", "body"}; keys serialize sorted, so encoded
// bytes are canonical and usable in golden tests.
struct Message {
  MsgType type = MsgType::ack;
  double ts = 0.0;  // sender virtual seconds
  nlohmann::json body = nlohmann::json::object();

  bool operator==(const Message& o) const {
    return type == o.type && ts == o.ts && body == o.body;
  }
};

// 4-byte big-endian byte count, then the UTF-8 JSON payload.
// Throws TransportError when the payload exceeds the cap.
std::string encode_payload(const nlohmann::json& payload);
std::string encode(const Message& msg);

nlohmann::json message_payload(const Message& msg);

struct FrameError {
  std::string reason;
};

using DecodeResult = std::variant<Message, FrameError>;

// Incremental decoder: feed arbitrary byte chunks, poll complete frames.
// A malformed payload or unknown "type" yields a FrameError and the stream
// resynchronizes at the next length boundary. A declared length over the
// cap poisons the connection (unrecoverable by contract).
class FrameDecoder {
 public:
  void feed(std::string_view bytes);
  std::optional<DecodeResult> next();
  bool poisoned() const { return poisoned_; }

 private:
  std::string buf_;
  size_t read_pos_ = 0;
  bool poisoned_ = false;

  void compact();
};

}  // namespace svs::transport
