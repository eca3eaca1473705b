#include "svs/transport/frame.hpp"

#include "svs/core/error.hpp"

namespace svs::transport {

namespace {

struct TypeName {
  MsgType type;
  const char* name;
};

constexpr TypeName kTypeNames[] = {
    {MsgType::record, "record"},
    {MsgType::object_alert, "object_alert"},
    {MsgType::behavior_alert, "behavior_alert"},
    {MsgType::put, "put"},
    {MsgType::get, "get"},
    {MsgType::query, "query"},
    {MsgType::subscribe, "subscribe"},
    {MsgType::ack, "ack"},
    {MsgType::stats, "stats"},
};

}  // namespace

const char* to_string(MsgType t) {
  for (const auto& tn : kTypeNames)
    if (tn.type == t) return tn.name;
  return "?";
}

std::optional<MsgType> msg_type_from(std::string_view s) {
  for (const auto& tn : kTypeNames)
    if (s == tn.name) return tn.type;
  return std::nullopt;
}

std::string encode_payload(const nlohmann::json& payload) {
  std::string body = payload.dump();
  if (body.size() > kMaxPayloadBytes)
    throw TransportError("frame payload exceeds 16 MiB cap (" +
                         std::to_string(body.size()) + " bytes)");
  const uint32_t n = static_cast<uint32_t>(body.size());
  std::string out;
  out.reserve(4 + body.size());
  out.push_back(static_cast<char>((n >> 24) & 0xff));
  out.push_back(static_cast<char>((n >> 16) & 0xff));
  out.push_back(static_cast<char>((n >> 8) & 0xff));
  out.push_back(static_cast<char>(n & 0xff));
  out += body;
  return out;
}

nlohmann::json message_payload(const Message& msg) {
  // nlohmann objects keep keys sorted, which makes the bytes canonical.
  nlohmann::json payload;
  payload["type"] = to_string(msg.type);
  payload["ts"] = msg.ts;
  payload["body"] = msg.body;
  return payload;
}

std::string encode(const Message& msg) {
  return encode_payload(message_payload(msg));
}

void FrameDecoder::feed(std::string_view bytes) {
  if (poisoned_)
    throw TransportError("feed on poisoned decoder (length cap exceeded)");
  buf_.append(bytes.data(), bytes.size());
}

void FrameDecoder::compact() {
  if (read_pos_ > 0) {
    buf_.erase(0, read_pos_);
    read_pos_ = 0;
  }
}

std::optional<DecodeResult> FrameDecoder::next() {
  if (poisoned_) return std::nullopt;
  if (buf_.size() - read_pos_ < 4) return std::nullopt;

  const auto* p = reinterpret_cast<const unsigned char*>(buf_.data() + read_pos_);
  const uint32_t len = (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) |
                       (uint32_t(p[2]) << 8) | uint32_t(p[3]);
  if (len > kMaxPayloadBytes) {
    poisoned_ = true;
    return DecodeResult{FrameError{"declared frame length " +
                                   std::to_string(len) + " exceeds cap"}};
  }
  if (buf_.size() - read_pos_ < 4 + size_t(len)) return std::nullopt;

  const std::string body(buf_, read_pos_ + 4, len);
  read_pos_ += 4 + size_t(len);
  // Resynchronization is automatic: the frame's bytes are consumed whether
  // or not the payload parses, and the next read starts on a boundary.
  compact();

  nlohmann::json payload = nlohmann::json::parse(body, nullptr, false);
  if (payload.is_discarded())
    return DecodeResult{FrameError{"payload is not valid JSON"}};
  if (!payload.is_object() || !payload.contains("type") ||
      !payload.contains("ts") || !payload.contains("body"))
    return DecodeResult{FrameError{"payload missing type/ts/body"}};
  if (!payload["type"].is_string() || !payload["ts"].is_number() ||
      !payload["body"].is_object())
    return DecodeResult{FrameError{"payload field types invalid"}};

  const auto type = msg_type_from(payload["type"].get<std::string>());
  if (!type)
    return DecodeResult{
        FrameError{"unknown frame type \"" + payload["type"].get<std::string>() + "\""}};

  Message msg;
  msg.type = *type;
  msg.ts = payload["ts"].get<double>();
  msg.body = std::move(payload["body"]);
  return DecodeResult{std::move(msg)};
}

}  // namespace svs::transport
