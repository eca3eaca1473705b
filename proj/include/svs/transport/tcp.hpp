#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "svs/transport/frame.hpp"

namespace svs::transport {

struct Address {
  std::string host;
  int port = 0;
};

// "host:port" -> Address; throws ValidationError on malformed input.
Address parse_address(const std::string& s);

// Blocking stream connection carrying length-prefixed JSON frames.
// send() is safe from multiple threads; recv loops belong to one reader.
class TcpConn {
 public:
  explicit TcpConn(int fd) : fd_(fd) {}
  ~TcpConn();
  TcpConn(const TcpConn&) = delete;
  TcpConn& operator=(const TcpConn&) = delete;

  static std::unique_ptr<TcpConn> connect(const Address& addr,
                                          int retries = 3,
                                          double backoff_s = 0.2);

  bool send(const Message& msg);
  bool send_bytes(const std::string& bytes);

  // Blocks until a full frame arrives, the peer closes (nullopt), or the
  // stream poisons (TransportError).
  std::optional<DecodeResult> recv();

  void close();
  bool closed() const { return fd_ < 0; }
  int fd() const { return fd_; }

 private:
  int fd_;
  std::mutex write_mu_;
  FrameDecoder decoder_;
};

class TcpListener {
 public:
  // Binds host:port; port 0 picks an ephemeral port (see bound_port()).
  explicit TcpListener(const Address& addr);
  ~TcpListener();

  std::unique_ptr<TcpConn> accept();  // nullptr once closed
  int bound_port() const { return port_; }
  void close();

 private:
  int fd_ = -1;
  int port_ = 0;
};

}  // namespace svs::transport
