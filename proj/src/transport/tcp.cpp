#include "svs/transport/tcp.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <thread>

#include "svs/core/error.hpp"

namespace svs::transport {

Address parse_address(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos || colon + 1 >= s.size())
    throw ValidationError("address must be host:port, got \"" + s + "\"");
  Address a;
  a.host = s.substr(0, colon);
  if (a.host.empty()) a.host = "127.0.0.1";
  try {
    a.port = std::stoi(s.substr(colon + 1));
  } catch (...) {
    throw ValidationError("address port is not a number in \"" + s + "\"");
  }
  if (a.port < 0 || a.port > 65535)
    throw ValidationError("address port out of range in \"" + s + "\"");
  return a;
}

namespace {

sockaddr_in make_sockaddr(const Address& addr) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(static_cast<uint16_t>(addr.port));
  if (addr.host == "localhost" || addr.host.empty())
    sa.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  else if (::inet_pton(AF_INET, addr.host.c_str(), &sa.sin_addr) != 1)
    throw ValidationError("cannot parse host \"" + addr.host + "\"");
  return sa;
}

}  // namespace

TcpConn::~TcpConn() { close(); }

void TcpConn::close() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

std::unique_ptr<TcpConn> TcpConn::connect(const Address& addr, int retries,
                                          double backoff_s) {
  const sockaddr_in sa = make_sockaddr(addr);
  for (int attempt = 0; attempt <= retries; ++attempt) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw TransportError("socket(): " + std::string(strerror(errno)));
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&sa), sizeof(sa)) == 0) {
      const int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return std::make_unique<TcpConn>(fd);
    }
    ::close(fd);
    if (attempt < retries)
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff_s));
  }
  return nullptr;
}

bool TcpConn::send_bytes(const std::string& bytes) {
  std::lock_guard lock(write_mu_);
  if (fd_ < 0) return false;
  size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(fd_, bytes.data() + sent, bytes.size() - sent,
                             MSG_NOSIGNAL);
    if (n <= 0) return false;
    sent += static_cast<size_t>(n);
  }
  return true;
}

bool TcpConn::send(const Message& msg) { return send_bytes(encode(msg)); }

std::optional<DecodeResult> TcpConn::recv() {
  char buf[16384];
  while (true) {
    if (auto result = decoder_.next()) return result;
    if (fd_ < 0) return std::nullopt;
    const ssize_t n = ::recv(fd_, buf, sizeof(buf), 0);
    if (n <= 0) return std::nullopt;
    decoder_.feed(std::string_view(buf, static_cast<size_t>(n)));
  }
}

TcpListener::TcpListener(const Address& addr) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw TransportError("socket(): " + std::string(strerror(errno)));
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in sa = make_sockaddr(addr);
  if (::bind(fd_, reinterpret_cast<const sockaddr*>(&sa), sizeof(sa)) != 0) {
    const std::string err = strerror(errno);
    ::close(fd_);
    fd_ = -1;
    throw TransportError("bind(" + addr.host + ":" + std::to_string(addr.port) +
                         "): " + err);
  }
  if (::listen(fd_, 64) != 0) {
    const std::string err = strerror(errno);
    ::close(fd_);
    fd_ = -1;
    throw TransportError("listen(): " + err);
  }
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
}

TcpListener::~TcpListener() { close(); }

void TcpListener::close() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

std::unique_ptr<TcpConn> TcpListener::accept() {
  if (fd_ < 0) return nullptr;
  const int conn = ::accept(fd_, nullptr, nullptr);
  if (conn < 0) return nullptr;
  const int one = 1;
  ::setsockopt(conn, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return std::make_unique<TcpConn>(conn);
}

}  // namespace svs::transport
