// Copyright 2026 The Lexveil Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LEXVEIL_NET_HPP_
#define LEXVEIL_NET_HPP_

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lexveil/error.hpp"
#include "lexveil/wire.hpp"

namespace lexveil::net {

struct Endpoint {
  std::string host;
  uint16_t port = 0;
};

// Parses "HOST:PORT". The host part may be empty ("":8080 is rejected but
// ":8080" is not a form we accept either — callers pass explicit hosts).
inline Endpoint ParseEndpoint(const std::string& text) {
  const size_t colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    Fail(ErrorKind::kParameter,
         "endpoint must be HOST:PORT, got '" + text + "'");
  }
  Endpoint endpoint;
  endpoint.host = text.substr(0, colon);
  const std::string port_text = text.substr(colon + 1);
  unsigned long port = 0;
  const auto* begin = port_text.data();
  const auto* end = begin + port_text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, port);
  if (ec != std::errc{} || ptr != end || port > 65535) {
    Fail(ErrorKind::kParameter,
         "endpoint port must be in [0, 65535], got '" + port_text + "'");
  }
  endpoint.port = static_cast<uint16_t>(port);
  return endpoint;
}

// Move-only owner of a connected TCP socket.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket() { Close(); }

  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Socket& operator=(Socket&& other) noexcept {
    if (this != &other) {
      Close();
      fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
  }

  bool Valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }

  void Close() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

  void SendAll(std::span<const uint8_t> data) const {
    size_t sent = 0;
    while (sent < data.size()) {
      const ssize_t n =
          ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        Fail(ErrorKind::kTransport,
             std::string("send failed: ") + std::strerror(errno));
      }
      sent += static_cast<size_t>(n);
    }
  }

  // Reads exactly `size` bytes; a clean peer close mid-message is a
  // transport error because frames are never legitimately split.
  void RecvAll(uint8_t* out, size_t size) const {
    size_t got = 0;
    while (got < size) {
      const ssize_t n = ::recv(fd_, out + got, size - got, 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        Fail(ErrorKind::kTransport,
             std::string("recv failed: ") + std::strerror(errno));
      }
      if (n == 0) {
        Fail(ErrorKind::kTransport, "peer closed connection mid-frame");
      }
      got += static_cast<size_t>(n);
    }
  }

  // Returns false on a clean close before any byte of the next frame.
  bool TryRecvFrame(wire::Frame* frame) const {
    uint8_t header[wire::kHeaderSize];
    size_t got = 0;
    while (got < sizeof(header)) {
      const ssize_t n = ::recv(fd_, header + got, sizeof(header) - got, 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        Fail(ErrorKind::kTransport,
             std::string("recv failed: ") + std::strerror(errno));
      }
      if (n == 0) {
        if (got == 0) return false;
        Fail(ErrorKind::kTransport, "peer closed connection mid-frame");
      }
      got += static_cast<size_t>(n);
    }
    uint32_t length = 0;
    for (int i = 0; i < 4; ++i) {
      length |= static_cast<uint32_t>(header[7 + i]) << (8 * i);
    }
    if (length > wire::kMaxPayload) {
      Fail(ErrorKind::kProtocol, "frame payload length out of range");
    }
    std::vector<uint8_t> bytes(sizeof(header) + length);
    std::memcpy(bytes.data(), header, sizeof(header));
    if (length > 0) RecvAll(bytes.data() + sizeof(header), length);
    *frame = wire::DecodeFrame(bytes);
    return true;
  }

  wire::Frame RecvFrame() const {
    wire::Frame frame;
    if (!TryRecvFrame(&frame)) {
      Fail(ErrorKind::kTransport, "peer closed connection before frame");
    }
    return frame;
  }

  void SendFrame(const wire::Frame& frame) const {
    SendAll(wire::EncodeFrame(frame));
  }

 private:
  int fd_ = -1;
};

// Listening socket; port 0 binds an ephemeral port, readable afterwards
// through bound_port().
class Listener {
 public:
  Listener(const std::string& host, uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* results = nullptr;
    const std::string port_text = std::to_string(port);
    const int rc = ::getaddrinfo(host.c_str(), port_text.c_str(), &hints,
                                 &results);
    if (rc != 0) {
      Fail(ErrorKind::kTransport,
           "cannot resolve '" + host + "': " + ::gai_strerror(rc));
    }
    std::string last_error = "no addresses";
    for (addrinfo* ai = results; ai != nullptr; ai = ai->ai_next) {
      const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (fd < 0) {
        last_error = std::strerror(errno);
        continue;
      }
      const int one = 1;
      ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
      if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 &&
          ::listen(fd, 64) == 0) {
        fd_ = fd;
        break;
      }
      last_error = std::strerror(errno);
      ::close(fd);
    }
    ::freeaddrinfo(results);
    if (fd_ < 0) {
      Fail(ErrorKind::kTransport,
           "cannot listen on " + host + ":" + port_text + ": " + last_error);
    }
    sockaddr_storage addr{};
    socklen_t addr_len = sizeof(addr);
    if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &addr_len) !=
        0) {
      const std::string reason = std::strerror(errno);
      ::close(fd_);
      fd_ = -1;
      Fail(ErrorKind::kTransport, "getsockname failed: " + reason);
    }
    if (addr.ss_family == AF_INET) {
      bound_port_ =
          ntohs(reinterpret_cast<const sockaddr_in*>(&addr)->sin_port);
    } else if (addr.ss_family == AF_INET6) {
      bound_port_ =
          ntohs(reinterpret_cast<const sockaddr_in6*>(&addr)->sin6_port);
    }
  }

  ~Listener() { Close(); }

  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;
  Listener(Listener&& other) noexcept
      : fd_(std::exchange(other.fd_, -1)),
        bound_port_(other.bound_port_) {}

  uint16_t bound_port() const { return bound_port_; }
  bool Valid() const { return fd_ >= 0; }

  void Close() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

  // Waits up to timeout_ms for a connection; an invalid socket means the
  // poll expired with nothing pending.
  Socket AcceptWithTimeout(int timeout_ms) const {
    pollfd pfd{fd_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, timeout_ms);
    if (rc < 0) {
      if (errno == EINTR) return Socket{};
      Fail(ErrorKind::kTransport,
           std::string("poll failed: ") + std::strerror(errno));
    }
    if (rc == 0) return Socket{};
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR || errno == ECONNABORTED) return Socket{};
      Fail(ErrorKind::kTransport,
           std::string("accept failed: ") + std::strerror(errno));
    }
    return Socket{fd};
  }

 private:
  int fd_ = -1;
  uint16_t bound_port_ = 0;
};

inline Socket Connect(const std::string& host, uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* results = nullptr;
  const std::string port_text = std::to_string(port);
  const int rc = ::getaddrinfo(host.c_str(), port_text.c_str(), &hints,
                               &results);
  if (rc != 0) {
    Fail(ErrorKind::kTransport,
         "cannot resolve '" + host + "': " + ::gai_strerror(rc));
  }
  std::string last_error = "no addresses";
  int fd = -1;
  for (addrinfo* ai = results; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) {
      last_error = std::strerror(errno);
      continue;
    }
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    last_error = std::strerror(errno);
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(results);
  if (fd < 0) {
    Fail(ErrorKind::kTransport,
         "cannot connect to " + host + ":" + port_text + ": " + last_error);
  }
  return Socket{fd};
}

}  // namespace lexveil::net

#endif  // LEXVEIL_NET_HPP_
