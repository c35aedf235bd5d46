// Copyright 2026 The raftdev Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RAFTDEV_NET_HPP_
#define RAFTDEV_NET_HPP_

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace raftdev {
namespace net {

/// Owning file descriptor.
class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
  Fd& operator=(Fd&& other) noexcept {
    if (this != &other) {
      reset();
      fd_ = other.fd_;
      other.fd_ = -1;
    }
    return *this;
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }

  int get() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release() {
    int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

  /// Unblocks any thread sitting in read/accept on this socket.
  void shutdown_both() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
  }

 private:
  int fd_ = -1;
};

inline std::pair<std::string, std::uint16_t> split_address(
    const std::string& address) {
  auto colon = address.rfind(':');
  if (colon == std::string::npos)
    throw std::invalid_argument("address must be host:port, got " + address);
  int port = std::stoi(address.substr(colon + 1));
  if (port < 0 || port > 65535)
    throw std::invalid_argument("bad port in " + address);
  return {address.substr(0, colon), static_cast<std::uint16_t>(port)};
}

inline sockaddr_in make_sockaddr(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (host.empty() || host == "*") {
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
  } else if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw std::invalid_argument("not an IPv4 address: " + host);
  }
  return addr;
}

inline std::string to_string(const sockaddr_in& addr) {
  char buf[INET_ADDRSTRLEN] = {};
  ::inet_ntop(AF_INET, &addr.sin_addr, buf, sizeof(buf));
  return std::string(buf) + ":" + std::to_string(ntohs(addr.sin_port));
}

inline std::string local_address(int fd) {
  sockaddr_in addr{};
  socklen_t len = sizeof(addr);
  if (::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0)
    throw std::runtime_error("getsockname failed");
  return to_string(addr);
}

inline void set_nonblocking(int fd, bool on) {
  int flags = ::fcntl(fd, F_GETFL, 0);
  if (on)
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
  else
    ::fcntl(fd, F_SETFL, flags & ~O_NONBLOCK);
}

/// Listening TCP socket bound to `address` ("host:port", port 0 for any).
inline Fd tcp_listen(const std::string& address, int backlog = 64) {
  auto [host, port] = split_address(address);
  Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
  if (!fd.valid()) throw std::runtime_error("socket() failed");
  int one = 1;
  ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = make_sockaddr(host, port);
  if (::bind(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
    throw std::runtime_error("bind(" + address + "): " + std::strerror(errno));
  if (::listen(fd.get(), backlog) != 0)
    throw std::runtime_error("listen failed: " + std::string(std::strerror(errno)));
  return fd;
}

/// Blocking connect with a deadline. Returns an invalid Fd on failure and
/// reports the reason ("refused", "timeout", ...) through `error`.
inline Fd tcp_connect(const std::string& address, int timeout_ms,
                      std::string* error = nullptr) {
  auto fail = [&](const std::string& why) {
    if (error) *error = why;
    return Fd();
  };
  auto [host, port] = split_address(address);
  Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
  if (!fd.valid()) return fail("socket() failed");
  set_nonblocking(fd.get(), true);
  sockaddr_in addr = make_sockaddr(host, port);
  int rc = ::connect(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  if (rc != 0 && errno != EINPROGRESS) return fail(std::strerror(errno));
  if (rc != 0) {
    pollfd pfd{fd.get(), POLLOUT, 0};
    int pr = ::poll(&pfd, 1, timeout_ms);
    if (pr == 0) return fail("timeout");
    if (pr < 0) return fail(std::strerror(errno));
    int soerr = 0;
    socklen_t len = sizeof(soerr);
    ::getsockopt(fd.get(), SOL_SOCKET, SO_ERROR, &soerr, &len);
    if (soerr != 0) return fail(std::strerror(soerr));
  }
  set_nonblocking(fd.get(), false);
  int one = 1;
  ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return fd;
}

/// Writes the whole buffer; false on any error (connection treated as dead).
inline bool write_all(int fd, const char* data, size_t len) {
  size_t off = 0;
  while (off < len) {
    ssize_t n = ::send(fd, data + off, len - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    if (n == 0) return false;
    off += static_cast<size_t>(n);
  }
  return true;
}

/// Buffered newline-framed reader over a blocking socket.
class LineReader {
 public:
  explicit LineReader(int fd) : fd_(fd) {}

  /// Next complete line (without the terminator), or nullopt on EOF/error.
  std::optional<std::string> next() {
    while (true) {
      auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      char chunk[16384];
      ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return std::nullopt;
      buffer_.append(chunk, static_cast<size_t>(n));
    }
  }

 private:
  int fd_;
  std::string buffer_;
};

// ---- UDP multicast ---------------------------------------------------------

/// Receiver socket: binds the shared discovery port and joins the group.
inline Fd mcast_join(const std::string& group, std::uint16_t port,
                     std::string* error = nullptr) {
  auto fail = [&](const std::string& why) {
    if (error) *error = why;
    return Fd();
  };
  Fd fd(::socket(AF_INET, SOCK_DGRAM, 0));
  if (!fd.valid()) return fail("socket() failed");
  int one = 1;
  ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
#ifdef SO_REUSEPORT
  ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEPORT, &one, sizeof(one));
#endif
  sockaddr_in addr = make_sockaddr("", port);
  if (::bind(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
    return fail(std::string("bind: ") + std::strerror(errno));
  ip_mreq mreq{};
  if (::inet_pton(AF_INET, group.c_str(), &mreq.imr_multiaddr) != 1)
    return fail("bad group address: " + group);
  mreq.imr_interface.s_addr = htonl(INADDR_ANY);
  if (::setsockopt(fd.get(), IPPROTO_IP, IP_ADD_MEMBERSHIP, &mreq,
                   sizeof(mreq)) != 0)
    return fail(std::string("IP_ADD_MEMBERSHIP: ") + std::strerror(errno));
  return fd;
}

/// Sender socket with loopback enabled and TTL 1 (link-local discovery).
inline Fd mcast_sender() {
  Fd fd(::socket(AF_INET, SOCK_DGRAM, 0));
  if (!fd.valid()) throw std::runtime_error("socket() failed");
  unsigned char ttl = 1, loop = 1;
  ::setsockopt(fd.get(), IPPROTO_IP, IP_MULTICAST_TTL, &ttl, sizeof(ttl));
  ::setsockopt(fd.get(), IPPROTO_IP, IP_MULTICAST_LOOP, &loop, sizeof(loop));
  return fd;
}

inline bool udp_send_to(int fd, const std::string& host, std::uint16_t port,
                        const std::string& payload) {
  sockaddr_in addr = make_sockaddr(host, port);
  ssize_t n = ::sendto(fd, payload.data(), payload.size(), MSG_NOSIGNAL,
                       reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  return n == static_cast<ssize_t>(payload.size());
}

/// One datagram with the sender's address, or nullopt after timeout_ms.
inline std::optional<std::pair<std::string, sockaddr_in>> udp_recv(
    int fd, int timeout_ms) {
  pollfd pfd{fd, POLLIN, 0};
  int pr = ::poll(&pfd, 1, timeout_ms);
  if (pr <= 0) return std::nullopt;
  char buf[65536];
  sockaddr_in from{};
  socklen_t from_len = sizeof(from);
  ssize_t n = ::recvfrom(fd, buf, sizeof(buf), 0,
                         reinterpret_cast<sockaddr*>(&from), &from_len);
  if (n < 0) return std::nullopt;
  return std::make_pair(std::string(buf, static_cast<size_t>(n)), from);
}

}  // namespace net
}  // namespace raftdev

#endif  // RAFTDEV_NET_HPP_
