#include "connguard/line_source.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <stdexcept>
#include <system_error>

namespace connguard {

namespace {

constexpr int kPollTimeoutMs = 200;

[[noreturn]] void throw_errno(const std::string& what) {
  throw std::system_error(errno, std::generic_category(), what);
}

}  // namespace

std::optional<std::string> StreamLineSource::next_line() {
  std::string line;
  if (!std::getline(in_, line)) return std::nullopt;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

TcpLineSource::TcpLineSource(const std::string& address,
                             std::uint64_t max_connections,
                             const std::atomic<bool>* stop)
    : max_connections_(max_connections), stop_(stop) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) {
    throw std::invalid_argument("listen address must be HOST:PORT or :PORT");
  }
  std::string host = address.substr(0, colon);
  const std::string port = address.substr(colon + 1);
  if (host.empty()) host = "0.0.0.0";

  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  if (int rc = getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw std::invalid_argument("cannot resolve listen address '" + address +
                                "': " + gai_strerror(rc));
  }

  listen_fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (listen_fd_ < 0) {
    freeaddrinfo(res);
    throw_errno("socket");
  }
  int yes = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  if (::bind(listen_fd_, res->ai_addr, res->ai_addrlen) != 0 ||
      ::listen(listen_fd_, 1) != 0) {
    const int saved = errno;
    freeaddrinfo(res);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw std::system_error(saved, std::generic_category(),
                            "bind/listen on '" + address + "'");
  }
  freeaddrinfo(res);

  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  if (::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len) == 0) {
    port_ = ntohs(bound.sin_port);
  }
}

TcpLineSource::~TcpLineSource() {
  close_client();
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

bool TcpLineSource::stopping() const {
  return stop_ != nullptr && stop_->load(std::memory_order_relaxed);
}

void TcpLineSource::close_client() {
  if (client_fd_ >= 0) {
    ::close(client_fd_);
    client_fd_ = -1;
  }
}

bool TcpLineSource::accept_client() {
  while (!stopping()) {
    if (max_connections_ != 0 && served_ >= max_connections_) return false;
    pollfd pfd{listen_fd_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, kPollTimeoutMs);
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw_errno("poll");
    }
    if (rc == 0) continue;
    client_fd_ = ::accept(listen_fd_, nullptr, nullptr);
    if (client_fd_ < 0) {
      if (errno == EINTR || errno == ECONNABORTED) continue;
      throw_errno("accept");
    }
    ++served_;
    return true;
  }
  return false;
}

// Reads more bytes from the current client. False on disconnect or stop.
bool TcpLineSource::fill_buffer() {
  char chunk[4096];
  while (!stopping()) {
    pollfd pfd{client_fd_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, kPollTimeoutMs);
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw_errno("poll");
    }
    if (rc == 0) continue;
    const ssize_t got = ::read(client_fd_, chunk, sizeof(chunk));
    if (got < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    if (got == 0) return false;
    buffer_.append(chunk, static_cast<std::size_t>(got));
    return true;
  }
  return false;
}

std::optional<std::string> TcpLineSource::next_line() {
  for (;;) {
    if (client_fd_ >= 0) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      if (fill_buffer()) continue;
      close_client();
      if (!buffer_.empty()) {
        // Final line without a trailing newline.
        std::string line = std::move(buffer_);
        buffer_.clear();
        return line;
      }
      if (stopping()) return std::nullopt;
    }
    if (!accept_client()) return std::nullopt;
  }
}

}  // namespace connguard
