// line_source.hpp
//
// Newline-delimited input for the run loop: an istream or a TCP listener.
#pragma once

#include <atomic>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>

namespace connguard {

class LineSource {
 public:
  virtual ~LineSource() = default;
  // Next line without its terminator; nullopt at end of input.
  virtual std::optional<std::string> next_line() = 0;
};

class StreamLineSource final : public LineSource {
 public:
  explicit StreamLineSource(std::istream& in) : in_(in) {}
  std::optional<std::string> next_line() override;

 private:
  std::istream& in_;
};

// Accepts one client at a time on a TCP listener and yields its lines. When a
// client disconnects the next one is accepted, until `max_connections`
// clients were served (0 = no limit) or `stop` becomes true.
class TcpLineSource final : public LineSource {
 public:
  // `address` is "host:port" or ":port"; port 0 picks an ephemeral port.
  // Throws std::system_error if the listener cannot be set up.
  TcpLineSource(const std::string& address, std::uint64_t max_connections,
                const std::atomic<bool>* stop = nullptr);
  ~TcpLineSource() override;

  TcpLineSource(const TcpLineSource&) = delete;
  TcpLineSource& operator=(const TcpLineSource&) = delete;

  std::uint16_t port() const { return port_; }
  std::optional<std::string> next_line() override;

 private:
  bool stopping() const;
  bool accept_client();
  bool fill_buffer();
  void close_client();

  int listen_fd_ = -1;
  int client_fd_ = -1;
  std::uint16_t port_ = 0;
  std::uint64_t max_connections_ = 0;
  std::uint64_t served_ = 0;
  const std::atomic<bool>* stop_ = nullptr;
  std::string buffer_;
};

}  // namespace connguard
