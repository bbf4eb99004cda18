#pragma once

#include "touchrecon/guidance/backend.hpp"

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace touchrecon {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 0;  // 0: ephemeral
  std::uint32_t version = kProtocolVersion;  // advertised in every reply header
  std::string agent = "touchrecon-mock";
};

// Error codes sent in type-3 messages.
inline constexpr std::uint32_t kErrorProtocol = 1;
inline constexpr std::uint32_t kErrorBackend = 2;

/// Answers hello and request messages on one stream until it ends. Backend
/// calls are serialized through `mutex`.
void serve_stream(int read_fd, int write_fd, GuidanceBackend& backend, std::mutex& mutex, const ServerOptions& options);

/// TCP server running on background threads, one per connection.
class GuidanceServer {
 public:
  GuidanceServer(std::shared_ptr<GuidanceBackend> backend, ServerOptions options = {});
  ~GuidanceServer();
  GuidanceServer(const GuidanceServer&) = delete;
  GuidanceServer& operator=(const GuidanceServer&) = delete;

  int port() const { return port_; }
  std::string endpoint() const { return options_.host + ":" + std::to_string(port_); }
  void stop();
  /// Blocks until stop() is called from another thread.
  void wait();

 private:
  void accept_loop();

  std::shared_ptr<GuidanceBackend> backend_;
  ServerOptions options_;
  int listen_fd_ = -1;
  int wake_[2] = {-1, -1};
  int port_ = 0;
  std::atomic<bool> stopping_{false};
  std::mutex backend_mutex_, conn_mutex_;
  std::vector<std::thread> connections_;
  std::vector<int> connection_fds_;
  std::thread acceptor_;
};

}  // namespace touchrecon
