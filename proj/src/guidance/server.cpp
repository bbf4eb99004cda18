#include "touchrecon/guidance/server.hpp"
#include "touchrecon/guidance/transport.hpp"
#include "touchrecon/common/log.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>

namespace touchrecon {

void serve_stream(int read_fd, int write_fd, GuidanceBackend& backend, std::mutex& mutex, const ServerOptions& options) {
  auto t = fd_transport(read_fd, write_fd, false, "client");
  FrameDecoder decoder;
  std::array<std::byte, 1 << 16> buf;
  auto send_error = [&](std::uint64_t id, std::uint32_t code, const std::string& msg) {
    write_message(*t, ErrorMessage{id, code, msg}, options.version);
  };
  try {
    for (;;) {
      std::optional<Frame> f;
      try {
        f = decoder.next();
      } catch (const ProtocolError& e) {
        send_error(0, kErrorProtocol, e.what());
        return;
      }
      if (!f) {
        const std::size_t n = t->read_some(buf, Millis(24 * 3600 * 1000));
        if (n == 0) return;
        decoder.feed(std::span<const std::byte>(buf.data(), n));
        continue;
      }
      if (f->version != options.version) {
        send_error(0, kErrorProtocol,
                   "client protocol version " + std::to_string(f->version) + " does not match server version " +
                       std::to_string(options.version));
        continue;
      }
      Message m;
      try {
        m = decode_payload(f->type, f->payload);
      } catch (const ProtocolError& e) {
        send_error(0, kErrorProtocol, e.what());
        return;
      }
      if (std::holds_alternative<HelloMessage>(m)) {
        write_message(*t, HelloMessage{options.agent}, options.version);
      } else if (const auto* q = std::get_if<GuidanceRequest>(&m)) {
        try {
          GuidanceGradient g;
          {
            std::lock_guard lock(mutex);
            g = backend.request_gradient(*q);
          }
          write_message(*t, g, options.version);
        } catch (const ConnectionError&) {
          throw;
        } catch (const std::exception& e) {
          send_error(q->request_id, kErrorBackend, e.what());
        }
      } else {
        send_error(0, kErrorProtocol, "unexpected message type");
      }
    }
  } catch (const ConnectionError& e) {
    log().debug("guidance connection ended: {}", e.what());
  }
}

GuidanceServer::GuidanceServer(std::shared_ptr<GuidanceBackend> backend, ServerOptions options)
    : backend_(std::move(backend)), options_(std::move(options)) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (listen_fd_ < 0) throw ConnectionError(std::string("socket failed: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(options_.port));
  if (::inet_pton(AF_INET, options_.host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw InputError("server host must be an IPv4 address: " + options_.host);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 16) != 0) {
    const std::string err = std::strerror(errno);
    ::close(listen_fd_);
    throw ConnectionError("cannot listen on " + options_.host + ":" + std::to_string(options_.port) + ": " + err);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  if (::pipe2(wake_, O_CLOEXEC) != 0) {
    ::close(listen_fd_);
    throw ConnectionError("pipe failed");
  }
  acceptor_ = std::thread([this] { accept_loop(); });
}

GuidanceServer::~GuidanceServer() {
  stop();
  ::close(wake_[0]);
  ::close(wake_[1]);
}

void GuidanceServer::accept_loop() {
  for (;;) {
    pollfd p[2] = {{listen_fd_, POLLIN, 0}, {wake_[0], POLLIN, 0}};
    if (::poll(p, 2, -1) < 0) {
      if (errno == EINTR) continue;
      return;
    }
    if (p[1].revents || stopping_) return;
    const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    std::lock_guard lock(conn_mutex_);
    connection_fds_.push_back(fd);
    connections_.emplace_back([this, fd] { serve_stream(fd, fd, *backend_, backend_mutex_, options_); });
  }
}

void GuidanceServer::stop() {
  if (stopping_.exchange(true)) {
    if (acceptor_.joinable()) acceptor_.join();
    return;
  }
  const char c = 0;
  [[maybe_unused]] auto n = ::write(wake_[1], &c, 1);
  if (acceptor_.joinable()) acceptor_.join();
  ::close(listen_fd_);
  std::lock_guard lock(conn_mutex_);
  for (int fd : connection_fds_) ::shutdown(fd, SHUT_RDWR);
  for (auto& t : connections_) t.join();
  for (int fd : connection_fds_) ::close(fd);
  connections_.clear();
  connection_fds_.clear();
}

void GuidanceServer::wait() {
  if (acceptor_.joinable()) acceptor_.join();
}

}  // namespace touchrecon
