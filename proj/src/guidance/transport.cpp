#include "touchrecon/guidance/transport.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>

namespace touchrecon {

namespace {

std::string errno_text() { return std::strerror(errno); }

bool wait_fd(int fd, short events, Millis timeout) {
  pollfd p{fd, events, 0};
  for (;;) {
    const int r = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (r > 0) return true;
    if (r == 0) return false;
    if (errno != EINTR) throw ConnectionError("poll failed: " + errno_text());
  }
}

class FdTransport : public Transport {
 public:
  FdTransport(int rfd, int wfd, bool owns, bool socket, pid_t child, std::string name)
      : rfd_(rfd), wfd_(wfd), owns_(owns), socket_(socket), child_(child), name_(std::move(name)) {}

  ~FdTransport() override {
    if (owns_) {
      ::close(rfd_);
      if (wfd_ != rfd_) ::close(wfd_);
    }
    if (child_ > 0) {
      int status = 0;
      ::waitpid(child_, &status, 0);
    }
  }

  void write_all(std::span<const std::byte> bytes) override {
    std::size_t done = 0;
    while (done < bytes.size()) {
      const ssize_t n = socket_ ? ::send(wfd_, bytes.data() + done, bytes.size() - done, MSG_NOSIGNAL)
                                : ::write(wfd_, bytes.data() + done, bytes.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw ConnectionError("write to " + name_ + " failed: " + errno_text());
      }
      done += static_cast<std::size_t>(n);
    }
  }

  std::size_t read_some(std::span<std::byte> buf, Millis timeout) override {
    if (!wait_fd(rfd_, POLLIN, timeout))
      throw ConnectionError("timed out after " + std::to_string(timeout.count()) + " ms waiting for " + name_);
    for (;;) {
      const ssize_t n = ::read(rfd_, buf.data(), buf.size());
      if (n >= 0) return static_cast<std::size_t>(n);
      if (errno == EINTR) continue;
      if (errno == ECONNRESET) return 0;
      throw ConnectionError("read from " + name_ + " failed: " + errno_text());
    }
  }

  std::string describe() const override { return name_; }

 private:
  int rfd_, wfd_;
  bool owns_, socket_;
  pid_t child_;
  std::string name_;
};

}  // namespace

Endpoint Endpoint::parse(const std::string& text) {
  Endpoint e;
  if (text.rfind("stdio:", 0) == 0) {
    e.kind = Kind::Stdio;
    e.command = text.substr(6);
    if (e.command.empty()) throw InputError("stdio endpoint needs a command");
    return e;
  }
  std::string rest = text.rfind("tcp://", 0) == 0 ? text.substr(6) : text;
  const auto colon = rest.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == rest.size())
    throw InputError("endpoint '" + text + "' is not host:port or stdio:<command>");
  e.host = rest.substr(0, colon);
  try {
    std::size_t used = 0;
    e.port = std::stoi(rest.substr(colon + 1), &used);
    if (used != rest.size() - colon - 1) throw std::invalid_argument("port");
  } catch (const std::exception&) {
    throw InputError("endpoint '" + text + "' has an invalid port");
  }
  if (e.port < 1 || e.port > 65535) throw InputError("endpoint port out of range: " + text);
  return e;
}

std::string Endpoint::to_string() const {
  return kind == Kind::Stdio ? "stdio:" + command : host + ":" + std::to_string(port);
}

std::string resolve_endpoint(const std::string& explicit_value) {
  if (!explicit_value.empty()) return explicit_value;
  const char* env = std::getenv(kEndpointEnvVar);
  return env ? std::string(env) : std::string();
}

std::unique_ptr<Transport> connect_tcp(const std::string& host, int port, Millis timeout) {
  const std::string name = host + ":" + std::to_string(port);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res); rc != 0)
    throw ConnectionError("cannot resolve " + name + ": " + ::gai_strerror(rc));
  std::string last = "no addresses";
  for (addrinfo* a = res; a; a = a->ai_next) {
    const int fd = ::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol);
    if (fd < 0) {
      last = errno_text();
      continue;
    }
    const int flags = ::fcntl(fd, F_GETFL);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd, a->ai_addr, a->ai_addrlen);
    if (rc < 0 && errno == EINPROGRESS) {
      if (!wait_fd(fd, POLLOUT, timeout)) {
        ::close(fd);
        ::freeaddrinfo(res);
        throw ConnectionError("connecting to " + name + " timed out after " + std::to_string(timeout.count()) + " ms");
      }
      int err = 0;
      socklen_t len = sizeof err;
      ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
      rc = err == 0 ? 0 : -1;
      errno = err;
    }
    if (rc == 0) {
      ::fcntl(fd, F_SETFL, flags);
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      ::freeaddrinfo(res);
      return std::make_unique<FdTransport>(fd, fd, true, true, -1, name);
    }
    last = errno_text();
    ::close(fd);
  }
  ::freeaddrinfo(res);
  throw ConnectionError("cannot connect to " + name + ": " + last);
}

std::unique_ptr<Transport> spawn_stdio(const std::string& command) {
  int to_child[2], from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) throw ConnectionError("pipe failed: " + errno_text());
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw ConnectionError("pipe failed: " + errno_text());
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw ConnectionError("fork failed: " + errno_text());
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  // A backend that exits early must surface as a write error, not a signal.
  std::signal(SIGPIPE, SIG_IGN);
  return std::make_unique<FdTransport>(from_child[0], to_child[1], true, false, pid, "stdio:" + command);
}

std::unique_ptr<Transport> open_transport(const Endpoint& endpoint, Millis connect_timeout) {
  if (endpoint.kind == Endpoint::Kind::Stdio) return spawn_stdio(endpoint.command);
  return connect_tcp(endpoint.host, endpoint.port, connect_timeout);
}

std::unique_ptr<Transport> fd_transport(int read_fd, int write_fd, bool owns, std::string name) {
  int type = 0;
  socklen_t len = sizeof type;
  const bool socket = ::getsockopt(write_fd, SOL_SOCKET, SO_TYPE, &type, &len) == 0;
  return std::make_unique<FdTransport>(read_fd, write_fd, owns, socket, -1, std::move(name));
}

void write_message(Transport& t, const Message& m, std::uint32_t version) {
  const auto bytes = encode_frame(m, version);
  t.write_all(bytes);
}

Frame read_frame(Transport& t, FrameDecoder& decoder, Millis timeout) {
  std::array<std::byte, 1 << 16> buf;
  for (;;) {
    if (auto f = decoder.next()) return std::move(*f);
    const std::size_t n = t.read_some(buf, timeout);
    if (n == 0) throw ConnectionError(t.describe() + " closed the connection");
    decoder.feed(std::span<const std::byte>(buf.data(), n));
  }
}

}  // namespace touchrecon
