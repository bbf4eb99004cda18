#pragma once

#include "touchrecon/guidance/protocol.hpp"

#include <chrono>
#include <memory>
#include <string>

namespace touchrecon {

using Millis = std::chrono::milliseconds;

/// Byte stream to a guidance backend.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void write_all(std::span<const std::byte> bytes) = 0;
  /// Blocks up to `timeout` for data; returns 0 at end of stream and throws
  /// ConnectionError on timeout.
  virtual std::size_t read_some(std::span<std::byte> buf, Millis timeout) = 0;
  virtual std::string describe() const = 0;
};

/// "host:port", "tcp://host:port" or "stdio:<shell command>".
struct Endpoint {
  enum class Kind { Tcp, Stdio } kind = Kind::Tcp;
  std::string host;
  int port = 0;
  std::string command;

  static Endpoint parse(const std::string& text);
  std::string to_string() const;
};

inline constexpr const char* kEndpointEnvVar = "TOUCHRECON_GUIDANCE_ENDPOINT";

/// The explicit value when non-empty, else the environment variable, else "".
std::string resolve_endpoint(const std::string& explicit_value);

std::unique_ptr<Transport> connect_tcp(const std::string& host, int port, Millis timeout);
/// Runs `command` under /bin/sh with its stdin/stdout connected to the transport.
std::unique_ptr<Transport> spawn_stdio(const std::string& command);
std::unique_ptr<Transport> open_transport(const Endpoint& endpoint, Millis connect_timeout);

/// Transport over a pair of already open descriptors (taken over when `owns`).
std::unique_ptr<Transport> fd_transport(int read_fd, int write_fd, bool owns, std::string name);

void write_message(Transport& t, const Message& m, std::uint32_t version = kProtocolVersion);
/// Reads until `decoder` yields a frame. Throws ConnectionError if the stream
/// ends first.
Frame read_frame(Transport& t, FrameDecoder& decoder, Millis timeout);

}  // namespace touchrecon
