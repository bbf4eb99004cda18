#pragma once

#include "touchrecon/guidance/backend.hpp"
#include "touchrecon/guidance/transport.hpp"

#include <memory>
#include <string>

namespace touchrecon {

struct ClientOptions {
  Millis connect_timeout{5000};
  Millis request_timeout{120000};
  std::string agent = "touchrecon";
};

/// Backend reached over the wire protocol. The constructor performs the hello
/// exchange; one request is in flight at a time.
class RemoteBackend : public GuidanceBackend {
 public:
  RemoteBackend(std::unique_ptr<Transport> transport, const ClientOptions& options = {});
  GuidanceGradient request_gradient(const GuidanceRequest& request) override;
  std::string name() const override { return "remote:" + transport_->describe(); }
  const std::string& server_agent() const { return server_agent_; }

 private:
  std::unique_ptr<Transport> transport_;
  ClientOptions options_;
  FrameDecoder decoder_;
  std::string server_agent_;
  bool broken_ = false;
};

std::unique_ptr<RemoteBackend> connect_backend(const std::string& endpoint, const ClientOptions& options = {});

/// "zero", "template" (needs a target mesh) or an endpoint for connect_backend.
std::shared_ptr<GuidanceBackend> make_backend(const std::string& spec, const TriangleMesh* target,
                                              double template_lambda, const ClientOptions& options = {});

}  // namespace touchrecon
