#include "touchrecon/guidance/client.hpp"

namespace touchrecon {

namespace {

std::string version_mismatch(std::uint32_t theirs) {
  return "server speaks protocol version " + std::to_string(theirs) + ", client speaks version " +
         std::to_string(kProtocolVersion);
}

}  // namespace

RemoteBackend::RemoteBackend(std::unique_ptr<Transport> transport, const ClientOptions& options)
    : transport_(std::move(transport)), options_(options) {
  write_message(*transport_, HelloMessage{options_.agent});
  const Frame f = read_frame(*transport_, decoder_, options_.connect_timeout);
  if (f.version != kProtocolVersion) throw ProtocolError(version_mismatch(f.version));
  const Message m = decode_payload(f.type, f.payload);
  if (const auto* e = std::get_if<ErrorMessage>(&m)) throw RemoteError(e->code, e->message);
  const auto* hello = std::get_if<HelloMessage>(&m);
  if (!hello) throw ProtocolError("expected a hello reply");
  server_agent_ = hello->agent;
}

GuidanceGradient RemoteBackend::request_gradient(const GuidanceRequest& request) {
  if (broken_) throw ProtocolError("connection to " + transport_->describe() + " is unusable after an earlier failure");
  request.validate();
  try {
    write_message(*transport_, request);
    const Frame f = read_frame(*transport_, decoder_, options_.request_timeout);
    if (f.version != kProtocolVersion) throw ProtocolError(version_mismatch(f.version));
    Message m = decode_payload(f.type, f.payload);
    if (const auto* e = std::get_if<ErrorMessage>(&m)) {
      if (e->request_id != request.request_id) throw ProtocolError("error reply carries a foreign request id");
      throw RemoteError(e->code, e->message);
    }
    auto* g = std::get_if<GuidanceGradient>(&m);
    if (!g) throw ProtocolError("expected a gradient reply");
    if (g->request_id != request.request_id)
      throw ProtocolError("reply id " + std::to_string(g->request_id) + " does not echo request id " +
                          std::to_string(request.request_id));
    if (g->batch != request.batch || g->height != request.height || g->width != request.width)
      throw ProtocolError("gradient shape does not match the request");
    g->validate();
    return std::move(*g);
  } catch (const RemoteError&) {
    throw;
  } catch (const GuidanceError&) {
    // The stream position is unknown after a failed exchange.
    broken_ = true;
    throw;
  }
}

std::unique_ptr<RemoteBackend> connect_backend(const std::string& endpoint, const ClientOptions& options) {
  return std::make_unique<RemoteBackend>(open_transport(Endpoint::parse(endpoint), options.connect_timeout), options);
}

std::shared_ptr<GuidanceBackend> make_backend(const std::string& spec, const TriangleMesh* target,
                                              double template_lambda, const ClientOptions& options) {
  if (spec == "zero" || spec == "zero-mock") return std::make_shared<ZeroMock>();
  if (spec == "template" || spec == "template-mock") {
    if (!target) throw InputError("the template mock needs a target mesh");
    return std::make_shared<TemplateMock>(*target, template_lambda);
  }
  return std::shared_ptr<GuidanceBackend>(connect_backend(spec, options));
}

}  // namespace touchrecon
