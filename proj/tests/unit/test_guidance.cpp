#include "support/protocol_vectors.hpp"

#include "touchrecon/common/rng.hpp"
#include "touchrecon/geometry/primitives.hpp"
#include "touchrecon/guidance/client.hpp"
#include "touchrecon/guidance/server.hpp"
#include "touchrecon/render/mesh_render.hpp"

#include <doctest.h>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

using namespace touchrecon;
using nlohmann::json;
using test::message_from_json;
using test::vector_path;


namespace {

GuidanceRequest random_request(Rng& rng) {
  GuidanceRequest q;
  q.request_id = rng.next_u64();
  const int len = static_cast<int>(rng.index(20));
  for (int i = 0; i < len; ++i) q.prompt.push_back(static_cast<char>('a' + rng.index(26)));
  q.batch = 1 + static_cast<std::uint32_t>(rng.index(3));
  q.height = 1 + static_cast<std::uint32_t>(rng.index(5));
  q.width = 1 + static_cast<std::uint32_t>(rng.index(5));
  q.t_min = static_cast<std::uint32_t>(rng.index(500));
  q.t_max = q.t_min + static_cast<std::uint32_t>(rng.index(500));
  q.seed = rng.next_u64();
  q.guidance_scale = static_cast<float>(rng.uniform(0, 200));
  for (std::size_t i = 0; i < q.image_floats(); ++i) q.images.push_back(static_cast<float>(rng.uniform(-1, 1)));
  if (rng.uniform() < 0.5) {
    for (std::uint32_t b = 0; b < q.batch; ++b) {
      CameraExtension c;
      c.rotation = Eigen::Quaterniond(rng.normal(), rng.normal(), rng.normal(), rng.normal()).normalized().toRotationMatrix();
      c.translation = rng.unit_vector() * 2.2;
      c.fov_y_deg = rng.uniform(20, 90);
      q.cameras.push_back(c);
    }
  }
  if (rng.uniform() < 0.3) q.unknown_extensions.emplace_back(1000 + rng.index(10), std::vector<std::byte>(rng.index(7), std::byte{0x5a}));
  return q;
}

Message random_message(Rng& rng) {
  switch (rng.index(4)) {
    case 0:
      return random_request(rng);
    case 1: {
      GuidanceGradient g;
      g.request_id = rng.next_u64();
      g.status = static_cast<std::uint32_t>(rng.index(3));
      g.batch = 1 + static_cast<std::uint32_t>(rng.index(2));
      g.height = 1 + static_cast<std::uint32_t>(rng.index(4));
      g.width = 1 + static_cast<std::uint32_t>(rng.index(4));
      for (std::size_t i = 0; i < g.image_floats(); ++i) g.gradients.push_back(static_cast<float>(rng.normal()));
      return g;
    }
    case 2:
      return ErrorMessage{rng.next_u64(), static_cast<std::uint32_t>(rng.index(5)), std::string(rng.index(30), 'e')};
    default:
      return HelloMessage{std::string(rng.index(12), 'h')};
  }
}

GuidanceRequest camera_request(const ViewCamera& cam, const Grid2<Vec3>& image, std::uint64_t id) {
  GuidanceRequest q;
  q.request_id = id;
  q.prompt = "a sphere";
  q.height = cam.height;
  q.width = cam.width;
  q.seed = 3;
  append_image(q.images, image);
  q.cameras.push_back(CameraExtension::from(cam));
  return q;
}

double l2_sq(std::span<const float> a, const Grid2<Vec3>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i)
    for (int k = 0; k < 3; ++k) s += (a[3 * i + k] - b[i][k]) * (a[3 * i + k] - b[i][k]);
  return s;
}

class WrongIdBackend : public GuidanceBackend {
 public:
  GuidanceGradient request_gradient(const GuidanceRequest& q) override {
    auto g = empty_response(q);
    g.request_id += 1;
    return g;
  }
  std::string name() const override { return "wrong-id"; }
};

class ThrowingBackend : public GuidanceBackend {
 public:
  GuidanceGradient request_gradient(const GuidanceRequest& q) override {
    if (q.seed == 13) throw Error("model exploded");
    return empty_response(q);
  }
  std::string name() const override { return "throwing"; }
};

class SlowBackend : public GuidanceBackend {
 public:
  GuidanceGradient request_gradient(const GuidanceRequest& q) override {
    std::this_thread::sleep_for(std::chrono::milliseconds(400));
    return empty_response(q);
  }
  std::string name() const override { return "slow"; }
};

}  // namespace

TEST_CASE("on-disk vectors encode and decode exactly") {
  const json m = test::vector_manifest();
  REQUIRE(m.at("valid").size() >= 6);
  for (const auto& v : m.at("valid")) {
    CAPTURE(v.at("file").get<std::string>());
    const auto bytes = read_file_bytes(vector_path(v.at("file")));
    const Message expected = message_from_json(v.at("type"), v.at("fields"));
    const std::uint32_t version = v.at("version");
    CHECK(encode_frame(expected, version) == bytes);
    if (version == kProtocolVersion) {
      CHECK(decode_message(bytes) == expected);
    } else {
      FrameDecoder d;
      d.feed(bytes);
      const auto f = d.next();
      REQUIRE(f);
      CHECK(f->version == version);
      CHECK(decode_payload(f->type, f->payload) == expected);
      CHECK_THROWS_AS(decode_message(bytes), ProtocolError);
    }
  }
}

TEST_CASE("invalid vectors are rejected") {
  const json m = test::vector_manifest();
  for (const auto& v : m.at("invalid")) {
    CAPTURE(v.at("file").get<std::string>());
    const auto bytes = read_file_bytes(vector_path(v.at("file")));
    CHECK_THROWS_AS(decode_message(bytes), ProtocolError);
  }
}

TEST_CASE("vectors split at every byte boundary decode identically") {
  const json m = test::vector_manifest();
  std::vector<std::byte> stream;
  std::vector<Message> expected;
  for (const auto& v : m.at("valid")) {
    if (v.at("version") != kProtocolVersion) continue;
    const auto bytes = read_file_bytes(vector_path(v.at("file")));
    const Message want = decode_message(bytes);
    for (std::size_t k = 0; k <= bytes.size(); ++k) {
      FrameDecoder d;
      d.feed(std::span(bytes).first(k));
      if (k < bytes.size()) {
        CHECK_FALSE(d.next());
        d.feed(std::span(bytes).subspan(k));
      }
      const auto f = d.next();
      REQUIRE(f);
      CHECK(decode_payload(f->type, f->payload) == want);
      CHECK(d.buffered() == 0);
    }
    stream.insert(stream.end(), bytes.begin(), bytes.end());
    expected.push_back(want);
  }
  // Whole stream in random pieces, including single bytes.
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    FrameDecoder d;
    std::vector<Message> got;
    std::size_t pos = 0;
    while (pos < stream.size()) {
      const std::size_t n = std::min(stream.size() - pos, 1 + rng.index(trial < 5 ? 2 : 64));
      d.feed(std::span(stream).subspan(pos, n));
      pos += n;
      while (auto f = d.next()) got.push_back(decode_payload(f->type, f->payload));
    }
    CHECK(got == expected);
  }
}

TEST_CASE("bad magic is detected before the header completes") {
  FrameDecoder d;
  const char junk[2] = {'T', 'X'};
  d.feed(std::as_bytes(std::span(junk)));
  CHECK_THROWS_AS(d.next(), ProtocolError);
}

TEST_CASE("randomized messages round-trip") {
  Rng rng(77);
  for (int i = 0; i < 500; ++i) {
    const Message m = random_message(rng);
    const auto bytes = encode_frame(m);
    CHECK(decode_message(bytes) == m);
  }
}

TEST_CASE("zero mock echoes shape with zero gradients") {
  Rng rng(5);
  ZeroMock mock;
  const GuidanceRequest q = random_request(rng);
  const auto g = mock.request_gradient(q);
  CHECK(g.request_id == q.request_id);
  CHECK(g.gradients.size() == q.images.size());
  for (float v : g.gradients) CHECK(v == 0.0f);
}

TEST_CASE("template mock returns lambda times the difference to the target render") {
  TriangleMesh target = make_ellipsoid(3, Vec3(0.6, 0.4, 0.5));
  TemplateMock mock(target, 0.5);
  TriangleMesh sphere = make_icosphere(3, 0.5);
  sphere.compute_normals();
  const ViewCamera cam = look_at(Vec3(1.5, -1.2, 1.0), Vec3::Zero(), 45.0, 32, 32);

  const MeshImage t = render_mesh_normals(mock.target(), cam);
  auto same = mock.request_gradient(camera_request(cam, t.image.normals, 1));
  for (float v : same.gradients) CHECK(std::abs(v) < 1e-6f);

  const MeshImage s = render_mesh_normals(sphere, cam);
  const auto q = camera_request(cam, s.image.normals, 2);
  const auto g = mock.request_gradient(q);
  double inner = 0.0;
  for (std::size_t i = 0; i < t.image.normals.size(); ++i)
    for (int k = 0; k < 3; ++k) {
      const double diff = q.images[3 * i + k] - t.image.normals[i][k];
      CHECK(g.gradients[3 * i + k] == doctest::Approx(0.5 * diff).epsilon(1e-6));
      inner += g.gradients[3 * i + k] * diff;
    }
  CHECK(inner > 0.0);

  // Gradient descent on the image alone.
  std::vector<float> img = q.images;
  const double start = l2_sq(img, t.image.normals);
  double prev = start;
  for (int it = 0; it < 30; ++it) {
    GuidanceRequest step = q;
    step.images = img;
    const auto gs = mock.request_gradient(step);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] -= 0.5f * gs.gradients[i];
    const double cur = l2_sq(img, t.image.normals);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK(prev < 1e-6 * start);

  GuidanceRequest no_cam = q;
  no_cam.cameras.clear();
  CHECK_THROWS_AS(mock.request_gradient(no_cam), GuidanceError);
}

TEST_CASE("loopback client gets the same gradients as the in-process mock") {
  auto mock = std::make_shared<TemplateMock>(make_icosphere(2, 0.5), 1.0);
  auto counted = std::make_shared<CountingBackend>(mock);
  GuidanceServer server(counted);
  auto client = connect_backend(server.endpoint());
  CHECK(client->server_agent() == "touchrecon-mock");
  const ViewCamera cam = look_at(Vec3(0, -2.2, 0), Vec3::Zero(), 45.0, 64, 64);
  Grid2<Vec3> img(64, 64, Vec3(0.1, 0.2, 0.3));
  const auto q = camera_request(cam, img, 99);
  const auto a = client->request_gradient(q);
  const auto b = client->request_gradient(q);
  CHECK(a == b);
  CHECK(a == mock->request_gradient(q));
  CHECK(counted->requests() == 2);
}

TEST_CASE("client error handling") {
  SUBCASE("version mismatch names both versions") {
    ServerOptions opts;
    opts.version = 2;
    GuidanceServer server(std::make_shared<ZeroMock>(), opts);
    try {
      connect_backend(server.endpoint());
      FAIL("expected a protocol error");
    } catch (const ProtocolError& e) {
      const std::string what = e.what();
      CHECK(what.find("version 2") != std::string::npos);
      CHECK(what.find("version 1") != std::string::npos);
    }
  }
  SUBCASE("closed port fails fast") {
    int port = 0;
    {
      GuidanceServer probe(std::make_shared<ZeroMock>());
      port = probe.port();
    }
    const auto t0 = std::chrono::steady_clock::now();
    CHECK_THROWS_AS(connect_backend("127.0.0.1:" + std::to_string(port)), ConnectionError);
    CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(5));
  }
  SUBCASE("foreign request id is fatal") {
    GuidanceServer server(std::make_shared<WrongIdBackend>());
    auto client = connect_backend(server.endpoint());
    Rng rng(2);
    const auto q = random_request(rng);
    CHECK_THROWS_AS(client->request_gradient(q), ProtocolError);
    CHECK_THROWS_AS(client->request_gradient(q), ProtocolError);
  }
  SUBCASE("backend errors arrive as remote errors and keep the connection") {
    GuidanceServer server(std::make_shared<ThrowingBackend>());
    auto client = connect_backend(server.endpoint());
    Rng rng(3);
    auto q = random_request(rng);
    q.seed = 13;
    try {
      client->request_gradient(q);
      FAIL("expected a remote error");
    } catch (const RemoteError& e) {
      CHECK(e.code() == kErrorBackend);
      CHECK(std::string(e.what()).find("model exploded") != std::string::npos);
    }
    q.seed = 14;
    CHECK(client->request_gradient(q).request_id == q.request_id);
  }
  SUBCASE("request timeout") {
    GuidanceServer server(std::make_shared<SlowBackend>());
    ClientOptions opts;
    opts.request_timeout = Millis(50);
    auto client = connect_backend(server.endpoint(), opts);
    Rng rng(4);
    CHECK_THROWS_AS(client->request_gradient(random_request(rng)), ConnectionError);
  }
}

TEST_CASE("stdio transport carries frames through a child process") {
  auto t = spawn_stdio("cat");
  FrameDecoder d;
  Rng rng(8);
  for (int i = 0; i < 5; ++i) {
    const Message m = random_message(rng);
    write_message(*t, m);
    const Frame f = read_frame(*t, d, Millis(5000));
    CHECK(decode_payload(f.type, f.payload) == m);
  }
}

TEST_CASE("endpoint parsing and override order") {
  const auto e = Endpoint::parse("localhost:5555");
  CHECK(e.kind == Endpoint::Kind::Tcp);
  CHECK(e.host == "localhost");
  CHECK(e.port == 5555);
  CHECK(Endpoint::parse("tcp://10.0.0.1:80").host == "10.0.0.1");
  const auto s = Endpoint::parse("stdio:python3 serve.py --mock");
  CHECK(s.kind == Endpoint::Kind::Stdio);
  CHECK(s.command == "python3 serve.py --mock");
  CHECK_THROWS_AS(Endpoint::parse("nohost"), InputError);
  CHECK_THROWS_AS(Endpoint::parse("h:99999"), InputError);
  CHECK_THROWS_AS(Endpoint::parse("h:12x"), InputError);

  ::setenv(kEndpointEnvVar, "envhost:1", 1);
  CHECK(resolve_endpoint("") == "envhost:1");
  CHECK(resolve_endpoint("flag:2") == "flag:2");
  ::unsetenv(kEndpointEnvVar);
  CHECK(resolve_endpoint("") == "");
}
