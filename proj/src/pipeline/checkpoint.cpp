#include "touchrecon/pipeline/checkpoint.hpp"

#include <filesystem>

namespace touchrecon {

namespace {

constexpr char kMagic[4] = {'T', 'R', 'C', 'K'};

void write_common(ByteWriter& w, int step, std::uint64_t next_id, std::uint64_t requests, std::uint64_t failures) {
  w.i64(step);
  w.u64(next_id);
  w.u64(requests);
  w.u64(failures);
}

}  // namespace

std::vector<std::byte> encode_checkpoint(const Checkpoint& c) {
  if (c.stage != 1 && c.stage != 2) throw InputError("checkpoint stage must be 1 or 2");
  ByteWriter p;
  p.u32(c.stage);
  p.string(c.config_text);
  if (c.stage == 1) {
    const auto& s = c.stage1;
    write_common(p, s.step, s.next_request_id, s.sds_requests, s.sds_failures);
    p.f64(s.tactile_average);
    s.field.write(p);
    s.adam.write(p);
  } else {
    const auto& s = c.stage2;
    write_common(p, s.step, s.next_request_id, s.sds_requests, s.sds_failures);
    p.u8(s.iso_fallback ? 1 : 0);
    s.tet.write(p);
    s.adam.write(p);
  }
  const auto payload = p.take();
  ByteWriter w;
  w.raw(std::string_view(kMagic, 4));
  w.u32(kCheckpointVersion);
  w.u64(payload.size());
  w.bytes(payload);
  w.u64(fnv1a64(payload));
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::byte> bytes) {
  ByteReader r(bytes);
  if (bytes.size() < 4 || r.raw(4) != std::string_view(kMagic, 4)) throw InputError("not a checkpoint (bad magic)");
  const auto version = r.u32();
  if (version != kCheckpointVersion)
    throw InputError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                     std::to_string(kCheckpointVersion) + ")");
  const auto size = r.u64();
  if (size > r.remaining()) throw InputError("checkpoint is truncated");
  const auto payload = r.bytes(size);
  if (r.u64() != fnv1a64(payload)) throw InputError("checkpoint checksum mismatch");
  if (!r.done()) throw InputError("checkpoint has trailing bytes");

  ByteReader p(payload);
  Checkpoint c;
  c.stage = p.u32();
  c.config_text = p.string();
  auto read_common = [&](auto& s) {
    const auto step = p.i64();
    if (step < 0 || step > (1 << 30)) throw InputError("checkpoint step out of range");
    s.step = static_cast<int>(step);
    s.next_request_id = p.u64();
    s.sds_requests = p.u64();
    s.sds_failures = p.u64();
  };
  if (c.stage == 1) {
    read_common(c.stage1);
    c.stage1.tactile_average = p.f64();
    c.stage1.field = GridSDF::read(p);
    c.stage1.adam = Adam::read(p);
    if (c.stage1.adam.size() != c.stage1.field.param_count())
      throw InputError("checkpoint optimizer does not match the field");
  } else if (c.stage == 2) {
    read_common(c.stage2);
    c.stage2.iso_fallback = p.u8() != 0;
    c.stage2.tet = TetGrid::read(p);
    c.stage2.adam = Adam::read(p);
    if (c.stage2.adam.size() != c.stage2.tet.params().size())
      throw InputError("checkpoint optimizer does not match the tet grid");
  } else {
    throw InputError("checkpoint stage must be 1 or 2");
  }
  if (!p.done()) throw InputError("checkpoint payload has trailing bytes");
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
  const auto bytes = encode_checkpoint(c);
  const std::string tmp = path + ".tmp";
  write_file_bytes(tmp, bytes);
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(read_file_bytes(path)); }

}  // namespace touchrecon
