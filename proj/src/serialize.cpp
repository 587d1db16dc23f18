// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ufo/serialize.hpp"

#include <bit>
#include <limits>
#include <string>

#include <json.hpp>

#include "ufo/binary_io.hpp"

namespace ufo {

namespace {

constexpr std::string_view kAdapterMagic = "UFOA";
constexpr std::string_view kModelMagic = "UFOM";

void write_floats(io::ByteWriter& w, const Tensor<float>& t) {
  for (Index i = 0; i < t.size(); ++i) w.f32(t[i]);
}

void read_floats(io::ByteReader& r, Tensor<float>& t, const char* what) {
  r.need(static_cast<std::size_t>(t.size()) * 4, what);
  for (Index i = 0; i < t.size(); ++i) t[i] = r.f32(what);
}

void expect_magic(io::ByteReader& r, std::string_view magic) {
  if (r.remaining() < magic.size()) throw FormatError("file too short for magic '" + std::string(magic) + "'", 0);
  const std::string got = r.bytes(magic.size(), "magic");
  if (got != magic) throw FormatError("bad magic, expected '" + std::string(magic) + "'", 0);
}

void expect_version(io::ByteReader& r, std::uint8_t want) {
  const std::size_t at = r.offset();
  const std::uint8_t v = r.u8("version");
  if (v != want) {
    throw FormatError("unsupported version " + std::to_string(v) + ", expected " + std::to_string(want), at);
  }
}

void expect_end(const io::ByteReader& r) {
  if (r.remaining() != 0) throw FormatError(std::to_string(r.remaining()) + " trailing bytes", r.offset());
}

}  // namespace

std::size_t adapter_header_size(const UfoAdapterSet<float>& set) {
  std::size_t n = 4 + 1 + 8 + 4 + 1 + 8 + 4;
  for (const auto& e : set.entries()) n += 2 + e.name.size() + 4 + 4;
  return n;
}

std::vector<std::uint8_t> serialize_adapter(const UfoAdapterSet<float>& set) {
  set.validate();
  io::ByteWriter w;
  w.bytes(kAdapterMagic);
  w.u8(kAdapterFormatVersion);
  w.u64(set.fingerprint());
  w.u32(static_cast<std::uint32_t>(set.rank()));
  w.u8(static_cast<std::uint8_t>(set.kind()));
  w.u64(std::bit_cast<std::uint64_t>(set.recommended_alpha()));
  w.u32(static_cast<std::uint32_t>(set.entries().size()));
  for (const auto& e : set.entries()) {
    if (e.name.size() > std::numeric_limits<std::uint16_t>::max()) throw ContractError("adapter entry name too long");
    w.u16(static_cast<std::uint16_t>(e.name.size()));
    w.bytes(e.name);
    w.u32(static_cast<std::uint32_t>(e.m));
    w.u32(static_cast<std::uint32_t>(e.n));
  }
  for (const auto& e : set.entries()) {
    write_floats(w, e.beta);
    write_floats(w, e.v_det);
    write_floats(w, e.v_cor);
  }
  return std::move(w.buffer());
}

UfoAdapterSet<float> deserialize_adapter(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  expect_magic(r, kAdapterMagic);
  expect_version(r, kAdapterFormatVersion);
  const std::uint64_t fingerprint = r.u64("fingerprint");
  std::size_t at = r.offset();
  const std::uint32_t d = r.u32("rank");
  if (d == 0 || d > (1u << 20)) throw FormatError("implausible adapter rank " + std::to_string(d), at);
  at = r.offset();
  const std::uint8_t kind = r.u8("kind");
  if (kind > 1) throw FormatError("unknown adapter kind " + std::to_string(kind), at);
  const double alpha = std::bit_cast<double>(r.u64("recommended_alpha"));
  at = r.offset();
  const std::uint32_t count = r.u32("entry count");
  // Each entry needs at least 10 table bytes; reject counts the buffer cannot hold.
  if (static_cast<std::uint64_t>(count) * 10 > r.remaining()) {
    throw FormatError("entry count " + std::to_string(count) + " exceeds the file size", at);
  }
  UfoAdapterSet<float> set(fingerprint, static_cast<int>(d), static_cast<AdapterKind>(kind), alpha);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t len = r.u16("entry name length");
    at = r.offset();
    std::string name = r.bytes(len, "entry name");
    const std::uint32_t m = r.u32("entry rows");
    const std::uint32_t n = r.u32("entry cols");
    if (m == 0 || n == 0) throw FormatError("entry '" + name + "' has an empty shape", at);
    if (set.find(name)) throw FormatError("duplicate entry '" + name + "'", at);
    set.add_entry(name, m, n);
  }
  at = r.offset();
  const std::uint64_t floats = static_cast<std::uint64_t>(set.parameter_count());
  if (floats * 4 != r.remaining()) {
    throw FormatError("payload holds " + std::to_string(r.remaining()) + " bytes but the entry table needs " +
                          std::to_string(floats * 4),
                      at);
  }
  for (auto& e : set.entries()) {
    read_floats(r, e.beta, "beta");
    read_floats(r, e.v_det, "v_det");
    read_floats(r, e.v_cor, "v_cor");
  }
  expect_end(r);
  return set;
}

void save_adapter(const std::filesystem::path& path, const UfoAdapterSet<float>& set) {
  io::write_file_atomic(path, serialize_adapter(set));
}

UfoAdapterSet<float> load_adapter(const std::filesystem::path& path) { return deserialize_adapter(io::read_file(path)); }

namespace {

nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"frames", c.frames},       {"height", c.height},
          {"width", c.width},         {"channels", c.channels},
          {"patch", c.patch},         {"hidden", c.hidden},
          {"blocks", c.blocks},       {"heads", c.heads},
          {"mlp_ratio", c.mlp_ratio}, {"num_conditions", c.num_conditions},
          {"init_seed", c.init_seed}};
}

ModelConfig config_from_json(const nlohmann::json& j, const nlohmann::json& sched) {
  ModelConfig c;
  c.frames = j.at("frames").get<int>();
  c.height = j.at("height").get<int>();
  c.width = j.at("width").get<int>();
  c.channels = j.at("channels").get<int>();
  c.patch = j.at("patch").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.blocks = j.at("blocks").get<int>();
  c.heads = j.at("heads").get<int>();
  c.mlp_ratio = j.at("mlp_ratio").get<int>();
  c.num_conditions = j.at("num_conditions").get<int>();
  c.init_seed = j.at("init_seed").get<std::uint64_t>();
  c.timesteps = sched.at("timesteps").get<int>();
  c.schedule = schedule_kind_from_string(sched.at("kind").get<std::string>());
  return c;
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const ModelGraph<float>& model) {
  const ModelConfig& c = model.config();
  nlohmann::json header;
  header["config"] = config_to_json(c);
  header["schedule"] = {{"kind", to_string(c.schedule)}, {"timesteps", c.timesteps}};
  header["fingerprint"] = model.fingerprint();
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& [name, t] : model.parameters()) tensors.push_back({{"name", name}, {"shape", t->shape()}});
  header["tensors"] = tensors;
  const std::string text = header.dump();

  io::ByteWriter w;
  w.bytes(kModelMagic);
  w.u8(kModelFormatVersion);
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.bytes(text);
  for (const auto& [name, t] : model.parameters()) write_floats(w, *t);
  return std::move(w.buffer());
}

ModelGraph<float> deserialize_model(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  expect_magic(r, kModelMagic);
  expect_version(r, kModelFormatVersion);
  const std::uint32_t len = r.u32("header length");
  const std::size_t header_at = r.offset();
  const std::string text = r.bytes(len, "header");
  nlohmann::json header;
  ModelConfig cfg;
  try {
    header = nlohmann::json::parse(text);
    cfg = config_from_json(header.at("config"), header.at("schedule"));
    cfg.validate();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed checkpoint header: ") + e.what(), header_at);
  } catch (const Error& e) {
    throw FormatError(std::string("invalid checkpoint config: ") + e.what(), header_at);
  }
  ModelGraph<float> model(cfg);
  auto params = model.parameters();
  try {
    const auto& tensors = header.at("tensors");
    if (tensors.size() != params.size()) {
      throw FormatError("header lists " + std::to_string(tensors.size()) + " tensors, architecture has " +
                            std::to_string(params.size()),
                        header_at);
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      const std::string name = tensors[i].at("name").get<std::string>();
      const Shape shape = tensors[i].at("shape").get<Shape>();
      if (name != params[i].first || shape != params[i].second->shape()) {
        throw FormatError("shape mismatch: header has " + name + " " + shape_to_string(shape) + ", architecture has " +
                              params[i].first + " " + shape_to_string(params[i].second->shape()),
                          header_at);
      }
    }
    if (header.at("fingerprint").get<std::uint64_t>() != model.fingerprint()) {
      throw FormatError("header fingerprint does not match the rebuilt registry", header_at);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed checkpoint header: ") + e.what(), header_at);
  }
  std::uint64_t floats = 0;
  for (const auto& [name, t] : params) floats += static_cast<std::uint64_t>(t->size());
  if (floats * 4 != r.remaining()) {
    throw FormatError("payload holds " + std::to_string(r.remaining()) + " bytes, registry needs " +
                          std::to_string(floats * 4),
                      r.offset());
  }
  for (auto& [name, t] : params) read_floats(r, *t, "parameters");
  expect_end(r);
  return model;
}

void save_model(const std::filesystem::path& path, const ModelGraph<float>& model) {
  io::write_file_atomic(path, serialize_model(model));
}

ModelGraph<float> load_model(const std::filesystem::path& path) { return deserialize_model(io::read_file(path)); }

}  // namespace ufo
