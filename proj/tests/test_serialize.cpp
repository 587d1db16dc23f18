// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <random>

#include "fixtures.hpp"
#include "support.hpp"
#include "ufo/binary_io.hpp"
#include "ufo/errors.hpp"
#include "ufo/injection.hpp"
#include "ufo/serialize.hpp"

using namespace ufo;

namespace {

bool models_equal(const ModelGraph<float>& a, const ModelGraph<float>& b) {
  if (!(a.config() == b.config())) return false;
  auto pa = a.parameters(), pb = b.parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].first != pb[i].first || pa[i].second->shape() != pb[i].second->shape()) return false;
    if (std::memcmp(pa[i].second->data(), pb[i].second->data(), sizeof(float) * pa[i].second->size()) != 0) return false;
  }
  return true;
}

template <typename F>
std::size_t format_error_offset(F&& f) {
  try {
    f();
  } catch (const FormatError& e) {
    return e.offset();
  }
  FAIL("expected FormatError");
  return 0;
}

// UFOM header text as stored in the file.
std::string model_header(const std::vector<std::uint8_t>& bytes) {
  std::uint32_t len = 0;
  std::memcpy(&len, bytes.data() + 5, 4);
  return std::string(bytes.begin() + 9, bytes.begin() + 9 + len);
}

std::vector<std::uint8_t> with_header(const std::vector<std::uint8_t>& bytes, const std::string& header) {
  std::uint32_t old = 0;
  std::memcpy(&old, bytes.data() + 5, 4);
  io::ByteWriter w;
  w.bytes(std::string(bytes.begin(), bytes.begin() + 5));
  w.u32(static_cast<std::uint32_t>(header.size()));
  w.bytes(header);
  w.bytes(std::string(bytes.begin() + 9 + old, bytes.end()));
  return std::move(w.buffer());
}

}  // namespace

TEST_CASE("adapter round trip is bit-exact") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const UfoAdapterSet<float> a = testing::random_adapter_set(rng);
    const auto bytes = serialize_adapter(a);
    const UfoAdapterSet<float> b = deserialize_adapter(bytes);
    CHECK(a == b);
    CHECK(serialize_adapter(b) == bytes);
    CHECK(bytes.size() == adapter_header_size(a) + 4 * static_cast<std::size_t>(a.parameter_count()));
  }
}

TEST_CASE("adapter header layout") {
  UfoAdapterSet<float> set(0x0102030405060708ULL, 4, AdapterKind::stylization, 1.0);
  set.add_entry("w", 8, 6);
  const auto bytes = serialize_adapter(set);
  CHECK(adapter_header_size(set) == 30 + 2 + 1 + 8);
  CHECK(bytes.size() == 41 + 4 * 57);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "UFOA");
  CHECK(bytes[4] == kAdapterFormatVersion);
  std::uint64_t fp = 0;
  std::memcpy(&fp, bytes.data() + 5, 8);
  CHECK(fp == 0x0102030405060708ULL);
  CHECK(bytes[17] == 1);
  double alpha = 0.0;
  std::memcpy(&alpha, bytes.data() + 18, 8);
  CHECK(alpha == 1.0);
}

TEST_CASE("adapter corruption fixtures") {
  std::mt19937_64 rng(2);
  UfoAdapterSet<float> set = testing::random_adapter_set(rng);
  while (set.entries().empty()) set = testing::random_adapter_set(rng);
  const auto good = serialize_adapter(set);

  auto bad = good;
  bad[0] = 'X';
  CHECK(format_error_offset([&] { deserialize_adapter(bad); }) == 0);
  bad = good;
  bad[4] = 9;
  CHECK(format_error_offset([&] { deserialize_adapter(bad); }) == 4);
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{20}, good.size() / 2, good.size() - 1}) {
    CAPTURE(cut);
    const std::vector<std::uint8_t> trunc(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(cut));
    CHECK_THROWS_AS(deserialize_adapter(trunc), FormatError);
  }
  auto extra = good;
  extra.push_back(0);
  CHECK_THROWS_AS(deserialize_adapter(extra), FormatError);
  // Entry count field.
  bad = good;
  bad[26] = static_cast<std::uint8_t>(bad[26] + 1);
  CHECK_THROWS_AS(deserialize_adapter(bad), FormatError);
  bad = good;
  bad[29] = 0x7f;
  CHECK(format_error_offset([&] { deserialize_adapter(bad); }) == 26);
  // First entry's m field.
  bad = good;
  const std::size_t name_len = set.entries()[0].name.size();
  bad[30 + 2 + name_len] = static_cast<std::uint8_t>(bad[30 + 2 + name_len] + 1);
  CHECK_THROWS_AS(deserialize_adapter(bad), FormatError);
  // Rank zero.
  bad = good;
  std::memset(bad.data() + 13, 0, 4);
  CHECK(format_error_offset([&] { deserialize_adapter(bad); }) == 13);
}

TEST_CASE("adapter files") {
  const auto dir = testing::scratch_dir("serialize-adapter");
  std::mt19937_64 rng(3);
  const auto set = testing::random_adapter_set(rng);
  save_adapter(dir / "a.ufoa", set);
  CHECK(load_adapter(dir / "a.ufoa") == set);
  CHECK(std::filesystem::file_size(dir / "a.ufoa") == adapter_header_size(set) + 4 * static_cast<std::size_t>(set.parameter_count()));
  CHECK_THROWS_AS(load_adapter(dir / "missing.ufoa"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("model round trip is bit-exact") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i) {
    const ModelGraph<float> a = testing::random_model(rng);
    const auto bytes = serialize_model(a);
    const ModelGraph<float> b = deserialize_model(bytes);
    CHECK(models_equal(a, b));
    CHECK(serialize_model(b) == bytes);
  }
}

TEST_CASE("model corruption fixtures") {
  std::mt19937_64 rng(5);
  const ModelGraph<float> m = testing::random_model(rng);
  const auto good = serialize_model(m);
  auto bad = good;
  bad[1] = 'X';
  CHECK(format_error_offset([&] { deserialize_model(bad); }) == 0);
  bad = good;
  bad[4] = 2;
  CHECK(format_error_offset([&] { deserialize_model(bad); }) == 4);
  for (std::size_t cut : {std::size_t{2}, std::size_t{7}, std::size_t{40}, good.size() - 4, good.size() - 1}) {
    const std::vector<std::uint8_t> trunc(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(cut));
    CHECK_THROWS_AS(deserialize_model(trunc), FormatError);
  }

  nlohmann::json header = nlohmann::json::parse(model_header(good));
  SUBCASE("shape mismatch") {
    header["tensors"][0]["shape"][0] = header["tensors"][0]["shape"][0].get<int>() + 1;
    try {
      deserialize_model(with_header(good, header.dump()));
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("shape mismatch") != std::string::npos);
      CHECK(e.offset() == 9);
    }
  }
  SUBCASE("architecture change without payload change") {
    header["config"]["hidden"] = header["config"]["hidden"].get<int>() * 2;
    CHECK_THROWS_AS(deserialize_model(with_header(good, header.dump())), FormatError);
  }
  SUBCASE("fingerprint") {
    header["fingerprint"] = header["fingerprint"].get<std::uint64_t>() ^ 1;
    CHECK_THROWS_AS(deserialize_model(with_header(good, header.dump())), FormatError);
  }
  SUBCASE("malformed json") {
    CHECK(format_error_offset([&] { deserialize_model(with_header(good, "{\"config\":")); }) == 9);
  }
  SUBCASE("header itself round trips") {
    CHECK(deserialize_model(with_header(good, header.dump())).fingerprint() == m.fingerprint());
  }
}

TEST_CASE("model files") {
  const auto dir = testing::scratch_dir("serialize-model");
  std::mt19937_64 rng(6);
  const auto m = testing::random_model(rng);
  save_model(dir / "m.ufom", m);
  CHECK(models_equal(load_model(dir / "m.ufom"), m));
  CHECK(io::read_file(dir / "m.ufom") == serialize_model(m));
  std::filesystem::remove_all(dir);
}

TEST_CASE("vclip round trip") {
  const auto dir = testing::scratch_dir("vclip");
  std::mt19937_64 rng(7);
  VideoTensor v = testing::random_video(3, 4, 5, 2, rng);
  for (double& x : v.data()) x = static_cast<float>(x);
  v.set_fps(12.0);
  write_vclip(dir / "a.vclip", v, {{"condition", "3"}});
  ClipTags tags;
  const VideoTensor back = read_vclip(dir / "a.vclip", &tags);
  CHECK(back == v);
  CHECK(back.fps() == 12.0);
  CHECK(tags.at("condition") == "3");
  CHECK(std::filesystem::file_size(dir / "a.vclip") == 4 * v.size());
  {
    std::ofstream(dir / "a.vclip", std::ios::binary | std::ios::app) << 'x';
  }
  CHECK_THROWS_AS(read_vclip(dir / "a.vclip"), FormatError);
  std::filesystem::remove_all(dir);
}
