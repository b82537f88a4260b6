#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "generators.hpp"
#include "kinship/errors.hpp"
#include "kinship/model_io.hpp"

using namespace kinship;

namespace {

ComparatorParams sample_params(Activation a, SharingMode m, bool head, bool thr) {
  Rng rng(static_cast<std::uint64_t>(a) * 10 + static_cast<std::uint64_t>(m) + 1);
  auto p = gen::random_params(gen::tiny_config(a, m, 3, 4, 11), rng);
  if (head) {
    p.attention = zero_attention(p.config);
    for (auto& w : p.attention->weight.data) w = rng.normal();
  }
  if (thr) p.threshold = 0.4375;
  return p;
}

}  // namespace

TEST_CASE("serialize round trip is exact for every variant") {
  for (auto a : {Activation::LReLU, Activation::ReLU, Activation::PReLU, Activation::Tanh}) {
    for (auto m : {SharingMode::PerExpert, SharingMode::SharedTrunk, SharingMode::EntirelyLocal}) {
      for (bool head : {false, true}) {
        const auto p = sample_params(a, m, head, head);
        const auto bytes = serialize_model(p);
        const auto q = deserialize_model(bytes);
        CHECK(q == p);
        CHECK(serialize_model(q) == bytes);
      }
    }
  }
}

TEST_CASE("custom relation order survives the round trip") {
  auto c = gen::tiny_config(Activation::LReLU, SharingMode::PerExpert, 2, 2, 3);
  c.relations = {KinshipRelation::GMGS, KinshipRelation::BB, KinshipRelation::FD};
  const auto p = init_params(c, 5);
  CHECK(deserialize_model(serialize_model(p)).config.relations == c.relations);
}

TEST_CASE("header layout") {
  const auto bytes = serialize_model(sample_params(Activation::LReLU, SharingMode::PerExpert, false, false));
  REQUIRE(bytes.size() > 10);
  CHECK(std::memcmp(bytes.data(), "KINC", 4) == 0);
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0);
  const auto tail = bytes.size() - 4;
  const std::uint32_t stored = bytes[tail] | (bytes[tail + 1] << 8) | (bytes[tail + 2] << 16) |
                               (static_cast<std::uint32_t>(bytes[tail + 3]) << 24);
  CHECK(stored == crc32_of(std::span(bytes).first(tail)));
}

TEST_CASE("default-size model loads with header-driven shapes") {
  ComparatorConfig c;
  const auto p = init_params(c, 1);
  const auto q = deserialize_model(serialize_model(p));
  CHECK(q.layers[0].weight.rows == 192);
  CHECK(q.layers[0].weight.cols == 1024);
  CHECK(q.layers[1].weight.cols == 192);
  CHECK(q == p);
}

TEST_CASE("corrupted files are rejected") {
  const auto good = serialize_model(sample_params(Activation::PReLU, SharingMode::SharedTrunk, true, true));

  auto magic = good;
  magic[0] = 'X';
  CHECK_THROWS_AS(deserialize_model(magic), ModelFormatError);

  auto version = good;
  version[4] = 2;
  CHECK_THROWS_AS(deserialize_model(version), ModelFormatError);

  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{9}, good.size() / 2, good.size() - 1}) {
    CHECK_THROWS_AS(deserialize_model(std::span(good).first(cut)), ModelFormatError);
  }

  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    auto flipped = good;
    const auto at = 6 + rng.index(flipped.size() - 6);
    flipped[at] ^= static_cast<std::uint8_t>(1u << rng.index(8));
    CHECK_THROWS_AS(deserialize_model(flipped), ModelFormatError);
  }

  auto extended = good;
  extended.push_back(0);
  CHECK_THROWS_AS(deserialize_model(extended), ModelFormatError);
}

TEST_CASE("file save and load") {
  const auto dir = std::filesystem::temp_directory_path() / "kinship_model_io";
  std::filesystem::create_directories(dir);
  const auto path = dir / "m.kinc";
  const auto p = sample_params(Activation::Tanh, SharingMode::EntirelyLocal, true, false);
  save_model(p, path);
  CHECK(load_model(path) == p);
  CHECK(file_crc32(path) == crc32_of(read_file_bytes(path)));
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << "KINC garbage";
  }
  CHECK_THROWS_AS(load_model(path), ModelFormatError);
  CHECK_THROWS_AS(load_model(dir / "missing.kinc"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("crc32 of a known string") {
  const std::string s = "123456789";
  CHECK(crc32_of(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size())) == 0xCBF43926u);
}
