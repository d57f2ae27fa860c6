#include <doctest.h>

#include <fstream>

#include "helpers.hpp"
#include "mer/container.hpp"

using namespace mer;

TEST_CASE("container: round-trip is bit-exact") {
  auto dir = testutil::temp_dir("container_rt");
  TensorContainer c;
  c.put_f64("weights", {2, 3}, {1.0, -2.5, 3e300, -4e-300, 0.0, 0.1});
  c.put_f32("small", {4}, {1.5f, -0.25f, 1e-30f, 3.4e38f});
  c.put_f64("scalar", {1}, {-0.0});
  const std::string path = (dir / "a.mert").string();
  container_write(c, path);
  TensorContainer back = container_read(path);

  REQUIRE(back.entries.size() == 3);
  const auto& w = back.at("weights");
  CHECK(w.dtype == DType::f64);
  CHECK(w.dims == std::vector<uint32_t>{2, 3});
  for (size_t i = 0; i < 6; ++i) CHECK(w.f64[i] == c.at("weights").f64[i]);
  const auto& s = back.at("small");
  CHECK(s.dtype == DType::f32);
  for (size_t i = 0; i < 4; ++i) CHECK(s.f32[i] == c.at("small").f32[i]);
  CHECK(std::signbit(back.at("scalar").f64[0]));

  // Writing the same container again yields identical bytes.
  const std::string path2 = (dir / "b.mert").string();
  container_write(back, path2);
  CHECK(testutil::read_file(path) == testutil::read_file(path2));
}

TEST_CASE("container: empty container round-trips") {
  auto dir = testutil::temp_dir("container_empty");
  TensorContainer c;
  const std::string path = (dir / "empty.mert").string();
  container_write(c, path);
  CHECK(container_read(path).entries.empty());
}

TEST_CASE("container: corrupted payload byte is rejected") {
  auto dir = testutil::temp_dir("container_crc");
  TensorContainer c;
  c.put_f64("t", {8}, {1, 2, 3, 4, 5, 6, 7, 8});
  const std::string path = (dir / "c.mert").string();
  container_write(c, path);

  std::string bytes = testutil::read_file(path);
  // Flip one bit in the middle of the payload, keeping magic intact.
  bytes[bytes.size() / 2] ^= 0x40;
  std::ofstream(path, std::ios::binary | std::ios::trunc) << bytes;
  CHECK_THROWS_AS(container_read(path), BadCrc);
}

TEST_CASE("container: bad magic and truncation are distinct errors") {
  auto dir = testutil::temp_dir("container_magic");
  TensorContainer c;
  c.put_f64("t", {2}, {1, 2});
  const std::string path = (dir / "d.mert").string();
  container_write(c, path);

  std::string bytes = testutil::read_file(path);
  std::string wrong = bytes;
  wrong[0] = 'X';
  std::ofstream((dir / "wrong.mert").string(), std::ios::binary) << wrong;
  CHECK_THROWS_AS(container_read((dir / "wrong.mert").string()), BadMagic);

  // A few bytes lopped off: the checksum no longer matches.
  std::ofstream((dir / "short.mert").string(), std::ios::binary)
      << bytes.substr(0, bytes.size() - 7);
  CHECK_THROWS_AS(container_read((dir / "short.mert").string()), BadCrc);

  // Shorter than any valid container at all.
  std::ofstream((dir / "trunc.mert").string(), std::ios::binary)
      << bytes.substr(0, 6);
  CHECK_THROWS_AS(container_read((dir / "trunc.mert").string()), TruncatedFile);

  CHECK_THROWS_AS(container_read((dir / "nope.mert").string()), ContainerError);
}

TEST_CASE("container: crc32 matches a known vector") {
  // Standard CRC-32 ("123456789" -> 0xCBF43926) pins the polynomial and
  // reflection conventions.
  const char* s = "123456789";
  CHECK(crc32(reinterpret_cast<const uint8_t*>(s), 9) == 0xCBF43926u);
}
