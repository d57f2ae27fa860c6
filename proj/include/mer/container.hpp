#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mer {

struct ContainerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BadMagic : ContainerError {
  using ContainerError::ContainerError;
};
struct BadCrc : ContainerError {
  using ContainerError::ContainerError;
};
struct TruncatedFile : ContainerError {
  using ContainerError::ContainerError;
};

enum class DType : uint8_t { f64 = 1, f32 = 2 };

/// One named tensor: row-major payload, little-endian on disk.
struct TensorEntry {
  DType dtype = DType::f64;
  std::vector<uint32_t> dims;
  std::vector<double> f64;  // used when dtype == f64
  std::vector<float> f32;   // used when dtype == f32

  size_t element_count() const;
};

/// File layout: magic "MERT", version u16, entry count u32, then per entry
/// name (u16 length + UTF-8), dtype u8, rank u8, dims u32 each, payload;
/// trailing CRC32 over all preceding bytes.
struct TensorContainer {
  std::map<std::string, TensorEntry> entries;

  void put_f64(const std::string& name, std::vector<uint32_t> dims,
               std::vector<double> data);
  void put_f32(const std::string& name, std::vector<uint32_t> dims,
               std::vector<float> data);
  bool has(const std::string& name) const { return entries.count(name) > 0; }
  const TensorEntry& at(const std::string& name) const;
};

uint32_t crc32(const uint8_t* data, size_t len, uint32_t seed = 0);

void container_write(const TensorContainer& c, const std::string& path);
TensorContainer container_read(const std::string& path);

}  // namespace mer
