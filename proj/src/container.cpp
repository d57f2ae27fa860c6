#include "mer/container.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

namespace mer {
namespace {

constexpr char kMagic[4] = {'M', 'E', 'R', 'T'};
constexpr uint16_t kVersion = 1;

std::array<uint32_t, 256> make_crc_table() {
  std::array<uint32_t, 256> table{};
  for (uint32_t i = 0; i < 256; ++i) {
    uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    table[i] = c;
  }
  return table;
}

template <typename T>
void append(std::vector<uint8_t>& buf, const T& v) {
  const auto* p = reinterpret_cast<const uint8_t*>(&v);
  buf.insert(buf.end(), p, p + sizeof(T));
}

struct Reader {
  const uint8_t* p;
  const uint8_t* end;
  template <typename T>
  T get() {
    if (p + sizeof(T) > end) throw TruncatedFile("container truncated");
    T v;
    std::memcpy(&v, p, sizeof(T));
    p += sizeof(T);
    return v;
  }
  std::string get_string(size_t n) {
    if (p + n > end) throw TruncatedFile("container truncated");
    std::string s(reinterpret_cast<const char*>(p), n);
    p += n;
    return s;
  }
};

}  // namespace

uint32_t crc32(const uint8_t* data, size_t len, uint32_t seed) {
  static const auto table = make_crc_table();
  uint32_t c = seed ^ 0xFFFFFFFFu;
  for (size_t i = 0; i < len; ++i) c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

size_t TensorEntry::element_count() const {
  return std::accumulate(dims.begin(), dims.end(), size_t(1),
                         std::multiplies<size_t>());
}

void TensorContainer::put_f64(const std::string& name,
                              std::vector<uint32_t> dims,
                              std::vector<double> data) {
  TensorEntry e;
  e.dtype = DType::f64;
  e.dims = std::move(dims);
  e.f64 = std::move(data);
  if (e.f64.size() != e.element_count())
    throw ContainerError("dims/payload mismatch for " + name);
  entries[name] = std::move(e);
}

void TensorContainer::put_f32(const std::string& name,
                              std::vector<uint32_t> dims,
                              std::vector<float> data) {
  TensorEntry e;
  e.dtype = DType::f32;
  e.dims = std::move(dims);
  e.f32 = std::move(data);
  if (e.f32.size() != e.element_count())
    throw ContainerError("dims/payload mismatch for " + name);
  entries[name] = std::move(e);
}

const TensorEntry& TensorContainer::at(const std::string& name) const {
  auto it = entries.find(name);
  if (it == entries.end()) throw ContainerError("missing tensor " + name);
  return it->second;
}

void container_write(const TensorContainer& c, const std::string& path) {
  std::vector<uint8_t> buf;
  buf.insert(buf.end(), kMagic, kMagic + 4);
  append(buf, kVersion);
  append(buf, uint32_t(c.entries.size()));
  for (const auto& [name, e] : c.entries) {
    append(buf, uint16_t(name.size()));
    buf.insert(buf.end(), name.begin(), name.end());
    append(buf, uint8_t(e.dtype));
    append(buf, uint8_t(e.dims.size()));
    for (uint32_t d : e.dims) append(buf, d);
    if (e.dtype == DType::f64) {
      const auto* p = reinterpret_cast<const uint8_t*>(e.f64.data());
      buf.insert(buf.end(), p, p + e.f64.size() * 8);
    } else {
      const auto* p = reinterpret_cast<const uint8_t*>(e.f32.data());
      buf.insert(buf.end(), p, p + e.f32.size() * 4);
    }
  }
  append(buf, crc32(buf.data(), buf.size()));

  // single-writer atomic rename
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ContainerError("cannot write " + tmp);
    out.write(reinterpret_cast<const char*>(buf.data()), buf.size());
  }
  std::filesystem::rename(tmp, path);
}

TensorContainer container_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContainerError("cannot open " + path);
  std::vector<uint8_t> buf((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
  if (buf.size() < 14) throw TruncatedFile("container too short: " + path);
  if (std::memcmp(buf.data(), kMagic, 4) != 0)
    throw BadMagic("bad magic in " + path);

  uint32_t stored;
  std::memcpy(&stored, buf.data() + buf.size() - 4, 4);
  if (crc32(buf.data(), buf.size() - 4) != stored)
    throw BadCrc("checksum mismatch in " + path);

  Reader r{buf.data() + 4, buf.data() + buf.size() - 4};
  const uint16_t version = r.get<uint16_t>();
  if (version != kVersion)
    throw ContainerError("unsupported container version " +
                         std::to_string(version));
  const uint32_t count = r.get<uint32_t>();
  TensorContainer c;
  for (uint32_t i = 0; i < count; ++i) {
    const uint16_t name_len = r.get<uint16_t>();
    std::string name = r.get_string(name_len);
    TensorEntry e;
    e.dtype = DType(r.get<uint8_t>());
    if (e.dtype != DType::f64 && e.dtype != DType::f32)
      throw ContainerError("unknown dtype tag in " + path);
    const uint8_t rank = r.get<uint8_t>();
    for (uint8_t d = 0; d < rank; ++d) e.dims.push_back(r.get<uint32_t>());
    const size_t n = e.element_count();
    if (e.dtype == DType::f64) {
      e.f64.resize(n);
      if (r.p + n * 8 > r.end) throw TruncatedFile("payload truncated");
      std::memcpy(e.f64.data(), r.p, n * 8);
      r.p += n * 8;
    } else {
      e.f32.resize(n);
      if (r.p + n * 4 > r.end) throw TruncatedFile("payload truncated");
      std::memcpy(e.f32.data(), r.p, n * 4);
      r.p += n * 4;
    }
    if (c.entries.count(name))
      throw ContainerError("duplicate tensor name " + name);
    c.entries[name] = std::move(e);
  }
  return c;
}

}  // namespace mer
