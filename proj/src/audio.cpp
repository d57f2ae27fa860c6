#include "mer/audio.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>

namespace mer {
namespace {

uint32_t read_u32(const uint8_t* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 |
         uint32_t(p[3]) << 24;
}
uint16_t read_u16(const uint8_t* p) {
  return uint16_t(p[0]) | uint16_t(p[1]) << 8;
}

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

AudioClip load_audio(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptContainer("cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (bytes.size() < 44) throw CorruptContainer("file too short: " + path);
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw CorruptContainer("not a RIFF/WAVE file: " + path);

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const uint8_t* data = nullptr;
  size_t data_len = 0;
  bool have_fmt = false;

  size_t off = 12;
  while (off + 8 <= bytes.size()) {
    const uint8_t* chunk = bytes.data() + off;
    uint32_t chunk_len = read_u32(chunk + 4);
    const uint8_t* body = chunk + 8;
    if (off + 8 + chunk_len > bytes.size()) {
      if (std::memcmp(chunk, "data", 4) == 0)
        throw CorruptContainer("truncated data chunk in " + path);
      throw CorruptContainer("truncated chunk in " + path);
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw CorruptContainer("short fmt chunk in " + path);
      format = read_u16(body);
      channels = read_u16(body + 2);
      rate = read_u32(body + 4);
      bits = read_u16(body + 14);
      if (format == kFormatExtensible && chunk_len >= 40)
        format = read_u16(body + 24);  // sub-format GUID leads with the tag
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = body;
      data_len = chunk_len;
    }
    off += 8 + chunk_len + (chunk_len & 1);
  }

  if (!have_fmt || rate == 0) throw CorruptContainer("missing fmt chunk in " + path);
  if (channels < 1 || channels > 2)
    throw UnsupportedFormat("unsupported channel count " + std::to_string(channels));
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32)
    throw UnsupportedFormat("unsupported codec: format tag " +
                            std::to_string(format) + ", " +
                            std::to_string(bits) + " bits");
  if (data == nullptr || data_len == 0) throw EmptyAudio("no samples in " + path);

  const size_t bytes_per_sample = bits / 8;
  const size_t frame_bytes = bytes_per_sample * channels;
  const size_t n_frames = data_len / frame_bytes;
  if (n_frames == 0) throw EmptyAudio("no samples in " + path);

  AudioClip clip;
  clip.sample_rate = rate;
  clip.source_id = path;
  clip.samples.resize(n_frames);
  for (size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (uint16_t c = 0; c < channels; ++c) {
      const uint8_t* s = data + i * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        int16_t v = int16_t(read_u16(s));
        acc += v / 32768.0;
      } else {
        float v;
        std::memcpy(&v, s, 4);
        acc += v;
      }
    }
    clip.samples[i] = acc / channels;
  }
  return clip;
}

void save_wav_pcm16(const std::string& path, const AudioClip& clip) {
  const uint32_t n = uint32_t(clip.samples.size());
  const uint32_t data_len = n * 2;
  const uint32_t rate = uint32_t(std::lround(clip.sample_rate));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw AudioError("cannot write " + path);
  auto u32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto u16 = [&](uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
  out.write("RIFF", 4);
  u32(36 + data_len);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  u32(16);
  u16(kFormatPcm);
  u16(1);  // mono
  u32(rate);
  u32(rate * 2);
  u16(2);
  u16(16);
  out.write("data", 4);
  u32(data_len);
  for (uint32_t i = 0; i < n; ++i) {
    double v = std::clamp(clip.samples[i], -1.0, 1.0);
    int16_t s = int16_t(std::lround(v * 32767.0));
    u16(uint16_t(s));
  }
}

AudioClip resample(const AudioClip& clip, double target_rate) {
  if (target_rate <= 0) throw AudioError("target_rate must be positive");
  if (target_rate == clip.sample_rate) return clip;

  const double ratio = target_rate / clip.sample_rate;
  const Eigen::Index n_in = clip.samples.size();
  const Eigen::Index n_out = Eigen::Index(std::llround(n_in * ratio));
  // Anti-aliasing cutoff: Nyquist of the slower rate, as a fraction of the
  // input rate.
  const double cutoff = std::min(1.0, ratio);
  const int half_width = 32;

  AudioClip out;
  out.sample_rate = target_rate;
  out.source_id = clip.source_id;
  out.samples.resize(n_out);
  const double pi = std::numbers::pi;
  for (Eigen::Index i = 0; i < n_out; ++i) {
    const double center = i / ratio;
    const Eigen::Index k0 = Eigen::Index(std::ceil(center)) - half_width;
    const Eigen::Index k1 = Eigen::Index(std::floor(center)) + half_width;
    double acc = 0.0;
    for (Eigen::Index k = std::max<Eigen::Index>(0, k0);
         k <= std::min(n_in - 1, k1); ++k) {
      const double x = center - k;
      double sinc = (x == 0.0) ? 1.0 : std::sin(pi * cutoff * x) / (pi * cutoff * x);
      // Hann window over the tap span
      const double w = 0.5 + 0.5 * std::cos(pi * x / (half_width + 1));
      acc += clip.samples[k] * sinc * w;
    }
    out.samples[i] = acc * cutoff;
  }
  return out;
}

}  // namespace mer
