#include <doctest.h>

#include <cstring>
#include <fstream>

#include "helpers.hpp"
#include "mer/audio.hpp"

using namespace mer;

namespace {

void put_u32(std::string& s, uint32_t v) {
  s.append(reinterpret_cast<const char*>(&v), 4);
}
void put_u16(std::string& s, uint16_t v) {
  s.append(reinterpret_cast<const char*>(&v), 2);
}

// Hand-assembled RIFF/WAVE bytes, independent of save_wav_pcm16.
std::string wav_bytes(uint16_t format, uint16_t channels, uint32_t rate,
                      uint16_t bits, const std::string& payload) {
  std::string data;
  put_u32(data, 16);  // fmt chunk size
  put_u16(data, format);
  put_u16(data, channels);
  put_u32(data, rate);
  put_u32(data, rate * channels * bits / 8);
  put_u16(data, uint16_t(channels * bits / 8));
  put_u16(data, bits);

  std::string out = "RIFF";
  put_u32(out, uint32_t(4 + 8 + data.size() + 8 + payload.size()));
  out += "WAVE";
  out += "fmt ";
  out += data;
  out += "data";
  put_u32(out, uint32_t(payload.size()));
  out += payload;
  return out;
}

std::string write_wav(const std::filesystem::path& dir, const std::string& name,
                      const std::string& bytes) {
  const std::string path = (dir / name).string();
  std::ofstream(path, std::ios::binary) << bytes;
  return path;
}

}  // namespace

TEST_CASE("audio: pcm16 mono round-trip within quantization error") {
  auto dir = testutil::temp_dir("audio_rt");
  AudioClip clip = testutil::sine_clip(440.0, 8000.0, 0.25);
  const std::string path = (dir / "sine.wav").string();
  save_wav_pcm16(path, clip);
  AudioClip back = load_audio(path);
  REQUIRE(back.samples.size() == clip.samples.size());
  CHECK(back.sample_rate == clip.sample_rate);
  CHECK((back.samples - clip.samples).cwiseAbs().maxCoeff() < 1.0 / 32768.0 + 1e-12);
}

TEST_CASE("audio: stereo pcm16 downmixes to the per-sample mean") {
  auto dir = testutil::temp_dir("audio_stereo");
  // L = [8192, -16384], R = [16384, 0] -> mean [12288, -8192] / 32768.
  std::string payload;
  for (int16_t v : {int16_t(8192), int16_t(16384), int16_t(-16384), int16_t(0)})
    payload.append(reinterpret_cast<const char*>(&v), 2);
  auto path = write_wav(dir, "st.wav", wav_bytes(1, 2, 22050, 16, payload));
  AudioClip clip = load_audio(path);
  REQUIRE(clip.samples.size() == 2);
  CHECK(clip.sample_rate == 22050.0);
  CHECK(clip.samples[0] == doctest::Approx(12288.0 / 32768.0).epsilon(1e-9));
  CHECK(clip.samples[1] == doctest::Approx(-8192.0 / 32768.0).epsilon(1e-9));
}

TEST_CASE("audio: ieee float32 payloads decode directly") {
  auto dir = testutil::temp_dir("audio_f32");
  std::string payload;
  for (float v : {0.5f, -0.25f, 1.0f})
    payload.append(reinterpret_cast<const char*>(&v), 4);
  auto path = write_wav(dir, "f.wav", wav_bytes(3, 1, 16000, 32, payload));
  AudioClip clip = load_audio(path);
  REQUIRE(clip.samples.size() == 3);
  CHECK(clip.samples[0] == doctest::Approx(0.5));
  CHECK(clip.samples[1] == doctest::Approx(-0.25));
  CHECK(clip.samples[2] == doctest::Approx(1.0));
}

TEST_CASE("audio: malformed files raise typed errors") {
  auto dir = testutil::temp_dir("audio_bad");

  auto garbage = write_wav(dir, "g.wav", "not a riff file at all........");
  CHECK_THROWS_AS(load_audio(garbage), AudioError);

  // Valid header, data chunk claims more bytes than present.
  std::string payload(8, '\0');
  std::string bytes = wav_bytes(1, 1, 8000, 16, payload);
  bytes = bytes.substr(0, bytes.size() - 4);
  auto trunc = write_wav(dir, "t.wav", bytes);
  CHECK_THROWS_AS(load_audio(trunc), CorruptContainer);

  // mu-law (format 7) is unsupported.
  auto mulaw = write_wav(dir, "m.wav", wav_bytes(7, 1, 8000, 8, payload));
  CHECK_THROWS_AS(load_audio(mulaw), UnsupportedFormat);

  // Zero-length data chunk.
  auto empty = write_wav(dir, "e.wav", wav_bytes(1, 1, 8000, 16, ""));
  CHECK_THROWS_AS(load_audio(empty), EmptyAudio);
}

TEST_CASE("audio: resample preserves tone frequency") {
  AudioClip src = testutil::sine_clip(440.0, 44100.0, 0.5);
  AudioClip down = resample(src, 22050.0);
  CHECK(down.sample_rate == 22050.0);
  CHECK(down.samples.size() == Eigen::Index(std::llround(0.5 * 22050.0)));

  // Correlate against an analytic 440 Hz tone at the new rate; discard the
  // filter edges.
  const Eigen::Index n = down.samples.size();
  const Eigen::Index lo = 64, hi = n - 64;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (Eigen::Index i = lo; i < hi; ++i) {
    const double ref = 0.5 * std::sin(2.0 * M_PI * 440.0 * double(i) / 22050.0);
    dot += ref * down.samples[i];
    na += ref * ref;
    nb += down.samples[i] * down.samples[i];
  }
  CHECK(dot / std::sqrt(na * nb) > 0.999);
}

TEST_CASE("audio: resample identity and upsampling length contract") {
  AudioClip src = testutil::noise_clip(16000.0, 0.1, 7);
  AudioClip same = resample(src, 16000.0);
  CHECK(same.samples == src.samples);
  AudioClip up = resample(src, 48000.0);
  CHECK(up.samples.size() == src.samples.size() * 3);
  CHECK(up.samples.allFinite());
}
