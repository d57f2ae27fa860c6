#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

namespace mer {

struct AudioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnsupportedFormat : AudioError {
  using AudioError::AudioError;
};
struct CorruptContainer : AudioError {
  using AudioError::AudioError;
};
struct EmptyAudio : AudioError {
  using AudioError::AudioError;
};

/// Mono PCM clip. Samples are amplitudes in [-1, 1].
struct AudioClip {
  Eigen::VectorXd samples;
  double sample_rate = 0.0;
  std::string source_id;

  double duration_s() const { return samples.size() / sample_rate; }
};

/// Reads a RIFF/WAVE file (PCM16 or IEEE float32, 1-2 channels).
/// Stereo is downmixed by per-sample mean.
AudioClip load_audio(const std::string& path);

/// Writes a mono clip as PCM16 WAV. Used by the synthetic-dataset tooling.
void save_wav_pcm16(const std::string& path, const AudioClip& clip);

/// Band-limited resampling via windowed-sinc interpolation.
/// Output length = round(len * target / src). Identity when rates match.
AudioClip resample(const AudioClip& clip, double target_rate);

}  // namespace mer
