#pragma once

#include <Eigen/Core>
#include <complex>
#include <stdexcept>
#include <vector>

#include "mer/audio.hpp"

namespace mer {

struct DspError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ClipTooShort : DspError {
  using DspError::DspError;
};
struct DegenerateBank : DspError {
  using DspError::DspError;
};
struct TooFewFrames : DspError {
  using DspError::DspError;
};
struct ClipShorterThanWindow : DspError {
  using DspError::DspError;
};

enum class WindowKind { hann, rectangular };

struct SpectrogramConfig {
  int n_fft = 2048;
  int hop = 512;
  WindowKind window = WindowKind::hann;
  int n_mels = 128;
  double f_min = 0.0;
  double f_max = 0.0;  // 0 means sample_rate / 2
  double log_floor = 1e-10;
  // When true, the signal is reflect-padded by n_fft/2 on both ends before
  // framing, so n_frames = 1 + floor(len / hop).
  bool center = false;

  double effective_f_max(double sample_rate) const {
    return f_max > 0.0 ? f_max : sample_rate / 2.0;
  }
};

struct MelSpectrogram {
  Eigen::MatrixXd values;  // n_mels x n_frames, log power
  SpectrogramConfig config;
};

struct MfccMatrix {
  Eigen::MatrixXd coeffs;  // 20 x n_frames
  Eigen::MatrixXd deltas;  // same shape
};

/// 80-dim summary: [mean(coeffs) | std(coeffs) | mean(deltas) | std(deltas)].
struct MfccSummaryVector {
  Eigen::VectorXd values;
};

/// Per-clip analysis presets for the two embedding front-ends and the
/// MFCC baseline. The embedding presets pin the published upstream
/// configurations so imported weights stay compatible.
struct FrontendPreset {
  double sample_rate;
  double window_s;
  SpectrogramConfig spec;
  // Spectrograms are clamped/cropped to exactly this many frames when > 0.
  int target_frames = 0;
};

/// 48 kHz, n_fft 2048, hop 242, 1 s windows -> n_mels x 199.
FrontendPreset l3net_frontend(int n_mels = 256);
/// 16 kHz, n_fft 400, hop 160, 0.96 s windows -> 64 x 96.
FrontendPreset vggish_frontend();
/// 22.05 kHz, n_fft 512, hop 441; 30 s clips -> 20 x ~1500 MFCC matrices.
FrontendPreset mfcc_frontend();

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Number of analysis frames for a signal of `len` samples under `config`.
Eigen::Index stft_frame_count(Eigen::Index len, const SpectrogramConfig& config);

/// Frame t column = DFT of windowed samples starting at t*hop.
Eigen::MatrixXcd stft(const AudioClip& clip, const SpectrogramConfig& config);

/// Triangular mel filterbank, rows = filters over n_fft/2+1 linear bins.
Eigen::MatrixXd mel_filterbank(const SpectrogramConfig& config, double sample_rate);

/// log(max(filterbank * |stft|^2, log_floor)).
MelSpectrogram log_mel_spectrogram(const AudioClip& clip,
                                   const SpectrogramConfig& config);

/// First 20 DCT-II coefficients of each log-mel frame, plus centered
/// first differences over time (edge frames replicated).
MfccMatrix mfcc(const AudioClip& clip, const SpectrogramConfig& config);

/// Mean and population std over time of static and delta coefficients.
MfccSummaryVector mfcc_summary(const MfccMatrix& m);

/// Fixed-length windows at start times 0, hop_s, 2*hop_s, ...
std::vector<AudioClip> frame_windows(const AudioClip& clip, double window_s,
                                     double hop_s);

}  // namespace mer
