#include "mer/dsp.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>

namespace mer {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

FrontendPreset l3net_frontend(int n_mels) {
  FrontendPreset p;
  p.sample_rate = 48000.0;
  p.window_s = 1.0;
  p.spec.n_fft = 2048;
  p.spec.hop = 242;
  p.spec.window = WindowKind::hann;
  p.spec.n_mels = n_mels;
  p.spec.center = true;
  p.target_frames = 199;
  return p;
}

FrontendPreset vggish_frontend() {
  FrontendPreset p;
  p.sample_rate = 16000.0;
  p.window_s = 0.96;
  p.spec.n_fft = 400;
  p.spec.hop = 160;
  p.spec.window = WindowKind::hann;
  p.spec.n_mels = 64;
  p.spec.f_min = 125.0;
  p.spec.f_max = 7500.0;
  p.spec.center = true;
  p.target_frames = 96;
  return p;
}

FrontendPreset mfcc_frontend() {
  FrontendPreset p;
  p.sample_rate = 22050.0;
  p.window_s = 0.0;  // whole clip
  p.spec.n_fft = 512;
  p.spec.hop = 441;
  p.spec.window = WindowKind::hann;
  p.spec.n_mels = 128;
  p.spec.center = false;
  return p;
}

Eigen::Index stft_frame_count(Eigen::Index len, const SpectrogramConfig& config) {
  if (config.center) return 1 + len / config.hop;
  if (len < config.n_fft) return 0;
  return 1 + (len - config.n_fft) / config.hop;
}

Eigen::MatrixXcd stft(const AudioClip& clip, const SpectrogramConfig& config) {
  const int n_fft = config.n_fft;
  const int hop = config.hop;
  const Eigen::Index n_frames = stft_frame_count(clip.samples.size(), config);
  Eigen::VectorXd x = clip.samples;
  if (config.center) {
    const Eigen::Index pad = n_fft / 2;
    const Eigen::Index len = x.size();
    Eigen::VectorXd padded(len + 2 * pad);
    padded.segment(pad, len) = x;
    for (Eigen::Index i = 0; i < pad; ++i) {
      // reflect padding
      padded[pad - 1 - i] = x[std::min<Eigen::Index>(i + 1, len - 1)];
      padded[pad + len + i] = x[std::max<Eigen::Index>(len - 2 - i, 0)];
    }
    x = std::move(padded);
  }
  if (x.size() < n_fft || n_frames < 1)
    throw ClipTooShort("clip shorter than n_fft");
  Eigen::VectorXd window(n_fft);
  for (int i = 0; i < n_fft; ++i)
    window[i] = config.window == WindowKind::hann
                    ? 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n_fft)
                    : 1.0;
  Eigen::MatrixXcd out(n_fft / 2 + 1, n_frames);
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum(n_fft);
  std::vector<double> frame(n_fft);
  for (Eigen::Index t = 0; t < n_frames; ++t) {
    for (int i = 0; i < n_fft; ++i) frame[i] = x[t * hop + i] * window[i];
    fft.fwd(spectrum, frame);
    for (int k = 0; k <= n_fft / 2; ++k) out(k, t) = spectrum[k];
  }
  return out;
}

Eigen::MatrixXd mel_filterbank(const SpectrogramConfig& config,
                               double sample_rate) {
  const int n_bins = config.n_fft / 2 + 1;
  const double f_max = config.effective_f_max(sample_rate);
  const double mel_lo = hz_to_mel(config.f_min);
  const double mel_hi = hz_to_mel(f_max);

  // n_mels + 2 equally spaced mel points: filter k spans [k, k+2]
  Eigen::VectorXd hz_points(config.n_mels + 2);
  for (int i = 0; i < config.n_mels + 2; ++i)
    hz_points[i] =
        mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (config.n_mels + 1));

  if (config.n_mels + 2 > n_bins)
    throw DegenerateBank("mel filter bank of " + std::to_string(config.n_mels) +
                         " filters needs at least " +
                         std::to_string(config.n_mels + 2) +
                         " FFT bins; reduce n_mels or raise n_fft");

  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(config.n_mels, n_bins);
  const double bin_hz = sample_rate / config.n_fft;
  for (int m = 0; m < config.n_mels; ++m) {
    const double lo = hz_points[m], mid = hz_points[m + 1], hi = hz_points[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = k * bin_hz;
      double w = 0.0;
      if (f >= lo && f <= mid && mid > lo)
        w = (f - lo) / (mid - lo);
      else if (f > mid && f <= hi && hi > mid)
        w = (hi - f) / (hi - mid);
      fb(m, k) = w;
    }
    // A triangle narrower than the bin spacing can miss every bin centre;
    // give such filters the single nearest bin so the bank stays full rank.
    if (fb.row(m).sum() <= 0.0) {
      const auto k = std::clamp<Eigen::Index>(
          Eigen::Index(std::llround(mid / bin_hz)), 0, n_bins - 1);
      fb(m, k) = 1.0;
    }
  }
  return fb;
}

MelSpectrogram log_mel_spectrogram(const AudioClip& clip,
                                   const SpectrogramConfig& config) {
  Eigen::MatrixXcd spec = stft(clip, config);
  Eigen::MatrixXd power = spec.cwiseAbs2();
  Eigen::MatrixXd fb = mel_filterbank(config, clip.sample_rate);
  Eigen::MatrixXd mel = fb * power;
  MelSpectrogram out;
  out.config = config;
  out.values = mel.cwiseMax(config.log_floor).array().log().matrix();
  return out;
}

MfccMatrix mfcc(const AudioClip& clip, const SpectrogramConfig& config) {
  constexpr int n_coeffs = 20;
  MelSpectrogram mel = log_mel_spectrogram(clip, config);
  const int n_mels = int(mel.values.rows());
  const Eigen::Index n_frames = mel.values.cols();

  // Orthonormal DCT-II basis, first n_coeffs rows
  Eigen::MatrixXd dct(n_coeffs, n_mels);
  const double pi = std::numbers::pi;
  for (int k = 0; k < n_coeffs; ++k) {
    const double scale =
        std::sqrt((k == 0 ? 1.0 : 2.0) / n_mels);
    for (int n = 0; n < n_mels; ++n)
      dct(k, n) = scale * std::cos(pi * k * (2 * n + 1) / (2.0 * n_mels));
  }

  MfccMatrix out;
  out.coeffs = dct * mel.values;
  out.deltas.resize(n_coeffs, n_frames);
  for (Eigen::Index t = 0; t < n_frames; ++t) {
    const Eigen::Index prev = std::max<Eigen::Index>(t - 1, 0);
    const Eigen::Index next = std::min<Eigen::Index>(t + 1, n_frames - 1);
    out.deltas.col(t) = (out.coeffs.col(next) - out.coeffs.col(prev)) / 2.0;
  }
  return out;
}

MfccSummaryVector mfcc_summary(const MfccMatrix& m) {
  const Eigen::Index n = m.coeffs.cols();
  if (n < 2) throw TooFewFrames("mfcc_summary needs >= 2 frames");
  const Eigen::Index k = m.coeffs.rows();
  MfccSummaryVector out;
  out.values.resize(4 * k);
  auto stats = [n](const Eigen::MatrixXd& mat, Eigen::Index row) {
    const double mean = mat.row(row).mean();
    const double var =
        (mat.row(row).array() - mean).square().sum() / double(n);
    return std::pair<double, double>(mean, std::sqrt(var));
  };
  for (Eigen::Index i = 0; i < k; ++i) {
    auto [cm, cs] = stats(m.coeffs, i);
    auto [dm, ds] = stats(m.deltas, i);
    out.values[i] = cm;
    out.values[k + i] = cs;
    out.values[2 * k + i] = dm;
    out.values[3 * k + i] = ds;
  }
  return out;
}

std::vector<AudioClip> frame_windows(const AudioClip& clip, double window_s,
                                     double hop_s) {
  const Eigen::Index win = Eigen::Index(std::floor(window_s * clip.sample_rate));
  if (win > clip.samples.size())
    throw ClipShorterThanWindow("clip shorter than analysis window");
  const double dur = clip.samples.size() / clip.sample_rate;
  const Eigen::Index count =
      1 + Eigen::Index(std::floor((dur - window_s) / hop_s + 1e-9));
  std::vector<AudioClip> out;
  out.reserve(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    const Eigen::Index start =
        Eigen::Index(std::floor(i * hop_s * clip.sample_rate));
    AudioClip w;
    w.sample_rate = clip.sample_rate;
    w.source_id = clip.source_id + "#" + std::to_string(i);
    w.samples = clip.samples.segment(start, win);
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace mer
