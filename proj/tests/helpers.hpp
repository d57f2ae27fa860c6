#pragma once

// Shared oracles and fixtures for the unit and acceptance suites. Everything
// here is deliberately naive (nested loops, direct formulas) so library code
// is checked against an independent implementation.

#include <Eigen/Core>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "mer/audio.hpp"
#include "mer/container.hpp"
#include "mer/embedding.hpp"
#include "mer/nn.hpp"

namespace testutil {

inline std::filesystem::path temp_dir(const std::string& tag) {
  auto p = std::filesystem::temp_directory_path() /
           ("mer_test_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline mer::AudioClip sine_clip(double freq_hz, double sr, double duration_s,
                                double amplitude = 0.5) {
  mer::AudioClip clip;
  clip.sample_rate = sr;
  const auto n = Eigen::Index(std::llround(sr * duration_s));
  clip.samples.resize(n);
  for (Eigen::Index i = 0; i < n; ++i)
    clip.samples[i] = amplitude * std::sin(2.0 * M_PI * freq_hz * double(i) / sr);
  return clip;
}

inline mer::AudioClip noise_clip(double sr, double duration_s, uint64_t seed,
                                 double amplitude = 0.3) {
  mer::AudioClip clip;
  clip.sample_rate = sr;
  const auto n = Eigen::Index(std::llround(sr * duration_s));
  clip.samples.resize(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-amplitude, amplitude);
  for (Eigen::Index i = 0; i < n; ++i) clip.samples[i] = dist(rng);
  return clip;
}

// Brute-force same-padding 2-D cross-correlation matching the embedding
// engine's layout: input/output are [channels x h*w] with spatial index r*w+c,
// kernel flat layout [cout][cin][kh][kw].
inline Eigen::MatrixXd conv2d_same_naive(const Eigen::MatrixXd& in, int h,
                                         int w, const std::vector<double>& kernel,
                                         const Eigen::VectorXd& bias, int cin,
                                         int cout, int kh, int kw) {
  const int pad_h = (kh - 1) / 2, pad_w = (kw - 1) / 2;
  Eigen::MatrixXd out(cout, h * w);
  for (int o = 0; o < cout; ++o)
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        double acc = bias[o];
        for (int ci = 0; ci < cin; ++ci)
          for (int dr = 0; dr < kh; ++dr)
            for (int dc = 0; dc < kw; ++dc) {
              const int sr = r + dr - pad_h, sc = c + dc - pad_w;
              if (sr < 0 || sr >= h || sc < 0 || sc >= w) continue;
              acc += kernel[((size_t(o) * cin + ci) * kh + dr) * kw + dc] *
                     in(ci, sr * w + sc);
            }
        out(o, r * w + c) = acc;
      }
  return out;
}

// Brute-force valid 1-D cross-correlation matching nn::conv1d_forward's
// position-major layout.
inline Eigen::MatrixXd conv1d_valid_naive(const Eigen::MatrixXd& x, int L,
                                          int cin, const Eigen::MatrixXd& kernels,
                                          const Eigen::VectorXd& bias, int k) {
  const int cout = int(kernels.rows());
  const int out_len = L - k + 1;
  Eigen::MatrixXd y(x.rows(), Eigen::Index(out_len) * cout);
  for (Eigen::Index s = 0; s < x.rows(); ++s)
    for (int p = 0; p < out_len; ++p)
      for (int o = 0; o < cout; ++o) {
        double acc = bias[o];
        for (int dk = 0; dk < k; ++dk)
          for (int c = 0; c < cin; ++c)
            acc += kernels(o, dk * cin + c) * x(s, (p + dk) * cin + c);
        y(s, p * cout + o) = acc;
      }
  return y;
}

// Relative error between an analytic gradient and a central finite
// difference of `loss` with respect to the entries of `param`.
template <typename LossFn>
double max_fd_rel_error(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad,
                        LossFn loss, double eps = 1e-5) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < param.size(); ++i) {
    const double orig = param(i);
    param(i) = orig + eps;
    const double lp = loss();
    param(i) = orig - eps;
    const double lm = loss();
    param(i) = orig;
    const double fd = (lp - lm) / (2.0 * eps);
    const double denom = std::max({std::abs(fd), std::abs(grad(i)), 1e-8});
    worst = std::max(worst, std::abs(fd - grad(i)) / denom);
  }
  return worst;
}

// Gaussian blobs: `per_class` samples per class in d dimensions; class k's
// mean sits at distance `separation` along a distinct axis direction.
inline void make_blobs(int n_classes, int per_class, int d, double separation,
                       uint64_t seed, Eigen::MatrixXd& X, std::vector<int>& y) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  X.resize(Eigen::Index(n_classes) * per_class, d);
  y.clear();
  for (int k = 0; k < n_classes; ++k)
    for (int i = 0; i < per_class; ++i) {
      const Eigen::Index row = Eigen::Index(k) * per_class + i;
      for (int j = 0; j < d; ++j) X(row, j) = unit(rng);
      X(row, k % d) += separation;
      y.push_back(k);
    }
}

// Gaussian blobs with class centres drawn coordinate-wise from
// uniform(-box, box) around the origin, in the style of the usual synthetic
// blob generators; within-class noise is unit isotropic Gaussian.
inline void make_blobs_spread(int n_classes, int per_class, int d, double box,
                              uint64_t seed, Eigen::MatrixXd& X,
                              std::vector<int>& y) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> centre(-box, box);
  std::normal_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd centres(n_classes, d);
  for (Eigen::Index i = 0; i < centres.size(); ++i) centres(i) = centre(rng);
  X.resize(Eigen::Index(n_classes) * per_class, d);
  y.clear();
  for (int k = 0; k < n_classes; ++k)
    for (int i = 0; i < per_class; ++i) {
      const Eigen::Index row = Eigen::Index(k) * per_class + i;
      for (int j = 0; j < d; ++j) X(row, j) = centres(k, j) + unit(rng);
      y.push_back(k);
    }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testutil
