#pragma once

#include <Eigen/Core>
#include <stdexcept>

namespace mer::tsne {

struct TsneError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CalibrationFailure : TsneError {
  using TsneError::TsneError;
};

struct TsneConfig {
  double perplexity = 30.0;
  int output_dims = 2;
  int iters = 1000;
  double learning_rate = 200.0;
  double momentum_initial = 0.5;
  double momentum_final = 0.8;
  int momentum_switch_iter = 250;
  double early_exaggeration = 12.0;
  int exaggeration_iters = 250;
  uint64_t seed = 0;
};

struct TsneResult {
  Eigen::MatrixXd coords;  // n x output_dims
  double initial_kl = 0.0;
  double final_kl = 0.0;
  TsneConfig config;
};

/// Per-row binary search on the Gaussian bandwidth so each row's effective
/// neighbor count 2^H(P_i) hits the target perplexity within 1e-4.
/// distances: symmetric, non-negative, zero diagonal. Rows sum to 1.
Eigen::MatrixXd perplexity_calibration(const Eigen::MatrixXd& distances,
                                       double perplexity);

/// Exact O(n^2) t-SNE on standardized features (Euclidean metric), gradient
/// descent on KL with momentum and early exaggeration.
TsneResult tsne(const Eigen::MatrixXd& features, const TsneConfig& config);

}  // namespace mer::tsne
