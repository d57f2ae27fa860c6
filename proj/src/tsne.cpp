#include "mer/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace mer::tsne {
namespace {

// Shannon entropy (nats) and probabilities of row i at precision beta.
double row_probs(const Eigen::VectorXd& d2, Eigen::Index i, double beta,
                 Eigen::VectorXd& p) {
  const Eigen::Index n = d2.size();
  double sum = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    p[j] = j == i ? 0.0 : std::exp(-beta * d2[j]);
    sum += p[j];
  }
  if (sum <= 0.0) return -1.0;
  double h = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (p[j] > 0.0) h += beta * d2[j] * p[j];
    p[j] /= sum;
  }
  return h / sum + std::log(sum);
}

double kl_divergence(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q) {
  double kl = 0.0;
  for (Eigen::Index i = 0; i < P.rows(); ++i)
    for (Eigen::Index j = 0; j < P.cols(); ++j)
      if (P(i, j) > 0.0) kl += P(i, j) * std::log(P(i, j) / Q(i, j));
  return kl;
}

}  // namespace

Eigen::MatrixXd perplexity_calibration(const Eigen::MatrixXd& distances,
                                       double perplexity) {
  const Eigen::Index n = distances.rows();
  const double target_h = std::log(perplexity);  // nats
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd p(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd d2 = distances.row(i).array().square();
    double beta = 1.0, beta_lo = 0.0,
           beta_hi = std::numeric_limits<double>::infinity();
    double h = 0.0;
    bool ok = false;
    for (int iter = 0; iter < 200; ++iter) {
      h = row_probs(d2, i, beta, p);
      if (h < 0.0) throw CalibrationFailure("degenerate distance row");
      // 2^H == perplexity  <=>  H == log(perplexity)
      if (std::abs(std::exp(h) - perplexity) < 1e-4 ||
          std::abs(h - target_h) < 1e-7) {
        ok = true;
        break;
      }
      if (h > target_h) {
        beta_lo = beta;
        beta = std::isinf(beta_hi) ? beta * 2.0 : (beta + beta_hi) / 2.0;
      } else {
        beta_hi = beta;
        beta = (beta + beta_lo) / 2.0;
      }
    }
    if (!ok)
      throw CalibrationFailure("perplexity search did not converge on row " +
                               std::to_string(i));
    P.row(i) = p.transpose();
  }
  return P;
}

TsneResult tsne(const Eigen::MatrixXd& features, const TsneConfig& config) {
  const Eigen::Index n = features.rows();
  if (n < 10) throw TsneError("t-SNE needs at least 10 points");
  if (config.perplexity <= 1.0 || config.perplexity >= double(n) / 3.0)
    throw TsneError("perplexity must lie in (1, n/3)");

  // Center and apply one global scale. Per-dimension standardization would
  // equalize variances and can erase exactly the directions that separate
  // clusters; a single scale keeps the geometry while making the embedding
  // invariant to the feature units.
  Eigen::MatrixXd X = features;
  X.rowwise() -= X.colwise().mean();
  const double rms = std::sqrt(X.array().square().mean());
  if (rms > 0.0) X /= rms;

  Eigen::MatrixXd dist(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j)
      dist(i, j) = dist(j, i) = (X.row(i) - X.row(j)).norm();
  }

  Eigen::MatrixXd P = perplexity_calibration(dist, config.perplexity);
  P = (P + P.transpose()) / (2.0 * double(n));  // symmetrize, sum = 1
  P = P.cwiseMax(1e-12);
  P.diagonal().setZero();

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd Y(n, config.output_dims);
  for (Eigen::Index i = 0; i < Y.size(); ++i) Y.data()[i] = gauss(rng) * 1e-4;
  Eigen::MatrixXd velocity = Eigen::MatrixXd::Zero(n, config.output_dims);
  Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(n, config.output_dims);

  auto low_dim_affinities = [&](const Eigen::MatrixXd& y, Eigen::MatrixXd& num,
                                Eigen::MatrixXd& Q) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      num(i, i) = 0.0;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double t = 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
        num(i, j) = num(j, i) = t;
        sum += 2.0 * t;
      }
    }
    Q = (num / sum).cwiseMax(1e-12);
    Q.diagonal().setZero();
  };

  // P entries scale as 1/n, so a step size tuned for large corpora makes
  // small embeddings oscillate; normalize by the dataset size, keeping the
  // configured rate as an upper bound.
  const double step =
      std::min(config.learning_rate,
               std::max(double(n) / (8.0 * config.early_exaggeration), 1.0));

  Eigen::MatrixXd num(n, n), Q(n, n), grad(n, config.output_dims);
  TsneResult result;
  result.config = config;

  low_dim_affinities(Y, num, Q);
  result.initial_kl = kl_divergence(P, Q.cwiseMax(1e-12));

  for (int iter = 0; iter < config.iters; ++iter) {
    const double exaggeration =
        iter < config.exaggeration_iters ? config.early_exaggeration : 1.0;
    low_dim_affinities(Y, num, Q);

    grad.setZero();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const double mult =
            4.0 * (exaggeration * P(i, j) - Q(i, j)) * num(i, j);
        grad.row(i) += mult * (Y.row(i) - Y.row(j));
      }

    const double momentum = iter < config.momentum_switch_iter
                                ? config.momentum_initial
                                : config.momentum_final;
    for (Eigen::Index i = 0; i < grad.size(); ++i) {
      const bool same_sign =
          (grad.data()[i] > 0.0) == (velocity.data()[i] > 0.0);
      // The upper clamp stops per-coordinate gains from growing without
      // bound in the repulsion-dominated regime (well-separated clusters
      // keep a consistent gradient sign for hundreds of iterations), which
      // would otherwise inflate and shred the embedding.
      gains.data()[i] =
          std::clamp(same_sign ? gains.data()[i] * 0.8
                               : gains.data()[i] + 0.2,
                     0.01, 4.0);
    }
    velocity = momentum * velocity - step * gains.cwiseProduct(grad);
    Y += velocity;
    Y.rowwise() -= Y.colwise().mean();  // keep the embedding centered
  }

  low_dim_affinities(Y, num, Q);
  result.final_kl = kl_divergence(P, Q);
  result.coords = Y;
  return result;
}

}  // namespace mer::tsne
