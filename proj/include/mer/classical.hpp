#pragma once

#include <Eigen/Core>
#include <memory>
#include <stdexcept>
#include <vector>

#include "mer/container.hpp"

namespace mer::ml {

struct MlError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SingleClass : MlError {
  using MlError::MlError;
};
struct DimensionMismatch : MlError {
  using MlError::MlError;
};

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;

/// Per-feature zero-mean unit-variance transform fitted on the training split.
struct Standardizer {
  Vector mean, std;
  void fit(const Matrix& X);
  Matrix apply(const Matrix& X) const;
};

enum class SvmKernel { rbf, linear };

struct SvmHyper {
  SvmKernel kernel = SvmKernel::rbf;
  double C = 1.0;
  double gamma = 0.0;  // 0 -> 1 / (d * var(X)) after standardization
  int max_passes = 200;
  double tol = 1e-3;
};

/// One-vs-one RBF/linear SVM solved with SMO on standardized features.
class SvmModel {
 public:
  static SvmModel train(const Matrix& X, const Labels& y, const SvmHyper& hyper);
  Labels predict(const Matrix& X) const;
  /// Vote fractions over the one-vs-one machines.
  Matrix predict_proba(const Matrix& X) const;
  bool converged() const { return converged_; }
  int n_classes() const { return n_classes_; }
  void save(TensorContainer& c, const std::string& prefix = "svm") const;
  static SvmModel load(const TensorContainer& c,
                       const std::string& prefix = "svm");

 private:
  struct BinaryMachine {
    int class_a, class_b;
    Matrix support_vectors;
    Vector coeffs;  // alpha_i * y_i
    double bias = 0.0;
  };
  double kernel_eval(const Vector& a, const Vector& b) const;
  double decision(const BinaryMachine& m, const Vector& x) const;

  SvmHyper hyper_;
  Standardizer scaler_;
  std::vector<BinaryMachine> machines_;
  std::vector<int> classes_;
  int n_classes_ = 0;
  bool converged_ = true;
};

/// Gaussian class-conditional Naive Bayes on standardized features.
class NbModel {
 public:
  static NbModel train(const Matrix& X, const Labels& y);
  Labels predict(const Matrix& X) const;
  Matrix predict_proba(const Matrix& X) const;
  Matrix log_posterior(const Matrix& X) const;  // unnormalized
  void save(TensorContainer& c, const std::string& prefix = "nb") const;
  static NbModel load(const TensorContainer& c,
                      const std::string& prefix = "nb");

 private:
  Standardizer scaler_;
  std::vector<int> classes_;
  Vector log_priors_;
  Matrix means_, vars_;  // class x feature
};

/// Bootstrap-aggregated CART trees, Gini splits, sqrt(d) features per split,
/// grown to purity. Consumes raw (unstandardized) features.
class RfModel {
 public:
  static RfModel train(const Matrix& X, const Labels& y, int n_trees = 100,
                       uint64_t seed = 0);
  Labels predict(const Matrix& X) const;
  Matrix predict_proba(const Matrix& X) const;
  int n_trees() const { return int(trees_.size()); }
  void save(TensorContainer& c, const std::string& prefix = "rf") const;
  static RfModel load(const TensorContainer& c,
                      const std::string& prefix = "rf");

 private:
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    int left = -1, right = -1;
    int label = -1;  // leaf when >= 0
  };
  struct Tree {
    std::vector<Node> nodes;
  };
  int predict_tree(const Tree& t, const Vector& x) const;

  std::vector<Tree> trees_;
  std::vector<int> classes_;
  Eigen::Index n_features_ = 0;
};

}  // namespace mer::ml
