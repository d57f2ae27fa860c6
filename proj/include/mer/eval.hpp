#pragma once

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mer::eval {

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TooSmall : EvalError {
  using EvalError::EvalError;
};
struct UnknownLabel : EvalError {
  using EvalError::EvalError;
};
struct ZeroVariance : EvalError {
  using EvalError::EvalError;
};

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;

struct SplitSpec {
  double train = 0.8, test = 0.1, val = 0.1;
  bool stratified = true;
  uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<Eigen::Index> train, test, val;
};

/// Disjoint covering split. Stratified mode preserves class proportions
/// within +-1 sample per class per split.
SplitIndices split(Eigen::Index n, const Labels& y, const SplitSpec& spec);

struct ConfusionMatrix {
  Eigen::MatrixXi counts;  // rows = true, cols = predicted
  std::vector<std::string> class_names;

  int total() const { return counts.sum(); }
  double accuracy() const;
};

ConfusionMatrix confusion(const Labels& y_true, const Labels& y_pred,
                          int n_classes,
                          std::vector<std::string> class_names = {});

struct ClassMetrics {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  int support = 0;
};

struct MetricsReport {
  std::vector<ClassMetrics> per_class;
  double accuracy = 0.0;
  double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;
};

/// Zero-denominator precision/recall/F1 are defined as 0.
MetricsReport precision_recall_f1(const ConfusionMatrix& cm);

double r2(const Vector& y_true, const Vector& y_pred);

/// Classifier contract used by run_experiment. Implementations wrap the six
/// model families.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual void fit(const Matrix& x_train, const Labels& y_train,
                   const Matrix& x_val, const Labels& y_val, int n_classes,
                   uint64_t seed) = 0;
  virtual Labels predict(const Matrix& x) const = 0;
};

using ClassifierFactory = std::function<std::unique_ptr<Classifier>()>;

struct EvalReport {
  MetricsReport pooled;  // from the confusion matrix pooled across reps
  ConfusionMatrix pooled_cm;
  std::vector<double> rep_accuracy;
  std::vector<double> rep_weighted_f1;
  double mean_accuracy = 0.0, std_accuracy = 0.0;
  double mean_f1 = 0.0, std_f1 = 0.0;
  std::optional<std::pair<double, double>> r2_av;  // (arousal, valence)
  int reps = 0;
};

/// Monte-Carlo cross-validation: `reps` independent stratified re-splits
/// with seeds base_seed, base_seed+1, ...; train on each, evaluate on test.
EvalReport run_experiment(const Matrix& features, const Labels& labels,
                          int n_classes, const ClassifierFactory& factory,
                          int reps, uint64_t base_seed,
                          std::vector<std::string> class_names = {});

/// Ridge regression head (lambda = 1) per target; returns mean test-split
/// r2 over reps, ordered (arousal, valence).
std::pair<double, double> run_regression_experiment(const Matrix& features,
                                                    const Vector& arousal,
                                                    const Vector& valence,
                                                    int reps,
                                                    uint64_t base_seed,
                                                    double lambda = 1.0);

/// Ridge fit + predict used by the regression experiment and its tests.
Vector ridge_fit_predict(const Matrix& x_train, const Vector& y_train,
                         const Matrix& x_test, double lambda);

std::string render_text_table(const EvalReport& report);
std::string render_json(const EvalReport& report);

/// %.17g formatting shared by all machine outputs.
std::string format_double(double v);

}  // namespace mer::eval
