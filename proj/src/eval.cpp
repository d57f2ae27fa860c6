#include "mer/eval.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace mer::eval {
namespace {

Matrix select_rows(const Matrix& X, const std::vector<Eigen::Index>& idx) {
  Matrix out(Eigen::Index(idx.size()), X.cols());
  for (size_t i = 0; i < idx.size(); ++i) out.row(Eigen::Index(i)) = X.row(idx[i]);
  return out;
}

Labels select_labels(const Labels& y, const std::vector<Eigen::Index>& idx) {
  Labels out(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) out[i] = y[size_t(idx[i])];
  return out;
}

Vector select_values(const Vector& v, const std::vector<Eigen::Index>& idx) {
  Vector out(Eigen::Index(idx.size()));
  for (size_t i = 0; i < idx.size(); ++i) out[Eigen::Index(i)] = v[idx[i]];
  return out;
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  const double mean =
      std::accumulate(xs.begin(), xs.end(), 0.0) / double(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= double(xs.size());
  return {mean, std::sqrt(var)};
}

}  // namespace

SplitIndices split(Eigen::Index n, const Labels& y, const SplitSpec& spec) {
  if (n < 10) throw TooSmall("need at least 10 samples to split");
  const Eigen::Index n_test = Eigen::Index(std::llround(double(n) * spec.test));
  const Eigen::Index n_val = Eigen::Index(std::llround(double(n) * spec.val));
  const Eigen::Index n_train = n - n_test - n_val;
  if (n_train < 1 || n_test < 1 || n_val < 1)
    throw TooSmall("a split would be empty at n=" + std::to_string(n));

  std::mt19937_64 rng(spec.seed);
  SplitIndices out;

  if (!spec.stratified) {
    std::vector<Eigen::Index> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    out.train.assign(order.begin(), order.begin() + n_train);
    out.test.assign(order.begin() + n_train, order.begin() + n_train + n_test);
    out.val.assign(order.begin() + n_train + n_test, order.end());
    return out;
  }

  // per-class shuffled pools
  std::map<int, std::vector<Eigen::Index>> pools;
  for (Eigen::Index i = 0; i < n; ++i) pools[y[size_t(i)]].push_back(i);
  for (auto& [c, pool] : pools) std::shuffle(pool.begin(), pool.end(), rng);

  // allocate test then val per class with largest-remainder rounding so the
  // global sizes land exactly on n_test / n_val
  auto allocate = [&](double fraction, Eigen::Index target,
                      std::map<int, Eigen::Index>& consumed,
                      std::vector<Eigen::Index>& dest) {
    std::vector<std::pair<double, int>> fracs;  // (frac part, class)
    Eigen::Index assigned = 0;
    std::map<int, Eigen::Index> take;
    for (const auto& [c, pool] : pools) {
      const double quota = double(pool.size()) * fraction;
      take[c] = Eigen::Index(std::floor(quota));
      assigned += take[c];
      fracs.push_back({quota - std::floor(quota), c});
    }
    // Ties go to the class with the fewest samples handed out so far, so
    // successive allocations (test, then val) spread the rounding evenly.
    std::sort(fracs.begin(), fracs.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      if (consumed[a.second] != consumed[b.second])
        return consumed[a.second] < consumed[b.second];
      return a.second < b.second;
    });
    for (size_t i = 0; assigned < target && i < fracs.size(); ++i) {
      ++take[fracs[i].second];
      ++assigned;
    }
    for (size_t i = 0; assigned > target && i < fracs.size(); ++i) {
      const int c = fracs[fracs.size() - 1 - i].second;
      if (take[c] > 0) {
        --take[c];
        --assigned;
      }
    }
    for (const auto& [c, pool] : pools) {
      for (Eigen::Index k = 0; k < take[c]; ++k)
        dest.push_back(pool[size_t(consumed[c] + k)]);
      consumed[c] += take[c];
    }
  };

  std::map<int, Eigen::Index> consumed;
  allocate(spec.test, n_test, consumed, out.test);
  allocate(spec.val, n_val, consumed, out.val);
  for (const auto& [c, pool] : pools)
    for (size_t k = size_t(consumed[c]); k < pool.size(); ++k)
      out.train.push_back(pool[k]);

  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  std::sort(out.val.begin(), out.val.end());
  return out;
}

double ConfusionMatrix::accuracy() const {
  const int t = total();
  return t > 0 ? double(counts.diagonal().sum()) / double(t) : 0.0;
}

ConfusionMatrix confusion(const Labels& y_true, const Labels& y_pred,
                          int n_classes, std::vector<std::string> class_names) {
  if (y_true.size() != y_pred.size())
    throw EvalError("label sequences have different lengths");
  ConfusionMatrix cm;
  cm.counts = Eigen::MatrixXi::Zero(n_classes, n_classes);
  for (size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] < 0 || y_true[i] >= n_classes || y_pred[i] < 0 ||
        y_pred[i] >= n_classes)
      throw UnknownLabel("label outside class list at index " +
                         std::to_string(i));
    cm.counts(y_true[i], y_pred[i]) += 1;
  }
  if (class_names.empty())
    for (int k = 0; k < n_classes; ++k)
      class_names.push_back("class" + std::to_string(k));
  cm.class_names = std::move(class_names);
  return cm;
}

MetricsReport precision_recall_f1(const ConfusionMatrix& cm) {
  const int K = int(cm.counts.rows());
  MetricsReport r;
  r.accuracy = cm.accuracy();
  const int total = cm.total();
  for (int k = 0; k < K; ++k) {
    ClassMetrics m;
    const int tp = cm.counts(k, k);
    const int col = cm.counts.col(k).sum();
    const int row = cm.counts.row(k).sum();
    m.precision = col > 0 ? double(tp) / col : 0.0;
    m.recall = row > 0 ? double(tp) / row : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    m.support = row;
    r.per_class.push_back(m);
    if (total > 0) {
      const double w = double(row) / total;
      r.weighted_precision += w * m.precision;
      r.weighted_f1 += w * m.f1;
    }
  }
  // Support-weighted recall is sum_k (n_k/N)(tp_k/n_k) = sum_k tp_k / N,
  // i.e. exactly the accuracy; computing it that way keeps the identity
  // free of per-class rounding.
  r.weighted_recall = r.accuracy;
  return r;
}

double r2(const Vector& y_true, const Vector& y_pred) {
  if (y_true.size() != y_pred.size() || y_true.size() < 2)
    throw EvalError("r2 needs >= 2 paired values");
  const double mean = y_true.mean();
  const double ss_tot = (y_true.array() - mean).square().sum();
  if (ss_tot <= 0.0) throw ZeroVariance("constant true values");
  const double ss_res = (y_true - y_pred).squaredNorm();
  return 1.0 - ss_res / ss_tot;
}

EvalReport run_experiment(const Matrix& features, const Labels& labels,
                          int n_classes, const ClassifierFactory& factory,
                          int reps, uint64_t base_seed,
                          std::vector<std::string> class_names) {
  EvalReport report;
  report.reps = reps;
  Eigen::MatrixXi pooled = Eigen::MatrixXi::Zero(n_classes, n_classes);

  for (int r = 0; r < reps; ++r) {
    SplitSpec spec;
    spec.seed = base_seed + uint64_t(r);
    SplitIndices idx = split(features.rows(), labels, spec);

    auto clf = factory();
    clf->fit(select_rows(features, idx.train), select_labels(labels, idx.train),
             select_rows(features, idx.val), select_labels(labels, idx.val),
             n_classes, spec.seed);
    Labels pred = clf->predict(select_rows(features, idx.test));
    ConfusionMatrix cm =
        confusion(select_labels(labels, idx.test), pred, n_classes, class_names);
    pooled += cm.counts;
    MetricsReport m = precision_recall_f1(cm);
    report.rep_accuracy.push_back(m.accuracy);
    report.rep_weighted_f1.push_back(m.weighted_f1);
  }

  report.pooled_cm.counts = pooled;
  report.pooled_cm.class_names = class_names;
  if (report.pooled_cm.class_names.empty())
    for (int k = 0; k < n_classes; ++k)
      report.pooled_cm.class_names.push_back("class" + std::to_string(k));
  report.pooled = precision_recall_f1(report.pooled_cm);
  std::tie(report.mean_accuracy, report.std_accuracy) =
      mean_std(report.rep_accuracy);
  std::tie(report.mean_f1, report.std_f1) = mean_std(report.rep_weighted_f1);
  return report;
}

Vector ridge_fit_predict(const Matrix& x_train, const Vector& y_train,
                         const Matrix& x_test, double lambda) {
  // center features and target; no penalty on the intercept
  Eigen::RowVectorXd x_mean = x_train.colwise().mean();
  const double y_mean = y_train.mean();
  Matrix Xc = x_train.rowwise() - x_mean;
  Vector yc = y_train.array() - y_mean;
  Matrix A = Xc.transpose() * Xc +
             lambda * Matrix::Identity(Xc.cols(), Xc.cols());
  Vector w = A.ldlt().solve(Xc.transpose() * yc);
  return ((x_test.rowwise() - x_mean) * w).array() + y_mean;
}

std::pair<double, double> run_regression_experiment(const Matrix& features,
                                                    const Vector& arousal,
                                                    const Vector& valence,
                                                    int reps,
                                                    uint64_t base_seed,
                                                    double lambda) {
  double sum_a = 0.0, sum_v = 0.0;
  Labels dummy(size_t(features.rows()), 0);
  for (int r = 0; r < reps; ++r) {
    SplitSpec spec;
    spec.stratified = false;  // continuous targets
    spec.seed = base_seed + uint64_t(r);
    SplitIndices idx = split(features.rows(), dummy, spec);
    Matrix x_tr = select_rows(features, idx.train);
    Matrix x_te = select_rows(features, idx.test);
    sum_a += r2(select_values(arousal, idx.test),
                ridge_fit_predict(x_tr, select_values(arousal, idx.train), x_te,
                                  lambda));
    sum_v += r2(select_values(valence, idx.test),
                ridge_fit_predict(x_tr, select_values(valence, idx.train), x_te,
                                  lambda));
  }
  return {sum_a / reps, sum_v / reps};
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string render_text_table(const EvalReport& report) {
  std::ostringstream os;
  char line[160];
  os << "Class       Precision  Recall     F1-score   Support\n";
  for (size_t k = 0; k < report.pooled.per_class.size(); ++k) {
    const auto& m = report.pooled.per_class[k];
    std::snprintf(line, sizeof(line), "%-12s%-11.2f%-11.2f%-11.2f%d\n",
                  report.pooled_cm.class_names[k].c_str(), m.precision,
                  m.recall, m.f1, m.support);
    os << line;
  }
  std::snprintf(line, sizeof(line), "%-12s%-33.2f%d\n", "Accuracy",
                report.pooled.accuracy, report.pooled_cm.total());
  os << line;
  std::snprintf(line, sizeof(line), "%-12s%-11.2f%-11.2f%-11.2f%d\n",
                "Weighted avg", report.pooled.weighted_precision,
                report.pooled.weighted_recall, report.pooled.weighted_f1,
                report.pooled_cm.total());
  os << line;
  std::snprintf(line, sizeof(line),
                "Mean over %d reps: accuracy %.4f +- %.4f, F1 %.4f +- %.4f\n",
                report.reps, report.mean_accuracy, report.std_accuracy,
                report.mean_f1, report.std_f1);
  os << line;
  if (report.r2_av) {
    std::snprintf(line, sizeof(line), "A: %.3f V: %.3f\n", report.r2_av->first,
                  report.r2_av->second);
    os << line;
  }
  return os.str();
}

std::string render_json(const EvalReport& report) {
  // fixed key order, %.17g floats: byte-stable across runs
  std::ostringstream os;
  os << "{\"accuracy_mean\":" << format_double(report.mean_accuracy)
     << ",\"accuracy_std\":" << format_double(report.std_accuracy)
     << ",\"f1_mean\":" << format_double(report.mean_f1)
     << ",\"f1_std\":" << format_double(report.std_f1) << ",\"reps\":"
     << report.reps << ",\"pooled\":{\"accuracy\":"
     << format_double(report.pooled.accuracy)
     << ",\"weighted_precision\":"
     << format_double(report.pooled.weighted_precision)
     << ",\"weighted_recall\":" << format_double(report.pooled.weighted_recall)
     << ",\"weighted_f1\":" << format_double(report.pooled.weighted_f1)
     << ",\"per_class\":[";
  for (size_t k = 0; k < report.pooled.per_class.size(); ++k) {
    const auto& m = report.pooled.per_class[k];
    if (k) os << ",";
    os << "{\"class\":\"" << report.pooled_cm.class_names[k]
       << "\",\"precision\":" << format_double(m.precision)
       << ",\"recall\":" << format_double(m.recall)
       << ",\"f1\":" << format_double(m.f1) << ",\"support\":" << m.support
       << "}";
  }
  os << "],\"confusion\":[";
  for (Eigen::Index i = 0; i < report.pooled_cm.counts.rows(); ++i) {
    if (i) os << ",";
    os << "[";
    for (Eigen::Index j = 0; j < report.pooled_cm.counts.cols(); ++j) {
      if (j) os << ",";
      os << report.pooled_cm.counts(i, j);
    }
    os << "]";
  }
  os << "]}";  // end pooled
  if (report.r2_av)
    os << ",\"r2\":{\"arousal\":" << format_double(report.r2_av->first)
       << ",\"valence\":" << format_double(report.r2_av->second) << "}";
  os << "}";
  return os.str();
}

}  // namespace mer::eval
