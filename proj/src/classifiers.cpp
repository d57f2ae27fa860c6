#include "mer/classifiers.hpp"

#include <cmath>
#include <optional>

#include "mer/classical.hpp"

namespace mer {
namespace {

using eval::Labels;
using eval::Matrix;

class SvmClassifier final : public PersistentClassifier {
 public:
  void fit(const Matrix& x, const Labels& y, const Matrix&, const Labels&, int,
           uint64_t) override {
    model_ = ml::SvmModel::train(x, y, ml::SvmHyper{});
  }
  Labels predict(const Matrix& x) const override { return model_.value().predict(x); }
  void save(TensorContainer& c) const override { model_.value().save(c); }
  void load(const TensorContainer& c) override {
    model_ = ml::SvmModel::load(c);
  }

 private:
  std::optional<ml::SvmModel> model_;
};

class NbClassifier final : public PersistentClassifier {
 public:
  void fit(const Matrix& x, const Labels& y, const Matrix&, const Labels&, int,
           uint64_t) override {
    model_ = ml::NbModel::train(x, y);
  }
  Labels predict(const Matrix& x) const override { return model_.value().predict(x); }
  void save(TensorContainer& c) const override { model_.value().save(c); }
  void load(const TensorContainer& c) override { model_ = ml::NbModel::load(c); }

 private:
  std::optional<ml::NbModel> model_;
};

class RfClassifier final : public PersistentClassifier {
 public:
  void fit(const Matrix& x, const Labels& y, const Matrix&, const Labels&, int,
           uint64_t seed) override {
    model_ = ml::RfModel::train(x, y, 100, seed);
  }
  Labels predict(const Matrix& x) const override { return model_.value().predict(x); }
  void save(TensorContainer& c) const override { model_.value().save(c); }
  void load(const TensorContainer& c) override { model_ = ml::RfModel::load(c); }

 private:
  std::optional<ml::RfModel> model_;
};

/// Shared plumbing for the neural families: builds the architecture lazily
/// at fit/load time from (input_dim, n_classes), trains with softmax + CCE.
class NeuralClassifier : public PersistentClassifier {
 public:
  explicit NeuralClassifier(ClassifierKind kind, nn::TrainSchedule schedule)
      : kind_(kind), schedule_(schedule) {}

  void fit(const Matrix& x, const Labels& y, const Matrix& x_val,
           const Labels& y_val, int n_classes, uint64_t seed) override {
    input_dim_ = int(x.cols());
    n_classes_ = n_classes;
    nn::TrainSchedule schedule = schedule_;
    schedule.seed = seed;
    if (x_val.rows() == 0) schedule.patience.reset();
    build(seed);
    Matrix xt = transform(x);
    Matrix xv = x_val.rows() > 0 ? transform(x_val) : x_val;
    result_ = nn::fit(net_, xt, y, xv, y_val, n_classes, schedule);
  }

  Labels predict(const Matrix& x) const override {
    auto& net = const_cast<nn::Network&>(net_);
    Matrix probs = nn::softmax(net.forward(transform(x)));
    Labels out(size_t(x.rows()));
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
      Eigen::Index k;
      probs.row(i).maxCoeff(&k);
      out[size_t(i)] = int(k);
    }
    return out;
  }

  void save(TensorContainer& c) const override {
    c.put_f64("arch.meta", {3},
              {double(int(kind_)), double(input_dim_), double(n_classes_)});
    net_.save_params(c);
  }

  void load(const TensorContainer& c) override {
    const auto& meta = c.at("arch.meta");
    input_dim_ = int(meta.f64.at(1));
    n_classes_ = int(meta.f64.at(2));
    build(0);
    net_.load_params(c);
  }

  std::vector<nn::EpochRecord> history() const override {
    return result_ ? result_->history : std::vector<nn::EpochRecord>{};
  }

 protected:
  virtual void build(uint64_t seed) = 0;
  virtual Matrix transform(const Matrix& x) const { return x; }

  ClassifierKind kind_;
  nn::TrainSchedule schedule_;
  nn::Network net_;
  int input_dim_ = 0;
  int n_classes_ = 0;
  std::optional<nn::FitResult> result_;
};

class MlpClassifier final : public NeuralClassifier {
 public:
  using NeuralClassifier::NeuralClassifier;

 protected:
  void build(uint64_t seed) override {
    std::mt19937_64 rng(seed);
    net_.layers.clear();
    net_.layers.push_back(nn::make_dense(input_dim_, 512, rng));
    net_.layers.push_back(nn::make_relu());
    net_.layers.push_back(nn::make_dense(512, n_classes_, rng));
  }
};

class CnnClassifier final : public NeuralClassifier {
 public:
  using NeuralClassifier::NeuralClassifier;

 protected:
  void build(uint64_t seed) override {
    std::mt19937_64 rng(seed);
    net_.layers.clear();
    // four 1-D convs, 64 filters each, one max-pool after the first conv
    constexpr int k = 3, filters = 64, pool = 8;
    int L = input_dim_;
    net_.layers.push_back(nn::make_conv1d(L, 1, filters, k, rng));
    net_.layers.push_back(nn::make_relu());
    L = L - k + 1;
    net_.layers.push_back(nn::make_maxpool1d(L, filters, pool, pool));
    L = (L - pool) / pool + 1;
    for (int i = 0; i < 3; ++i) {
      net_.layers.push_back(nn::make_conv1d(L, filters, filters, k, rng));
      net_.layers.push_back(nn::make_relu());
      L = L - k + 1;
    }
    net_.layers.push_back(nn::make_dense(L * filters, n_classes_, rng));
  }
};

class RnnClassifier final : public NeuralClassifier {
 public:
  using NeuralClassifier::NeuralClassifier;
  static constexpr int kSteps = 4;
  static constexpr int kHidden = 128;

 protected:
  void build(uint64_t seed) override {
    std::mt19937_64 rng(seed);
    net_.layers.clear();
    net_.layers.push_back(
        nn::make_lstm_last(kSteps, input_dim_, kHidden, rng));
    net_.layers.push_back(nn::make_dense(kHidden, n_classes_, rng));
  }
  // clip-level vectors are fed as constant length-kSteps sequences
  Matrix transform(const Matrix& x) const override {
    Matrix out(x.rows(), x.cols() * kSteps);
    for (int t = 0; t < kSteps; ++t)
      out.middleCols(Eigen::Index(t) * x.cols(), x.cols()) = x;
    return out;
  }
};

}  // namespace

ClassifierKind parse_classifier_kind(const std::string& name) {
  if (name == "svm") return ClassifierKind::svm;
  if (name == "nb") return ClassifierKind::nb;
  if (name == "rf") return ClassifierKind::rf;
  if (name == "mlp") return ClassifierKind::mlp;
  if (name == "cnn") return ClassifierKind::cnn;
  if (name == "rnn") return ClassifierKind::rnn;
  throw std::invalid_argument("unknown classifier '" + name + "'");
}

std::string classifier_kind_name(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::svm: return "svm";
    case ClassifierKind::nb: return "nb";
    case ClassifierKind::rf: return "rf";
    case ClassifierKind::mlp: return "mlp";
    case ClassifierKind::cnn: return "cnn";
    case ClassifierKind::rnn: return "rnn";
  }
  return "?";
}

std::unique_ptr<PersistentClassifier> make_classifier(
    ClassifierKind kind, const nn::TrainSchedule& schedule) {
  switch (kind) {
    case ClassifierKind::svm: return std::make_unique<SvmClassifier>();
    case ClassifierKind::nb: return std::make_unique<NbClassifier>();
    case ClassifierKind::rf: return std::make_unique<RfClassifier>();
    case ClassifierKind::mlp:
      return std::make_unique<MlpClassifier>(kind, schedule);
    case ClassifierKind::cnn:
      return std::make_unique<CnnClassifier>(kind, schedule);
    case ClassifierKind::rnn:
      return std::make_unique<RnnClassifier>(kind, schedule);
  }
  throw std::invalid_argument("unknown classifier kind");
}

eval::ClassifierFactory make_classifier_factory(
    ClassifierKind kind, const nn::TrainSchedule& schedule) {
  return [kind, schedule]() -> std::unique_ptr<eval::Classifier> {
    return make_classifier(kind, schedule);
  };
}

}  // namespace mer
