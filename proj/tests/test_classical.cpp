#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "mer/classical.hpp"

using namespace mer::ml;

namespace {

double accuracy(const Labels& pred, const Labels& truth) {
  int ok = 0;
  for (size_t i = 0; i < pred.size(); ++i) ok += pred[i] == truth[i];
  return double(ok) / double(pred.size());
}

}  // namespace

TEST_CASE("classical: standardizer yields zero mean, unit variance") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d(5.0, 2.0);
  Matrix X(200, 3);
  for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = d(rng);
  X.col(2).setConstant(7.0);  // zero-variance column must not blow up

  Standardizer s;
  s.fit(X);
  Matrix Z = s.apply(X);
  for (int j = 0; j < 2; ++j) {
    CHECK(Z.col(j).mean() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(Z.col(j).squaredNorm() / 200.0 == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK(Z.col(2).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("classical: linear SVM recovers a symmetric 1-D boundary") {
  // Classes at -2 and +2 on one axis: the decision boundary sits at 0.
  Matrix X(40, 1);
  Labels y;
  for (int i = 0; i < 20; ++i) {
    X(i, 0) = -2.0 + 0.05 * i;      // [-2, -1.05]
    X(20 + i, 0) = 2.0 - 0.05 * i;  // [2, 1.05]
    y.push_back(0);
  }
  for (int i = 0; i < 20; ++i) y.push_back(1);

  SvmHyper hyper;
  hyper.kernel = SvmKernel::linear;
  SvmModel m = SvmModel::train(X, y, hyper);
  CHECK(m.converged());

  Matrix probe(2, 1);
  probe << -0.2, 0.2;
  Labels pred = m.predict(probe);
  CHECK(pred[0] == 0);
  CHECK(pred[1] == 1);
}

TEST_CASE("classical: rbf SVM separates 4-class blobs") {
  Matrix X;
  Labels y;
  testutil::make_blobs(4, 50, 8, 5.0, 11, X, y);
  Matrix Xt;
  Labels yt;
  testutil::make_blobs(4, 20, 8, 5.0, 12, Xt, yt);

  SvmModel m = SvmModel::train(X, y, SvmHyper{});
  CHECK(accuracy(m.predict(Xt), yt) >= 0.99);

  Matrix proba = m.predict_proba(Xt);
  CHECK(proba.rows() == Xt.rows());
  CHECK(proba.cols() == 4);
  for (Eigen::Index i = 0; i < proba.rows(); ++i)
    CHECK(proba.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("classical: SVM predictions survive sample duplication") {
  Matrix X;
  Labels y;
  testutil::make_blobs(3, 30, 4, 4.0, 21, X, y);
  Matrix X2(X.rows() * 2, X.cols());
  X2 << X, X;
  Labels y2 = y;
  y2.insert(y2.end(), y.begin(), y.end());

  Matrix probe;
  Labels ignore;
  testutil::make_blobs(3, 10, 4, 4.0, 22, probe, ignore);
  SvmModel a = SvmModel::train(X, y, SvmHyper{});
  SvmModel b = SvmModel::train(X2, y2, SvmHyper{});
  CHECK(a.predict(probe) == b.predict(probe));
}

TEST_CASE("classical: SVM round-trips through a container") {
  Matrix X;
  Labels y;
  testutil::make_blobs(3, 30, 4, 4.0, 31, X, y);
  SvmModel m = SvmModel::train(X, y, SvmHyper{});
  mer::TensorContainer c;
  m.save(c);
  SvmModel back = SvmModel::load(c);
  Matrix probe;
  Labels ignore;
  testutil::make_blobs(3, 15, 4, 4.0, 32, probe, ignore);
  CHECK(m.predict(probe) == back.predict(probe));
  CHECK(m.predict_proba(probe) == back.predict_proba(probe));
}

TEST_CASE("classical: SVM rejects single-class training data") {
  Matrix X = Matrix::Random(10, 2);
  Labels y(10, 0);
  CHECK_THROWS_AS(SvmModel::train(X, y, SvmHyper{}), SingleClass);
}

TEST_CASE("classical: naive bayes log posterior matches the direct formula") {
  Matrix X;
  Labels y;
  testutil::make_blobs(2, 40, 3, 3.0, 41, X, y);
  NbModel m = NbModel::train(X, y);

  // Recompute from first principles on the standardized features.
  Standardizer s;
  s.fit(X);
  Matrix Z = s.apply(X);
  const Eigen::Index n = Z.rows();
  std::vector<std::vector<Eigen::Index>> by_class(2);
  for (Eigen::Index i = 0; i < n; ++i) by_class[size_t(y[size_t(i)])].push_back(i);

  // Smoothing scale comes from the largest full-column variance.
  double max_var = 0.0;
  for (int j = 0; j < 3; ++j) {
    const double cm = Z.col(j).mean();
    max_var = std::max(max_var,
                       (Z.col(j).array() - cm).square().sum() / double(n));
  }
  const double smoothing = 1e-9 * max_var;

  Matrix mu(2, 3), var(2, 3);
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < 3; ++j) {
      double mean = 0.0;
      for (auto i : by_class[k]) mean += Z(i, j);
      mean /= double(by_class[k].size());
      double v = 0.0;
      for (auto i : by_class[k]) v += (Z(i, j) - mean) * (Z(i, j) - mean);
      v /= double(by_class[k].size());
      mu(k, j) = mean;
      var(k, j) = v;
    }

  Matrix probe = X.topRows(5);
  Matrix got = m.log_posterior(probe);
  Matrix zp = s.apply(probe);
  for (Eigen::Index i = 0; i < probe.rows(); ++i)
    for (int k = 0; k < 2; ++k) {
      double lp = std::log(double(by_class[k].size()) / double(n));
      for (int j = 0; j < 3; ++j) {
        const double v = var(k, j) + smoothing;
        const double d = zp(i, j) - mu(k, j);
        lp += -0.5 * std::log(2.0 * M_PI * v) - d * d / (2.0 * v);
      }
      CHECK(std::abs(got(i, k) - lp) < 1e-10);
    }
}

TEST_CASE("classical: naive bayes classifies symmetric blobs") {
  Matrix X;
  Labels y;
  testutil::make_blobs(4, 60, 6, 5.0, 51, X, y);
  NbModel m = NbModel::train(X, y);
  CHECK(accuracy(m.predict(X), y) >= 0.99);

  Matrix proba = m.predict_proba(X.topRows(10));
  for (Eigen::Index i = 0; i < proba.rows(); ++i)
    CHECK(proba.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));

  mer::TensorContainer c;
  m.save(c);
  CHECK(NbModel::load(c).predict(X) == m.predict(X));
}

TEST_CASE("classical: random forest learns XOR") {
  // Linearly inseparable: a depth-limited linear model cannot do this.
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Matrix X(200, 2);
  Labels y;
  for (int i = 0; i < 200; ++i) {
    X(i, 0) = dist(rng);
    X(i, 1) = dist(rng);
    y.push_back((X(i, 0) > 0) != (X(i, 1) > 0) ? 1 : 0);
  }
  RfModel m = RfModel::train(X, y, 50, 0);
  CHECK(m.n_trees() == 50);
  CHECK(accuracy(m.predict(X), y) >= 0.95);
}

TEST_CASE("classical: random forest memorizes pure training data") {
  Matrix X;
  Labels y;
  testutil::make_blobs(3, 25, 4, 3.0, 71, X, y);
  RfModel m = RfModel::train(X, y, 100, 5);
  // Trees grown to purity + bootstrap voting: near-perfect recall of the
  // training set.
  CHECK(accuracy(m.predict(X), y) >= 0.99);
}

TEST_CASE("classical: random forest is seed-deterministic and serializable") {
  Matrix X;
  Labels y;
  testutil::make_blobs(3, 30, 5, 2.0, 81, X, y);
  Matrix probe;
  Labels ignore;
  testutil::make_blobs(3, 20, 5, 2.0, 82, probe, ignore);

  RfModel a = RfModel::train(X, y, 40, 9);
  RfModel b = RfModel::train(X, y, 40, 9);
  RfModel c = RfModel::train(X, y, 40, 10);
  CHECK(a.predict(probe) == b.predict(probe));
  CHECK(a.predict_proba(probe) == b.predict_proba(probe));
  // A different bagging seed should change at least one vote fraction.
  CHECK(a.predict_proba(probe) != c.predict_proba(probe));

  mer::TensorContainer cont;
  a.save(cont);
  CHECK(RfModel::load(cont).predict(probe) == a.predict(probe));
}
