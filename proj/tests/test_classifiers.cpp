#include <doctest.h>

#include "helpers.hpp"
#include "mer/classifiers.hpp"

using namespace mer;

namespace {

nn::TrainSchedule quick_schedule() {
  nn::TrainSchedule s;
  s.max_epochs = 30;
  s.patience = 8;
  return s;
}

}  // namespace

TEST_CASE("classifiers: kind names round-trip") {
  for (const char* name : {"svm", "nb", "rf", "mlp", "cnn", "rnn"})
    CHECK(classifier_kind_name(parse_classifier_kind(name)) == name);
  CHECK_THROWS_AS(parse_classifier_kind("boosted"), std::invalid_argument);
}

TEST_CASE("classifiers: every family learns small blobs behind one interface") {
  Eigen::MatrixXd X, Xv, Xt;
  std::vector<int> y, yv, yt;
  testutil::make_blobs(3, 40, 64, 6.0, 1, X, y);
  testutil::make_blobs(3, 10, 64, 6.0, 2, Xv, yv);
  testutil::make_blobs(3, 15, 64, 6.0, 3, Xt, yt);

  for (ClassifierKind kind :
       {ClassifierKind::svm, ClassifierKind::nb, ClassifierKind::rf,
        ClassifierKind::mlp, ClassifierKind::cnn, ClassifierKind::rnn}) {
    CAPTURE(classifier_kind_name(kind));
    auto clf = make_classifier(kind, quick_schedule());
    clf->fit(X, y, Xv, yv, 3, 5);
    auto pred = clf->predict(Xt);
    int ok = 0;
    for (size_t i = 0; i < pred.size(); ++i) ok += pred[i] == yt[size_t(i)];
    CHECK(double(ok) / double(pred.size()) >= 0.9);
  }
}

TEST_CASE("classifiers: models survive the container round-trip") {
  Eigen::MatrixXd X, Xv, Xt;
  std::vector<int> y, yv, yt;
  testutil::make_blobs(3, 30, 64, 5.0, 11, X, y);
  testutil::make_blobs(3, 8, 64, 5.0, 12, Xv, yv);
  testutil::make_blobs(3, 10, 64, 5.0, 13, Xt, yt);

  for (ClassifierKind kind :
       {ClassifierKind::svm, ClassifierKind::nb, ClassifierKind::rf,
        ClassifierKind::mlp, ClassifierKind::cnn, ClassifierKind::rnn}) {
    CAPTURE(classifier_kind_name(kind));
    auto clf = make_classifier(kind, quick_schedule());
    clf->fit(X, y, Xv, yv, 3, 7);
    TensorContainer c;
    clf->save(c);
    auto back = make_classifier(kind, quick_schedule());
    back->load(c);
    CHECK(back->predict(Xt) == clf->predict(Xt));
  }
}

TEST_CASE("classifiers: neural kinds are seed-deterministic") {
  Eigen::MatrixXd X, Xv, Xt;
  std::vector<int> y, yv, yt;
  testutil::make_blobs(2, 25, 64, 5.0, 21, X, y);
  testutil::make_blobs(2, 8, 64, 5.0, 22, Xv, yv);
  testutil::make_blobs(2, 10, 64, 5.0, 23, Xt, yt);

  for (ClassifierKind kind :
       {ClassifierKind::mlp, ClassifierKind::cnn, ClassifierKind::rnn}) {
    CAPTURE(classifier_kind_name(kind));
    auto a = make_classifier(kind, quick_schedule());
    auto b = make_classifier(kind, quick_schedule());
    a->fit(X, y, Xv, yv, 2, 9);
    b->fit(X, y, Xv, yv, 2, 9);
    CHECK(a->predict(Xt) == b->predict(Xt));
    CHECK(!a->history().empty());
    CHECK(a->history().size() == b->history().size());
  }
}

TEST_CASE("classifiers: factory produces independent instances") {
  Eigen::MatrixXd X, Xv;
  std::vector<int> y, yv;
  testutil::make_blobs(2, 20, 6, 5.0, 31, X, y);
  testutil::make_blobs(2, 6, 6, 5.0, 32, Xv, yv);

  auto factory = make_classifier_factory(ClassifierKind::nb, quick_schedule());
  auto one = factory();
  auto two = factory();
  one->fit(X, y, Xv, yv, 2, 0);
  // The second instance is untrained and unaffected by the first.
  CHECK_THROWS(two->predict(X));
}
