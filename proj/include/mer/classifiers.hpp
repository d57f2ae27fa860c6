#pragma once

#include <memory>
#include <string>

#include "mer/container.hpp"
#include "mer/eval.hpp"
#include "mer/nn.hpp"

namespace mer {

enum class ClassifierKind { svm, nb, rf, mlp, cnn, rnn };

ClassifierKind parse_classifier_kind(const std::string& name);
std::string classifier_kind_name(ClassifierKind kind);

/// eval::Classifier plus container round-tripping for cmd_train / cmd_eval.
class PersistentClassifier : public eval::Classifier {
 public:
  virtual void save(TensorContainer& c) const = 0;
  virtual void load(const TensorContainer& c) = 0;
  virtual std::vector<nn::EpochRecord> history() const { return {}; }
};

/// The six model families behind one interface. Neural kinds honor the
/// schedule; classical kinds ignore it.
std::unique_ptr<PersistentClassifier> make_classifier(
    ClassifierKind kind, const nn::TrainSchedule& schedule);

eval::ClassifierFactory make_classifier_factory(
    ClassifierKind kind, const nn::TrainSchedule& schedule);

}  // namespace mer
