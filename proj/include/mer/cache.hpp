#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mer/container.hpp"

namespace mer::cache {

enum class FeatureKind { l3net512, l3net6144, vggish128, mfcc80 };

FeatureKind parse_feature_kind(const std::string& name);
std::string feature_kind_name(FeatureKind kind);
int feature_dim(FeatureKind kind);

uint64_t fnv1a(const std::string& s);

/// Hash over every extraction-relevant parameter; changing any of them
/// invalidates cached entries of that kind.
std::string extraction_config_hash(FeatureKind kind, int n_mels, double hop_s,
                                   uint64_t weight_seed,
                                   const std::string& weight_path);

/// One container per feature kind under the cache directory; entry names are
/// "<clip_id>#<config_hash>".
class FeatureCache {
 public:
  explicit FeatureCache(std::string dir);

  bool has(FeatureKind kind, const std::string& clip_id,
           const std::string& config_hash) const;
  std::optional<Eigen::VectorXd> get(FeatureKind kind,
                                     const std::string& clip_id,
                                     const std::string& config_hash) const;
  void put(FeatureKind kind, const std::string& clip_id,
           const std::string& config_hash, const Eigen::VectorXd& values);
  /// Ids (with hashes) currently cached for a kind.
  std::vector<std::string> entry_names(FeatureKind kind) const;
  /// Flushes a kind's container to disk (atomic rename).
  void save(FeatureKind kind);
  void remove_kind(FeatureKind kind);

  std::string container_path(FeatureKind kind) const;

 private:
  TensorContainer& container_for(FeatureKind kind);
  const TensorContainer* container_if_loaded(FeatureKind kind) const;
  void ensure_loaded(FeatureKind kind) const;

  std::string dir_;
  mutable std::map<FeatureKind, TensorContainer> loaded_;
};

}  // namespace mer::cache
