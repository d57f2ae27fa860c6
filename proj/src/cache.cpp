#include "mer/cache.hpp"

#include <filesystem>
#include <stdexcept>

namespace fs = std::filesystem;

namespace mer::cache {

FeatureKind parse_feature_kind(const std::string& name) {
  if (name == "l3net512") return FeatureKind::l3net512;
  if (name == "l3net6144") return FeatureKind::l3net6144;
  if (name == "vggish128") return FeatureKind::vggish128;
  if (name == "mfcc80") return FeatureKind::mfcc80;
  throw std::invalid_argument("unknown feature kind '" + name + "'");
}

std::string feature_kind_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::l3net512: return "l3net512";
    case FeatureKind::l3net6144: return "l3net6144";
    case FeatureKind::vggish128: return "vggish128";
    case FeatureKind::mfcc80: return "mfcc80";
  }
  return "?";
}

int feature_dim(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::l3net512: return 512;
    case FeatureKind::l3net6144: return 6144;
    case FeatureKind::vggish128: return 128;
    case FeatureKind::mfcc80: return 80;
  }
  return 0;
}

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string extraction_config_hash(FeatureKind kind, int n_mels, double hop_s,
                                   uint64_t weight_seed,
                                   const std::string& weight_path) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s|mels=%d|hop=%.6f|seed=%llu|w=%s",
                feature_kind_name(kind).c_str(), n_mels, hop_s,
                (unsigned long long)weight_seed, weight_path.c_str());
  std::snprintf(buf, sizeof(buf), "%016llx",
                (unsigned long long)fnv1a(buf));
  return buf;
}

FeatureCache::FeatureCache(std::string dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
}

std::string FeatureCache::container_path(FeatureKind kind) const {
  return (fs::path(dir_) / ("features_" + feature_kind_name(kind) + ".mert"))
      .string();
}

void FeatureCache::ensure_loaded(FeatureKind kind) const {
  if (loaded_.count(kind)) return;
  const std::string path = container_path(kind);
  loaded_[kind] =
      fs::exists(path) ? container_read(path) : TensorContainer{};
}

TensorContainer& FeatureCache::container_for(FeatureKind kind) {
  ensure_loaded(kind);
  return loaded_[kind];
}

bool FeatureCache::has(FeatureKind kind, const std::string& clip_id,
                       const std::string& config_hash) const {
  ensure_loaded(kind);
  return loaded_[kind].has(clip_id + "#" + config_hash);
}

std::optional<Eigen::VectorXd> FeatureCache::get(
    FeatureKind kind, const std::string& clip_id,
    const std::string& config_hash) const {
  ensure_loaded(kind);
  const std::string name = clip_id + "#" + config_hash;
  if (!loaded_[kind].has(name)) return std::nullopt;
  const TensorEntry& e = loaded_[kind].at(name);
  Eigen::VectorXd v(Eigen::Index(e.element_count()));
  for (size_t i = 0; i < e.element_count(); ++i)
    v[Eigen::Index(i)] = e.dtype == DType::f64 ? e.f64[i] : double(e.f32[i]);
  return v;
}

void FeatureCache::put(FeatureKind kind, const std::string& clip_id,
                       const std::string& config_hash,
                       const Eigen::VectorXd& values) {
  container_for(kind).put_f64(
      clip_id + "#" + config_hash, {uint32_t(values.size())},
      std::vector<double>(values.data(), values.data() + values.size()));
}

std::vector<std::string> FeatureCache::entry_names(FeatureKind kind) const {
  ensure_loaded(kind);
  std::vector<std::string> out;
  for (const auto& [name, e] : loaded_[kind].entries) out.push_back(name);
  return out;
}

void FeatureCache::save(FeatureKind kind) {
  container_write(container_for(kind), container_path(kind));
}

void FeatureCache::remove_kind(FeatureKind kind) {
  loaded_.erase(kind);
  fs::remove(container_path(kind));
}

}  // namespace mer::cache
