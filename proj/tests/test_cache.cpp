#include <doctest.h>

#include <filesystem>

#include "helpers.hpp"
#include "mer/cache.hpp"

using namespace mer::cache;

TEST_CASE("cache: feature kinds parse and report dimensions") {
  CHECK(parse_feature_kind("l3net512") == FeatureKind::l3net512);
  CHECK(parse_feature_kind("mfcc80") == FeatureKind::mfcc80);
  CHECK_THROWS_AS(parse_feature_kind("bogus"), std::invalid_argument);
  CHECK(feature_dim(FeatureKind::l3net512) == 512);
  CHECK(feature_dim(FeatureKind::l3net6144) == 6144);
  CHECK(feature_dim(FeatureKind::vggish128) == 128);
  CHECK(feature_dim(FeatureKind::mfcc80) == 80);
  for (FeatureKind k : {FeatureKind::l3net512, FeatureKind::l3net6144,
                        FeatureKind::vggish128, FeatureKind::mfcc80})
    CHECK(parse_feature_kind(feature_kind_name(k)) == k);
}

TEST_CASE("cache: config hash tracks every extraction parameter") {
  const std::string base =
      extraction_config_hash(FeatureKind::l3net512, 256, 0.1, 0, "");
  CHECK(base.size() == 16);
  CHECK(base == extraction_config_hash(FeatureKind::l3net512, 256, 0.1, 0, ""));
  CHECK(base != extraction_config_hash(FeatureKind::l3net6144, 256, 0.1, 0, ""));
  CHECK(base != extraction_config_hash(FeatureKind::l3net512, 128, 0.1, 0, ""));
  CHECK(base != extraction_config_hash(FeatureKind::l3net512, 256, 0.5, 0, ""));
  CHECK(base != extraction_config_hash(FeatureKind::l3net512, 256, 0.1, 1, ""));
  CHECK(base !=
        extraction_config_hash(FeatureKind::l3net512, 256, 0.1, 0, "w.mert"));
}

TEST_CASE("cache: put/get round-trip with persistence") {
  auto dir = testutil::temp_dir("cache_rt");
  const std::string hash = "0123456789abcdef";
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(80, -1.0, 1.0);
  {
    FeatureCache cache(dir.string());
    CHECK(!cache.has(FeatureKind::mfcc80, "clip1", hash));
    CHECK(!cache.get(FeatureKind::mfcc80, "clip1", hash).has_value());
    cache.put(FeatureKind::mfcc80, "clip1", hash, v);
    CHECK(cache.has(FeatureKind::mfcc80, "clip1", hash));
    cache.save(FeatureKind::mfcc80);
  }
  // A fresh instance reads the container back from disk.
  FeatureCache cache(dir.string());
  auto got = cache.get(FeatureKind::mfcc80, "clip1", hash);
  REQUIRE(got.has_value());
  CHECK(*got == v);
  // Unknown hash means a config change: entry is not visible.
  CHECK(!cache.has(FeatureKind::mfcc80, "clip1", std::string(16, 'f')));
  auto names = cache.entry_names(FeatureKind::mfcc80);
  REQUIRE(names.size() == 1);
  CHECK(names[0] == "clip1#" + hash);
}

TEST_CASE("cache: kinds are isolated and removable") {
  auto dir = testutil::temp_dir("cache_rm");
  FeatureCache cache(dir.string());
  const std::string hash(16, '0');
  cache.put(FeatureKind::mfcc80, "a", hash, Eigen::VectorXd::Ones(80));
  cache.put(FeatureKind::vggish128, "a", hash, Eigen::VectorXd::Ones(128));
  cache.save(FeatureKind::mfcc80);
  cache.save(FeatureKind::vggish128);
  CHECK(std::filesystem::exists(cache.container_path(FeatureKind::mfcc80)));

  cache.remove_kind(FeatureKind::mfcc80);
  CHECK(!std::filesystem::exists(cache.container_path(FeatureKind::mfcc80)));
  CHECK(!cache.has(FeatureKind::mfcc80, "a", hash));
  CHECK(cache.has(FeatureKind::vggish128, "a", hash));
}
