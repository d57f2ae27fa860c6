#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mer::data {

struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BadLabel : DatasetError {
  using DatasetError::DatasetError;
};
struct BadScale : DatasetError {
  using DatasetError::DatasetError;
};
struct OutOfScale : DatasetError {
  using DatasetError::DatasetError;
};
struct EmptyDataset : DatasetError {
  using DatasetError::DatasetError;
};
struct MalformedFilename : DatasetError {
  using DatasetError::DatasetError;
};

enum class LabelScheme { quadrant4, ravdess6 };

/// quadrant4: 0..3 = Q1..Q4.  ravdess6: 0..5 = N, C, H, S, A, F.
struct EmotionLabel {
  LabelScheme scheme;
  int value;
};

std::string label_name(const EmotionLabel& l);
int label_count(LabelScheme scheme);

struct AvAnnotation {
  double arousal = 0.0;
  double valence = 0.0;
  double scale_min = -1.0;
  double scale_max = 1.0;
};

/// Recenters to the scale midpoint, then maps sign combinations:
/// (+,+) -> Q1, (+,-) -> Q2, (-,-) -> Q3, (-,+) -> Q4.
/// Zero after recentering counts as the negative half.
EmotionLabel quadrant_from_av(const AvAnnotation& a);

struct ClipRecord {
  std::string clip_id;
  std::string audio_path;       // relative to the manifest
  std::optional<EmotionLabel> label;
  std::optional<std::pair<double, double>> av_target;  // (arousal, valence)
  std::map<std::string, std::string> metadata;  // actor, gender, ...
};

struct LabeledDataset {
  LabelScheme scheme = LabelScheme::quadrant4;
  std::vector<ClipRecord> clips;  // sorted by clip_id
  bool regression = false;

  std::map<int, int> class_counts() const;
};

enum class EmomusicMode { static_quadrant, dynamic_av };

/// CSV manifests, one header line. Columns per dataset kind:
///   q4audio:  clip_id,audio_path,quadrant            (quadrant in Q1..Q4)
///   bimodal:  clip_id,audio_path,quadrant
///   emomusic: clip_id,audio_path,arousal,valence,scale_min,scale_max
LabeledDataset load_q4audio(const std::string& manifest_path);
LabeledDataset load_bimodal(const std::string& manifest_path);
LabeledDataset load_emomusic(const std::string& manifest_path, EmomusicMode mode);

/// RAVDESS manifest: clip_id,audio_path where the file name follows the
/// corpus's seven dash-separated 2-digit fields. Field 2 = vocal channel
/// ("02" = song, others skipped), field 3 = emotion (01..06 kept), field 7 =
/// actor (odd = male). Also accepts a directory of canonically-named files.
struct RavdessLoadResult {
  LabeledDataset dataset;
  int skipped_non_song = 0;
  int skipped_emotion = 0;
};
RavdessLoadResult load_ravdess(const std::string& manifest_or_dir);

}  // namespace mer::data
