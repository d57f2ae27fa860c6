#include "mer/datasets.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace mer::data {
namespace {

constexpr const char* kQuadrantNames[4] = {"Q1", "Q2", "Q3", "Q4"};
constexpr const char* kRavdessNames[6] = {"N", "C", "H", "S", "A", "F"};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Csv read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open manifest " + path);
  Csv csv;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (first) {
      csv.header = fields;
      first = false;
    } else {
      csv.rows.push_back(fields);
    }
  }
  return csv;
}

int column(const Csv& csv, const std::string& name, const std::string& path) {
  for (size_t i = 0; i < csv.header.size(); ++i)
    if (csv.header[i] == name) return int(i);
  throw DatasetError("manifest " + path + " missing column " + name);
}

int parse_quadrant(const std::string& s) {
  for (int q = 0; q < 4; ++q)
    if (s == kQuadrantNames[q]) return q;
  throw BadLabel("unknown quadrant label '" + s + "'");
}

void finish(LabeledDataset& ds) {
  if (ds.clips.empty()) throw EmptyDataset("manifest has no rows");
  std::sort(ds.clips.begin(), ds.clips.end(),
            [](const ClipRecord& a, const ClipRecord& b) {
              return a.clip_id < b.clip_id;
            });
}

LabeledDataset load_quadrant_manifest(const std::string& path) {
  Csv csv = read_csv(path);
  const int id_col = column(csv, "clip_id", path);
  const int path_col = column(csv, "audio_path", path);
  const int q_col = column(csv, "quadrant", path);
  LabeledDataset ds;
  ds.scheme = LabelScheme::quadrant4;
  for (const auto& row : csv.rows) {
    ClipRecord rec;
    rec.clip_id = row.at(size_t(id_col));
    rec.audio_path = row.at(size_t(path_col));
    rec.label = EmotionLabel{LabelScheme::quadrant4,
                             parse_quadrant(row.at(size_t(q_col)))};
    ds.clips.push_back(std::move(rec));
  }
  finish(ds);
  return ds;
}

}  // namespace

std::string label_name(const EmotionLabel& l) {
  if (l.scheme == LabelScheme::quadrant4) return kQuadrantNames[l.value];
  return kRavdessNames[l.value];
}

int label_count(LabelScheme scheme) {
  return scheme == LabelScheme::quadrant4 ? 4 : 6;
}

EmotionLabel quadrant_from_av(const AvAnnotation& a) {
  if (a.scale_max <= a.scale_min) throw BadScale("degenerate annotation scale");
  if (a.arousal < a.scale_min || a.arousal > a.scale_max ||
      a.valence < a.scale_min || a.valence > a.scale_max)
    throw OutOfScale("annotation outside its declared scale");
  const double mid = (a.scale_min + a.scale_max) / 2.0;
  const bool a_pos = a.arousal - mid > 0.0;
  const bool v_pos = a.valence - mid > 0.0;
  int q;
  if (a_pos && v_pos)
    q = 0;  // Q1
  else if (a_pos && !v_pos)
    q = 1;  // Q2
  else if (!a_pos && !v_pos)
    q = 2;  // Q3
  else
    q = 3;  // Q4
  return {LabelScheme::quadrant4, q};
}

std::map<int, int> LabeledDataset::class_counts() const {
  std::map<int, int> counts;
  for (const auto& c : clips)
    if (c.label) ++counts[c.label->value];
  return counts;
}

LabeledDataset load_q4audio(const std::string& manifest_path) {
  return load_quadrant_manifest(manifest_path);
}

LabeledDataset load_bimodal(const std::string& manifest_path) {
  return load_quadrant_manifest(manifest_path);
}

LabeledDataset load_emomusic(const std::string& manifest_path,
                             EmomusicMode mode) {
  Csv csv = read_csv(manifest_path);
  const int id_col = column(csv, "clip_id", manifest_path);
  const int path_col = column(csv, "audio_path", manifest_path);
  const int a_col = column(csv, "arousal", manifest_path);
  const int v_col = column(csv, "valence", manifest_path);
  const int lo_col = column(csv, "scale_min", manifest_path);
  const int hi_col = column(csv, "scale_max", manifest_path);
  LabeledDataset ds;
  ds.scheme = LabelScheme::quadrant4;
  ds.regression = mode == EmomusicMode::dynamic_av;
  for (const auto& row : csv.rows) {
    AvAnnotation av;
    try {
      av.arousal = std::stod(row.at(size_t(a_col)));
      av.valence = std::stod(row.at(size_t(v_col)));
      av.scale_min = std::stod(row.at(size_t(lo_col)));
      av.scale_max = std::stod(row.at(size_t(hi_col)));
    } catch (const std::invalid_argument&) {
      throw BadScale("non-numeric annotation for clip " + row.at(size_t(id_col)));
    }
    ClipRecord rec;
    rec.clip_id = row.at(size_t(id_col));
    rec.audio_path = row.at(size_t(path_col));
    if (mode == EmomusicMode::static_quadrant) {
      rec.label = quadrant_from_av(av);
    } else {
      const double mid = (av.scale_min + av.scale_max) / 2.0;
      rec.av_target = {av.arousal - mid, av.valence - mid};
    }
    ds.clips.push_back(std::move(rec));
  }
  finish(ds);
  return ds;
}

RavdessLoadResult load_ravdess(const std::string& manifest_or_dir) {
  std::vector<std::pair<std::string, std::string>> files;  // (clip_id, path)
  if (fs::is_directory(manifest_or_dir)) {
    for (const auto& entry : fs::directory_iterator(manifest_or_dir))
      if (entry.path().extension() == ".wav")
        files.emplace_back(entry.path().stem().string(), entry.path().string());
  } else {
    Csv csv = read_csv(manifest_or_dir);
    const int id_col = column(csv, "clip_id", manifest_or_dir);
    const int path_col = column(csv, "audio_path", manifest_or_dir);
    for (const auto& row : csv.rows)
      files.emplace_back(row.at(size_t(id_col)), row.at(size_t(path_col)));
  }

  RavdessLoadResult result;
  result.dataset.scheme = LabelScheme::ravdess6;
  for (const auto& [clip_id, path] : files) {
    // basename without extension carries the 7-field code
    std::string stem = fs::path(path).stem().string();
    std::vector<std::string> fields;
    std::stringstream ss(stem);
    std::string f;
    while (std::getline(ss, f, '-')) fields.push_back(f);
    if (fields.size() != 7)
      throw MalformedFilename("expected 7 dash-separated fields in '" + stem +
                              "'");
    for (const auto& fld : fields)
      if (fld.size() != 2 || !isdigit(fld[0]) || !isdigit(fld[1]))
        throw MalformedFilename("non-2-digit field in '" + stem + "'");

    if (fields[1] != "02") {  // vocal channel: 02 = song
      ++result.skipped_non_song;
      continue;
    }
    const int emotion = std::stoi(fields[2]);
    if (emotion < 1 || emotion > 6) {
      ++result.skipped_emotion;
      continue;
    }
    ClipRecord rec;
    rec.clip_id = clip_id;
    rec.audio_path = path;
    rec.label = EmotionLabel{LabelScheme::ravdess6, emotion - 1};
    rec.metadata["actor"] = fields[6];
    rec.metadata["gender"] = std::stoi(fields[6]) % 2 == 1 ? "male" : "female";
    result.dataset.clips.push_back(std::move(rec));
  }
  if (result.dataset.clips.empty())
    throw EmptyDataset("no song clips in " + manifest_or_dir);
  std::sort(result.dataset.clips.begin(), result.dataset.clips.end(),
            [](const ClipRecord& a, const ClipRecord& b) {
              return a.clip_id < b.clip_id;
            });
  return result;
}

}  // namespace mer::data
