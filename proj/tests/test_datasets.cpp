#include <doctest.h>

#include <array>
#include <fstream>

#include "helpers.hpp"
#include "mer/datasets.hpp"

using namespace mer::data;

namespace {

std::string write_manifest(const std::filesystem::path& dir,
                           const std::string& name, const std::string& body) {
  const std::string path = (dir / name).string();
  std::ofstream(path) << body;
  return path;
}

// Quadrant-labelled manifest with the given per-class counts.
std::string quadrant_manifest(const std::filesystem::path& dir,
                              const std::string& name,
                              const std::array<int, 4>& per_class) {
  std::string body = "clip_id,audio_path,quadrant\n";
  int serial = 0;
  for (int q = 0; q < 4; ++q)
    for (int i = 0; i < per_class[size_t(q)]; ++i) {
      char row[128];
      std::snprintf(row, sizeof(row), "clip%05d,audio/clip%05d.wav,Q%d\n",
                    serial, serial, q + 1);
      body += row;
      ++serial;
    }
  return write_manifest(dir, name, body);
}

}  // namespace

TEST_CASE("datasets: reference manifests load the published corpus counts") {
  auto dir = testutil::temp_dir("datasets_counts");

  // 900 clips, 225 per quadrant.
  auto q4 = load_q4audio(quadrant_manifest(dir, "q4.csv", {225, 225, 225, 225}));
  CHECK(q4.clips.size() == 900);
  for (int q = 0; q < 4; ++q) CHECK(q4.class_counts()[q] == 225);

  // 162 clips: 52/45/31/34.
  auto bi = load_bimodal(quadrant_manifest(dir, "bi.csv", {52, 45, 31, 34}));
  CHECK(bi.clips.size() == 162);
  CHECK(bi.class_counts()[0] == 52);
  CHECK(bi.class_counts()[1] == 45);
  CHECK(bi.class_counts()[2] == 31);
  CHECK(bi.class_counts()[3] == 34);

  // 744 clips with AV annotations on a [1, 9] scale: 305/87/241/111.
  {
    std::string body = "clip_id,audio_path,arousal,valence,scale_min,scale_max\n";
    const std::array<int, 4> counts = {305, 87, 241, 111};
    // Representative AV points in each quadrant (midpoint 5).
    const double av[4][2] = {{7, 7}, {7, 3}, {3, 3}, {3, 7}};
    int serial = 0;
    for (int q = 0; q < 4; ++q)
      for (int i = 0; i < counts[size_t(q)]; ++i) {
        char row[160];
        std::snprintf(row, sizeof(row), "em%05d,audio/em%05d.wav,%g,%g,1,9\n",
                      serial, serial, av[q][0], av[q][1]);
        body += row;
        ++serial;
      }
    auto em = load_emomusic(write_manifest(dir, "em.csv", body),
                            EmomusicMode::static_quadrant);
    CHECK(em.clips.size() == 744);
    for (int q = 0; q < 4; ++q) CHECK(em.class_counts()[q] == counts[size_t(q)]);
    CHECK(!em.regression);
  }

  // RAVDESS song subset: 92 neutral, 184 calm/happy/sad/angry, 20 fearful.
  {
    std::string body = "clip_id,audio_path\n";
    const int per_emotion[6] = {92, 184, 184, 184, 184, 20};
    int serial = 0;
    for (int e = 0; e < 6; ++e)
      for (int i = 0; i < per_emotion[e]; ++i) {
        char row[160];
        std::snprintf(row, sizeof(row),
                      "rv%05d,audio/03-02-%02d-01-01-01-%02d.wav\n", serial,
                      e + 1, (i % 24) + 1);
        body += row;
        ++serial;
      }
    // Plus rows that must be skipped, not counted.
    body += "rvspeech,audio/03-01-03-01-01-01-05.wav\n";   // speech channel
    body += "rvsurprise,audio/03-02-08-01-01-01-05.wav\n";  // emotion 8

    auto res = load_ravdess(write_manifest(dir, "rv.csv", body));
    CHECK(res.dataset.clips.size() == 848);
    for (int e = 0; e < 6; ++e)
      CHECK(res.dataset.class_counts()[e] == per_emotion[e]);
    CHECK(res.skipped_non_song == 1);
    CHECK(res.skipped_emotion == 1);
    CHECK(res.dataset.scheme == LabelScheme::ravdess6);
  }
}

TEST_CASE("datasets: quadrant mapping covers all four sign combinations") {
  auto quad = [](double a, double v, double lo = -1.0, double hi = 1.0) {
    return quadrant_from_av({a, v, lo, hi}).value;
  };
  CHECK(quad(0.5, 0.5) == 0);    // (+,+) -> Q1
  CHECK(quad(0.5, -0.5) == 1);   // (+,-) -> Q2
  CHECK(quad(-0.5, -0.5) == 2);  // (-,-) -> Q3
  CHECK(quad(-0.5, 0.5) == 3);   // (-,+) -> Q4
  // Exactly on the midpoint counts as the negative half.
  CHECK(quad(0.0, 0.0) == 2);
  CHECK(quad(0.5, 0.0) == 1);
  // Non-centered scale: midpoint of [1, 9] is 5.
  CHECK(quad(6.0, 4.0, 1.0, 9.0) == 1);
  CHECK(quad(4.0, 6.0, 1.0, 9.0) == 3);
}

TEST_CASE("datasets: annotation validation errors") {
  CHECK_THROWS_AS(quadrant_from_av({0.5, 0.5, 1.0, 1.0}), BadScale);
  CHECK_THROWS_AS(quadrant_from_av({0.5, 0.5, 1.0, 0.0}), BadScale);
  CHECK_THROWS_AS(quadrant_from_av({2.0, 0.5, -1.0, 1.0}), OutOfScale);
  CHECK_THROWS_AS(quadrant_from_av({0.5, -2.0, -1.0, 1.0}), OutOfScale);
}

TEST_CASE("datasets: manifest error paths") {
  auto dir = testutil::temp_dir("datasets_errors");

  auto bad_label = write_manifest(dir, "bad.csv",
                                  "clip_id,audio_path,quadrant\n"
                                  "a,x.wav,Q5\n");
  CHECK_THROWS_AS(load_q4audio(bad_label), BadLabel);

  auto empty = write_manifest(dir, "empty.csv", "clip_id,audio_path,quadrant\n");
  CHECK_THROWS_AS(load_q4audio(empty), EmptyDataset);

  auto missing_col = write_manifest(dir, "mc.csv", "clip_id,audio_path\na,b\n");
  CHECK_THROWS_AS(load_q4audio(missing_col), DatasetError);

  auto bad_av = write_manifest(
      dir, "av.csv",
      "clip_id,audio_path,arousal,valence,scale_min,scale_max\n"
      "a,x.wav,oops,3,1,9\n");
  CHECK_THROWS_AS(load_emomusic(bad_av, EmomusicMode::static_quadrant), BadScale);

  auto malformed = write_manifest(dir, "rvbad.csv",
                                  "clip_id,audio_path\n"
                                  "a,03-02-01-01.wav\n");
  CHECK_THROWS_AS(load_ravdess(malformed), MalformedFilename);

  CHECK_THROWS_AS(load_q4audio((dir / "nope.csv").string()), DatasetError);
}

TEST_CASE("datasets: emomusic dynamic mode produces centered AV targets") {
  auto dir = testutil::temp_dir("datasets_dyn");
  auto path = write_manifest(
      dir, "dyn.csv",
      "clip_id,audio_path,arousal,valence,scale_min,scale_max\n"
      "b,y.wav,3,8,1,9\n"
      "a,x.wav,7,2,1,9\n");
  auto ds = load_emomusic(path, EmomusicMode::dynamic_av);
  CHECK(ds.regression);
  REQUIRE(ds.clips.size() == 2);
  // Sorted by clip_id.
  CHECK(ds.clips[0].clip_id == "a");
  REQUIRE(ds.clips[0].av_target.has_value());
  CHECK(ds.clips[0].av_target->first == doctest::Approx(2.0));   // 7 - 5
  CHECK(ds.clips[0].av_target->second == doctest::Approx(-3.0));  // 2 - 5
  CHECK(!ds.clips[0].label.has_value());
}

TEST_CASE("datasets: ravdess metadata and directory loading") {
  auto dir = testutil::temp_dir("datasets_rvdir");
  // Canonical file names; the files only need to exist.
  for (const char* name :
       {"03-02-03-01-01-01-01.wav", "03-02-04-02-02-01-02.wav",
        "03-02-05-01-01-01-03.wav"})
    std::ofstream(dir / name) << "";
  auto res = load_ravdess(dir.string());
  REQUIRE(res.dataset.clips.size() == 3);
  const auto& first = res.dataset.clips.front();
  CHECK(first.label->value == 2);  // emotion 03 -> H index 2
  CHECK(first.metadata.at("actor") == "01");
  CHECK(first.metadata.at("gender") == "male");
  CHECK(res.dataset.clips[1].metadata.at("gender") == "female");
  CHECK(label_name(*first.label) == "H");
}

TEST_CASE("datasets: label names and counts") {
  CHECK(label_count(LabelScheme::quadrant4) == 4);
  CHECK(label_count(LabelScheme::ravdess6) == 6);
  CHECK(label_name({LabelScheme::quadrant4, 0}) == "Q1");
  CHECK(label_name({LabelScheme::quadrant4, 3}) == "Q4");
  CHECK(label_name({LabelScheme::ravdess6, 0}) == "N");
  CHECK(label_name({LabelScheme::ravdess6, 5}) == "F");
}
