// Command-line pipeline: extract features, train classifiers, evaluate with
// repeated splits, and run t-SNE on cached embeddings.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "mer/audio.hpp"
#include "mer/cache.hpp"
#include "mer/classifiers.hpp"
#include "mer/container.hpp"
#include "mer/datasets.hpp"
#include "mer/dsp.hpp"
#include "mer/embedding.hpp"
#include "mer/eval.hpp"
#include "mer/tsne.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitUserError = 1;
constexpr int kExitInternal = 2;

struct Options {
  std::string config_path;
  std::string dataset = "q4audio";
  std::string manifest;
  std::string features = "mfcc80";
  std::string model = "svm";
  int reps = 20;
  uint64_t seed = 0;
  std::string cache_dir = "cache";
  std::string out;
  std::string weights;       // embedding weight container; empty -> random
  uint64_t weight_seed = 0;  // random-weight mode seed
  int n_mels = 256;
  double window_hop_s = 0.1;
  int max_epochs = 1000;
  int batch_size = 32;
  int patience = 100;
  double lr = 1e-3;
  double perplexity = 30.0;
  int tsne_iters = 1000;
  std::string emomusic_mode = "static";
};

// Flat key=value config with optional [section] headers (cosmetic). Flags
// win over file values, so file values are applied only where the flag kept
// its default.
void apply_config_file(Options& opt, CLI::App& app) {
  if (opt.config_path.empty()) return;
  std::ifstream in(opt.config_path);
  if (!in) throw CLI::ValidationError("--config", "cannot open " + opt.config_path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line.erase(0, line.find_first_not_of(" \t"));
    line.erase(line.find_last_not_of(" \t\r") + 1);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    key.erase(key.find_last_not_of(" \t") + 1);
    value.erase(0, value.find_first_not_of(" \t"));
    kv[key] = value;
  }
  auto set_if_default = [&](const std::string& flag, auto& target) {
    auto it = kv.find(flag);
    if (it == kv.end()) return;
    CLI::Option* o = app.get_option_no_throw("--" + flag);
    if (o && o->count() > 0) return;  // flag wins
    std::istringstream ss(it->second);
    ss >> target;
  };
  set_if_default("dataset", opt.dataset);
  set_if_default("manifest", opt.manifest);
  set_if_default("features", opt.features);
  set_if_default("model", opt.model);
  set_if_default("reps", opt.reps);
  set_if_default("seed", opt.seed);
  set_if_default("cache-dir", opt.cache_dir);
  set_if_default("out", opt.out);
  set_if_default("weights", opt.weights);
  set_if_default("weight-seed", opt.weight_seed);
  set_if_default("n-mels", opt.n_mels);
  set_if_default("window-hop", opt.window_hop_s);
  set_if_default("max-epochs", opt.max_epochs);
  set_if_default("batch-size", opt.batch_size);
  set_if_default("patience", opt.patience);
  set_if_default("lr", opt.lr);
  set_if_default("perplexity", opt.perplexity);
  set_if_default("tsne-iters", opt.tsne_iters);
  set_if_default("emomusic-mode", opt.emomusic_mode);
}

mer::data::LabeledDataset load_dataset(const Options& opt) {
  using namespace mer::data;
  if (opt.manifest.empty())
    throw CLI::ValidationError("--manifest", "a manifest path is required");
  if (opt.dataset == "q4audio") return load_q4audio(opt.manifest);
  if (opt.dataset == "bimodal") return load_bimodal(opt.manifest);
  if (opt.dataset == "emomusic")
    return load_emomusic(opt.manifest, opt.emomusic_mode == "dynamic"
                                          ? EmomusicMode::dynamic_av
                                          : EmomusicMode::static_quadrant);
  if (opt.dataset == "ravdess") return load_ravdess(opt.manifest).dataset;
  throw CLI::ValidationError("--dataset", "unknown dataset '" + opt.dataset + "'");
}

std::string resolve_audio_path(const Options& opt,
                               const mer::data::ClipRecord& rec) {
  fs::path p(rec.audio_path);
  if (p.is_absolute() || opt.manifest.empty()) return p.string();
  if (fs::is_directory(opt.manifest)) return (fs::path(opt.manifest) / p).string();
  return (fs::path(opt.manifest).parent_path() / p).string();
}

std::string config_hash(const Options& opt, mer::cache::FeatureKind kind) {
  return mer::cache::extraction_config_hash(kind, opt.n_mels, opt.window_hop_s,
                                            opt.weight_seed, opt.weights);
}

Eigen::VectorXd extract_one(const Options& opt, mer::cache::FeatureKind kind,
                            const mer::AudioClip& clip,
                            const std::optional<mer::BoundModel>& model) {
  using mer::cache::FeatureKind;
  if (kind == FeatureKind::mfcc80) {
    const mer::FrontendPreset fe = mer::mfcc_frontend();
    mer::AudioClip work = clip.sample_rate == fe.sample_rate
                              ? clip
                              : mer::resample(clip, fe.sample_rate);
    return mer::mfcc_summary(mer::mfcc(work, fe.spec)).values;
  }
  const mer::FrontendPreset fe = kind == FeatureKind::vggish128
                                     ? mer::vggish_frontend()
                                     : mer::l3net_frontend(opt.n_mels);
  mer::EmbeddingSequence seq =
      mer::embed_clip(clip, *model, fe, opt.window_hop_s);
  return mer::aggregate(seq);
}

std::optional<mer::BoundModel> build_embedding_model(
    const Options& opt, mer::cache::FeatureKind kind) {
  using mer::cache::FeatureKind;
  if (kind == FeatureKind::mfcc80) return std::nullopt;
  mer::NetworkDefinition def;
  if (kind == FeatureKind::vggish128)
    def = mer::build_vggish();
  else
    def = mer::build_l3net(kind == FeatureKind::l3net512 ? 512 : 6144,
                           opt.n_mels);
  if (!opt.weights.empty()) return mer::load_weights(def, opt.weights);
  return mer::load_weights(def, opt.weight_seed);
}

void write_output(const Options& opt, const std::string& text) {
  if (opt.out.empty()) {
    std::cout << text << "\n";
  } else {
    std::ofstream out(opt.out, std::ios::trunc);
    out << text;
  }
}

int cmd_extract(const Options& opt) {
  const auto kind = mer::cache::parse_feature_kind(opt.features);
  const auto dataset = load_dataset(opt);
  mer::cache::FeatureCache cache(opt.cache_dir);
  const std::string hash = config_hash(opt, kind);
  auto model = build_embedding_model(opt, kind);

  int extracted = 0, skipped = 0;
  std::vector<std::string> failed;
  for (const auto& rec : dataset.clips) {
    if (cache.has(kind, rec.clip_id, hash)) {
      ++skipped;
      continue;
    }
    try {
      mer::AudioClip clip = mer::load_audio(resolve_audio_path(opt, rec));
      cache.put(kind, rec.clip_id, hash, extract_one(opt, kind, clip, model));
      ++extracted;
    } catch (const std::exception& e) {
      failed.push_back(rec.clip_id + ": " + e.what());
    }
  }
  if (extracted > 0) cache.save(kind);

  json summary;
  summary["features"] = opt.features;
  summary["config_hash"] = hash;
  summary["extracted"] = extracted;
  summary["skipped"] = skipped;
  summary["failed"] = failed;
  write_output(opt, summary.dump(2));
  return (extracted == 0 && skipped == 0 && !failed.empty()) ? kExitInternal : 0;
}

struct FeatureTable {
  Eigen::MatrixXd X;
  std::vector<int> labels;
  std::vector<std::string> clip_ids;
  Eigen::VectorXd arousal, valence;
  bool regression = false;
  mer::data::LabelScheme scheme = mer::data::LabelScheme::quadrant4;
  std::vector<mer::data::ClipRecord> records;
};

FeatureTable load_features(const Options& opt, mer::cache::FeatureKind kind) {
  const auto dataset = load_dataset(opt);
  mer::cache::FeatureCache cache(opt.cache_dir);
  const std::string hash = config_hash(opt, kind);

  FeatureTable table;
  table.scheme = dataset.scheme;
  table.regression = dataset.regression;
  std::vector<Eigen::VectorXd> rows;
  std::vector<std::string> missing;
  std::vector<double> ar, va;
  for (const auto& rec : dataset.clips) {
    auto v = cache.get(kind, rec.clip_id, hash);
    if (!v) {
      missing.push_back(rec.clip_id);
      continue;
    }
    rows.push_back(*v);
    table.clip_ids.push_back(rec.clip_id);
    table.records.push_back(rec);
    if (rec.label) table.labels.push_back(rec.label->value);
    if (rec.av_target) {
      ar.push_back(rec.av_target->first);
      va.push_back(rec.av_target->second);
    }
  }
  if (!missing.empty())
    throw std::invalid_argument(
        "missing cached features for " + std::to_string(missing.size()) +
        " clips (run `mer extract` first); first: " + missing.front());
  if (rows.empty()) throw std::invalid_argument("no cached features found");
  table.X.resize(Eigen::Index(rows.size()), rows.front().size());
  for (size_t i = 0; i < rows.size(); ++i)
    table.X.row(Eigen::Index(i)) = rows[i].transpose();
  table.arousal = Eigen::Map<Eigen::VectorXd>(ar.data(), Eigen::Index(ar.size()));
  table.valence = Eigen::Map<Eigen::VectorXd>(va.data(), Eigen::Index(va.size()));
  return table;
}

std::vector<std::string> class_names(mer::data::LabelScheme scheme) {
  std::vector<std::string> names;
  for (int k = 0; k < mer::data::label_count(scheme); ++k)
    names.push_back(mer::data::label_name({scheme, k}));
  return names;
}

mer::nn::TrainSchedule schedule_from(const Options& opt) {
  mer::nn::TrainSchedule s;
  s.max_epochs = opt.max_epochs;
  s.batch_size = opt.batch_size;
  if (opt.patience >= 0)
    s.patience = opt.patience;
  else
    s.patience.reset();
  s.lr = opt.lr;
  s.seed = opt.seed;
  return s;
}

std::string model_path(const Options& opt) {
  return (fs::path(opt.cache_dir) /
          ("model_" + opt.features + "_" + opt.model + ".mert"))
      .string();
}

int cmd_train(const Options& opt) {
  const auto kind = mer::cache::parse_feature_kind(opt.features);
  FeatureTable table = load_features(opt, kind);
  if (table.regression)
    throw std::runtime_error("train expects a classification dataset");
  const int n_classes = mer::data::label_count(table.scheme);

  mer::eval::SplitSpec spec;
  spec.seed = opt.seed;
  auto idx = mer::eval::split(table.X.rows(), table.labels, spec);
  auto take = [&](const std::vector<Eigen::Index>& which) {
    Eigen::MatrixXd x(Eigen::Index(which.size()), table.X.cols());
    std::vector<int> y;
    for (size_t i = 0; i < which.size(); ++i) {
      x.row(Eigen::Index(i)) = table.X.row(which[i]);
      y.push_back(table.labels[size_t(which[i])]);
    }
    return std::make_pair(x, y);
  };
  auto [x_train, y_train] = take(idx.train);
  auto [x_val, y_val] = take(idx.val);

  auto clf = mer::make_classifier(mer::parse_classifier_kind(opt.model),
                                  schedule_from(opt));
  clf->fit(x_train, y_train, x_val, y_val, n_classes, opt.seed);

  mer::TensorContainer c;
  clf->save(c);
  mer::container_write(c, model_path(opt));

  json log;
  log["model"] = opt.model;
  log["features"] = opt.features;
  log["model_file"] = fs::path(model_path(opt)).filename().string();
  log["train_size"] = int(idx.train.size());
  json hist = json::array();
  for (const auto& rec : clf->history()) {
    json h;
    h["train_loss"] = rec.train_loss;
    h["val_loss"] = rec.val_loss;
    h["val_acc"] = rec.val_acc;
    hist.push_back(h);
  }
  log["history"] = hist;
  write_output(opt, log.dump(2));
  return 0;
}

int cmd_eval(const Options& opt) {
  const auto kind = mer::cache::parse_feature_kind(opt.features);
  FeatureTable table = load_features(opt, kind);

  if (table.regression) {
    auto [r2a, r2v] = mer::eval::run_regression_experiment(
        table.X, table.arousal, table.valence, opt.reps, opt.seed);
    // Same hand-built style as render_json so bytes are stable across runs.
    std::ostringstream os;
    os << "{\"r2\":{\"arousal\":" << mer::eval::format_double(r2a)
       << ",\"valence\":" << mer::eval::format_double(r2v)
       << "},\"reps\":" << opt.reps << "}";
    write_output(opt, os.str());
    if (!opt.out.empty())
      std::cout << "A: " << r2a << " V: " << r2v << "\n";
    return 0;
  }

  const int n_classes = mer::data::label_count(table.scheme);
  auto factory = mer::make_classifier_factory(
      mer::parse_classifier_kind(opt.model), schedule_from(opt));
  mer::eval::EvalReport report =
      mer::eval::run_experiment(table.X, table.labels, n_classes, factory,
                                opt.reps, opt.seed, class_names(table.scheme));
  write_output(opt, mer::eval::render_json(report));
  std::cout << mer::eval::render_text_table(report);
  return 0;
}

int cmd_tsne(const Options& opt) {
  const auto kind = mer::cache::parse_feature_kind(opt.features);
  FeatureTable table = load_features(opt, kind);

  mer::tsne::TsneConfig config;
  config.perplexity = opt.perplexity;
  config.iters = opt.tsne_iters;
  config.seed = opt.seed;
  mer::tsne::TsneResult result = mer::tsne::tsne(table.X, config);

  std::string csv_path = opt.out.empty() ? "tsne.csv" : opt.out;
  std::ofstream csv(csv_path, std::ios::trunc);
  csv << "clip_id,x,y,label,actor,gender\n";
  for (Eigen::Index i = 0; i < result.coords.rows(); ++i) {
    const auto& rec = table.records[size_t(i)];
    csv << table.clip_ids[size_t(i)] << ","
        << mer::eval::format_double(result.coords(i, 0)) << ","
        << mer::eval::format_double(result.coords(i, 1)) << ",";
    if (rec.label) csv << mer::data::label_name(*rec.label);
    csv << ",";
    if (auto it = rec.metadata.find("actor"); it != rec.metadata.end())
      csv << it->second;
    csv << ",";
    if (auto it = rec.metadata.find("gender"); it != rec.metadata.end())
      csv << it->second;
    csv << "\n";
  }
  csv.close();

  json sidecar;
  sidecar["final_kl"] = mer::eval::format_double(result.final_kl);
  sidecar["initial_kl"] = mer::eval::format_double(result.initial_kl);
  sidecar["perplexity"] = config.perplexity;
  sidecar["iters"] = config.iters;
  sidecar["seed"] = config.seed;
  sidecar["n"] = int(result.coords.rows());
  std::ofstream side(csv_path + ".json", std::ios::trunc);
  side << sidecar.dump(2);
  std::cout << "wrote " << csv_path << " (" << result.coords.rows()
            << " points, final KL " << result.final_kl << ")\n";
  return 0;
}

int cmd_report(const Options& opt) {
  if (opt.config_path.empty() && opt.out.empty())
    throw CLI::ValidationError("report", "pass the JSON report via --out");
  std::ifstream in(opt.out);
  if (!in) throw std::runtime_error("cannot open report " + opt.out);
  json j = json::parse(in);
  if (j.contains("r2") && !j.contains("pooled")) {
    std::cout << "A: " << j["r2"]["arousal"].get<double>()
              << " V: " << j["r2"]["valence"].get<double>() << "\n";
    return 0;
  }
  mer::eval::EvalReport report;
  report.reps = j["reps"].get<int>();
  report.mean_accuracy = j["accuracy_mean"].get<double>();
  report.std_accuracy = j["accuracy_std"].get<double>();
  report.mean_f1 = j["f1_mean"].get<double>();
  report.std_f1 = j["f1_std"].get<double>();
  const auto& pooled = j["pooled"];
  const auto& pc = pooled["per_class"];
  const int K = int(pc.size());
  report.pooled_cm.counts = Eigen::MatrixXi::Zero(K, K);
  for (int i = 0; i < K; ++i)
    for (int k = 0; k < K; ++k)
      report.pooled_cm.counts(i, k) = pooled["confusion"][i][k].get<int>();
  for (const auto& row : pc) {
    report.pooled_cm.class_names.push_back(row["class"].get<std::string>());
    mer::eval::ClassMetrics m;
    m.precision = row["precision"].get<double>();
    m.recall = row["recall"].get<double>();
    m.f1 = row["f1"].get<double>();
    m.support = row["support"].get<int>();
    report.pooled.per_class.push_back(m);
  }
  report.pooled.accuracy = pooled["accuracy"].get<double>();
  report.pooled.weighted_precision = pooled["weighted_precision"].get<double>();
  report.pooled.weighted_recall = pooled["weighted_recall"].get<double>();
  report.pooled.weighted_f1 = pooled["weighted_f1"].get<double>();
  if (j.contains("r2"))
    report.r2_av = {j["r2"]["arousal"].get<double>(),
                    j["r2"]["valence"].get<double>()};
  std::cout << mer::eval::render_text_table(report);
  return 0;
}

int cmd_cache_ls(const Options& opt) {
  mer::cache::FeatureCache cache(opt.cache_dir);
  using mer::cache::FeatureKind;
  for (FeatureKind kind : {FeatureKind::l3net512, FeatureKind::l3net6144,
                           FeatureKind::vggish128, FeatureKind::mfcc80}) {
    if (!fs::exists(cache.container_path(kind))) continue;
    auto names = cache.entry_names(kind);
    std::cout << mer::cache::feature_kind_name(kind) << ": " << names.size()
              << " entries\n";
    for (const auto& n : names) std::cout << "  " << n << "\n";
  }
  return 0;
}

int cmd_cache_rm(const Options& opt) {
  mer::cache::FeatureCache cache(opt.cache_dir);
  cache.remove_kind(mer::cache::parse_feature_kind(opt.features));
  std::cout << "removed " << opt.features << " cache\n";
  return 0;
}

void add_common(CLI::App* cmd, Options& opt) {
  cmd->add_option("--config", opt.config_path, "config file (key = value)");
  cmd->add_option("--dataset", opt.dataset, "q4audio|bimodal|emomusic|ravdess");
  cmd->add_option("--manifest", opt.manifest, "dataset manifest CSV");
  cmd->add_option("--features", opt.features,
                  "l3net512|l3net6144|vggish128|mfcc80");
  cmd->add_option("--model", opt.model, "svm|nb|rf|mlp|cnn|rnn");
  cmd->add_option("--reps", opt.reps, "evaluation repetitions");
  cmd->add_option("--seed", opt.seed, "base RNG seed");
  cmd->add_option("--cache-dir", opt.cache_dir, "feature/model cache directory");
  cmd->add_option("--out", opt.out, "output path");
  cmd->add_option("--weights", opt.weights, "embedding weight container");
  cmd->add_option("--weight-seed", opt.weight_seed, "random-weight seed");
  cmd->add_option("--n-mels", opt.n_mels, "mel bins for the L3 front-end");
  cmd->add_option("--window-hop", opt.window_hop_s, "embedding window hop (s)");
  cmd->add_option("--max-epochs", opt.max_epochs, "training epoch cap");
  cmd->add_option("--batch-size", opt.batch_size, "mini-batch size");
  cmd->add_option("--patience", opt.patience,
                  "early-stopping patience (-1 disables)");
  cmd->add_option("--lr", opt.lr, "Adam learning rate");
  cmd->add_option("--perplexity", opt.perplexity, "t-SNE perplexity");
  cmd->add_option("--tsne-iters", opt.tsne_iters, "t-SNE iterations");
  cmd->add_option("--emomusic-mode", opt.emomusic_mode, "static|dynamic");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"music-emotion pipeline: embeddings, classifiers, evaluation"};
  app.require_subcommand(1);
  Options opt;

  auto* extract = app.add_subcommand("extract", "extract features into the cache");
  auto* train = app.add_subcommand("train", "train one classifier");
  auto* evaluate = app.add_subcommand("eval", "repeated-split evaluation report");
  auto* tsne_cmd = app.add_subcommand("tsne", "2-D t-SNE of cached features");
  auto* report = app.add_subcommand("report", "re-render a cached JSON report");
  auto* cache_cmd = app.add_subcommand("cache", "cache maintenance");
  auto* cache_ls = cache_cmd->add_subcommand("ls", "list cached entries");
  auto* cache_rm = cache_cmd->add_subcommand("rm", "drop a feature kind");
  for (CLI::App* c : {extract, train, evaluate, tsne_cmd, report, cache_ls, cache_rm})
    add_common(c, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUserError;
  }

  try {
    CLI::App* active = app.get_subcommands().front();
    // Flags are registered on the leaf (`cache ls`, not `cache`); precedence
    // checks must look there.
    CLI::App* leaf = active;
    while (!leaf->get_subcommands().empty())
      leaf = leaf->get_subcommands().front();
    apply_config_file(opt, *leaf);
    if (active == extract) return cmd_extract(opt);
    if (active == train) return cmd_train(opt);
    if (active == evaluate) return cmd_eval(opt);
    if (active == tsne_cmd) return cmd_tsne(opt);
    if (active == report) return cmd_report(opt);
    if (active == cache_cmd) {
      auto subs = cache_cmd->get_subcommands();
      if (subs.empty())
        throw CLI::ValidationError("cache", "use `cache ls` or `cache rm`");
      if (subs.front() == cache_ls) return cmd_cache_ls(opt);
      return cmd_cache_rm(opt);
    }
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUserError;
  } catch (const mer::data::DatasetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUserError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUserError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUserError;
}
