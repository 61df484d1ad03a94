#include "emobridge/pipeline/stages.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <set>

#include "emobridge/audio/resample.hpp"
#include "emobridge/binary_io.hpp"
#include "emobridge/bridge/trainer.hpp"
#include "emobridge/checksum.hpp"
#include "emobridge/corpus/manifest.hpp"
#include "emobridge/corpus/splits.hpp"
#include "emobridge/corpus/synth.hpp"
#include "emobridge/diagnostics/attention.hpp"
#include "emobridge/diagnostics/embedding.hpp"
#include "emobridge/diagnostics/layer_trends.hpp"
#include "emobridge/diagnostics/silhouette.hpp"
#include "emobridge/encoders/feature_cache.hpp"
#include "emobridge/encoders/functionals.hpp"
#include "emobridge/error.hpp"
#include "emobridge/probe/spoof_probe.hpp"

namespace emobridge::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using probe::Condition;

namespace layout {

std::string cache(Condition condition, const std::string& corpus) {
  return "features/" + std::string(probe::to_string(condition)) + "/" + corpus + ".embr";
}
std::string functional_cache(encoders::FunctionalSet set) {
  return "features/functionals/" + std::string(encoders::to_string(set)) + ".embr";
}
std::string probe_report(Condition condition, const std::string& extension) {
  return "reports/probe_" + std::string(probe::to_string(condition)) + "." + extension;
}
std::string scores(const std::string& stem, std::size_t layer) {
  return "scores/" + stem + "_layer" + std::to_string(layer) + ".csv";
}
std::string functional_report(encoders::FunctionalSet set, const std::string& extension) {
  return "reports/probe_functionals_" + std::string(encoders::to_string(set)) + "." + extension;
}

}  // namespace layout

namespace {

// The two functional sets stand in for the before/after pair of the
// functional-feature row: the second set adds emotion-oriented descriptors.
Condition functional_condition(std::size_t index) { return index == 0 ? Condition::pretrained : Condition::emotion_fused; }

const char* kFunctionalModel = "functionals";

struct Clock {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); }
};

corpus::CorpusManifest read_unified(const std::string& path) {
  corpus::LoadOptions options;
  options.probe_audio = false;
  return corpus::load_unified_manifest(path, options);
}

std::string bundle_path_for(Condition condition) {
  return condition == Condition::pretrained ? layout::kPretrainedBundle : layout::kFusedBundle;
}

std::string theta_key(Condition condition) { return "theta:" + std::string(probe::to_string(condition)); }

void extract_corpus(const encoders::EncoderBundle& bundle, const corpus::CorpusManifest& manifest,
                    const std::string& out_path) {
  encoders::FeatureCacheWriter writer(out_path, bundle.layer_count(), bundle.feature_dim());
  for (const auto& record : manifest.records) {
    writer.append(encoders::extract_layers(bundle, audio::read_wav_at(record.audio_path, bundle.sample_rate()), record.id));
  }
  writer.close();
}

std::string dataset_name(const ExperimentConfig& config) {
  return config.synthetic ? "SYNTH" : std::string(corpus::to_string(config.spoof_manifest->dataset));
}

json parse_json_file(const std::string& path) {
  try {
    return json::parse(binary::read_file(path));
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace

Pipeline::Pipeline(ExperimentConfig config, Logger log)
    : config_(std::move(config)), log_(std::move(log)), ledger_(RunLedger::open(config_.output_dir, config_.checksum)) {}

std::string Pipeline::path(const std::string& relative) const { return (fs::path(config_.output_dir) / relative).string(); }

void Pipeline::say(const std::string& line) const {
  if (log_) log_(line);
}

void Pipeline::require(const std::string& stage, std::initializer_list<std::string> artifacts) const {
  for (const auto& artifact : artifacts) {
    if (!fs::exists(path(artifact))) {
      throw MissingArtifact(stage, "missing " + artifact + "; run the '" + stage + "' stage first");
    }
  }
}

StageOutcome Pipeline::finish(StageRecord record, double seconds) {
  record.wall_seconds = seconds;
  StageOutcome outcome{record.stage, false, {}};
  for (const auto& [artifact, digest] : record.artifacts) outcome.artifacts.push_back(artifact);
  ledger_.record(std::move(record));
  if (auto problems = ledger_.violations(); !problems.empty()) {
    ledger_.save();
    throw Error("ledger invariant violated: " + problems.front());
  }
  ledger_.save();
  say(outcome.stage + ": done in " + std::to_string(seconds).substr(0, 6) + " s");
  return outcome;
}

StageOutcome Pipeline::ingest() {
  if (ledger_.up_to_date("ingest")) {
    say("ingest: up to date");
    return {"ingest", true, {}};
  }
  Clock clock;
  corpus::CorpusManifest emotion, spoof;
  if (config_.synthetic) {
    say("ingest: generating synthetic corpus");
    const auto all = corpus::synth_corpus(*config_.synthetic, config_.synthetic_seed, path(layout::kSyntheticCorpus));
    emotion = corpus::filter_manifest(all, [](const corpus::UtteranceRecord& r) { return !r.spoof; });
    spoof = corpus::filter_manifest(all, [](const corpus::UtteranceRecord& r) { return r.spoof.has_value(); });
  } else {
    corpus::LoadOptions options;
    options.labels = config_.labels;
    std::vector<corpus::CorpusManifest> parts;
    for (const auto& source : config_.emotion_manifests) parts.push_back(corpus::load_manifest(source.path, source.dataset, options));
    emotion = corpus::merge_manifests(parts);
    spoof = corpus::load_manifest(config_.spoof_manifest->path, config_.spoof_manifest->dataset, options);
  }
  for (const auto& record : emotion.records) {
    if (!record.emotion) throw InvalidInput("emotion corpus record '" + record.id + "' has no emotion label");
  }

  if (!config_.emotion_test_manifests.empty()) {
    // Dedicated test corpora: every training-corpus record goes to train/dev.
    const double keep = config_.splits.train + config_.splits.dev;
    corpus::SplitSpec spec{config_.splits.train / keep, config_.splits.dev / keep, 0.0, config_.splits.seed};
    emotion = corpus::make_splits(emotion, spec);
    corpus::LoadOptions options;
    options.labels = config_.labels;
    std::vector<corpus::CorpusManifest> parts{emotion};
    for (const auto& source : config_.emotion_test_manifests) {
      auto test = corpus::load_manifest(source.path, source.dataset, options);
      test.split_of.clear();
      for (const auto& r : test.records) test.split_of.emplace(r.id, corpus::Split::test);
      parts.push_back(std::move(test));
    }
    emotion = corpus::merge_manifests(parts);
  } else if (!emotion.has_splits()) {
    emotion = corpus::make_splits(emotion, config_.splits);
  }
  if (!spoof.has_splits()) spoof = corpus::make_splits(spoof, config_.splits);
  for (const auto* m : {&emotion, &spoof}) {
    for (const auto& warning : m->provenance.warnings) say("ingest: warning: " + warning);
    if (m->provenance.skipped) say("ingest: skipped " + std::to_string(m->provenance.skipped) + " dropped-label rows");
  }

  fs::create_directories(path("manifests"));
  // Audio generated inside the run directory is stored relative to the manifest
  // so identical runs in different directories produce identical bytes.
  auto portable = [&](corpus::CorpusManifest m) {
    const fs::path root = fs::absolute(config_.output_dir).lexically_normal();
    const fs::path manifests = root / "manifests";
    for (auto& r : m.records) {
      const fs::path audio = fs::absolute(r.audio_path).lexically_normal();
      const auto inside = audio.lexically_relative(root);
      if (!inside.empty() && *inside.begin() != "..") r.audio_path = audio.lexically_relative(manifests).string();
    }
    return m;
  };
  corpus::write_manifest(path(layout::kEmotionManifest), portable(emotion));
  corpus::write_manifest(path(layout::kSpoofManifest), portable(spoof));
  say("ingest: emotion " + std::to_string(emotion.records.size()) + " records (train " +
      std::to_string(emotion.count(corpus::Split::train)) + ", dev " + std::to_string(emotion.count(corpus::Split::dev)) +
      ", test " + std::to_string(emotion.count(corpus::Split::test)) + "); spoof " +
      std::to_string(spoof.records.size()) + " records (train " + std::to_string(spoof.count(corpus::Split::train)) +
      ", test " + std::to_string(spoof.count(corpus::Split::test)) + ")");

  StageRecord record{"ingest", {}, {}, 0.0};
  for (const char* artifact : {layout::kEmotionManifest, layout::kSpoofManifest}) {
    record.artifacts[artifact] = ledger_.hash(artifact);
  }
  return finish(std::move(record), clock.seconds());
}

StageOutcome Pipeline::extract(Condition condition) {
  const std::string stage = "extract:" + std::string(probe::to_string(condition));
  require("ingest", {layout::kEmotionManifest, layout::kSpoofManifest});
  if (condition == Condition::emotion_fused) require("bridge", {layout::kFusedBundle, layout::kBridgeHead});
  if (ledger_.up_to_date(stage)) {
    say(stage + ": up to date");
    return {stage, true, {}};
  }
  Clock clock;
  const auto emotion = read_unified(path(layout::kEmotionManifest));
  const auto spoof = read_unified(path(layout::kSpoofManifest));

  StageRecord record{stage, {}, {}, 0.0};
  std::vector<std::string> artifacts;
  if (condition == Condition::pretrained) {
    if (!fs::exists(path(layout::kPretrainedBundle))) {
      say(stage + ": building toy encoder (L=" + std::to_string(config_.encoder.toy.layers) +
          ", D=" + std::to_string(config_.encoder.toy.dim) + ")");
      fs::create_directories(fs::path(path(layout::kPretrainedBundle)).parent_path());
      encoders::save_bundle(path(layout::kPretrainedBundle),
                            encoders::build_toy_encoder(config_.encoder.toy, config_.encoder.kind));
    }
    artifacts.push_back(layout::kPretrainedBundle);
    artifacts.push_back(std::string(layout::kPretrainedBundle) + ".json");
  }
  const auto bundle = encoders::load_bundle(path(bundle_path_for(condition)));
  bundle.verify_frozen_head();
  record.parameters["omega"] = bundle.omega_checksum();
  record.parameters[theta_key(condition)] = bundle.theta_checksum();

  for (const auto& [name, manifest] : {std::pair{std::string("spoof"), &spoof}, std::pair{std::string("emotion"), &emotion}}) {
    const auto relative = layout::cache(condition, name);
    fs::create_directories(fs::path(path(relative)).parent_path());
    say(stage + ": " + name + " corpus, " + std::to_string(manifest->records.size()) + " utterances");
    extract_corpus(bundle, *manifest, path(relative));
    artifacts.push_back(relative);
  }

  if (condition == Condition::pretrained) {
    for (auto set : config_.functionals) {
      const auto relative = layout::functional_cache(set);
      fs::create_directories(fs::path(path(relative)).parent_path());
      say(stage + ": functionals " + std::string(encoders::to_string(set)));
      const auto& ext = config_.external_functionals;
      const bool external = set == encoders::FunctionalSet::EXTERNAL;
      encoders::FeatureCacheWriter writer(path(relative), 1,
                                          external ? ext->length : encoders::functional_length(set));
      for (const auto& r : spoof.records) {
        if (external) {
          const auto sidecar = (fs::path(ext->dir) / (r.id + ".bin")).string();
          if (!fs::exists(sidecar)) throw MissingArtifact(stage, "external functionals missing: " + sidecar);
          writer.append(encoders::as_single_layer(r.id, encoders::read_external_functionals(sidecar, ext->length)));
          continue;
        }
        const auto wave = audio::read_wav_at(r.audio_path, config_.encoder.toy.sample_rate);
        writer.append(encoders::as_single_layer(r.id, encoders::extract_functionals(wave, set)));
      }
      writer.close();
      artifacts.push_back(relative);
    }
  }
  for (const auto& artifact : artifacts) record.artifacts[artifact] = ledger_.hash(artifact);
  return finish(std::move(record), clock.seconds());
}

StageOutcome Pipeline::bridge() {
  require("ingest", {layout::kEmotionManifest});
  require("extract", {layout::kPretrainedBundle});
  if (ledger_.up_to_date("bridge")) {
    say("bridge: up to date");
    return {"bridge", true, {}};
  }
  Clock clock;
  const auto emotion = read_unified(path(layout::kEmotionManifest));
  auto bundle = encoders::load_bundle(path(layout::kPretrainedBundle));
  const std::string theta_before = bundle.theta_checksum();
  const std::string omega_before = bundle.omega_checksum();

  const auto& hyper = config_.bridge;
  say("bridge: AdamW lr " + std::to_string(hyper.learning_rate) + ", " + std::to_string(hyper.max_epochs) +
      " epochs, batch " + std::to_string(hyper.batch_size));
  auto trained = bridge::train_bridge(std::move(bundle), emotion, hyper, [&](const bridge::EpochRecord& e) {
    char line[160];
    std::snprintf(line, sizeof line, "bridge: epoch %zu train_loss %.4f dev_loss %.4f dev_wa %.3f", e.epoch,
                  e.train_loss, e.dev_loss, e.dev_wa);
    say(line);
  });
  if (trained.model.bundle().omega_checksum() != omega_before) throw Error("bridge: frozen head changed");
  bridge::save_bridge(path(layout::kBridgeDir), trained);

  json eval = {{"initial_train_loss", trained.initial_train_loss},
               {"final_train_loss", trained.final_train_loss()},
               {"best_epoch", trained.best_epoch}};
  if (emotion.count(corpus::Split::test) > 0) {
    const auto scores = bridge::eval_weighted_accuracy(trained.model, emotion);
    eval["test_weighted_accuracy"] = scores.weighted_accuracy;
    eval["test_unweighted_accuracy"] = scores.unweighted_accuracy;
    eval["test_count"] = scores.count;
    say("bridge: emotion test WA " + std::to_string(scores.weighted_accuracy) + ", UA " +
        std::to_string(scores.unweighted_accuracy));
  }
  binary::write_file_atomically(path(layout::kBridgeEval), eval.dump(2) + "\n");

  StageRecord record{"bridge", {}, {}, 0.0};
  record.parameters["omega"] = trained.model.bundle().omega_checksum();
  record.parameters[theta_key(Condition::pretrained)] = theta_before;
  record.parameters[theta_key(Condition::emotion_fused)] = trained.model.bundle().theta_checksum();
  record.parameters["phi"] = trained.model.head().checksum();
  for (std::string artifact : {std::string(layout::kFusedBundle), std::string(layout::kFusedBundle) + ".json",
                               std::string(layout::kBridgeHead), std::string(layout::kBridgeLog),
                               std::string(layout::kBridgeEval)}) {
    record.artifacts[artifact] = ledger_.hash(artifact);
  }
  return finish(std::move(record), clock.seconds());
}

StageOutcome Pipeline::probe(Condition condition) {
  const std::string stage = "probe:" + std::string(probe::to_string(condition));
  const std::string extract_stage = "extract";
  require("ingest", {layout::kSpoofManifest});
  require(extract_stage, {layout::cache(condition, "spoof"), bundle_path_for(condition)});
  if (ledger_.up_to_date(stage)) {
    say(stage + ": up to date");
    return {stage, true, {}};
  }
  Clock clock;
  const auto spoof = read_unified(path(layout::kSpoofManifest));
  const std::string bundle_file = path(bundle_path_for(condition));
  const std::string file_before = sha256_file(bundle_file);
  const auto before = encoders::load_bundle(bundle_file);

  const auto cache = encoders::FeatureCache::open(path(layout::cache(condition, "spoof")));
  auto report = probe::probe_all_layers(cache, spoof, condition, config_.probe, before.layer_count());
  report.dataset = dataset_name(config_);
  report.model = std::string(encoders::to_string(config_.encoder.kind));
  report.checksums["config"] = config_.checksum;
  report.checksums["omega"] = before.omega_checksum();
  report.checksums["theta"] = before.theta_checksum();

  std::vector<std::string> artifacts = {layout::probe_report(condition, "json"), layout::probe_report(condition, "csv")};
  fs::create_directories(path("reports"));
  binary::write_file_atomically(path(artifacts[0]), probe::to_json(report));
  binary::write_file_atomically(path(artifacts[1]), probe::per_layer_csv(report));
  fs::create_directories(path("scores"));
  auto export_scores = [&](const probe::ProbeReport& r, const std::string& stem) {
    for (std::size_t l = 0; l < r.scores.size(); ++l) {
      artifacts.push_back(layout::scores(stem, l));
      metrics::write_score_file(path(artifacts.back()), r.scores[l]);
    }
  };
  export_scores(report, std::string(probe::to_string(condition)));
  char line[160];
  std::snprintf(line, sizeof line, "%s: layer-average EER %.4f, accuracy %.4f", stage.c_str(), report.layer_avg_eer,
                report.layer_avg_acc);
  say(line);

  // Functional sets ride along: the i-th configured set fills condition i.
  for (std::size_t i = 0; i < config_.functionals.size() && i < 2; ++i) {
    if (functional_condition(i) != condition) continue;
    const auto set = config_.functionals[i];
    require("extract", {layout::functional_cache(set)});
    const auto fcache = encoders::FeatureCache::open(path(layout::functional_cache(set)));
    auto freport = probe::probe_all_layers(fcache, spoof, condition, config_.probe, 1);
    freport.dataset = report.dataset;
    freport.model = kFunctionalModel;
    freport.checksums["config"] = config_.checksum;
    freport.notes.push_back("feature set " + std::string(encoders::to_string(set)));
    const auto json_path = layout::functional_report(set, "json");
    const auto csv_path = layout::functional_report(set, "csv");
    binary::write_file_atomically(path(json_path), probe::to_json(freport));
    binary::write_file_atomically(path(csv_path), probe::per_layer_csv(freport));
    artifacts.push_back(json_path);
    artifacts.push_back(csv_path);
    export_scores(freport, "functionals_" + std::string(encoders::to_string(set)));
  }

  // The encoder stays frozen: the checkpoint file and theta must be untouched.
  const auto after = encoders::load_bundle(bundle_file);
  if (sha256_file(bundle_file) != file_before || after.theta_checksum() != before.theta_checksum()) {
    throw Error(stage + ": encoder checkpoint changed during probing");
  }
  StageRecord record{stage, {}, {}, 0.0};
  record.parameters["omega"] = after.omega_checksum();
  record.parameters[theta_key(condition)] = after.theta_checksum();
  for (const auto& artifact : artifacts) record.artifacts[artifact] = ledger_.hash(artifact);
  return finish(std::move(record), clock.seconds());
}

StageOutcome Pipeline::diagnose() {
  require("ingest", {layout::kEmotionManifest, layout::kSpoofManifest});
  require("bridge", {layout::kFusedBundle});
  require("extract", {layout::kPretrainedBundle, layout::cache(Condition::pretrained, "emotion"),
                      layout::cache(Condition::pretrained, "spoof")});
  require("extract", {layout::cache(Condition::emotion_fused, "emotion"), layout::cache(Condition::emotion_fused, "spoof")});
  if (ledger_.up_to_date("diagnose")) {
    say("diagnose: up to date");
    return {"diagnose", true, {}};
  }
  Clock clock;
  const auto emotion = read_unified(path(layout::kEmotionManifest));
  const auto spoof = read_unified(path(layout::kSpoofManifest));
  const auto ori = encoders::load_bundle(path(layout::kPretrainedBundle));
  const auto fused = encoders::load_bundle(path(layout::kFusedBundle));
  fs::create_directories(path("diagnostics"));
  std::vector<std::string> artifacts;
  auto write = [&](const std::string& relative, const std::string& text) {
    binary::write_file_atomically(path(relative), text);
    artifacts.push_back(relative);
  };

  // Attention profiles over a fixed sample of the emotion test split.
  auto pool = emotion.in_split(corpus::Split::test);
  if (pool.empty()) pool = emotion.in_split(corpus::Split::train);
  std::sort(pool.begin(), pool.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
  if (pool.size() > config_.diagnostics.attention_samples) pool.resize(config_.diagnostics.attention_samples);
  std::vector<audio::Waveform> waves;
  for (const auto* r : pool) waves.push_back(audio::read_wav_at(r->audio_path, ori.sample_rate()));
  const auto profile_ori = diagnostics::attention_profile(ori, waves, "model_ori", config_.diagnostics.attention_frames);
  const auto profile_new = diagnostics::attention_profile(fused, waves, "model_new", profile_ori.frames);
  const auto overlap = diagnostics::attention_overlap(profile_ori, profile_new);
  write("diagnostics/attention.csv", diagnostics::attention_csv({profile_ori, profile_new}));
  write("diagnostics/attention.json",
        json({{"frames", profile_ori.frames}, {"samples", profile_ori.samples}, {"overlap_cosine", overlap}}).dump(2) + "\n");

  // Embeddings and forgetting scores on the last layer of a seeded emotion-corpus sample.
  std::vector<const corpus::UtteranceRecord*> chosen;
  for (const auto& r : emotion.records) chosen.push_back(&r);
  std::sort(chosen.begin(), chosen.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
  Rng(mix_seed(config_.seed ^ 0x656d62ULL)).shuffle(chosen);
  if (chosen.size() > config_.diagnostics.embedding_samples) chosen.resize(config_.diagnostics.embedding_samples);
  std::sort(chosen.begin(), chosen.end(), [](const auto* a, const auto* b) { return a->id < b->id; });

  std::vector<diagnostics::PointMeta> meta;
  std::vector<std::string> speakers, emotions, contents;
  for (const auto* r : chosen) {
    meta.push_back({r->id, r->speaker_id.value_or(""), r->emotion ? std::string(corpus::to_string(*r->emotion)) : "",
                    r->content_id.value_or("")});
    speakers.push_back(meta.back().speaker_id);
    emotions.push_back(meta.back().emotion);
    contents.push_back(meta.back().content_id);
  }
  auto last_layer = [&](Condition condition) {
    const auto cache = encoders::FeatureCache::open(path(layout::cache(condition, "emotion")));
    MatrixRM points(static_cast<Eigen::Index>(chosen.size()), static_cast<Eigen::Index>(cache.feature_dim()));
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      points.row(static_cast<Eigen::Index>(i)) = probe::pool(cache.read(chosen[i]->id)).back().transpose();
    }
    return points;
  };
  const MatrixRM before = last_layer(Condition::pretrained);
  const MatrixRM after = last_layer(Condition::emotion_fused);
  const auto export_before = diagnostics::export_embedding(before, meta, "pretrained", config_.seed);
  const auto export_after = diagnostics::export_embedding(after, meta, "emotion_fused", config_.seed);
  write("diagnostics/embedding.csv", diagnostics::embedding_csv({export_before, export_after}));
  write("diagnostics/embedding.json", diagnostics::embedding_json({export_before, export_after}));

  std::string forgetting = "grouping,silhouette_before,silhouette_after\n";
  json forgetting_json = json::array();
  for (auto [grouping, labels] : {std::pair{diagnostics::Grouping::speaker, &speakers},
                                  std::pair{diagnostics::Grouping::emotion, &emotions},
                                  std::pair{diagnostics::Grouping::content, &contents}}) {
    std::set<std::string> distinct(labels->begin(), labels->end());
    if (distinct.size() < 2 || distinct.count("")) {
      say("diagnose: skipping " + std::string(diagnostics::to_string(grouping)) + " grouping (metadata incomplete)");
      continue;
    }
    const auto score = diagnostics::forgetting_score(before, after, *labels, grouping);
    char line[128];
    std::snprintf(line, sizeof line, "%s,%.17g,%.17g\n", std::string(diagnostics::to_string(grouping)).c_str(),
                  score.cluster_quality_before, score.cluster_quality_after);
    forgetting += line;
    forgetting_json.push_back({{"grouping", diagnostics::to_string(grouping)},
                               {"silhouette_before", score.cluster_quality_before},
                               {"silhouette_after", score.cluster_quality_after}});
  }
  write("diagnostics/forgetting.csv", forgetting);
  write("diagnostics/forgetting.json",
        json({{"samples", chosen.size()}, {"metric", "mean silhouette, last layer (extension)"}, {"scores", forgetting_json}})
                .dump(2) + "\n");

  // Per-layer emotion vs spoof accuracy for both conditions.
  json trends_json = json::object();
  for (Condition condition : {Condition::pretrained, Condition::emotion_fused}) {
    const auto emotion_cache = encoders::FeatureCache::open(path(layout::cache(condition, "emotion")));
    const auto spoof_cache = encoders::FeatureCache::open(path(layout::cache(condition, "spoof")));
    const auto trends = diagnostics::dual_task_layer_trends(diagnostics::emotion_task(emotion_cache, emotion),
                                                            diagnostics::spoof_task(spoof_cache, spoof), config_.probe);
    write("diagnostics/layer_trends_" + std::string(probe::to_string(condition)) + ".csv",
          diagnostics::layer_trends_csv(trends));
    json layers = json::array();
    for (const auto& t : trends.layers) {
      layers.push_back({{"layer", t.layer}, {"emotion_accuracy", t.emotion_accuracy}, {"spoof_accuracy", t.spoof_accuracy}});
    }
    trends_json[std::string(probe::to_string(condition))] = {{"layers", layers}, {"spearman", trends.spearman}};
  }
  write("diagnostics/layer_trends.json", trends_json.dump(2) + "\n");

  StageRecord record{"diagnose", {}, {}, 0.0};
  record.parameters["omega"] = ori.omega_checksum();
  record.parameters[theta_key(Condition::pretrained)] = ori.theta_checksum();
  record.parameters[theta_key(Condition::emotion_fused)] = fused.theta_checksum();
  if (fused.omega_checksum() != ori.omega_checksum()) throw Error("diagnose: frozen head differs between encoders");
  for (const auto& artifact : artifacts) record.artifacts[artifact] = ledger_.hash(artifact);
  return finish(std::move(record), clock.seconds());
}

StageOutcome Pipeline::report() {
  require("probe", {layout::probe_report(Condition::pretrained, "json"), layout::probe_report(Condition::emotion_fused, "json")});
  require("bridge", {layout::kBridgeEval});
  if (ledger_.up_to_date("report")) {
    say("report: up to date");
    return {"report", true, {}};
  }
  Clock clock;
  std::vector<probe::ProbeReport> encoder_reports, functional_reports;
  for (Condition c : {Condition::pretrained, Condition::emotion_fused}) {
    encoder_reports.push_back(probe::report_from_json(binary::read_file(path(layout::probe_report(c, "json")))));
  }
  for (std::size_t i = 0; i < config_.functionals.size() && i < 2; ++i) {
    const auto file = path(layout::functional_report(config_.functionals[i], "json"));
    if (fs::exists(file)) functional_reports.push_back(probe::report_from_json(binary::read_file(file)));
  }
  // Two functional sets act as one before/after row.
  if (functional_reports.size() == 2) {
    functional_reports[0].condition = Condition::pretrained;
    functional_reports[1].condition = Condition::emotion_fused;
  }
  std::vector<probe::ProbeReport> all = functional_reports;
  all.insert(all.end(), encoder_reports.begin(), encoder_reports.end());

  const json eval = parse_json_file(path(layout::kBridgeEval));
  std::string table1 = "model,weighted_accuracy,unweighted_accuracy,origin\n";
  char line[200];
  if (eval.contains("test_weighted_accuracy")) {
    std::snprintf(line, sizeof line, "%s,%.17g,%.17g,measured\n", std::string(encoders::to_string(config_.encoder.kind)).c_str(),
                  eval.at("test_weighted_accuracy").get<double>(), eval.at("test_unweighted_accuracy").get<double>());
    table1 += line;
  }
  // Literature values, display only.
  table1 += "Shahin et al. 2019,0.840,,external reference\n";
  table1 += "Hamsa et al. 2020,0.909,,external reference\n";
  table1 += "Koya et al. 2022,0.917,,external reference\n";

  fs::create_directories(path("reports"));
  std::vector<std::string> artifacts;
  auto write = [&](const std::string& relative, const std::string& text) {
    binary::write_file_atomically(path(relative), text);
    artifacts.push_back(relative);
  };
  write("reports/table1_emotion.csv", table1);
  write("reports/table2_comparison.csv", probe::comparison_csv(probe::compare(all)));
  write("reports/table3_sources.csv", probe::source_table_csv(probe::source_table(encoder_reports)));

  json stages = json::object();
  for (const auto& [name, record] : ledger_.stages()) stages[name] = record.parameters;
  json summary = {{"config_checksum", config_.checksum},
                  {"stage_checksums", stages},
                  {"emotion", eval},
                  {"comparison", json::parse(json::array().dump())},
                  {"ledger_violations", ledger_.violations()}};
  for (const auto& row : probe::compare(all)) {
    summary["comparison"].push_back({{"dataset", row.dataset},
                                     {"model", row.model},
                                     {"pretrained", {{"eer", row.pretrained_eer}, {"accuracy", row.pretrained_acc}}},
                                     {"emotion_fused", {{"eer", row.fused_eer}, {"accuracy", row.fused_acc}}}});
  }
  write("reports/report.json", summary.dump(2) + "\n");
  for (const auto& row : probe::compare(all)) {
    std::snprintf(line, sizeof line, "report: %s/%s EER %.4f -> %.4f, accuracy %.4f -> %.4f", row.dataset.c_str(),
                  row.model.c_str(), row.pretrained_eer, row.fused_eer, row.pretrained_acc, row.fused_acc);
    say(line);
  }

  StageRecord record{"report", {}, {}, 0.0};
  for (const auto& artifact : artifacts) record.artifacts[artifact] = ledger_.hash(artifact);
  return finish(std::move(record), clock.seconds());
}

std::vector<StageOutcome> Pipeline::run_all() {
  std::vector<StageOutcome> out;
  out.push_back(ingest());
  out.push_back(extract(Condition::pretrained));
  out.push_back(bridge());
  out.push_back(extract(Condition::emotion_fused));
  out.push_back(probe(Condition::pretrained));
  out.push_back(probe(Condition::emotion_fused));
  out.push_back(diagnose());
  out.push_back(report());
  return out;
}

}  // namespace emobridge::pipeline
