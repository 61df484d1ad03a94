#include "emobridge/pipeline/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <set>

#include "emobridge/binary_io.hpp"
#include "emobridge/checksum.hpp"
#include "emobridge/error.hpp"

namespace emobridge::pipeline {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void allow_keys(const json& object, const std::string& where, std::initializer_list<const char*> keys) {
  if (!object.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : object.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get_or(const json& object, const char* key, T fallback, const std::string& where) {
  if (!object.contains(key) || object.at(key).is_null()) return fallback;
  try {
    return object.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  fs::path p(path);
  if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
  return p.lexically_normal().string();
}

ManifestSource manifest_source(const json& node, const std::string& where, const std::string& base_dir) {
  allow_keys(node, where, {"path", "dataset"});
  if (!node.contains("path")) throw ConfigError(where + ": 'path' is required");
  ManifestSource source;
  source.path = resolve(base_dir, node.at("path").get<std::string>());
  try {
    source.dataset = corpus::parse_dataset_id(get_or<std::string>(node, "dataset", "SYNTH", where));
  } catch (const InvalidInput& e) {
    throw ConfigError(where + ": " + e.what());
  }
  if (!fs::exists(source.path)) throw ConfigError(where + ": manifest '" + source.path + "' does not exist");
  return source;
}

std::uint64_t derived(std::uint64_t global, std::uint64_t stream) {
  return stream == 0 ? global : mix_seed(global ^ (stream * 0x9e3779b97f4a7c15ULL));
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text, const std::string& base_dir,
                              std::optional<std::uint64_t> seed_override,
                              const std::optional<std::string>& out_override) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  allow_keys(doc, "config",
             {"seed", "output_dir", "encoder", "corpus", "splits", "bridge", "probe", "functionals", "diagnostics"});

  ExperimentConfig cfg;
  cfg.seed = seed_override.value_or(get_or<std::uint64_t>(doc, "seed", 42, "config"));
  // Explicit component seeds are ignored under --seed so one flag reseeds the whole run.
  auto component_seed = [&](const json& node, const std::string& where, std::uint64_t stream) {
    if (!seed_override && node.is_object() && node.contains("seed")) return get_or<std::uint64_t>(node, "seed", 0, where);
    return derived(cfg.seed, stream);
  };

  if (out_override) {
    cfg.output_dir = fs::path(*out_override).lexically_normal().string();
  } else {
    if (!doc.contains("output_dir")) throw ConfigError("config: 'output_dir' is required (or pass --out)");
    cfg.output_dir = resolve(base_dir, doc.at("output_dir").get<std::string>());
  }

  // encoder
  const json encoder = doc.value("encoder", json::object());
  allow_keys(encoder, "encoder",
             {"kind", "layers", "dim", "seed", "sample_rate", "mel_bands", "ff_width", "pretrain_classes",
              "positional_scale", "uniform_attention"});
  try {
    cfg.encoder.kind = encoders::parse_encoder_kind(get_or<std::string>(encoder, "kind", "TOY", "encoder"));
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("encoder.kind: ") + e.what());
  }
  auto& toy = cfg.encoder.toy;
  toy.layers = get_or<std::size_t>(encoder, "layers", toy.layers, "encoder");
  toy.dim = get_or<std::size_t>(encoder, "dim", toy.dim, "encoder");
  toy.sample_rate = get_or<int>(encoder, "sample_rate", toy.sample_rate, "encoder");
  toy.mel_bands = get_or<std::size_t>(encoder, "mel_bands", toy.mel_bands, "encoder");
  toy.ff_width = get_or<std::size_t>(encoder, "ff_width", toy.ff_width, "encoder");
  toy.pretrain_classes = get_or<std::size_t>(encoder, "pretrain_classes", toy.pretrain_classes, "encoder");
  toy.positional_scale = get_or<double>(encoder, "positional_scale", toy.positional_scale, "encoder");
  toy.uniform_attention = get_or<bool>(encoder, "uniform_attention", false, "encoder");
  toy.seed = component_seed(encoder, "encoder", 0);
  if (toy.layers < 2 || toy.dim < 4) throw ConfigError("encoder: layers must be >= 2 and dim >= 4");
  if (toy.sample_rate <= 0) throw ConfigError("encoder.sample_rate must be positive");

  // corpus
  if (!doc.contains("corpus")) throw ConfigError("config: 'corpus' is required");
  const json& corpus_node = doc.at("corpus");
  allow_keys(corpus_node, "corpus", {"synthetic", "emotion", "emotion_test", "spoof", "merge_calm_into_neutral"});
  cfg.labels.merge_calm_into_neutral = get_or<bool>(corpus_node, "merge_calm_into_neutral", false, "corpus");
  if (corpus_node.contains("synthetic")) {
    if (corpus_node.contains("emotion") || corpus_node.contains("spoof")) {
      throw ConfigError("corpus: use either 'synthetic' or manifest lists, not both");
    }
    const json& syn = corpus_node.at("synthetic");
    allow_keys(syn, "corpus.synthetic",
               {"emotion_per_class", "bonafide", "spoof", "seed", "min_duration", "max_duration", "speakers",
                "contents", "attack_ids", "spoof_prosody_scale", "spoof_jitter_scale", "spoof_noise_scale"});
    corpus::SynthConfig sc;
    sc.emotion_counts.fill(get_or<std::size_t>(syn, "emotion_per_class", 20, "corpus.synthetic"));
    sc.bonafide = get_or<std::size_t>(syn, "bonafide", sc.bonafide, "corpus.synthetic");
    sc.spoof = get_or<std::size_t>(syn, "spoof", sc.spoof, "corpus.synthetic");
    sc.min_duration = get_or<double>(syn, "min_duration", sc.min_duration, "corpus.synthetic");
    sc.max_duration = get_or<double>(syn, "max_duration", sc.max_duration, "corpus.synthetic");
    sc.speakers = get_or<std::size_t>(syn, "speakers", sc.speakers, "corpus.synthetic");
    sc.contents = get_or<std::size_t>(syn, "contents", sc.contents, "corpus.synthetic");
    sc.attack_ids = get_or<std::vector<std::string>>(syn, "attack_ids", sc.attack_ids, "corpus.synthetic");
    sc.spoof_prosody_scale = get_or<double>(syn, "spoof_prosody_scale", sc.spoof_prosody_scale, "corpus.synthetic");
    sc.spoof_jitter_scale = get_or<double>(syn, "spoof_jitter_scale", sc.spoof_jitter_scale, "corpus.synthetic");
    sc.spoof_noise_scale = get_or<double>(syn, "spoof_noise_scale", sc.spoof_noise_scale, "corpus.synthetic");
    sc.sample_rate = toy.sample_rate;
    cfg.synthetic = sc;
    cfg.synthetic_seed = component_seed(syn, "corpus.synthetic", 0);
  } else {
    if (!corpus_node.contains("emotion") || !corpus_node.contains("spoof")) {
      throw ConfigError("corpus: need 'synthetic', or both 'emotion' and 'spoof' manifests");
    }
    for (std::size_t i = 0; i < corpus_node.at("emotion").size(); ++i) {
      cfg.emotion_manifests.push_back(
          manifest_source(corpus_node.at("emotion")[i], "corpus.emotion[" + std::to_string(i) + "]", base_dir));
    }
    if (cfg.emotion_manifests.empty()) throw ConfigError("corpus.emotion: at least one manifest is required");
    if (corpus_node.contains("emotion_test")) {
      for (std::size_t i = 0; i < corpus_node.at("emotion_test").size(); ++i) {
        cfg.emotion_test_manifests.push_back(manifest_source(
            corpus_node.at("emotion_test")[i], "corpus.emotion_test[" + std::to_string(i) + "]", base_dir));
      }
    }
    cfg.spoof_manifest = manifest_source(corpus_node.at("spoof"), "corpus.spoof", base_dir);
  }

  // splits
  const json splits = doc.value("splits", json::object());
  allow_keys(splits, "splits", {"train", "dev", "test", "seed"});
  cfg.splits.train = get_or<double>(splits, "train", 0.8, "splits");
  cfg.splits.dev = get_or<double>(splits, "dev", 0.1, "splits");
  cfg.splits.test = get_or<double>(splits, "test", 0.1, "splits");
  cfg.splits.seed = component_seed(splits, "splits", 0);
  if (cfg.splits.train < 0 || cfg.splits.dev < 0 || cfg.splits.test < 0 ||
      std::abs(cfg.splits.train + cfg.splits.dev + cfg.splits.test - 1.0) > 1e-9) {
    throw ConfigError("splits: ratios must be non-negative and sum to 1");
  }

  // bridge
  const json br = doc.value("bridge", json::object());
  allow_keys(br, "bridge", {"learning_rate", "max_epochs", "batch_size", "weight_decay", "early_stop_patience", "seed"});
  cfg.bridge.learning_rate = get_or<double>(br, "learning_rate", 1e-5, "bridge");
  cfg.bridge.max_epochs = get_or<std::size_t>(br, "max_epochs", 40, "bridge");
  cfg.bridge.batch_size = get_or<std::size_t>(br, "batch_size", 32, "bridge");
  cfg.bridge.weight_decay = get_or<double>(br, "weight_decay", 0.01, "bridge");
  if (br.contains("early_stop_patience") && !br.at("early_stop_patience").is_null()) {
    cfg.bridge.early_stop_patience = get_or<std::size_t>(br, "early_stop_patience", 0, "bridge");
  }
  cfg.bridge.seed = component_seed(br, "bridge", 0);
  try {
    cfg.bridge.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }

  // probe
  const json pr = doc.value("probe", json::object());
  allow_keys(pr, "probe", {"kernel", "C", "gamma", "tolerance"});
  try {
    cfg.probe.svm.kernel = probe::parse_kernel(get_or<std::string>(pr, "kernel", "rbf", "probe"));
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("probe.kernel: ") + e.what());
  }
  cfg.probe.svm.c = get_or<double>(pr, "C", 1.0, "probe");
  cfg.probe.svm.tolerance = get_or<double>(pr, "tolerance", 1e-3, "probe");
  if (pr.contains("gamma") && pr.at("gamma").is_number()) {
    cfg.probe.svm.gamma_rule = probe::GammaRule::fixed;
    cfg.probe.svm.gamma = pr.at("gamma").get<double>();
  } else if (get_or<std::string>(pr, "gamma", "scale", "probe") != "scale") {
    throw ConfigError("probe.gamma: expected \"scale\" or a positive number");
  }
  if (!(cfg.probe.svm.c > 0.0)) throw ConfigError("probe.C must be positive");

  // functionals
  const json fn = doc.value("functionals", json::array({"EGEMAPS_LIKE", "IS09_LIKE"}));
  if (!fn.is_array()) throw ConfigError("functionals: expected an array");
  for (const auto& entry : fn) {
    if (entry.is_object()) {
      allow_keys(entry, "functionals[]", {"set", "dir", "length"});
      if (entry.value("set", std::string()) != "EXTERNAL" || !entry.contains("dir") || !entry.contains("length")) {
        throw ConfigError("functionals: object entries need set \"EXTERNAL\", dir and length");
      }
      if (cfg.external_functionals) throw ConfigError("functionals: at most one EXTERNAL entry");
      ExternalFunctionals ext;
      try {
        ext.dir = resolve(base_dir, entry.at("dir").get<std::string>());
        ext.length = entry.at("length").get<std::size_t>();
      } catch (const json::exception& e) {
        throw ConfigError(std::string("functionals: ") + e.what());
      }
      if (ext.length == 0) throw ConfigError("functionals: EXTERNAL length must be positive");
      cfg.external_functionals = ext;
      cfg.functionals.push_back(encoders::FunctionalSet::EXTERNAL);
      continue;
    }
    if (!entry.is_string()) throw ConfigError("functionals: entries must be set names or EXTERNAL objects");
    try {
      const auto set = encoders::parse_functional_set(entry.get<std::string>());
      if (set == encoders::FunctionalSet::EXTERNAL) {
        throw ConfigError("functionals: EXTERNAL needs an object entry with dir and length");
      }
      if (std::find(cfg.functionals.begin(), cfg.functionals.end(), set) != cfg.functionals.end()) {
        throw ConfigError("functionals: duplicate set " + entry.get<std::string>());
      }
      cfg.functionals.push_back(set);
    } catch (const InvalidInput& e) {
      throw ConfigError(std::string("functionals: ") + e.what());
    }
  }

  // diagnostics
  const json dg = doc.value("diagnostics", json::object());
  allow_keys(dg, "diagnostics", {"attention_samples", "attention_frames", "embedding_samples"});
  cfg.diagnostics.attention_samples = get_or<std::size_t>(dg, "attention_samples", 16, "diagnostics");
  cfg.diagnostics.attention_frames = get_or<std::size_t>(dg, "attention_frames", 0, "diagnostics");
  cfg.diagnostics.embedding_samples = get_or<std::size_t>(dg, "embedding_samples", 60, "diagnostics");

  // Canonical form: every resolved value, independent of key order and omitted defaults.
  json canon = {
      {"seed", cfg.seed},
      {"encoder",
       {{"kind", encoders::to_string(cfg.encoder.kind)}, {"layers", toy.layers}, {"dim", toy.dim}, {"seed", toy.seed},
        {"sample_rate", toy.sample_rate}, {"mel_bands", toy.mel_bands}, {"ff_width", toy.ff_width},
        {"pretrain_classes", toy.pretrain_classes}, {"positional_scale", toy.positional_scale},
        {"uniform_attention", toy.uniform_attention}}},
      {"splits", {{"train", cfg.splits.train}, {"dev", cfg.splits.dev}, {"test", cfg.splits.test}, {"seed", cfg.splits.seed}}},
      {"bridge",
       {{"learning_rate", cfg.bridge.learning_rate}, {"max_epochs", cfg.bridge.max_epochs},
        {"batch_size", cfg.bridge.batch_size}, {"weight_decay", cfg.bridge.weight_decay},
        {"early_stop_patience", cfg.bridge.early_stop_patience ? json(*cfg.bridge.early_stop_patience) : json()},
        {"seed", cfg.bridge.seed}}},
      {"probe",
       {{"kernel", probe::to_string(cfg.probe.svm.kernel)}, {"C", cfg.probe.svm.c},
        {"gamma", cfg.probe.svm.gamma_rule == probe::GammaRule::scale ? json("scale") : json(cfg.probe.svm.gamma)},
        {"tolerance", cfg.probe.svm.tolerance}}},
      {"diagnostics",
       {{"attention_samples", cfg.diagnostics.attention_samples},
        {"attention_frames", cfg.diagnostics.attention_frames},
        {"embedding_samples", cfg.diagnostics.embedding_samples}}},
      {"merge_calm_into_neutral", cfg.labels.merge_calm_into_neutral}};
  json functionals = json::array();
  for (auto set : cfg.functionals) {
    if (set == encoders::FunctionalSet::EXTERNAL) {
      functionals.push_back({{"set", "EXTERNAL"}, {"dir", cfg.external_functionals->dir},
                             {"length", cfg.external_functionals->length}});
    } else {
      functionals.push_back(encoders::to_string(set));
    }
  }
  canon["functionals"] = functionals;
  if (cfg.synthetic) {
    const auto& sc = *cfg.synthetic;
    canon["synthetic"] = {{"emotion_counts", sc.emotion_counts}, {"bonafide", sc.bonafide}, {"spoof", sc.spoof},
                          {"seed", cfg.synthetic_seed}, {"min_duration", sc.min_duration},
                          {"max_duration", sc.max_duration}, {"speakers", sc.speakers}, {"contents", sc.contents},
                          {"attack_ids", sc.attack_ids}, {"spoof_prosody_scale", sc.spoof_prosody_scale},
                          {"spoof_jitter_scale", sc.spoof_jitter_scale}, {"spoof_noise_scale", sc.spoof_noise_scale}};
  } else {
    auto sources = [](const std::vector<ManifestSource>& list) {
      json out = json::array();
      for (const auto& s : list) out.push_back({{"path", s.path}, {"dataset", corpus::to_string(s.dataset)}});
      return out;
    };
    canon["emotion"] = sources(cfg.emotion_manifests);
    canon["emotion_test"] = sources(cfg.emotion_test_manifests);
    canon["spoof"] = sources({*cfg.spoof_manifest});
  }
  cfg.canonical_json = canon.dump();
  cfg.checksum = sha256_hex(cfg.canonical_json);
  return cfg;
}

ExperimentConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override,
                             const std::optional<std::string>& out_override) {
  if (!fs::exists(path)) throw ConfigError("config file '" + path + "' does not exist");
  std::string text;
  try {
    text = binary::read_file(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text, fs::absolute(path).parent_path().string(), seed_override, out_override);
}

}  // namespace emobridge::pipeline
