#include "emobridge/bridge/trainer.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>

#include "emobridge/audio/resample.hpp"
#include "emobridge/binary_io.hpp"
#include "emobridge/bridge/adamw.hpp"
#include "emobridge/error.hpp"
#include "emobridge/metrics/accuracy.hpp"
#include "emobridge/rng.hpp"

namespace emobridge::bridge {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_finite(double loss, std::size_t epoch, std::size_t batch) {
  if (!std::isfinite(loss)) {
    throw NumericalError("bridge training: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                         std::to_string(batch));
  }
}

bool all_finite(const encoders::ParameterSet& params) {
  for (const auto& t : params.tensors()) {
    for (double v : t.values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

double json_number(const nlohmann::json& value) {
  return value.is_null() ? kNaN : value.get<double>();
}

}  // namespace

void BridgeHyper::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidInput("bridge: learning_rate must be > 0");
  if (max_epochs < 1) throw InvalidInput("bridge: max_epochs must be >= 1");
  if (batch_size < 1) throw InvalidInput("bridge: batch_size must be >= 1");
  if (weight_decay < 0.0) throw InvalidInput("bridge: weight_decay must be >= 0");
  if (early_stop_patience && *early_stop_patience == 0) throw InvalidInput("bridge: early_stop_patience must be >= 1");
}

double TrainedBridge::final_train_loss() const {
  if (best_epoch == 0 || best_epoch > log.size()) return initial_train_loss;
  return log[best_epoch - 1].train_loss;
}

std::vector<EmotionExample> load_emotion_examples(const encoders::EncoderBundle& bundle,
                                                  const corpus::CorpusManifest& manifest, corpus::Split split) {
  std::vector<EmotionExample> out;
  for (const auto* record : manifest.in_split(split)) {
    if (!record->emotion) throw InvalidInput("record '" + record->id + "' has no emotion label");
    out.push_back(make_example(bundle, record->id, audio::read_wav_at(record->audio_path, bundle.sample_rate()),
                               *record->emotion));
  }
  return out;
}

EmotionScores evaluate(const BridgeModel& model, std::span<const EmotionExample> examples) {
  if (examples.empty()) throw InvalidInput("evaluate: empty split");
  std::vector<int> predicted;
  std::vector<int> truth;
  for (const auto& example : examples) {
    predicted.push_back(static_cast<int>(model.predict(example.features)));
    truth.push_back(static_cast<int>(example.label));
  }
  return {metrics::weighted_accuracy(predicted, truth), metrics::unweighted_accuracy(predicted, truth),
          examples.size()};
}

EmotionScores eval_weighted_accuracy(const BridgeModel& model, const corpus::CorpusManifest& manifest) {
  const auto examples = load_emotion_examples(model.bundle(), manifest, corpus::Split::test);
  if (examples.empty()) throw InvalidInput("eval_weighted_accuracy: test split is empty");
  return evaluate(model, examples);
}

TrainedBridge train_bridge(encoders::EncoderBundle bundle, std::span<const EmotionExample> train,
                           std::span<const EmotionExample> dev, const BridgeHyper& hyper,
                           const std::function<void(const EpochRecord&)>& on_epoch) {
  hyper.validate();
  if (train.empty()) throw InvalidInput("train_bridge: train split is empty");

  const std::string omega_before = bundle.omega_checksum();
  const std::string theta_before = bundle.theta_checksum();
  BridgeModel model = attach_head(std::move(bundle), probe::PoolingRule{}, hyper.seed);

  AdamWConfig opt{};
  opt.learning_rate = hyper.learning_rate;
  opt.weight_decay = hyper.weight_decay;
  AdamW theta_opt(model.bundle().theta(), opt);
  AdamW head_opt(model.head(), opt);

  const bool has_dev = !dev.empty();
  const double initial_train = emotion_loss_value(model, train);
  const double initial_dev = has_dev ? emotion_loss_value(model, dev) : kNaN;
  check_finite(initial_train, 0, 0);

  std::vector<EpochRecord> log;
  encoders::ParameterSet best_theta = model.bundle().theta();
  encoders::ParameterSet best_head = model.head();
  std::size_t best_epoch = 0;
  double best_loss = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(train.size());
  std::vector<EmotionExample> batch;
  const Rng epoch_root(mix_seed(hyper.seed ^ 0x62726964ULL));
  for (std::size_t epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = epoch_root.fork(epoch);
    rng.shuffle(order);
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += hyper.batch_size, ++batch_index) {
      const std::size_t stop = std::min(order.size(), start + hyper.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(train[order[i]]);
      auto step = emotion_loss(model, batch);
      check_finite(step.loss, epoch, batch_index);
      theta_opt.step(model.bundle().theta(), step.grad_theta);
      head_opt.step(model.head(), step.grad_head);
      if (!all_finite(model.bundle().theta()) || !all_finite(model.head())) {
        throw NumericalError("bridge training: non-finite parameters after epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(batch_index));
      }
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = emotion_loss_value(model, train);
    check_finite(record.train_loss, epoch, batch_index);
    if (has_dev) {
      record.dev_loss = emotion_loss_value(model, dev);
      const auto scores = evaluate(model, dev);
      record.dev_wa = scores.weighted_accuracy;
      record.dev_ua = scores.unweighted_accuracy;
    } else {
      record.dev_loss = record.dev_wa = record.dev_ua = kNaN;
    }
    log.push_back(record);
    if (on_epoch) on_epoch(record);

    const double selection = has_dev ? record.dev_loss : record.train_loss;
    if (selection < best_loss) {
      best_loss = selection;
      best_epoch = epoch;
      best_theta = model.bundle().theta();
      best_head = model.head();
    } else if (hyper.early_stop_patience && epoch - best_epoch >= *hyper.early_stop_patience) {
      break;
    }
  }

  model.bundle().theta() = std::move(best_theta);
  model.head() = std::move(best_head);
  model.bundle().verify_frozen_head();
  if (model.bundle().omega_checksum() != omega_before) throw Error("bridge training modified the frozen head");

  return TrainedBridge{std::move(model), std::move(log), initial_train, initial_dev, best_epoch, theta_before};
}

TrainedBridge train_bridge(encoders::EncoderBundle bundle, const corpus::CorpusManifest& manifest,
                           const BridgeHyper& hyper, const std::function<void(const EpochRecord&)>& on_epoch) {
  if (!manifest.has_splits()) throw InvalidInput("train_bridge: manifest has no split assignment");
  const auto train = load_emotion_examples(bundle, manifest, corpus::Split::train);
  const auto dev = load_emotion_examples(bundle, manifest, corpus::Split::dev);
  return train_bridge(std::move(bundle), train, dev, hyper, on_epoch);
}

std::string training_log_json(const TrainedBridge& trained) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& r : trained.log) {
    epochs.push_back({{"epoch", r.epoch},
                      {"train_loss", r.train_loss},
                      {"dev_loss", r.dev_loss},
                      {"dev_wa", r.dev_wa},
                      {"dev_ua", r.dev_ua}});
  }
  nlohmann::json doc = {{"initial_train_loss", trained.initial_train_loss},
                        {"initial_dev_loss", trained.initial_dev_loss},
                        {"best_epoch", trained.best_epoch},
                        {"final_train_loss", trained.final_train_loss()},
                        {"theta_checksum_before", trained.theta_checksum_before},
                        {"theta_checksum", trained.model.bundle().theta_checksum()},
                        {"omega_checksum", trained.model.bundle().omega_checksum()},
                        {"head_checksum", trained.model.head().checksum()},
                        {"epochs", epochs}};
  return doc.dump(2) + "\n";
}

void save_bridge(const std::string& dir, const TrainedBridge& trained) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path root(dir);
  encoders::save_bundle((root / "encoder.ckpt").string(), trained.model.bundle());
  encoders::write_checkpoint((root / "head.ckpt").string(), {{"phi", &trained.model.head()}});
  binary::write_file_atomically((root / "training_log.json").string(), training_log_json(trained));
}

TrainedBridge load_bridge(const std::string& dir) {
  const std::filesystem::path root(dir);
  for (const char* name : {"encoder.ckpt", "head.ckpt", "training_log.json"}) {
    if (!std::filesystem::exists(root / name)) throw NotFound("bridge checkpoint: missing " + (root / name).string());
  }
  auto bundle = encoders::load_bundle((root / "encoder.ckpt").string());
  auto groups = encoders::read_checkpoint((root / "head.ckpt").string());
  auto it = groups.find("phi");
  if (it == groups.end()) throw FormatError((root / "head.ckpt").string() + ": no 'phi' group");
  BridgeModel model(std::move(bundle), std::move(it->second));

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(binary::read_file((root / "training_log.json").string()));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("training_log.json: " + std::string(e.what()));
  }
  TrainedBridge out{std::move(model), {}, json_number(doc.at("initial_train_loss")),
                    json_number(doc.at("initial_dev_loss")), doc.at("best_epoch").get<std::size_t>(),
                    doc.value("theta_checksum_before", std::string{})};
  for (const auto& e : doc.at("epochs")) {
    out.log.push_back({e.at("epoch").get<std::size_t>(), json_number(e.at("train_loss")),
                       json_number(e.at("dev_loss")), json_number(e.at("dev_wa")), json_number(e.at("dev_ua"))});
  }
  return out;
}

}  // namespace emobridge::bridge
