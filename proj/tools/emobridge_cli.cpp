#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "emobridge/error.hpp"
#include "emobridge/pipeline/stages.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kConfigError = 2;
constexpr int kMissingArtifact = 3;
constexpr int kNumericalFailure = 4;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> condition;
  std::optional<std::string> out;
};

int run(const std::string& command, const Options& options) {
  using namespace emobridge;
  std::optional<probe::Condition> condition;
  try {
    if (options.condition) condition = probe::parse_condition(*options.condition);
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  auto config = pipeline::load_config(options.config, options.seed, options.out);
  pipeline::Pipeline pipe(std::move(config), [](const std::string& line) { std::cerr << line << '\n'; });
  const auto which = condition.value_or(probe::Condition::pretrained);

  if (command == "ingest") pipe.ingest();
  else if (command == "extract") pipe.extract(which);
  else if (command == "bridge") pipe.bridge();
  else if (command == "probe") pipe.probe(which);
  else if (command == "diagnose") pipe.diagnose();
  else if (command == "report") pipe.report();
  else if (command == "run") pipe.run_all();
  std::cout << pipe.config().output_dir << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emotion-bridged spoof probing: ingest, extract, bridge, probe, diagnose, report"};
  app.require_subcommand(1);
  Options options;

  auto add_common = [&](CLI::App* sub, bool with_condition) {
    sub->add_option("--config", options.config, "experiment JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", options.seed, "override every seed in the config");
    sub->add_option("--out", options.out, "override the output directory");
    if (with_condition) {
      sub->add_option("--condition", options.condition, "encoder state (default pretrained)")
          ->check(CLI::IsMember({"pretrained", "emotion_fused"}));
    }
  };
  add_common(app.add_subcommand("ingest", "load or synthesize corpora and write split manifests"), false);
  add_common(app.add_subcommand("extract", "run the encoder and write per-layer feature caches"), true);
  add_common(app.add_subcommand("bridge", "fine-tune the encoder on emotion recognition"), false);
  add_common(app.add_subcommand("probe", "fit per-layer spoof classifiers and write reports"), true);
  add_common(app.add_subcommand("diagnose", "attention, embedding, forgetting and layer-trend exports"), false);
  add_common(app.add_subcommand("report", "assemble comparison tables"), false);
  add_common(app.add_subcommand("run", "every stage in order"), false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, options);
  } catch (const emobridge::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const emobridge::MissingArtifact& e) {
    std::cerr << "missing artifact (run '" << e.stage() << "' first): " << e.what() << '\n';
    return kMissingArtifact;
  } catch (const emobridge::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}
