// gmfp: generate a synthetic model zoo, train the set encoder and run the
// fingerprint analyses. All options may also come from a key=value file
// given with --config; command-line flags override it.

#include <cstdio>
#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "gmfp/pipeline.hpp"
#include "gmfp/report.hpp"

namespace {

using namespace gmfp;
namespace fs = std::filesystem;
using report::format_g9;

void add_options(CLI::App& app, RunConfig& c, bool& force) {
  app.add_option("--families", c.families, "Number of model families")->capture_default_str();
  app.add_option("--models-per-family", c.models_per_family, "Models per family")->capture_default_str();
  app.add_option("--height", c.height, "Image height")->capture_default_str();
  app.add_option("--width", c.width, "Image width")->capture_default_str();
  app.add_option("--images-per-model", c.images_per_model, "Images generated per model")->capture_default_str();
  app.add_option("--alpha", c.alpha, "Family artifact strength")->capture_default_str();
  app.add_option("--beta", c.beta, "Model artifact strength")->capture_default_str();
  app.add_option("--sigma", c.sigma, "Per-pixel noise standard deviation")->capture_default_str();
  app.add_option("--seed", c.seed, "Seed for generation, training and evaluation")->capture_default_str();
  app.add_option("--bag-size", c.bag_size, "Images per bag n (comma list for ablate)")->capture_default_str();
  app.add_option("--bags", c.bags, "Bags per model B (comma list for ablate)")->capture_default_str();
  app.add_option("--models-per-batch", c.models_per_batch, "Models per training batch P")->capture_default_str();
  app.add_option("--bags-per-batch", c.bags_per_batch, "Bags per model per batch K")->capture_default_str();
  app.add_option("--embedding-dim", c.embedding_dim, "Embedding dimension D")->capture_default_str();
  app.add_option("--epochs", c.epochs, "Training epochs")->capture_default_str();
  app.add_option("--lr", c.lr, "Adam learning rate")->capture_default_str();
  app.add_option("--radius", c.radius, "Embedding sphere radius (0 disables)")->capture_default_str();
  app.add_option("--pooling", c.pooling, "Set pooling")->check(CLI::IsMember({"mean", "sum"}))->capture_default_str();
  app.add_option("--folds", c.folds, "Cross-validation folds")->capture_default_str();
  app.add_option("--linkage", c.linkage, "Clustering linkage")
      ->check(CLI::IsMember({"single", "complete", "average"}))
      ->capture_default_str();
  app.add_option("--baseline", c.baseline, "Fingerprint kind")
      ->check(CLI::IsMember({"encoder", "prnu"}))
      ->capture_default_str();
  app.add_option("--trials", c.trials, "Ablation resampling trials")->capture_default_str();
  app.add_option("--eval-bags", c.eval_bags, "Ablation held-out codes per model")->capture_default_str();
  app.add_option("--classifier-epochs", c.classifier_epochs, "Attribution classifier epochs")->capture_default_str();
  app.add_option("--attribute-bags", c.attribute_bags, "Max held-out bags per class")->capture_default_str();
  app.add_option("--data", c.data, "Dataset directory");
  app.add_option("--checkpoint", c.checkpoint, "Encoder checkpoint");
  app.add_option("--out", c.out, "Output directory");
  app.add_flag("--force", force, "Overwrite a non-empty output directory");
}

void require(const std::string& value, const char* flag, const std::string& command) {
  if (value.empty()) throw CLI::RequiredError(std::string(flag) + " (required by " + command + ")");
}

int run(const std::string& command, const RunConfig& c, bool force) {
  const fs::path out = c.out;
  if (command == "generate") {
    const auto result = pipeline::run_generate(c, out, force);
    std::size_t total = 0;
    for (const auto n : result.image_counts) total += n;
    std::printf("wrote %zu models + real class (%zu images, %zux%zu) to %s\n", result.manifest.models.size(), total,
                result.manifest.height(), result.manifest.width(), out.c_str());
    return 0;
  }
  if (command == "report") {
    const auto summary = pipeline::run_report(c, out);
    std::printf("%s\n", summary.dump(2).c_str());
    return 0;
  }
  require(c.data, "--data", command);
  const auto data = pipeline::load_prepared(c.data);
  if (command == "train") {
    const auto result = pipeline::run_train(c, data, out);
    const auto& losses = result.training.epoch_mean_loss;
    std::printf("trained %zu steps; epoch-mean loss %s -> %s; checkpoint %s\n", result.training.steps.size(),
                losses.empty() ? "-" : format_g9(losses.front()).c_str(),
                losses.empty() ? "-" : format_g9(losses.back()).c_str(), result.checkpoint.c_str());
  } else if (command == "fingerprint") {
    const auto result = pipeline::run_fingerprint(c, data, out);
    std::printf("%zu %s fingerprints; decorrelation score %s, separation %s\n", result.fingerprints.size(),
                c.baseline.c_str(), format_g9(result.score.score).c_str(),
                format_g9(result.score.separation).c_str());
  } else if (command == "attribute") {
    const auto result = pipeline::run_attribute(c, data, out);
    std::printf("%zu-fold attribution over %zu classes: accuracy %s +- %s, macro AUC %s +- %s\n",
                result.cv.folds.size(), result.classes.size(), format_g9(result.cv.accuracy_mean).c_str(),
                format_g9(result.cv.accuracy_std).c_str(), format_g9(result.cv.auc_mean).c_str(),
                format_g9(result.cv.auc_std).c_str());
  } else if (command == "cluster") {
    const auto result = pipeline::run_cluster(c, data, out);
    std::printf("%s linkage; adjusted Rand index vs families %s\n", c.linkage.c_str(),
                format_g9(result.adjusted_rand).c_str());
  } else if (command == "ablate") {
    const auto rows = pipeline::run_ablate(c, data, out);
    std::printf("%zu ablation rows written to %s\n", rows.size(), (out / pipeline::kAblationFile).c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Artificial fingerprints of generative models: synthetic zoo, set encoder and analyses"};
  app.set_config("--config", "", "key=value configuration file");
  app.require_subcommand(1, 1);
  app.fallthrough();
  // A repeated flag keeps its last value.
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  RunConfig config;
  bool force = false;
  add_options(app, config, force);
  for (const auto& [name, help] : std::vector<std::pair<const char*, const char*>>{
           {"generate", "Write the synthetic zoo (archives + manifest) to --out"},
           {"train", "Train the set encoder on --data, writing a checkpoint and loss curve"},
           {"fingerprint", "Model fingerprints and the held-out correlation matrix"},
           {"attribute", "Cross-validated source attribution of held-out bags"},
           {"cluster", "Average-linkage dendrogram of model fingerprints"},
           {"ablate", "Fingerprint stability over bag size and bag count"},
           {"report", "Summarize the stage artifacts in --out"}}) {
    app.add_subcommand(name, help);
  }

  try {
    app.parse(argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();
    require(config.out, "--out", command);
    return run(command, config, force);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "gmfp: error: " << e.what() << "\n";
    return 1;
  }
}
