#include "gmfp/pipeline.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "gmfp/checkpoint.hpp"
#include "gmfp/report.hpp"

namespace gmfp::pipeline {

namespace {

void save_config(const RunConfig& config, const fs::path& out, const std::string& stage) {
  io::write_file_atomic(out / (stage + ".cfg"), format_run_config(config));
}

std::vector<double> widen(std::span<const float> v) { return {v.begin(), v.end()}; }

std::vector<double> bag_mean_residual(std::span<const Image> pool, const std::vector<std::size_t>& bag) {
  std::vector<double> mean(pool.front().size(), 0.0);
  for (const auto index : bag) {
    const auto& pixels = pool[index].pixels;
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += pixels[k];
  }
  for (double& v : mean) v /= double(bag.size());
  return mean;
}

std::vector<std::vector<double>> encoder_codes(const SetEncoder<float>& encoder, std::span<const Image> pool,
                                               std::size_t n, std::size_t max_bags) {
  const auto bags = consecutive_bags(pool.size(), n, max_bags);
  const FeatureBank bank(encoder, pool);
  std::vector<std::vector<double>> out;
  for (const auto& z : bank.embed_bags(bags)) out.push_back(widen(z));
  return out;
}

std::vector<std::vector<double>> prnu_codes(std::span<const Image> pool, std::size_t n, std::size_t max_bags) {
  std::vector<std::vector<double>> out;
  for (const auto& bag : consecutive_bags(pool.size(), n, max_bags)) out.push_back(bag_mean_residual(pool, bag));
  return out;
}

EncoderConfig data_encoder_config(const RunConfig& config, const PreparedData& data) {
  auto e = encoder_config(config);
  e.height = data.manifest.height();
  e.width = data.manifest.width();
  return e;
}

const SetEncoder<float>* encoder_or_null(const std::optional<SetEncoder<float>>& encoder) {
  return encoder ? &*encoder : nullptr;
}

std::optional<SetEncoder<float>> encoder_for(const RunConfig& config, FingerprintKind kind,
                                             const PreparedData& data) {
  if (kind != FingerprintKind::kEncoder) return std::nullopt;
  auto encoder = require_checkpoint(config);
  if (encoder.config().height != data.manifest.height() || encoder.config().width != data.manifest.width()) {
    throw std::runtime_error("checkpoint expects " + std::to_string(encoder.config().height) + "x" +
                             std::to_string(encoder.config().width) + " images, dataset has " +
                             std::to_string(data.manifest.height()) + "x" + std::to_string(data.manifest.width()));
  }
  return encoder;
}

}  // namespace

std::vector<std::size_t> PreparedData::family_labels() const {
  std::map<std::string, std::size_t> index;
  std::vector<std::size_t> labels;
  for (const auto& spec : manifest.models) {
    const auto [it, inserted] = index.emplace(spec.family_id, index.size());
    labels.push_back(it->second);
  }
  return labels;
}

PreparedData prepare_data(const io::LoadedDataset& dataset) {
  std::vector<std::vector<Image>> images = dataset.model_images;
  images.push_back(dataset.real_images);
  std::vector<std::string> ids;
  for (const auto& spec : dataset.manifest.models) ids.push_back(spec.model_id);
  ids.push_back(kRealClassId);
  PreparedData data;
  data.manifest = dataset.manifest;
  data.models = make_residual_dataset(images, ids);
  data.real_train = std::move(data.models.train.back());
  data.real_heldout = std::move(data.models.heldout.back());
  data.models.train.pop_back();
  data.models.heldout.pop_back();
  data.models.model_ids.pop_back();
  return data;
}

PreparedData load_prepared(const fs::path& data_dir) { return prepare_data(io::load_dataset(data_dir)); }

std::vector<std::vector<std::size_t>> consecutive_bags(std::size_t pool, std::size_t n, std::size_t max_bags) {
  if (n == 0) throw std::invalid_argument("bag size must be >= 1");
  if (n > pool) {
    throw std::invalid_argument("bag size " + std::to_string(n) + " exceeds the pool of " + std::to_string(pool) +
                                " images");
  }
  std::vector<std::vector<std::size_t>> bags;
  for (std::size_t start = 0; start + n <= pool && bags.size() < max_bags; start += n) {
    std::vector<std::size_t> bag(n);
    for (std::size_t i = 0; i < n; ++i) bag[i] = start + i;
    bags.push_back(std::move(bag));
  }
  return bags;
}

std::vector<ModelFingerprint> model_fingerprints(const PreparedData& data, FingerprintKind kind,
                                                 const SetEncoder<float>* encoder, std::size_t n, std::size_t bags) {
  std::vector<ModelFingerprint> out;
  for (std::size_t m = 0; m < data.models.num_models(); ++m) {
    const auto& pool = data.models.train[m];
    const auto& id = data.models.model_ids[m];
    if (kind == FingerprintKind::kPrnu) {
      out.push_back(prnu_fingerprint_from_residuals(pool, id));
      continue;
    }
    if (!encoder) throw std::invalid_argument("model_fingerprints: encoder kind needs an encoder");
    if (n * bags > pool.size()) {
      throw std::invalid_argument("model_fingerprints: " + std::to_string(bags) + " bags of " + std::to_string(n) +
                                  " images exceed the training pool of " + std::to_string(pool.size()));
    }
    const FeatureBank bank(*encoder, pool);
    std::vector<Embedding> embeddings;
    for (auto& z : bank.embed_bags(consecutive_bags(pool.size(), n, bags))) {
      embeddings.push_back({std::move(z), id});
    }
    out.push_back(model_fingerprint(embeddings));
  }
  return out;
}

std::vector<std::vector<std::vector<double>>> heldout_codes(const PreparedData& data, FingerprintKind kind,
                                                            const SetEncoder<float>* encoder, std::size_t n,
                                                            std::size_t max_bags) {
  std::vector<std::vector<std::vector<double>>> out;
  for (const auto& pool : data.models.heldout) {
    if (kind == FingerprintKind::kPrnu) {
      out.push_back(prnu_codes(pool, n, max_bags));
    } else {
      if (!encoder) throw std::invalid_argument("heldout_codes: encoder kind needs an encoder");
      out.push_back(encoder_codes(*encoder, pool, n, max_bags));
    }
  }
  return out;
}

SetEncoder<float> require_checkpoint(const RunConfig& config) {
  if (config.checkpoint.empty()) {
    throw std::runtime_error("missing checkpoint: pass --checkpoint (or use --baseline prnu)");
  }
  if (!fs::exists(config.checkpoint)) throw std::runtime_error("missing checkpoint: " + config.checkpoint);
  return io::read_checkpoint(config.checkpoint);
}

GenerateResult run_generate(const RunConfig& config, const fs::path& out, bool force) {
  if (fs::exists(out) && !fs::is_directory(out)) {
    throw std::runtime_error("output path " + out.string() + " exists and is not a directory");
  }
  if (fs::exists(out) && !fs::is_empty(out) && !force) {
    throw std::runtime_error("output directory " + out.string() + " is not empty (use --force to overwrite)");
  }
  GenerateResult result;
  result.manifest = zoo::build_zoo(zoo_config(config));
  const auto written = zoo::generate_dataset(result.manifest, out);
  for (const auto& archive : written.archives) result.image_counts.push_back(io::read_archive_header(archive).count);
  save_config(config, out, "generate");
  return result;
}

TrainStageResult run_train(const RunConfig& config, const PreparedData& data, const fs::path& out) {
  const auto train = train_config(config);
  TrainStageResult result{.training = config.checkpoint.empty()
                                          ? train_encoder(data.models, data_encoder_config(config, data), train)
                                          : train_encoder(data.models,
                                                          *encoder_for(config, FingerprintKind::kEncoder, data),
                                                          train),
                          .checkpoint = out / kCheckpointFile};
  io::write_checkpoint(result.checkpoint, result.training.encoder);
  report::write_csv(out / kLossFile, report::loss_csv(result.training.steps));
  save_config(config, out, "train");
  return result;
}

FingerprintStageResult run_fingerprint(const RunConfig& config, const PreparedData& data, const fs::path& out) {
  const auto kind = baseline_kind(config);
  const auto encoder = encoder_for(config, kind, data);
  const std::size_t n = single_value(config.bag_size, "bag-size");
  const std::size_t bags = single_value(config.bags, "bags");
  FingerprintStageResult result;
  result.fingerprints = model_fingerprints(data, kind, encoder_or_null(encoder), n, bags);
  const auto codes = heldout_codes(data, kind, encoder_or_null(encoder), n, config.attribute_bags);
  result.correlation = analysis::correlation_matrix(result.fingerprints, codes);
  result.score = analysis::decorrelation_score(result.correlation);
  report::write_json(out / kFingerprintsFile, report::fingerprints_json(result.fingerprints));
  report::write_json(out / kCorrelationFile, report::correlation_json(result.correlation, result.score, n));
  save_config(config, out, "fingerprint");
  return result;
}

AttributeStageResult run_attribute(const RunConfig& config, const PreparedData& data, const fs::path& out) {
  const auto kind = baseline_kind(config);
  const auto encoder = encoder_for(config, kind, data);
  const std::size_t n = single_value(config.bag_size, "bag-size");

  AttributeStageResult result;
  result.classes = data.models.model_ids;
  result.classes.push_back(kRealClassId);
  std::vector<const std::vector<Image>*> pools;
  for (const auto& pool : data.models.heldout) pools.push_back(&pool);
  pools.push_back(&data.real_heldout);

  std::vector<ModelFingerprint> prnu;
  if (kind == FingerprintKind::kPrnu) {
    for (std::size_t m = 0; m < data.models.num_models(); ++m) {
      prnu.push_back(prnu_fingerprint_from_residuals(data.models.train[m], data.models.model_ids[m]));
    }
    prnu.push_back(prnu_fingerprint_from_residuals(data.real_train, kRealClassId));
  }

  analysis::FeatureRows x;
  std::vector<std::size_t> y;
  for (std::size_t c = 0; c < pools.size(); ++c) {
    std::vector<std::vector<double>> rows;
    if (kind == FingerprintKind::kEncoder) {
      rows = encoder_codes(*encoder, *pools[c], n, config.attribute_bags);
    } else {
      // Each bag is described by its |correlation| with every class fingerprint.
      for (const auto& code : prnu_codes(*pools[c], n, config.attribute_bags)) {
        std::vector<double> features;
        for (const auto& fp : prnu) {
          double value = 0.0;
          try {
            value = analysis::abs_pearson(code, fp.vector);
          } catch (const analysis::ZeroVarianceError&) {
          }
          features.push_back(value);
        }
        rows.push_back(std::move(features));
      }
    }
    for (auto& row : rows) {
      x.push_back(std::move(row));
      y.push_back(c);
    }
  }
  result.cv = analysis::cross_validate(x, y, result.classes.size(), config.folds, classifier_config(config));
  report::write_json(out / kAttributionFile, report::attribution_json(result.cv, result.classes, kind, n));
  report::write_csv(out / kFoldsFile, report::folds_csv(result.cv));
  save_config(config, out, "attribute");
  return result;
}

ClusterStageResult run_cluster(const RunConfig& config, const PreparedData& data, const fs::path& out) {
  const auto kind = baseline_kind(config);
  const auto encoder = encoder_for(config, kind, data);
  const std::size_t n = single_value(config.bag_size, "bag-size");
  const std::size_t bags = single_value(config.bags, "bags");
  const auto fingerprints = model_fingerprints(data, kind, encoder_or_null(encoder), n, bags);

  ClusterStageResult result;
  result.dendrogram = analysis::hierarchical_cluster(analysis::fingerprint_distance_matrix(fingerprints),
                                                     analysis::parse_linkage(config.linkage));
  const auto families = data.family_labels();
  std::size_t family_count = 0;
  for (const auto f : families) family_count = std::max(family_count, f + 1);
  result.family_cut = analysis::cut_dendrogram(result.dendrogram, family_count);
  result.adjusted_rand = analysis::adjusted_rand_index(result.family_cut, families);

  auto document = report::dendrogram_json(result.dendrogram);
  document["kind"] = to_string(kind);
  std::vector<std::string> family_ids;
  for (const auto& spec : data.manifest.models) family_ids.push_back(spec.family_id);
  document["family_cut"] = {{"clusters", family_count},
                            {"labels", result.family_cut},
                            {"families", family_ids},
                            {"adjusted_rand_index", report::round_g9(result.adjusted_rand)}};
  report::write_json(out / kDendrogramFile, document);
  report::write_json(out / kCoordinatesFile,
                     report::dendrogram_coordinates_json(result.dendrogram,
                                                         analysis::dendrogram_coordinates(result.dendrogram)));
  save_config(config, out, "cluster");
  return result;
}

std::vector<analysis::AblationRow> run_ablate(const RunConfig& config, const PreparedData& data, const fs::path& out) {
  if (baseline_kind(config) != FingerprintKind::kEncoder) {
    throw std::runtime_error("kind mismatch: ablate sweeps encoder bag embeddings; --baseline prnu is not supported");
  }
  const auto encoder = encoder_for(config, FingerprintKind::kEncoder, data);
  std::vector<FeatureBank> banks;
  std::vector<std::size_t> sizes;
  for (const auto& pool : data.models.heldout) {
    banks.emplace_back(*encoder, pool);
    sizes.push_back(pool.size());
  }
  const analysis::BagEmbedder embed = [&banks](std::size_t model, const std::vector<std::vector<std::size_t>>& bags) {
    return banks[model].embed_bags(bags);
  };
  const auto rows = analysis::stability_ablation(embed, data.models.model_ids, sizes, ablation_config(config));
  report::write_csv(out / kAblationFile, report::ablation_csv(rows));
  save_config(config, out, "ablate");
  return rows;
}

nlohmann::json run_report(const RunConfig& config, const fs::path& out) {
  using nlohmann::json;
  json summary = json::object();
  json files = json::array();
  if (fs::exists(out / kCheckpointFile)) files.push_back(kCheckpointFile);
  if (fs::exists(out / kLossFile)) files.push_back(kLossFile);
  if (fs::exists(out / kCorrelationFile)) {
    const auto c = report::read_json(out / kCorrelationFile);
    summary["correlation"] = {{"kind", c.at("kind")},
                              {"bag_size", c.at("bag_size")},
                              {"decorrelation_score", c.at("decorrelation_score")},
                              {"separation", c.at("separation")}};
    files.push_back(kCorrelationFile);
  }
  if (fs::exists(out / kAttributionFile)) {
    const auto a = report::read_json(out / kAttributionFile);
    summary["attribution"] = {{"kind", a.at("kind")},
                              {"bag_size", a.at("bag_size")},
                              {"accuracy_mean", a.at("accuracy_mean")},
                              {"accuracy_std", a.at("accuracy_std")},
                              {"auc_mean", a.at("auc_mean")},
                              {"auc_std", a.at("auc_std")}};
    files.push_back(kAttributionFile);
  }
  if (fs::exists(out / kDendrogramFile)) {
    const auto d = report::read_json(out / kDendrogramFile);
    summary["clustering"] = {{"kind", d.at("kind")},
                             {"linkage", d.at("linkage")},
                             {"clusters", d.at("family_cut").at("clusters")},
                             {"adjusted_rand_index", d.at("family_cut").at("adjusted_rand_index")}};
    files.push_back(kDendrogramFile);
  }
  if (fs::exists(out / kAblationFile)) {
    const auto lines = io::read_file(out / kAblationFile);
    summary["ablation"] = {{"rows", std::count(lines.begin(), lines.end(), '\n') - 1}};
    files.push_back(kAblationFile);
  }
  if (files.empty()) throw std::runtime_error("report: no stage artifacts found in " + out.string());
  summary["files"] = files;
  report::write_json(out / kReportFile, summary);
  save_config(config, out, "report");
  return summary;
}

}  // namespace gmfp::pipeline
