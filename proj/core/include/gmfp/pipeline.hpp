#pragma once

// Pipeline stages behind the command-line tool. Each stage reads a dataset
// directory (and a checkpoint where needed), writes its artifacts into an
// output directory with atomic renames, and saves the effective
// configuration next to them as <stage>.cfg.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gmfp/ablation.hpp"
#include "gmfp/attribution.hpp"
#include "gmfp/clustering.hpp"
#include "gmfp/correlation.hpp"
#include "gmfp/dataset_io.hpp"
#include "gmfp/run_config.hpp"
#include "gmfp/training.hpp"

namespace gmfp::pipeline {

namespace fs = std::filesystem;

inline constexpr const char* kRealClassId = "real";
inline constexpr const char* kCheckpointFile = "encoder.ffgr";
inline constexpr const char* kLossFile = "loss.csv";
inline constexpr const char* kFingerprintsFile = "fingerprints.json";
inline constexpr const char* kCorrelationFile = "correlation.json";
inline constexpr const char* kAttributionFile = "attribution.json";
inline constexpr const char* kFoldsFile = "folds.csv";
inline constexpr const char* kDendrogramFile = "dendrogram.json";
inline constexpr const char* kCoordinatesFile = "dendrogram_coords.json";
inline constexpr const char* kAblationFile = "ablation.csv";
inline constexpr const char* kReportFile = "report.json";

/// Residuals of a loaded dataset: the zoo models plus the real class, each
/// split into training and held-out pools.
struct PreparedData {
  zoo::ZooManifest manifest;
  ResidualDataset models;
  std::vector<Image> real_train;
  std::vector<Image> real_heldout;

  std::vector<std::size_t> family_labels() const;
};

PreparedData prepare_data(const io::LoadedDataset& dataset);
PreparedData load_prepared(const fs::path& data_dir);

/// Bags of n consecutive images, disjoint, at most max_bags of them.
std::vector<std::vector<std::size_t>> consecutive_bags(std::size_t pool, std::size_t n, std::size_t max_bags);

/// Fingerprints of every zoo model from its training pool. Encoder kind: mean
/// embedding of B disjoint bags of n images. PRNU kind: mean residual.
std::vector<ModelFingerprint> model_fingerprints(const PreparedData& data, FingerprintKind kind,
                                                 const SetEncoder<float>* encoder, std::size_t n, std::size_t bags);

/// Held-out codes per zoo model: bag embeddings (encoder) or bag-mean
/// residual rasters (PRNU) over disjoint bags of n images.
std::vector<std::vector<std::vector<double>>> heldout_codes(const PreparedData& data, FingerprintKind kind,
                                                            const SetEncoder<float>* encoder, std::size_t n,
                                                            std::size_t max_bags);

struct GenerateResult {
  zoo::ZooManifest manifest;
  std::vector<std::size_t> image_counts;  // per model, then the real class
};

/// Throws std::runtime_error if `out` exists, is non-empty and force is false.
GenerateResult run_generate(const RunConfig& config, const fs::path& out, bool force);

struct TrainStageResult {
  TrainResult training;
  fs::path checkpoint;
};

/// Trains from scratch, or continues from config.checkpoint when it is set.
TrainStageResult run_train(const RunConfig& config, const PreparedData& data, const fs::path& out);

struct FingerprintStageResult {
  std::vector<ModelFingerprint> fingerprints;
  analysis::CorrelationMatrix correlation;
  analysis::DecorrelationScore score;
};

FingerprintStageResult run_fingerprint(const RunConfig& config, const PreparedData& data, const fs::path& out);

struct AttributeStageResult {
  std::vector<std::string> classes;
  analysis::CrossValidationResult cv;
};

AttributeStageResult run_attribute(const RunConfig& config, const PreparedData& data, const fs::path& out);

struct ClusterStageResult {
  analysis::Dendrogram dendrogram;
  std::vector<std::size_t> family_cut;
  double adjusted_rand = 0.0;
};

ClusterStageResult run_cluster(const RunConfig& config, const PreparedData& data, const fs::path& out);

std::vector<analysis::AblationRow> run_ablate(const RunConfig& config, const PreparedData& data, const fs::path& out);

/// Summarizes whichever stage artifacts exist in `out` into report.json.
nlohmann::json run_report(const RunConfig& config, const fs::path& out);

/// Encoder named by config.checkpoint; throws std::runtime_error when unset.
SetEncoder<float> require_checkpoint(const RunConfig& config);

}  // namespace gmfp::pipeline
