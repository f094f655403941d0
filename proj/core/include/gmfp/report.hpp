#pragma once

// Machine-readable report emission. Every floating-point value is written
// with 9 significant digits so reruns compare byte for byte.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gmfp/ablation.hpp"
#include "gmfp/attribution.hpp"
#include "gmfp/clustering.hpp"
#include "gmfp/correlation.hpp"
#include "gmfp/fingerprint.hpp"
#include "gmfp/training.hpp"

namespace gmfp::report {

/// printf "%.9g".
std::string format_g9(double value);
/// The double nearest to format_g9(value).
double round_g9(double value);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_string() const;
};

/// Atomic writes; JSON is pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& document);
void write_csv(const std::filesystem::path& path, const CsvTable& table);
nlohmann::json read_json(const std::filesystem::path& path);

nlohmann::json fingerprints_json(std::span<const ModelFingerprint> fingerprints);
nlohmann::json correlation_json(const analysis::CorrelationMatrix& matrix, const analysis::DecorrelationScore& score,
                                std::size_t bag_size);
/// Flat merge records plus the same tree nested from the root.
nlohmann::json dendrogram_json(const analysis::Dendrogram& dendrogram);
nlohmann::json dendrogram_coordinates_json(const analysis::Dendrogram& dendrogram,
                                           const analysis::DendrogramCoordinates& coordinates);
nlohmann::json attribution_json(const analysis::CrossValidationResult& cv, const std::vector<std::string>& classes,
                                FingerprintKind kind, std::size_t bag_size);

CsvTable loss_csv(std::span<const StepRecord> steps);
CsvTable folds_csv(const analysis::CrossValidationResult& cv);
CsvTable ablation_csv(std::span<const analysis::AblationRow> rows);

}  // namespace gmfp::report
