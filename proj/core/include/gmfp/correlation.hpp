#pragma once

// Correlation analysis of fingerprints: |Pearson| between codes and model
// fingerprints, the averaged correlation matrix and its summary scores.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmfp/fingerprint.hpp"

namespace gmfp::analysis {

class ZeroVarianceError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Dense row-major square matrix with model labels.
struct LabeledMatrix {
  std::vector<std::string> labels;
  std::size_t size = 0;
  std::vector<double> values;

  double& at(std::size_t i, std::size_t j) { return values[i * size + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * size + j]; }
};

struct CorrelationMatrix : LabeledMatrix {
  FingerprintKind kind = FingerprintKind::kEncoder;
  std::vector<std::size_t> heldout_counts;  // codes averaged per row
  std::size_t zero_variance_substitutions = 0;
};

/// |corr(u, v)|. Throws ZeroVarianceError if either input is constant and
/// std::invalid_argument on length mismatch or fewer than 2 entries.
double abs_pearson(std::span<const double> u, std::span<const double> v);

/// Entry (i,j) is the mean over the codes of model i of abs_pearson(code,
/// fingerprint j). Constant vectors contribute 0 and are counted in
/// zero_variance_substitutions.
CorrelationMatrix correlation_matrix(std::span<const ModelFingerprint> fingerprints,
                                     std::span<const std::vector<std::vector<double>>> codes);

struct DecorrelationScore {
  /// (1/M^2) * ||rho - I||_F
  double score = 0.0;
  /// mean(diagonal) - mean(off-diagonal); 0 off-diagonal mean when M = 1.
  double separation = 0.0;
};

DecorrelationScore decorrelation_score(const LabeledMatrix& rho);

/// 1 - abs_pearson between every pair of fingerprints; zero diagonal.
LabeledMatrix fingerprint_distance_matrix(std::span<const ModelFingerprint> fingerprints);

}  // namespace gmfp::analysis
