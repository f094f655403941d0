#pragma once

// Stability of encoder fingerprints under resampling of held-out bags, swept
// over bag size n and bags per model B.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace gmfp::analysis {

/// Embeds bags of one model's held-out images; bags are index lists into that
/// model's held-out pool and all have the same size.
using BagEmbedder =
    std::function<std::vector<std::vector<float>>(std::size_t model, const std::vector<std::vector<std::size_t>>& bags)>;

struct AblationConfig {
  std::vector<std::size_t> bag_sizes{1, 4, 16, 64};
  std::vector<std::size_t> bags_per_model{32};
  std::size_t trials = 8;
  std::size_t eval_bags = 16;  // held-out codes per model per trial
  std::uint64_t seed = 0;
};

struct AblationRow {
  std::size_t bag_size = 0;
  std::size_t bags_per_model = 0;
  std::size_t trials = 0;
  double score_mean = 0.0;
  double score_std = 0.0;
  double separation_mean = 0.0;
  double separation_std = 0.0;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;
};

/// Each model's held-out pool is split once into an estimation half (the
/// first floor(size/2) images) and an evaluation half. In every trial the
/// fingerprint is the mean embedding of B bags drawn from the estimation
/// half and eval_bags codes are drawn from the evaluation half; images are
/// distinct within a bag, bags are drawn independently. Accuracy attributes
/// each code to the fingerprint it correlates with most. Cells whose n
/// exceeds a half pool are skipped with a warning on stderr.
std::vector<AblationRow> stability_ablation(const BagEmbedder& embed, const std::vector<std::string>& model_ids,
                                            const std::vector<std::size_t>& heldout_sizes,
                                            const AblationConfig& config);

}  // namespace gmfp::analysis
