#include "gmfp/ablation.hpp"

#include <algorithm>
#include <iostream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <tuple>

#include "gmfp/attribution.hpp"
#include "gmfp/correlation.hpp"
#include "gmfp/synth_zoo.hpp"

namespace gmfp::analysis {

namespace {

std::vector<std::vector<std::size_t>> draw_bags(std::size_t first, std::size_t count, std::size_t bag_size,
                                                std::size_t bags, std::mt19937_64& rng) {
  std::vector<std::size_t> pool(count);
  std::iota(pool.begin(), pool.end(), first);
  std::vector<std::vector<std::size_t>> out;
  out.reserve(bags);
  for (std::size_t b = 0; b < bags; ++b) {
    // Partial Fisher-Yates: the first bag_size entries become the bag.
    for (std::size_t i = 0; i < bag_size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, count - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    out.emplace_back(pool.begin(), pool.begin() + std::ptrdiff_t(bag_size));
  }
  return out;
}

std::vector<double> widen(const std::vector<float>& v) { return {v.begin(), v.end()}; }

}  // namespace

std::vector<AblationRow> stability_ablation(const BagEmbedder& embed, const std::vector<std::string>& model_ids,
                                            const std::vector<std::size_t>& heldout_sizes,
                                            const AblationConfig& config) {
  const std::size_t m = model_ids.size();
  if (m < 2) throw std::invalid_argument("stability_ablation: need at least 2 models");
  if (heldout_sizes.size() != m) throw std::invalid_argument("stability_ablation: one held-out size per model");
  if (config.trials == 0 || config.eval_bags == 0) {
    throw std::invalid_argument("stability_ablation: trials and eval_bags must be positive");
  }
  const std::size_t smallest = *std::min_element(heldout_sizes.begin(), heldout_sizes.end());
  const std::size_t half = smallest / 2;

  std::vector<AblationRow> rows;
  for (const std::size_t n : config.bag_sizes) {
    for (const std::size_t b : config.bags_per_model) {
      if (n == 0 || b == 0 || n > half) {
        std::cerr << "warning: skipping ablation cell n=" << n << " B=" << b << " (half held-out pool holds "
                  << half << " images)\n";
        continue;
      }
      std::vector<double> scores, separations, accuracies;
      for (std::size_t t = 0; t < config.trials; ++t) {
        std::mt19937_64 rng(zoo::derive_seed(config.seed, (n << 40) ^ (b << 20) ^ t));
        std::vector<ModelFingerprint> fingerprints(m);
        std::vector<std::vector<std::vector<double>>> codes(m);
        for (std::size_t i = 0; i < m; ++i) {
          const std::size_t est = heldout_sizes[i] / 2;
          const auto estimation = embed(i, draw_bags(0, est, n, b, rng));
          auto& fp = fingerprints[i];
          fp.source_id = model_ids[i];
          fp.kind = FingerprintKind::kEncoder;
          fp.num_bags = b;
          fp.vector.assign(estimation.front().size(), 0.0);
          for (const auto& z : estimation) {
            for (std::size_t k = 0; k < z.size(); ++k) fp.vector[k] += z[k];
          }
          for (double& v : fp.vector) v /= double(b);
          for (const auto& z : embed(i, draw_bags(est, heldout_sizes[i] - est, n, config.eval_bags, rng))) {
            codes[i].push_back(widen(z));
          }
        }
        const auto rho = correlation_matrix(fingerprints, codes);
        const auto summary = decorrelation_score(rho);
        scores.push_back(summary.score);
        separations.push_back(summary.separation);

        std::size_t correct = 0, total = 0;
        for (std::size_t i = 0; i < m; ++i) {
          for (const auto& code : codes[i]) {
            std::size_t best = 0;
            double best_corr = -1.0;
            for (std::size_t j = 0; j < m; ++j) {
              double c = 0.0;
              try {
                c = abs_pearson(code, fingerprints[j].vector);
              } catch (const ZeroVarianceError&) {
              }
              if (c > best_corr) {
                best_corr = c;
                best = j;
              }
            }
            correct += best == i;
            ++total;
          }
        }
        accuracies.push_back(double(correct) / double(total));
      }
      AblationRow row;
      row.bag_size = n;
      row.bags_per_model = b;
      row.trials = config.trials;
      std::tie(row.score_mean, row.score_std) = mean_std(scores);
      std::tie(row.separation_mean, row.separation_std) = mean_std(separations);
      std::tie(row.accuracy_mean, row.accuracy_std) = mean_std(accuracies);
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace gmfp::analysis
