#pragma once

// Brute-force reference implementations used as test oracles.

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "gmfp/clustering.hpp"

namespace gmfp::test {

/// Fraction of positive-negative pairs ordered correctly, ties counting 1/2.
inline double pairwise_auc(std::span<const double> scores, std::span<const bool> positive) {
  double concordant = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!positive[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (positive[j]) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) concordant += 1.0;
      if (scores[i] == scores[j]) concordant += 0.5;
    }
  }
  return concordant / pairs;
}

/// Average linkage recomputed from leaf distances at every step. Ties go to
/// the lowest (first, second) cluster id pair.
inline std::vector<analysis::Merge> upgma_oracle(const analysis::LabeledMatrix& d) {
  const std::size_t m = d.size;
  struct Cluster {
    std::size_t id;
    std::vector<std::size_t> leaves;
  };
  std::vector<Cluster> active;
  for (std::size_t i = 0; i < m; ++i) active.push_back({i, {i}});
  std::vector<analysis::Merge> merges;
  for (std::size_t step = 0; step + 1 < m; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bx = 0, by = 0;
    for (std::size_t x = 0; x < active.size(); ++x) {
      for (std::size_t y = 0; y < active.size(); ++y) {
        if (active[x].id >= active[y].id) continue;
        double sum = 0.0;
        for (const auto a : active[x].leaves) {
          for (const auto b : active[y].leaves) sum += d.at(a, b);
        }
        const double avg = sum / double(active[x].leaves.size() * active[y].leaves.size());
        const bool lower_pair = active[x].id < active[bx].id ||
                                (active[x].id == active[bx].id && active[y].id < active[by].id);
        if (avg < best || (avg == best && lower_pair)) {
          best = avg;
          bx = x;
          by = y;
        }
      }
    }
    Cluster merged{m + step, active[bx].leaves};
    merged.leaves.insert(merged.leaves.end(), active[by].leaves.begin(), active[by].leaves.end());
    merges.push_back({active[bx].id, active[by].id, best, merged.leaves.size()});
    const std::size_t hi = std::max(bx, by), lo = std::min(bx, by);
    active.erase(active.begin() + hi);
    active.erase(active.begin() + lo);
    active.push_back(std::move(merged));
  }
  return merges;
}

}  // namespace gmfp::test
