#pragma once

// Agglomerative clustering of model fingerprints.

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gmfp/correlation.hpp"

namespace gmfp::analysis {

enum class Linkage { kSingle, kComplete, kAverage };

const char* to_string(Linkage linkage);
Linkage parse_linkage(const std::string& name);

/// One merge. Leaves are ids 0..M-1; merge k creates cluster id M+k.
/// first < second always.
struct Merge {
  std::size_t first = 0;
  std::size_t second = 0;
  double height = 0.0;
  std::size_t size = 0;
};

struct Dendrogram {
  std::vector<std::string> leaves;
  std::vector<Merge> merges;  // M-1 entries
  Linkage linkage = Linkage::kAverage;
};

/// Ties between equal cluster distances go to the lexicographically lowest
/// (first, second) id pair. Throws std::invalid_argument on NaN, asymmetric
/// or non-square input.
Dendrogram hierarchical_cluster(const LabeledMatrix& distances, Linkage linkage = Linkage::kAverage);

/// Flat labels after undoing the last k-1 merges. Labels are numbered in
/// order of first appearance over the leaves.
std::vector<std::size_t> cut_dendrogram(const Dendrogram& dendrogram, std::size_t clusters);

/// Chance-corrected agreement of two labelings (1 = identical partitions).
double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b);

/// Plot-ready U-shaped segments, one per merge, in the usual dendrogram
/// layout: leaf p sits at x = 5 + 10p along the traversal order.
struct DendrogramCoordinates {
  std::vector<std::size_t> leaf_order;
  std::vector<std::array<double, 4>> x;  // per merge
  std::vector<std::array<double, 4>> y;  // per merge
};

DendrogramCoordinates dendrogram_coordinates(const Dendrogram& dendrogram);

}  // namespace gmfp::analysis
