#include "gmfp/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace gmfp::analysis {

const char* to_string(Linkage linkage) {
  switch (linkage) {
    case Linkage::kSingle: return "single";
    case Linkage::kComplete: return "complete";
    case Linkage::kAverage: return "average";
  }
  return "average";
}

Linkage parse_linkage(const std::string& name) {
  if (name == "single") return Linkage::kSingle;
  if (name == "complete") return Linkage::kComplete;
  if (name == "average") return Linkage::kAverage;
  throw std::invalid_argument("unknown linkage '" + name + "' (expected single, complete or average)");
}

Dendrogram hierarchical_cluster(const LabeledMatrix& distances, Linkage linkage) {
  const std::size_t m = distances.size;
  if (m == 0 || distances.values.size() != m * m) {
    throw std::invalid_argument("hierarchical_cluster: distance matrix is not square");
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = distances.at(i, j);
      if (std::isnan(d)) throw std::invalid_argument("hierarchical_cluster: NaN distance");
      if (d != distances.at(j, i)) throw std::invalid_argument("hierarchical_cluster: matrix is not symmetric");
    }
  }

  // Distances between all cluster ids (leaves and merges), Lance-Williams updates.
  const std::size_t total = 2 * m - 1;
  std::vector<double> dist(total * total, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) dist[i * total + j] = distances.at(i, j);
  }
  std::vector<std::size_t> size(total, 1);
  std::vector<std::size_t> active(m);
  std::iota(active.begin(), active.end(), 0);

  Dendrogram out;
  out.leaves = distances.labels;
  out.linkage = linkage;
  for (std::size_t step = 0; step + 1 < m; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    // active stays sorted, so the first strict minimum is the lowest pair.
    for (std::size_t x = 0; x < active.size(); ++x) {
      for (std::size_t y = x + 1; y < active.size(); ++y) {
        const double d = dist[active[x] * total + active[y]];
        if (d < best) {
          best = d;
          bi = active[x];
          bj = active[y];
        }
      }
    }
    const std::size_t merged = m + step;
    size[merged] = size[bi] + size[bj];
    for (const std::size_t k : active) {
      if (k == bi || k == bj) continue;
      const double di = dist[k * total + bi], dj = dist[k * total + bj];
      double d = 0.0;
      switch (linkage) {
        case Linkage::kSingle: d = std::min(di, dj); break;
        case Linkage::kComplete: d = std::max(di, dj); break;
        case Linkage::kAverage:
          d = (double(size[bi]) * di + double(size[bj]) * dj) / double(size[merged]);
          break;
      }
      dist[k * total + merged] = dist[merged * total + k] = d;
    }
    out.merges.push_back({bi, bj, best, size[merged]});
    std::erase_if(active, [&](std::size_t k) { return k == bi || k == bj; });
    active.push_back(merged);
  }
  return out;
}

std::vector<std::size_t> cut_dendrogram(const Dendrogram& dendrogram, std::size_t clusters) {
  const std::size_t m = dendrogram.leaves.size();
  if (clusters < 1 || clusters > m) {
    throw std::invalid_argument("cut_dendrogram: cluster count must be in [1, " + std::to_string(m) + "]");
  }
  std::vector<std::size_t> parent(2 * m - 1);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> root = [&](std::size_t x) {
    return parent[x] == x ? x : parent[x] = root(parent[x]);
  };
  for (std::size_t k = 0; k < m - clusters; ++k) {
    const auto& merge = dendrogram.merges[k];
    parent[root(merge.first)] = m + k;
    parent[root(merge.second)] = m + k;
  }
  std::map<std::size_t, std::size_t> relabel;
  std::vector<std::size_t> labels(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto r = root(i);
    const auto [it, inserted] = relabel.emplace(r, relabel.size());
    labels[i] = it->second;
  }
  return labels;
}

double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  if (a.size() != b.size()) throw std::invalid_argument("adjusted_rand_index: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  std::map<std::pair<std::size_t, std::size_t>, double> joint;
  std::map<std::size_t, double> rows, cols;
  for (std::size_t i = 0; i < n; ++i) {
    joint[{a[i], b[i]}] += 1;
    rows[a[i]] += 1;
    cols[b[i]] += 1;
  }
  auto pairs = [](double x) { return x * (x - 1) / 2.0; };
  double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [key, count] : joint) index += pairs(count);
  for (const auto& [key, count] : rows) sum_rows += pairs(count);
  for (const auto& [key, count] : cols) sum_cols += pairs(count);
  const double expected = sum_rows * sum_cols / pairs(double(n));
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;  // both partitions trivial
  return (index - expected) / (max_index - expected);
}

DendrogramCoordinates dendrogram_coordinates(const Dendrogram& dendrogram) {
  const std::size_t m = dendrogram.leaves.size();
  DendrogramCoordinates out;
  if (m == 0) return out;
  // Traverse from the root: left child first.
  std::vector<std::size_t> stack{2 * m - 2};
  while (!stack.empty()) {
    const std::size_t id = stack.back();
    stack.pop_back();
    if (id < m) {
      out.leaf_order.push_back(id);
    } else {
      const auto& merge = dendrogram.merges[id - m];
      stack.push_back(merge.second);
      stack.push_back(merge.first);
    }
  }
  std::vector<double> cx(2 * m - 1, 0.0), cy(2 * m - 1, 0.0);
  for (std::size_t p = 0; p < m; ++p) cx[out.leaf_order[p]] = 5.0 + 10.0 * double(p);
  for (std::size_t k = 0; k + 1 < m; ++k) {
    const auto& merge = dendrogram.merges[k];
    const double xa = cx[merge.first], xb = cx[merge.second];
    const double ya = cy[merge.first], yb = cy[merge.second];
    out.x.push_back({xa, xa, xb, xb});
    out.y.push_back({ya, merge.height, merge.height, yb});
    cx[m + k] = 0.5 * (xa + xb);
    cy[m + k] = merge.height;
  }
  return out;
}

}  // namespace gmfp::analysis
