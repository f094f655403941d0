#include "gmfp/correlation.hpp"

#include <cmath>
#include <iostream>

namespace gmfp::analysis {

double abs_pearson(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("abs_pearson: length mismatch " + std::to_string(u.size()) + " vs " +
                                std::to_string(v.size()));
  }
  if (u.size() < 2) throw std::invalid_argument("abs_pearson: need at least 2 entries");
  const double n = double(u.size());
  double mu = 0.0, mv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    mu += u[i];
    mv += v[i];
  }
  mu /= n;
  mv /= n;
  double cov = 0.0, vu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = u[i] - mu, b = v[i] - mv;
    cov += a * b;
    vu += a * a;
    vv += b * b;
  }
  if (vu <= 0.0 || vv <= 0.0) throw ZeroVarianceError("abs_pearson: zero variance");
  return std::min(1.0, std::abs(cov) / std::sqrt(vu * vv));
}

CorrelationMatrix correlation_matrix(std::span<const ModelFingerprint> fingerprints,
                                     std::span<const std::vector<std::vector<double>>> codes) {
  const std::size_t m = fingerprints.size();
  if (m == 0) throw std::invalid_argument("correlation_matrix: no fingerprints");
  if (codes.size() != m) {
    throw std::invalid_argument("correlation_matrix: need held-out codes for each of the " +
                                std::to_string(m) + " models");
  }
  const auto kind = fingerprints.front().kind;
  const std::size_t dim = fingerprints.front().vector.size();
  for (const auto& fp : fingerprints) {
    if (fp.kind != kind) throw std::invalid_argument("correlation_matrix: kind mismatch (raster vs vector)");
    if (fp.vector.size() != dim) throw std::invalid_argument("correlation_matrix: dimension mismatch");
  }
  CorrelationMatrix out;
  out.kind = kind;
  out.size = m;
  out.values.assign(m * m, 0.0);
  for (const auto& fp : fingerprints) out.labels.push_back(fp.source_id);
  for (std::size_t i = 0; i < m; ++i) {
    if (codes[i].empty()) {
      throw std::invalid_argument("correlation_matrix: model " + out.labels[i] + " has no held-out codes");
    }
    out.heldout_counts.push_back(codes[i].size());
    for (std::size_t j = 0; j < m; ++j) {
      double total = 0.0;
      for (const auto& code : codes[i]) {
        if (code.size() != dim) throw std::invalid_argument("correlation_matrix: code dimension mismatch");
        try {
          total += abs_pearson(code, fingerprints[j].vector);
        } catch (const ZeroVarianceError&) {
          ++out.zero_variance_substitutions;
        }
      }
      out.at(i, j) = total / double(codes[i].size());
    }
  }
  if (out.zero_variance_substitutions > 0) {
    std::cerr << "warning: correlation_matrix substituted 0 for " << out.zero_variance_substitutions
              << " constant-vector correlations\n";
  }
  return out;
}

DecorrelationScore decorrelation_score(const LabeledMatrix& rho) {
  if (rho.size == 0 || rho.values.size() != rho.size * rho.size) {
    throw std::invalid_argument("decorrelation_score: matrix is not square");
  }
  const std::size_t m = rho.size;
  double frob = 0.0, diag = 0.0, off = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = rho.at(i, j) - (i == j ? 1.0 : 0.0);
      frob += d * d;
      (i == j ? diag : off) += rho.at(i, j);
    }
  }
  DecorrelationScore s;
  s.score = std::sqrt(frob) / double(m * m);
  const double off_mean = m > 1 ? off / double(m * (m - 1)) : 0.0;
  s.separation = diag / double(m) - off_mean;
  return s;
}

LabeledMatrix fingerprint_distance_matrix(std::span<const ModelFingerprint> fingerprints) {
  const std::size_t m = fingerprints.size();
  if (m < 2) throw std::invalid_argument("fingerprint_distance_matrix: need at least 2 fingerprints");
  LabeledMatrix out;
  out.size = m;
  out.values.assign(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    out.labels.push_back(fingerprints[i].source_id);
    if (fingerprints[i].kind != fingerprints.front().kind) {
      throw std::invalid_argument("fingerprint_distance_matrix: kind mismatch");
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double d = 1.0 - abs_pearson(fingerprints[i].vector, fingerprints[j].vector);
      out.at(i, j) = out.at(j, i) = d;
    }
  }
  return out;
}

}  // namespace gmfp::analysis
