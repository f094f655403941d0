#include "gmfp/report.hpp"

#include <cstdio>
#include <cstdlib>
#include <functional>

#include "gmfp/dataset_io.hpp"

namespace gmfp::report {

using nlohmann::json;

std::string format_g9(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.9g", value);
  return buffer;
}

double round_g9(double value) { return std::strtod(format_g9(value).c_str(), nullptr); }

namespace {

json numbers(std::span<const double> values) {
  json out = json::array();
  for (const double v : values) out.push_back(round_g9(v));
  return out;
}

json matrix(const analysis::LabeledMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.size; ++i) {
    rows.push_back(numbers(std::span<const double>(m.values).subspan(i * m.size, m.size)));
  }
  return rows;
}

}  // namespace

std::string CsvTable::to_string() const {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    out += "\n";
  };
  line(header);
  for (const auto& row : rows) line(row);
  return out;
}

void write_json(const std::filesystem::path& path, const json& document) {
  io::write_file_atomic(path, document.dump(2) + "\n");
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  io::write_file_atomic(path, table.to_string());
}

json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw io::FormatError(path.string() + ": " + e.what());
  }
}

json fingerprints_json(std::span<const ModelFingerprint> fingerprints) {
  json out = json::array();
  for (const auto& fp : fingerprints) {
    json entry = {{"source_id", fp.source_id},
                  {"kind", to_string(fp.kind)},
                  {"num_bags", fp.num_bags},
                  {"vector", numbers(fp.vector)}};
    if (fp.kind == FingerprintKind::kPrnu) {
      entry["height"] = fp.height;
      entry["width"] = fp.width;
    }
    out.push_back(std::move(entry));
  }
  return out;
}

json correlation_json(const analysis::CorrelationMatrix& m, const analysis::DecorrelationScore& score,
                      std::size_t bag_size) {
  return {{"kind", to_string(m.kind)},
          {"bag_size", bag_size},
          {"models", m.labels},
          {"heldout_counts", m.heldout_counts},
          {"zero_variance_substitutions", m.zero_variance_substitutions},
          {"matrix", matrix(m)},
          {"decorrelation_score", round_g9(score.score)},
          {"separation", round_g9(score.separation)}};
}

json dendrogram_json(const analysis::Dendrogram& d) {
  const std::size_t m = d.leaves.size();
  json merges = json::array();
  for (const auto& merge : d.merges) {
    merges.push_back({{"first", merge.first},
                      {"second", merge.second},
                      {"height", round_g9(merge.height)},
                      {"size", merge.size}});
  }
  std::function<json(std::size_t)> node = [&](std::size_t id) -> json {
    if (id < m) return {{"id", id}, {"leaf", d.leaves[id]}};
    const auto& merge = d.merges[id - m];
    return {{"id", id},
            {"height", round_g9(merge.height)},
            {"size", merge.size},
            {"children", json::array({node(merge.first), node(merge.second)})}};
  };
  return {{"linkage", analysis::to_string(d.linkage)},
          {"leaves", d.leaves},
          {"merges", merges},
          {"tree", m ? node(2 * m - 2) : json()}};
}

json dendrogram_coordinates_json(const analysis::Dendrogram& d, const analysis::DendrogramCoordinates& c) {
  json segments = json::array();
  for (std::size_t k = 0; k < c.x.size(); ++k) {
    segments.push_back({{"x", numbers(c.x[k])}, {"y", numbers(c.y[k])}});
  }
  std::vector<std::string> order;
  for (const auto leaf : c.leaf_order) order.push_back(d.leaves[leaf]);
  return {{"leaf_order", order}, {"segments", segments}};
}

json attribution_json(const analysis::CrossValidationResult& cv, const std::vector<std::string>& classes,
                      FingerprintKind kind, std::size_t bag_size) {
  json folds = json::array();
  for (const auto& f : cv.folds) {
    folds.push_back({{"fold", f.fold},
                     {"test_size", f.test_size},
                     {"accuracy", round_g9(f.accuracy)},
                     {"macro_auc", round_g9(f.macro_auc)}});
  }
  json scores = json::array();
  for (const auto& row : cv.pooled.scores) scores.push_back(numbers(row));
  std::vector<std::string> excluded;
  for (const auto c : cv.pooled.excluded_classes) excluded.push_back(classes[c]);
  return {{"kind", to_string(kind)},
          {"bag_size", bag_size},
          {"classes", classes},
          {"folds", folds},
          {"accuracy_mean", round_g9(cv.accuracy_mean)},
          {"accuracy_std", round_g9(cv.accuracy_std)},
          {"auc_mean", round_g9(cv.auc_mean)},
          {"auc_std", round_g9(cv.auc_std)},
          {"pooled",
           {{"accuracy", round_g9(cv.pooled.accuracy)},
            {"macro_auc", round_g9(cv.pooled.macro_auc)},
            {"excluded_classes", excluded},
            {"confusion", cv.pooled.confusion},
            {"predicted", cv.pooled.predicted},
            {"scores", scores}}}};
}

CsvTable loss_csv(std::span<const StepRecord> steps) {
  CsvTable t{{"step", "epoch", "loss"}, {}};
  for (const auto& s : steps) t.rows.push_back({std::to_string(s.step), std::to_string(s.epoch), format_g9(s.loss)});
  return t;
}

CsvTable folds_csv(const analysis::CrossValidationResult& cv) {
  CsvTable t{{"fold", "test_size", "accuracy", "macro_auc"}, {}};
  for (const auto& f : cv.folds) {
    t.rows.push_back({std::to_string(f.fold), std::to_string(f.test_size), format_g9(f.accuracy),
                      format_g9(f.macro_auc)});
  }
  return t;
}

CsvTable ablation_csv(std::span<const analysis::AblationRow> rows) {
  CsvTable t{{"bag_size", "bags_per_model", "trials", "score_mean", "score_std", "separation_mean",
              "separation_std", "accuracy_mean", "accuracy_std"},
             {}};
  for (const auto& r : rows) {
    t.rows.push_back({std::to_string(r.bag_size), std::to_string(r.bags_per_model), std::to_string(r.trials),
                      format_g9(r.score_mean), format_g9(r.score_std), format_g9(r.separation_mean),
                      format_g9(r.separation_std), format_g9(r.accuracy_mean), format_g9(r.accuracy_std)});
  }
  return t;
}

}  // namespace gmfp::report
