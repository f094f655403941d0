#include "gmfp/run_config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "gmfp/report.hpp"

namespace gmfp {

namespace {

struct ConfigField {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

std::size_t to_size(const std::string& key, const std::string& value) {
  std::size_t out = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || value.empty()) {
    throw std::invalid_argument("config: " + key + " expects a non-negative integer, got '" + value + "'");
  }
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty()) {
    throw std::invalid_argument("config: " + key + " expects a number, got '" + value + "'");
  }
  return out;
}

std::string quote(const std::string& s) { return "\"" + s + "\""; }

template <typename M>
ConfigField size_field(std::string key, M member) {
  return {key, [member](const RunConfig& c) { return std::to_string(c.*member); },
          [key, member](RunConfig& c, const std::string& v) { c.*member = to_size(key, v); }};
}

template <typename M>
ConfigField real_field(std::string key, M member) {
  return {key, [member](const RunConfig& c) { return report::format_g9(c.*member); },
          [key, member](RunConfig& c, const std::string& v) { c.*member = to_double(key, v); }};
}

template <typename M>
ConfigField text_field(std::string key, M member) {
  return {key, [member](const RunConfig& c) { return quote(c.*member); },
          [member](RunConfig& c, const std::string& v) { c.*member = v; }};
}

const std::vector<ConfigField>& fields() {
  static const std::vector<ConfigField> all = {
      size_field("families", &RunConfig::families),
      size_field("models-per-family", &RunConfig::models_per_family),
      size_field("height", &RunConfig::height),
      size_field("width", &RunConfig::width),
      size_field("images-per-model", &RunConfig::images_per_model),
      real_field("alpha", &RunConfig::alpha),
      real_field("beta", &RunConfig::beta),
      real_field("sigma", &RunConfig::sigma),
      {"seed", [](const RunConfig& c) { return std::to_string(c.seed); },
       [](RunConfig& c, const std::string& v) { c.seed = to_size("seed", v); }},
      text_field("bag-size", &RunConfig::bag_size),
      text_field("bags", &RunConfig::bags),
      size_field("models-per-batch", &RunConfig::models_per_batch),
      size_field("bags-per-batch", &RunConfig::bags_per_batch),
      size_field("embedding-dim", &RunConfig::embedding_dim),
      size_field("epochs", &RunConfig::epochs),
      real_field("lr", &RunConfig::lr),
      real_field("radius", &RunConfig::radius),
      text_field("pooling", &RunConfig::pooling),
      size_field("folds", &RunConfig::folds),
      text_field("linkage", &RunConfig::linkage),
      text_field("baseline", &RunConfig::baseline),
      size_field("trials", &RunConfig::trials),
      size_field("eval-bags", &RunConfig::eval_bags),
      size_field("classifier-epochs", &RunConfig::classifier_epochs),
      size_field("attribute-bags", &RunConfig::attribute_bags),
      text_field("data", &RunConfig::data),
      text_field("checkpoint", &RunConfig::checkpoint),
      text_field("out", &RunConfig::out),
  };
  return all;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::string format_run_config(const RunConfig& config) {
  std::string out;
  for (const auto& f : fields()) out += f.key + "=" + f.get(config) + "\n";
  return out;
}

RunConfig parse_run_config(const std::string& text) {
  std::map<std::string, const ConfigField*> by_key;
  for (const auto& f : fields()) by_key[f.key] = &f;
  RunConfig config;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    const auto it = by_key.find(key);
    if (it == by_key.end()) throw std::invalid_argument("config: unknown key '" + key + "'");
    it->second->set(config, value);
  }
  return config;
}

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& key) {
  std::vector<std::size_t> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(to_size(key, trim(item)));
  if (out.empty()) throw std::invalid_argument("config: " + key + " is empty");
  return out;
}

std::size_t single_value(const std::string& text, const std::string& key) {
  const auto values = parse_size_list(text, key);
  if (values.size() != 1) throw std::invalid_argument("config: " + key + " takes a single value here, got '" + text + "'");
  return values.front();
}

ad::SetPooling parse_pooling(const std::string& name) {
  if (name == "mean") return ad::SetPooling::kMean;
  if (name == "sum") return ad::SetPooling::kSum;
  throw std::invalid_argument("unknown pooling '" + name + "' (expected mean or sum)");
}

zoo::ZooConfig zoo_config(const RunConfig& config) {
  zoo::ZooConfig z;
  z.num_families = config.families;
  z.models_per_family = config.models_per_family;
  z.height = config.height;
  z.width = config.width;
  z.images_per_model = config.images_per_model;
  z.family_strength = config.alpha;
  z.model_strength = config.beta;
  z.noise_sigma = config.sigma;
  z.seed = config.seed;
  return z;
}

EncoderConfig encoder_config(const RunConfig& config) {
  EncoderConfig e;
  e.height = config.height;
  e.width = config.width;
  e.embedding_dim = config.embedding_dim;
  e.pooling = parse_pooling(config.pooling);
  e.embedding_radius = config.radius;
  return e;
}

TrainConfig train_config(const RunConfig& config) {
  TrainConfig t;
  t.bag_size = single_value(config.bag_size, "bag-size");
  t.bags_per_model = single_value(config.bags, "bags");
  t.models_per_batch = config.models_per_batch;
  t.bags_per_model_per_batch = config.bags_per_batch;
  t.epochs = config.epochs;
  t.learning_rate = config.lr;
  t.seed = config.seed;
  return t;
}

analysis::ClassifierConfig classifier_config(const RunConfig& config) {
  analysis::ClassifierConfig c;
  c.epochs = config.classifier_epochs;
  c.seed = config.seed;
  return c;
}

analysis::AblationConfig ablation_config(const RunConfig& config) {
  analysis::AblationConfig a;
  a.bag_sizes = parse_size_list(config.bag_size, "bag-size");
  a.bags_per_model = parse_size_list(config.bags, "bags");
  a.trials = config.trials;
  a.eval_bags = config.eval_bags;
  a.seed = config.seed;
  return a;
}

FingerprintKind baseline_kind(const RunConfig& config) { return parse_fingerprint_kind(config.baseline); }

}  // namespace gmfp
