#include "pdm/learn/factory.hpp"

#include <cstdio>
#include <set>

#include "pdm/error.hpp"
#include "pdm/learn/adaptive_forest.hpp"
#include "pdm/learn/gaussian_nb.hpp"
#include "pdm/learn/hoeffding_tree.hpp"

namespace pdm {
namespace {

bool is_tree(ModelFamily f) { return f == ModelFamily::kHtc || f == ModelFamily::kHatc; }

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

TreeOptions tree_options(const ModelConfig& c) {
  TreeOptions t;
  t.max_depth = c.depth;
  t.tie_threshold = c.tie_threshold;
  t.max_size_mb = c.max_size;
  t.grace_period = c.grace_period;
  t.split_confidence = c.split_confidence;
  t.adaptive = c.family == ModelFamily::kHatc;
  return t;
}

}  // namespace

nlohmann::json ModelConfig::to_json() const {
  nlohmann::json j{{"family", family_name(family)}};
  if (is_tree(family)) {
    j["depth"] = depth;
    j["tiethreshold"] = tie_threshold;
    j["maxsize"] = max_size;
    j["grace_period"] = grace_period;
    j["split_confidence"] = split_confidence;
  } else if (family == ModelFamily::kArfc) {
    j["models"] = models;
    j["features"] = features;
    j["lambda"] = lambda;
    j["accuracy_decay"] = accuracy_decay;
  }
  return j;
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model config must be an object");
  if (!j.contains("family")) throw ConfigError("model config needs a 'family'");
  const auto family = parse_family(j.at("family").get<std::string>());
  if (!family) throw ConfigError("unknown model family '" + j.at("family").get<std::string>() + "'");
  ModelConfig c = default_model_config(*family);

  static const std::set<std::string> tree_keys{"family", "depth", "tiethreshold", "maxsize",
                                               "grace_period", "split_confidence"};
  static const std::set<std::string> forest_keys{"family", "models", "features", "lambda",
                                                 "accuracy_decay"};
  static const std::set<std::string> bare_keys{"family"};
  const auto& allowed = is_tree(c.family)                 ? tree_keys
                        : c.family == ModelFamily::kArfc ? forest_keys
                                                         : bare_keys;
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown key '" + key + "' for model family " +
                        std::string(family_name(c.family)));
    }
  }
  try {
    if (j.contains("depth")) c.depth = j.at("depth").get<std::size_t>();
    if (j.contains("tiethreshold")) c.tie_threshold = j.at("tiethreshold").get<double>();
    if (j.contains("maxsize")) c.max_size = j.at("maxsize").get<double>();
    if (j.contains("grace_period")) c.grace_period = j.at("grace_period").get<double>();
    if (j.contains("split_confidence")) c.split_confidence = j.at("split_confidence").get<double>();
    if (j.contains("models")) c.models = j.at("models").get<std::size_t>();
    if (j.contains("features")) c.features = j.at("features").get<std::size_t>();
    if (j.contains("lambda")) c.lambda = j.at("lambda").get<double>();
    if (j.contains("accuracy_decay")) c.accuracy_decay = j.at("accuracy_decay").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad model hyperparameter: ") + e.what());
  }
  return c;
}

std::string ModelConfig::label() const {
  if (is_tree(family)) {
    return "depth=" + std::to_string(depth) + " tiethreshold=" + number(tie_threshold) +
           " maxsize=" + number(max_size);
  }
  if (family == ModelFamily::kArfc) {
    return "models=" + std::to_string(models) + " features=" + std::to_string(features) +
           " lambda=" + number(lambda);
  }
  return std::string(family_name(family));
}

ModelConfig default_model_config(ModelFamily family) {
  ModelConfig c;
  c.family = family;
  if (family == ModelFamily::kHatc) c.max_size = 100.0;
  return c;
}

std::vector<ModelConfig> hyperparameter_grid(ModelFamily family) {
  std::vector<ModelConfig> grid;
  if (is_tree(family)) {
    for (std::size_t depth : {50, 100, 200}) {
      for (double tie : {0.5, 0.05, 0.005}) {
        for (double size : {50.0, 100.0, 200.0}) {
          ModelConfig c = default_model_config(family);
          c.depth = depth;
          c.tie_threshold = tie;
          c.max_size = size;
          grid.push_back(c);
        }
      }
    }
  } else if (family == ModelFamily::kArfc) {
    for (std::size_t models : {50, 100, 200}) {
      for (std::size_t features : {50, 100, 200}) {
        for (double lambda : {50.0, 100.0, 200.0}) {
          ModelConfig c = default_model_config(family);
          c.models = models;
          c.features = features;
          c.lambda = lambda;
          grid.push_back(c);
        }
      }
    }
  }
  return grid;
}

Prediction OracleClassifier::predict(const FeatureVector& fv) const {
  Prediction p;
  p.label = events_.label_at(fv.timestamp);
  p.scores[index_of(p.label)] = 1.0;
  return p;
}

nlohmann::json OracleClassifier::checkpoint() const {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : events_.events()) {
    events.push_back({{"label", class_name(e.label)},
                      {"start", format_timestamp(e.start)},
                      {"end", format_timestamp(e.end)}});
  }
  return {{"family", "oracle"},
          {"events", {{"pre_window_seconds", events_.pre_window()}, {"events", events}}}};
}

std::unique_ptr<Classifier> make_model(const ModelConfig& config, std::uint64_t seed,
                                       const EventSet& events) {
  switch (config.family) {
    case ModelFamily::kGnb:
      return std::make_unique<GaussianNB>();
    case ModelFamily::kHtc:
    case ModelFamily::kHatc:
      return std::make_unique<HoeffdingTree>(tree_options(config), seed);
    case ModelFamily::kArfc: {
      ForestOptions o;
      o.n_models = config.models;
      o.max_features = config.features;
      o.lambda = config.lambda;
      o.accuracy_decay = config.accuracy_decay;
      return std::make_unique<AdaptiveRandomForest>(o, seed);
    }
    case ModelFamily::kOracle:
      return std::make_unique<OracleClassifier>(events);
  }
  throw IntegrityError("unhandled model family");
}

std::unique_ptr<Classifier> restore_model(const nlohmann::json& checkpoint) {
  const auto family = parse_family(checkpoint.at("family").get<std::string>());
  if (!family) throw IntegrityError("checkpoint names an unknown model family");
  switch (*family) {
    case ModelFamily::kGnb:
      return std::make_unique<GaussianNB>(GaussianNB::restore(checkpoint));
    case ModelFamily::kHtc:
    case ModelFamily::kHatc:
      return std::make_unique<HoeffdingTree>(HoeffdingTree::restore(checkpoint));
    case ModelFamily::kArfc:
      return std::make_unique<AdaptiveRandomForest>(AdaptiveRandomForest::restore(checkpoint));
    case ModelFamily::kOracle:
      return std::make_unique<OracleClassifier>(
          parse_events_json(checkpoint.at("events").dump()));
  }
  throw IntegrityError("unhandled model family");
}

}  // namespace pdm
