#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdm/ingest.hpp"
#include "pdm/learn/classifier.hpp"

namespace pdm {

// Family plus the hyperparameters exposed by the tuning grids.
struct ModelConfig {
  ModelFamily family = ModelFamily::kArfc;
  // HTC / HATC
  std::size_t depth = 50;
  double tie_threshold = 0.5;
  double max_size = 50.0;  // MB of active leaf statistics
  double grace_period = 200.0;
  double split_confidence = 1e-7;
  // ARFC
  std::size_t models = 50;
  std::size_t features = 50;
  double lambda = 50.0;
  double accuracy_decay = 0.999;

  // Only the keys relevant to the family.
  nlohmann::json to_json() const;
  // Rejects unknown keys.
  static ModelConfig from_json(const nlohmann::json& j);
  // Compact grid-point label, e.g. "depth=50 tiethreshold=0.5 maxsize=50".
  std::string label() const;
};

// Best grid points reported for each family.
ModelConfig default_model_config(ModelFamily family);

// Full factorial tuning grid; empty for families without hyperparameters.
std::vector<ModelConfig> hyperparameter_grid(ModelFamily family);

// Always predicts the label the event set assigns to the vector's timestamp.
class OracleClassifier final : public Classifier {
 public:
  explicit OracleClassifier(EventSet events) : events_(std::move(events)) {}

  ModelFamily family() const override { return ModelFamily::kOracle; }
  Prediction predict(const FeatureVector& fv) const override;
  void learn(const FeatureVector&, ClassLabel) override {}
  nlohmann::json checkpoint() const override;

 private:
  EventSet events_;
};

// `events` is only consulted by the oracle family.
std::unique_ptr<Classifier> make_model(const ModelConfig& config, std::uint64_t seed,
                                       const EventSet& events = {});

// Rebuilds a model from Classifier::checkpoint() output.
std::unique_ptr<Classifier> restore_model(const nlohmann::json& checkpoint);

}  // namespace pdm
