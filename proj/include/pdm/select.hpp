#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "pdm/features.hpp"

namespace pdm {

// Running mean / M2 per feature (Welford).
class VarianceState {
 public:
  // Adopts the schema of the first vector; later vectors must match it.
  void update(const FeatureVector& fv);

  std::size_t count() const { return count_; }
  const std::shared_ptr<const FeatureSchema>& schema() const { return schema_; }
  double mean(std::size_t i) const { return mean_[i]; }
  // Population variance M2 / n.
  double variance(std::size_t i) const;
  std::vector<double> variances() const;

 private:
  std::shared_ptr<const FeatureSchema> schema_;
  std::size_t count_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

// A frozen feature subset, recorded with how it was chosen.
struct Selection {
  double threshold = 0.0;
  std::size_t burn_in = 0;  // vectors observed when the set was taken
  std::shared_ptr<const FeatureSchema> schema;

  std::size_t size() const { return schema ? schema->size() : 0; }
};

// Features with variance strictly greater than the threshold, in schema order.
// Throws NotReadyError when fewer than two vectors were observed.
Selection selected_features(const VarianceState& state, double threshold = 0.5);

// Projection onto the selected names. Throws SchemaError when a selected
// feature is missing from the vector.
FeatureVector apply_selection(const FeatureVector& fv, const Selection& selection);

// Candidate feature sets for the two experiment presets.
enum class Scenario { kMeanStd = 1, kFull = 2 };

// Scenario 1: avg and std of the W_avg filter per sensor.
// Scenario 2: all 24 engineered features per sensor.
std::shared_ptr<const FeatureSchema> scenario_candidates(Scenario scenario);

// Text format: "# threshold=<t> burn_in=<n>" then one serialized name per line.
std::string to_text(const Selection& selection);
Selection selection_from_text(const std::string& text);
void save_selection(const Selection& selection, const std::filesystem::path& path);
Selection load_selection(const std::filesystem::path& path);

}  // namespace pdm
