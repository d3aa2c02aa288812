#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "pdm/features.hpp"

namespace testing {

// The first n names of the full feature schema.
inline std::shared_ptr<const pdm::FeatureSchema> first_features(std::size_t n) {
  const auto& all = pdm::FeatureSchema::full()->names();
  return std::make_shared<const pdm::FeatureSchema>(
      std::vector<pdm::FeatureName>(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n)));
}

inline pdm::FeatureVector vec(const std::shared_ptr<const pdm::FeatureSchema>& schema,
                              std::vector<double> values, std::uint64_t seq = 0,
                              pdm::Timestamp ts = 0) {
  pdm::FeatureVector fv;
  fv.seq_id = seq;
  fv.timestamp = ts;
  fv.schema = schema;
  fv.values = std::move(values);
  return fv;
}

inline double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

}  // namespace testing
