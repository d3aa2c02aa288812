#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pdm/features.hpp"
#include "pdm/schema.hpp"

namespace pdm {

class HoeffdingTree;

enum class ModelFamily { kGnb, kHtc, kHatc, kArfc, kOracle };

std::string_view family_name(ModelFamily f);  // "gnb", "htc", ...
std::optional<ModelFamily> parse_family(std::string_view s);

using ClassScores = std::array<double, kNumClasses>;

struct Prediction {
  ClassLabel label = ClassLabel::kNonFailure;
  ClassScores scores{};
};

// Index of the largest score; ties go to the lowest class ordinal.
ClassLabel argmax_class(const ClassScores& scores);

// Incremental multi-class classifier over fixed-schema feature vectors.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual ModelFamily family() const = 0;
  virtual Prediction predict(const FeatureVector& fv) const = 0;
  virtual void learn(const FeatureVector& fv, ClassLabel label) = 0;

  // Trees whose decision paths explain a prediction (first n of them).
  // Empty for models that are not tree based.
  virtual std::vector<const HoeffdingTree*> explanation_trees(std::size_t n) const {
    (void)n;
    return {};
  }

  // Snapshot sufficient to resume learning bit-identically.
  virtual nlohmann::json checkpoint() const = 0;
};

// Weighted Welford accumulator (unbiased variance once weight > 1).
struct RunningGaussian {
  double weight = 0.0;
  double mean = 0.0;
  double m2 = 0.0;
  double min = 0.0;
  double max = 0.0;

  void add(double x, double w = 1.0);
  double variance() const { return weight > 1.0 ? m2 / (weight - 1.0) : 0.0; }
  double stddev() const;
  double cdf(double x) const;
  double log_pdf(double x, double variance_floor) const;

  nlohmann::json to_json() const;
  static RunningGaussian from_json(const nlohmann::json& j);
};

}  // namespace pdm
