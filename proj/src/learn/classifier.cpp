#include "pdm/learn/classifier.hpp"

#include <cmath>
#include <numbers>

namespace pdm {
namespace {
constexpr std::array<std::string_view, 5> kFamilyNames = {"gnb", "htc", "hatc", "arfc",
                                                          "oracle"};
}

std::string_view family_name(ModelFamily f) { return kFamilyNames[static_cast<std::size_t>(f)]; }

std::optional<ModelFamily> parse_family(std::string_view s) {
  for (std::size_t i = 0; i < kFamilyNames.size(); ++i) {
    if (kFamilyNames[i] == s) return static_cast<ModelFamily>(i);
  }
  return std::nullopt;
}

ClassLabel argmax_class(const ClassScores& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return class_at(best);
}

void RunningGaussian::add(double x, double w) {
  if (weight <= 0.0) {
    weight = w;
    mean = x;
    m2 = 0.0;
    min = x;
    max = x;
    return;
  }
  weight += w;
  const double prev = mean;
  mean += w * (x - prev) / weight;
  m2 += w * (x - prev) * (x - mean);
  min = std::min(min, x);
  max = std::max(max, x);
}

double RunningGaussian::stddev() const { return std::sqrt(variance()); }

double RunningGaussian::cdf(double x) const {
  if (weight <= 0.0) return 0.0;
  const double sd = stddev();
  if (sd > 0.0) return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2));
  return x >= mean ? 1.0 : 0.0;
}

double RunningGaussian::log_pdf(double x, double variance_floor) const {
  const double var = std::max(variance(), variance_floor);
  const double d = x - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - d * d / (2.0 * var);
}

nlohmann::json RunningGaussian::to_json() const { return {weight, mean, m2, min, max}; }

RunningGaussian RunningGaussian::from_json(const nlohmann::json& j) {
  RunningGaussian g;
  g.weight = j.at(0).get<double>();
  g.mean = j.at(1).get<double>();
  g.m2 = j.at(2).get<double>();
  g.min = j.at(3).get<double>();
  g.max = j.at(4).get<double>();
  return g;
}

}  // namespace pdm
