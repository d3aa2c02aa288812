#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "pdm/learn/classifier.hpp"

namespace pdm {

// Gaussian naive Bayes with per-(class, feature) running moments.
class GaussianNB final : public Classifier {
 public:
  static constexpr double kVarianceFloor = 1e-9;

  ModelFamily family() const override { return ModelFamily::kGnb; }

  // Scores are log-joint values log P(c) + sum log N(x_f; mu, sigma^2);
  // classes never observed score -inf. Throws NotReadyError before any learn.
  Prediction predict(const FeatureVector& fv) const override;
  void learn(const FeatureVector& fv, ClassLabel label) override;

  std::size_t total() const { return total_; }
  std::size_t class_count(ClassLabel c) const { return counts_[index_of(c)]; }
  const RunningGaussian& stats(ClassLabel c, std::size_t feature) const {
    return stats_[index_of(c)][feature];
  }

  nlohmann::json checkpoint() const override;
  static GaussianNB restore(const nlohmann::json& j);

 private:
  std::size_t n_features_ = 0;
  std::size_t total_ = 0;
  std::array<std::size_t, kNumClasses> counts_{};
  std::array<std::vector<RunningGaussian>, kNumClasses> stats_;
};

}  // namespace pdm
