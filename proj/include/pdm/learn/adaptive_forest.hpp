#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "pdm/learn/adwin.hpp"
#include "pdm/learn/hoeffding_tree.hpp"

namespace pdm {

struct ForestOptions {
  std::size_t n_models = 50;
  std::size_t max_features = 50;  // per-leaf random subspace size
  double lambda = 50.0;           // Poisson rate of the online bagging weights
  double warning_delta = DriftMonitor::kDefaultWarningDelta;
  double drift_delta = DriftMonitor::kDefaultDriftDelta;
  // Fading factor of the test-then-train accuracy; 1.0 gives the lifetime ratio.
  double accuracy_decay = 0.999;
  TreeOptions tree = default_tree();

  static TreeOptions default_tree();
  nlohmann::json to_json() const;
  static ForestOptions from_json(const nlohmann::json& j);
};

// Ensemble of Hoeffding trees with online bagging, random feature subspaces,
// per-tree drift detection with background trees, and votes weighted by each
// tree's test-then-train accuracy.
class AdaptiveRandomForest final : public Classifier {
 public:
  struct Vote {
    ClassLabel label = ClassLabel::kNonFailure;
    double weight = 0.0;
  };

  AdaptiveRandomForest(ForestOptions options, std::uint64_t seed);

  ModelFamily family() const override { return ModelFamily::kArfc; }
  Prediction predict(const FeatureVector& fv) const override;
  void learn(const FeatureVector& fv, ClassLabel label) override;

  Prediction predict(std::span<const double> x) const;
  void learn(std::span<const double> x, ClassLabel label);

  // Sum of weights per voted class; when every weight is zero each vote counts once.
  static Prediction weighted_vote(std::span<const Vote> votes);

  std::vector<const HoeffdingTree*> explanation_trees(std::size_t n) const override;

  std::size_t size() const { return members_.size(); }
  const HoeffdingTree& tree(std::size_t i) const { return *members_[i].tree; }
  bool has_background(std::size_t i) const { return members_[i].background != nullptr; }
  double tree_weight(std::size_t i) const { return members_[i].weight(); }
  std::size_t drifts() const;
  std::size_t warnings() const;
  const ForestOptions& options() const { return options_; }

  nlohmann::json checkpoint() const override;
  static AdaptiveRandomForest restore(const nlohmann::json& j);

 private:
  struct Member {
    std::unique_ptr<HoeffdingTree> tree;
    std::unique_ptr<HoeffdingTree> background;
    DriftMonitor monitor;
    std::mt19937_64 rng;
    double correct = 0.0;
    double total = 0.0;
    std::size_t drifts = 0;
    std::size_t warnings = 0;

    double weight() const { return total > 0.0 ? correct / total : 0.0; }
  };

  std::unique_ptr<HoeffdingTree> fresh_tree(Member& m) const;

  ForestOptions options_;
  std::shared_ptr<const FeatureSchema> schema_;
  std::vector<Member> members_;
};

}  // namespace pdm
