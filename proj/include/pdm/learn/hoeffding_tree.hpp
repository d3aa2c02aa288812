#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "pdm/learn/adwin.hpp"
#include "pdm/learn/classifier.hpp"

namespace pdm {

// epsilon = sqrt(R^2 ln(1/delta) / (2n)). Throws ArgumentError unless
// R > 0, 0 < delta < 1 and n >= 1.
double hoeffding_bound(double range, double confidence, double n);

struct TreeOptions {
  std::size_t max_depth = 50;
  double tie_threshold = 0.05;
  double max_size_mb = 100.0;      // budget for active leaf statistics
  double grace_period = 200.0;     // weight between split evaluations
  double split_confidence = 1e-7;  // delta of the Hoeffding bound
  std::size_t split_points = 10;   // candidate thresholds per feature
  double min_branch_fraction = 0.01;
  std::size_t subspace_size = 0;   // features drawn per leaf; 0 means all
  bool adaptive = false;           // drift monitors + background subtrees
  double warning_delta = DriftMonitor::kDefaultWarningDelta;
  double drift_delta = DriftMonitor::kDefaultDriftDelta;
  bool record_splits = false;

  nlohmann::json to_json() const;
  static TreeOptions from_json(const nlohmann::json& j);
};

// Conditions at the moment a leaf was split.
struct SplitRecord {
  std::size_t feature = 0;
  double threshold = 0.0;
  double best_merit = 0.0;
  double second_merit = 0.0;
  double epsilon = 0.0;
  double tie_threshold = 0.0;
  double weight = 0.0;
  std::size_t depth = 0;
};

// Hoeffding tree over numeric features with binary tests x[f] <= t (left) /
// x[f] > t (right). Leaves keep per-class Gaussian summaries per feature and
// predict their majority class. In adaptive mode every internal node watches
// the error of its subtree and grows a background subtree once the error
// rises. After a grace period the two are compared on the samples both have
// seen; the background replaces the subtree when significantly better and is
// dropped when significantly worse.
class HoeffdingTree final : public Classifier {
 public:
  class Node {
   public:
    Node(std::size_t depth, const ClassScores& counts) : depth_(depth), counts_(counts) {}

    bool is_leaf() const { return left_ == nullptr; }
    std::size_t depth() const { return depth_; }
    std::size_t feature() const { return feature_; }
    double threshold() const { return threshold_; }
    const Node* left() const { return left_.get(); }
    const Node* right() const { return right_.get(); }
    const Node* child_for(std::span<const double> x) const {
      return x[feature_] <= threshold_ ? left_.get() : right_.get();
    }
    const ClassScores& class_counts() const { return counts_; }
    bool active() const { return stats_ != nullptr; }
    bool has_background() const { return monitor_ && monitor_->background != nullptr; }
    const Node* background() const { return monitor_ ? monitor_->background.get() : nullptr; }
    bool in_warning() const { return monitor_ && monitor_->warning; }

   private:
    friend class HoeffdingTree;

    struct LeafStats {
      std::vector<std::uint32_t> features;
      std::vector<std::array<RunningGaussian, kNumClasses>> estimators;
    };

    struct Monitor {
      Monitor(double warning_delta, double drift_delta) : detector(warning_delta, drift_delta) {}
      DriftMonitor detector;
      std::unique_ptr<Node> background;
      double background_seen = 0.0;
      double background_errors = 0.0;
      // Foreground errors on the samples the background has seen.
      double foreground_errors = 0.0;
      bool warning = false;
    };

    std::size_t depth_ = 0;
    ClassScores counts_{};
    double last_eval_weight_ = 0.0;
    std::size_t feature_ = 0;
    double threshold_ = 0.0;
    std::unique_ptr<Node> left_;
    std::unique_ptr<Node> right_;
    std::unique_ptr<LeafStats> stats_;
    std::unique_ptr<Monitor> monitor_;
  };

  explicit HoeffdingTree(TreeOptions options = {}, std::uint64_t seed = 0);

  ModelFamily family() const override {
    return options_.adaptive ? ModelFamily::kHatc : ModelFamily::kHtc;
  }

  Prediction predict(const FeatureVector& fv) const override;
  void learn(const FeatureVector& fv, ClassLabel label) override;

  Prediction predict(std::span<const double> x) const;
  void learn(std::span<const double> x, ClassLabel label, double weight = 1.0);

  // Root-to-leaf path followed by x; the last entry is the leaf used by predict.
  std::vector<const Node*> route(std::span<const double> x) const;

  std::vector<const HoeffdingTree*> explanation_trees(std::size_t n) const override;

  const Node* root() const { return root_.get(); }
  const TreeOptions& options() const { return options_; }
  std::size_t n_features() const { return n_features_; }
  const std::shared_ptr<const FeatureSchema>& schema() const { return schema_; }
  void set_schema(std::shared_ptr<const FeatureSchema> schema) { schema_ = std::move(schema); }

  std::size_t n_nodes() const;
  std::size_t n_leaves() const;
  std::size_t n_active_leaves() const;  // includes background subtrees
  std::size_t height() const;
  std::size_t replacements() const { return replacements_; }
  std::size_t backgrounds_started() const { return backgrounds_started_; }
  std::size_t bytes_per_active_leaf() const;
  double budget_bytes() const { return options_.max_size_mb * 1e6; }
  const std::vector<SplitRecord>& split_log() const { return split_log_; }

  nlohmann::json checkpoint() const override;
  static HoeffdingTree restore(const nlohmann::json& j);

 private:
  using NodePtr = std::unique_ptr<Node>;

  std::unique_ptr<Node> make_leaf(std::size_t depth, const ClassScores& counts);
  void activate(Node& leaf);
  std::vector<std::uint32_t> draw_features();

  static const Node* leaf_for(const Node* node, std::span<const double> x);
  Prediction leaf_prediction(const Node& leaf) const;

  void learn_subtree(NodePtr& slot, std::span<const double> x, ClassLabel y, double w);
  bool monitor_step(NodePtr& slot, std::span<const double> x, ClassLabel y, double w,
                    bool correct);
  void start_background(Node& node);
  void drop_background(Node& node);
  void learn_leaf(Node& leaf, std::span<const double> x, ClassLabel y, double w);
  void attempt_split(Node& leaf);
  void enforce_budget();

  void collect_leaves(Node* node, std::vector<Node*>& out);

  nlohmann::json node_to_json(const Node& node) const;
  std::unique_ptr<Node> node_from_json(const nlohmann::json& j);

  TreeOptions options_;
  std::mt19937_64 rng_;
  std::shared_ptr<const FeatureSchema> schema_;
  std::size_t n_features_ = 0;
  ClassScores observed_{};
  std::unique_ptr<Node> root_;
  std::size_t replacements_ = 0;
  std::size_t backgrounds_started_ = 0;
  std::vector<SplitRecord> split_log_;
};

}  // namespace pdm
