#include "pdm/learn/hoeffding_tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "pdm/error.hpp"

namespace pdm {
namespace {

double sum(const ClassScores& c) { return std::accumulate(c.begin(), c.end(), 0.0); }

double entropy(const ClassScores& dist) {
  const double total = sum(dist);
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double d : dist) {
    if (d > 0.0) h -= (d / total) * std::log2(d / total);
  }
  return h;
}

std::size_t nonzero_classes(const ClassScores& c) {
  return static_cast<std::size_t>(std::count_if(c.begin(), c.end(), [](double v) { return v > 0.0; }));
}

struct Candidate {
  double merit = -std::numeric_limits<double>::infinity();
  std::size_t feature = 0;
  double threshold = 0.0;
  ClassScores left{};
  ClassScores right{};
};

}  // namespace

double hoeffding_bound(double range, double confidence, double n) {
  if (!(range > 0.0) || !(confidence > 0.0 && confidence < 1.0) || !(n >= 1.0)) {
    throw ArgumentError("hoeffding_bound needs R > 0, 0 < delta < 1 and n >= 1");
  }
  return std::sqrt(range * range * std::log(1.0 / confidence) / (2.0 * n));
}

nlohmann::json TreeOptions::to_json() const {
  return {{"max_depth", max_depth},         {"tie_threshold", tie_threshold},
          {"max_size_mb", max_size_mb},     {"grace_period", grace_period},
          {"split_confidence", split_confidence}, {"split_points", split_points},
          {"min_branch_fraction", min_branch_fraction}, {"subspace_size", subspace_size},
          {"adaptive", adaptive},           {"warning_delta", warning_delta},
          {"drift_delta", drift_delta},     {"record_splits", record_splits}};
}

TreeOptions TreeOptions::from_json(const nlohmann::json& j) {
  TreeOptions o;
  o.max_depth = j.at("max_depth").get<std::size_t>();
  o.tie_threshold = j.at("tie_threshold").get<double>();
  o.max_size_mb = j.at("max_size_mb").get<double>();
  o.grace_period = j.at("grace_period").get<double>();
  o.split_confidence = j.at("split_confidence").get<double>();
  o.split_points = j.at("split_points").get<std::size_t>();
  o.min_branch_fraction = j.at("min_branch_fraction").get<double>();
  o.subspace_size = j.at("subspace_size").get<std::size_t>();
  o.adaptive = j.at("adaptive").get<bool>();
  o.warning_delta = j.at("warning_delta").get<double>();
  o.drift_delta = j.at("drift_delta").get<double>();
  o.record_splits = j.at("record_splits").get<bool>();
  return o;
}

HoeffdingTree::HoeffdingTree(TreeOptions options, std::uint64_t seed)
    : options_(options), rng_(seed) {
  if (options_.grace_period <= 0.0) throw ArgumentError("grace period must be positive");
  if (options_.split_points == 0) throw ArgumentError("need at least one split point");
  if (options_.max_size_mb < 0.0) throw ArgumentError("max_size must be non-negative");
  hoeffding_bound(1.0, options_.split_confidence, 1.0);  // validates delta
}

std::vector<std::uint32_t> HoeffdingTree::draw_features() {
  std::vector<std::uint32_t> all(n_features_);
  std::iota(all.begin(), all.end(), 0u);
  const std::size_t m = options_.subspace_size;
  if (m == 0 || m >= n_features_) return all;
  for (std::size_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n_features_ - 1);
    std::swap(all[i], all[pick(rng_)]);
  }
  all.resize(m);
  std::sort(all.begin(), all.end());
  return all;
}

void HoeffdingTree::activate(Node& leaf) {
  auto stats = std::make_unique<Node::LeafStats>();
  stats->features = draw_features();
  stats->estimators.resize(stats->features.size());
  leaf.stats_ = std::move(stats);
}

std::unique_ptr<HoeffdingTree::Node> HoeffdingTree::make_leaf(std::size_t depth,
                                                               const ClassScores& counts) {
  auto leaf = std::make_unique<Node>(depth, counts);
  leaf->last_eval_weight_ = sum(counts);
  activate(*leaf);
  return leaf;
}

const HoeffdingTree::Node* HoeffdingTree::leaf_for(const Node* node, std::span<const double> x) {
  while (node && !node->is_leaf()) node = node->child_for(x);
  return node;
}

std::vector<const HoeffdingTree::Node*> HoeffdingTree::route(std::span<const double> x) const {
  std::vector<const Node*> path;
  for (const Node* node = root_.get(); node; node = node->is_leaf() ? nullptr : node->child_for(x)) {
    path.push_back(node);
  }
  return path;
}

Prediction HoeffdingTree::leaf_prediction(const Node& leaf) const {
  Prediction p;
  if (sum(leaf.counts_) > 0.0) {
    p.scores = leaf.counts_;
  } else {
    p.scores = observed_;
  }
  p.label = argmax_class(p.scores);
  return p;
}

Prediction HoeffdingTree::predict(std::span<const double> x) const {
  if (!root_) return {};
  if (x.size() != n_features_) throw SchemaError("feature count differs from training");
  return leaf_prediction(*leaf_for(root_.get(), x));
}

Prediction HoeffdingTree::predict(const FeatureVector& fv) const { return predict(fv.values); }

void HoeffdingTree::learn(const FeatureVector& fv, ClassLabel label) {
  if (!schema_) schema_ = fv.schema;
  learn(fv.values, label, 1.0);
}

void HoeffdingTree::learn(std::span<const double> x, ClassLabel y, double w) {
  if (!root_) {
    if (x.empty()) throw SchemaError("cannot learn from an empty feature vector");
    n_features_ = x.size();
    root_ = make_leaf(0, {});
  } else if (x.size() != n_features_) {
    throw SchemaError("feature count differs from training");
  }
  observed_[index_of(y)] += w;
  learn_subtree(root_, x, y, w);
}

void HoeffdingTree::learn_subtree(NodePtr& slot, std::span<const double> x, ClassLabel y,
                                  double w) {
  bool correct = true;
  if (options_.adaptive) correct = leaf_prediction(*leaf_for(slot.get(), x)).label == y;

  NodePtr* cur = &slot;
  while (!(*cur)->is_leaf()) {
    if (options_.adaptive && (*cur)->monitor_ && monitor_step(*cur, x, y, w, correct)) return;
    Node& node = **cur;
    cur = x[node.feature_] <= node.threshold_ ? &node.left_ : &node.right_;
  }
  learn_leaf(**cur, x, y, w);
}

void HoeffdingTree::start_background(Node& node) {
  auto& m = *node.monitor_;
  m.background = make_leaf(node.depth_, {});
  m.background_seen = 0.0;
  m.background_errors = 0.0;
  m.foreground_errors = 0.0;
  m.warning = true;
  ++backgrounds_started_;
}

void HoeffdingTree::drop_background(Node& node) {
  auto& m = *node.monitor_;
  m.background.reset();
  m.background_seen = 0.0;
  m.background_errors = 0.0;
  m.foreground_errors = 0.0;
  m.warning = false;
}

bool HoeffdingTree::monitor_step(NodePtr& slot, std::span<const double> x, ClassLabel y,
                                 double w, bool correct) {
  Node& node = *slot;
  auto& m = *node.monitor_;
  const DriftState state = m.detector.update(correct ? 0.0 : 1.0);
  const bool worse = m.detector.last_change_increased();

  if (state != DriftState::kStable && worse && !m.background) start_background(node);
  if (state == DriftState::kDrift && worse) m.detector.reset_warning();
  if (!m.background) return false;

  const bool bg_correct = leaf_prediction(*leaf_for(m.background.get(), x)).label == y;
  m.background_seen += 1.0;
  if (!bg_correct) m.background_errors += 1.0;
  if (!correct) m.foreground_errors += 1.0;
  learn_subtree(m.background, x, y, w);

  const double n = m.background_seen;
  if (n < options_.grace_period) return false;
  const double fg = m.foreground_errors / n;
  const double bg = m.background_errors / n;
  const double p = std::clamp(0.5 * (fg + bg), 1.0 / n, 1.0 - 1.0 / n);
  const double bound = std::sqrt(2.0 * p * (1.0 - p) * std::log(2.0 / options_.drift_delta) * (2.0 / n));
  if (fg - bg > bound) {
    NodePtr replacement = std::move(m.background);
    if (replacement->monitor_) replacement->monitor_->detector.reset();
    slot = std::move(replacement);  // destroys the old subtree
    ++replacements_;
    enforce_budget();
    return true;
  }
  if (bg - fg > bound) {
    drop_background(node);
    m.detector.reset();
  }
  return false;
}

void HoeffdingTree::learn_leaf(Node& leaf, std::span<const double> x, ClassLabel y, double w) {
  const std::size_t c = index_of(y);
  leaf.counts_[c] += w;
  if (!leaf.stats_) return;
  auto& stats = *leaf.stats_;
  for (std::size_t i = 0; i < stats.features.size(); ++i) {
    stats.estimators[i][c].add(x[stats.features[i]], w);
  }
  const double seen = sum(leaf.counts_);
  if (seen - leaf.last_eval_weight_ >= options_.grace_period) {
    leaf.last_eval_weight_ = seen;
    if (leaf.depth_ < options_.max_depth) attempt_split(leaf);
  }
}

void HoeffdingTree::attempt_split(Node& leaf) {
  if (nonzero_classes(leaf.counts_) < 2) return;
  const auto& stats = *leaf.stats_;
  const std::size_t n_points = options_.split_points;

  Candidate best;
  double second = 0.0;  // merit of not splitting
  std::vector<double> merits;
  merits.reserve(stats.features.size());

  for (std::size_t i = 0; i < stats.features.size(); ++i) {
    const auto& est = stats.estimators[i];
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    ClassScores pre{};
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      if (est[c].weight <= 0.0) continue;
      lo = std::min(lo, est[c].min);
      hi = std::max(hi, est[c].max);
      pre[c] = est[c].weight;
    }
    if (!(lo < hi)) continue;
    const double total = sum(pre);
    const double pre_entropy = entropy(pre);

    Candidate feat_best;
    for (std::size_t k = 1; k <= n_points; ++k) {
      const double t = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n_points + 1);
      ClassScores left{}, right{};
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        const auto& g = est[c];
        if (g.weight <= 0.0) continue;
        if (t < g.min) {
          right[c] = g.weight;
        } else if (t >= g.max) {
          left[c] = g.weight;
        } else {
          left[c] = g.weight * g.cdf(t);
          right[c] = g.weight - left[c];
        }
      }
      const double wl = sum(left);
      const double wr = sum(right);
      const double min_branch = options_.min_branch_fraction * total;
      if (wl <= min_branch || wr <= min_branch) continue;
      const double merit =
          pre_entropy - (wl / total) * entropy(left) - (wr / total) * entropy(right);
      if (merit > feat_best.merit) {
        feat_best = {merit, stats.features[i], t, left, right};
      }
    }
    if (!std::isfinite(feat_best.merit)) continue;
    merits.push_back(feat_best.merit);
    if (feat_best.merit > best.merit) best = feat_best;
  }
  if (!std::isfinite(best.merit) || best.merit <= 0.0) return;

  // Second best among the other features and the no-split option.
  std::sort(merits.begin(), merits.end(), std::greater<>());
  if (merits.size() >= 2) second = std::max(second, merits[1]);

  const double range = std::log2(static_cast<double>(std::max<std::size_t>(2, nonzero_classes(leaf.counts_))));
  const double n = sum(leaf.counts_);
  const double eps = hoeffding_bound(range, options_.split_confidence, n);
  if (!(best.merit - second > eps || eps < options_.tie_threshold)) return;

  if (options_.record_splits) {
    split_log_.push_back({best.feature, best.threshold, best.merit, second, eps,
                          options_.tie_threshold, n, leaf.depth_});
  }
  leaf.feature_ = best.feature;
  leaf.threshold_ = best.threshold;
  leaf.stats_.reset();
  leaf.left_ = make_leaf(leaf.depth_ + 1, best.left);
  leaf.right_ = make_leaf(leaf.depth_ + 1, best.right);
  if (options_.adaptive) {
    leaf.monitor_ = std::make_unique<Node::Monitor>(options_.warning_delta, options_.drift_delta);
  }
  enforce_budget();
}

std::size_t HoeffdingTree::bytes_per_active_leaf() const {
  std::size_t k = n_features_;
  if (options_.subspace_size != 0) k = std::min(k, options_.subspace_size);
  return sizeof(Node) + sizeof(Node::LeafStats) +
         k * (sizeof(std::array<RunningGaussian, kNumClasses>) + sizeof(std::uint32_t));
}

void HoeffdingTree::collect_leaves(Node* node, std::vector<Node*>& out) {
  if (!node) return;
  if (node->is_leaf()) {
    out.push_back(node);
  } else {
    collect_leaves(node->left_.get(), out);
    collect_leaves(node->right_.get(), out);
  }
  if (node->monitor_) collect_leaves(node->monitor_->background.get(), out);
}

void HoeffdingTree::enforce_budget() {
  std::vector<Node*> leaves;
  collect_leaves(root_.get(), leaves);
  const std::size_t per_leaf = bytes_per_active_leaf();
  const auto allowed = static_cast<std::size_t>(budget_bytes() / static_cast<double>(per_leaf));
  const auto active = static_cast<std::size_t>(
      std::count_if(leaves.begin(), leaves.end(), [](const Node* n) { return n->active(); }));
  if (active <= allowed && active == leaves.size()) return;

  auto promise = [](const Node* n) {
    return sum(n->counts_) - *std::max_element(n->counts_.begin(), n->counts_.end());
  };
  std::stable_sort(leaves.begin(), leaves.end(),
                   [&](const Node* a, const Node* b) { return promise(a) > promise(b); });
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    Node* leaf = leaves[i];
    if (i < allowed) {
      if (!leaf->active()) {
        activate(*leaf);
        leaf->last_eval_weight_ = sum(leaf->counts_);
      }
    } else {
      leaf->stats_.reset();
    }
  }
}

std::vector<const HoeffdingTree*> HoeffdingTree::explanation_trees(std::size_t) const {
  return {this};
}

namespace {
template <typename F>
void visit(const HoeffdingTree::Node* node, F&& f, bool with_background) {
  if (!node) return;
  f(node);
  visit(node->left(), f, with_background);
  visit(node->right(), f, with_background);
  if (with_background) visit(node->background(), f, with_background);
}
}  // namespace

std::size_t HoeffdingTree::n_nodes() const {
  std::size_t n = 0;
  visit(root_.get(), [&](const Node*) { ++n; }, false);
  return n;
}

std::size_t HoeffdingTree::n_leaves() const {
  std::size_t n = 0;
  visit(root_.get(), [&](const Node* node) { n += node->is_leaf() ? 1 : 0; }, false);
  return n;
}

std::size_t HoeffdingTree::n_active_leaves() const {
  std::size_t n = 0;
  visit(root_.get(), [&](const Node* node) { n += node->is_leaf() && node->active() ? 1 : 0; },
        true);
  return n;
}

std::size_t HoeffdingTree::height() const {
  std::size_t h = 0;
  visit(root_.get(), [&](const Node* node) { h = std::max(h, node->depth()); }, true);
  return h;
}

nlohmann::json HoeffdingTree::node_to_json(const Node& node) const {
  nlohmann::json j{{"depth", node.depth_}, {"counts", node.counts_},
                   {"last_eval", node.last_eval_weight_}};
  if (node.is_leaf()) {
    if (node.stats_) {
      nlohmann::json est = nlohmann::json::array();
      for (const auto& per_class : node.stats_->estimators) {
        nlohmann::json row = nlohmann::json::array();
        for (const auto& g : per_class) row.push_back(g.to_json());
        est.push_back(std::move(row));
      }
      j["features"] = node.stats_->features;
      j["estimators"] = std::move(est);
    }
  } else {
    j["feature"] = node.feature_;
    j["threshold"] = node.threshold_;
    j["left"] = node_to_json(*node.left_);
    j["right"] = node_to_json(*node.right_);
  }
  if (node.monitor_) {
    const auto& m = *node.monitor_;
    nlohmann::json mj{{"detector", m.detector.to_json()},
                      {"seen", m.background_seen},
                      {"errors", m.background_errors},
                      {"foreground_errors", m.foreground_errors},
                      {"warning", m.warning}};
    if (m.background) mj["background"] = node_to_json(*m.background);
    j["monitor"] = std::move(mj);
  }
  return j;
}

std::unique_ptr<HoeffdingTree::Node> HoeffdingTree::node_from_json(const nlohmann::json& j) {
  auto node = std::make_unique<Node>(j.at("depth").get<std::size_t>(),
                                     j.at("counts").get<ClassScores>());
  node->last_eval_weight_ = j.at("last_eval").get<double>();
  if (j.contains("left")) {
    node->feature_ = j.at("feature").get<std::size_t>();
    node->threshold_ = j.at("threshold").get<double>();
    node->left_ = node_from_json(j.at("left"));
    node->right_ = node_from_json(j.at("right"));
  } else if (j.contains("features")) {
    auto stats = std::make_unique<Node::LeafStats>();
    stats->features = j.at("features").get<std::vector<std::uint32_t>>();
    for (const auto& row : j.at("estimators")) {
      std::array<RunningGaussian, kNumClasses> per_class;
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        per_class[c] = RunningGaussian::from_json(row.at(c));
      }
      stats->estimators.push_back(per_class);
    }
    node->stats_ = std::move(stats);
  }
  if (j.contains("monitor")) {
    const auto& mj = j.at("monitor");
    auto m = std::make_unique<Node::Monitor>(options_.warning_delta, options_.drift_delta);
    m->detector = DriftMonitor::from_json(mj.at("detector"));
    m->background_seen = mj.at("seen").get<double>();
    m->background_errors = mj.at("errors").get<double>();
    m->foreground_errors = mj.at("foreground_errors").get<double>();
    m->warning = mj.at("warning").get<bool>();
    if (mj.contains("background")) m->background = node_from_json(mj.at("background"));
    node->monitor_ = std::move(m);
  }
  return node;
}

nlohmann::json HoeffdingTree::checkpoint() const {
  std::ostringstream rng;
  rng << rng_;
  nlohmann::json j{{"family", std::string(family_name(family()))},
                   {"options", options_.to_json()},
                   {"rng", rng.str()},
                   {"n_features", n_features_},
                   {"observed", observed_},
                   {"replacements", replacements_},
                   {"backgrounds_started", backgrounds_started_}};
  if (schema_) {
    nlohmann::json names = nlohmann::json::array();
    for (const auto& n : schema_->names()) names.push_back(to_string(n));
    j["schema"] = std::move(names);
  }
  if (root_) j["root"] = node_to_json(*root_);
  return j;
}

HoeffdingTree HoeffdingTree::restore(const nlohmann::json& j) {
  HoeffdingTree t(TreeOptions::from_json(j.at("options")));
  std::istringstream rng(j.at("rng").get<std::string>());
  rng >> t.rng_;
  t.n_features_ = j.at("n_features").get<std::size_t>();
  t.observed_ = j.at("observed").get<ClassScores>();
  t.replacements_ = j.at("replacements").get<std::size_t>();
  t.backgrounds_started_ = j.at("backgrounds_started").get<std::size_t>();
  if (j.contains("schema")) {
    std::vector<FeatureName> names;
    for (const auto& n : j.at("schema")) names.push_back(parse_feature_name(n.get<std::string>()));
    t.schema_ = std::make_shared<const FeatureSchema>(std::move(names));
  }
  if (j.contains("root")) t.root_ = t.node_from_json(j.at("root"));
  return t;
}

}  // namespace pdm
