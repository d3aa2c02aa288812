#include "pdm/learn/adaptive_forest.hpp"

#include <sstream>

#include "pdm/error.hpp"
#include "pdm/ingest.hpp"

namespace pdm {

TreeOptions ForestOptions::default_tree() {
  TreeOptions t;
  t.grace_period = 50.0;
  t.split_confidence = 0.01;
  t.tie_threshold = 0.05;
  t.max_depth = 50;
  t.max_size_mb = 100.0;
  return t;
}

nlohmann::json ForestOptions::to_json() const {
  return {{"n_models", n_models},       {"max_features", max_features},
          {"lambda", lambda},           {"warning_delta", warning_delta},
          {"drift_delta", drift_delta}, {"accuracy_decay", accuracy_decay},
          {"tree", tree.to_json()}};
}

ForestOptions ForestOptions::from_json(const nlohmann::json& j) {
  ForestOptions o;
  o.n_models = j.at("n_models").get<std::size_t>();
  o.max_features = j.at("max_features").get<std::size_t>();
  o.lambda = j.at("lambda").get<double>();
  o.warning_delta = j.at("warning_delta").get<double>();
  o.drift_delta = j.at("drift_delta").get<double>();
  o.accuracy_decay = j.at("accuracy_decay").get<double>();
  o.tree = TreeOptions::from_json(j.at("tree"));
  return o;
}

AdaptiveRandomForest::AdaptiveRandomForest(ForestOptions options, std::uint64_t seed)
    : options_(std::move(options)) {
  if (options_.n_models == 0) throw ArgumentError("forest needs at least one tree");
  if (options_.max_features == 0) throw ArgumentError("max_features must be positive");
  if (!(options_.lambda > 0.0)) throw ArgumentError("lambda must be positive");
  if (!(options_.accuracy_decay > 0.0 && options_.accuracy_decay <= 1.0)) {
    throw ArgumentError("accuracy decay must lie in (0,1]");
  }
  options_.tree.subspace_size = options_.max_features;
  options_.tree.adaptive = false;
  members_.resize(options_.n_models);
  for (std::size_t i = 0; i < members_.size(); ++i) {
    Member& m = members_[i];
    m.rng.seed(mix64(seed ^ mix64(i + 1)));
    m.monitor = DriftMonitor(options_.warning_delta, options_.drift_delta);
    m.tree = fresh_tree(m);
  }
}

std::unique_ptr<HoeffdingTree> AdaptiveRandomForest::fresh_tree(Member& m) const {
  auto t = std::make_unique<HoeffdingTree>(options_.tree, m.rng());
  t->set_schema(schema_);
  return t;
}

Prediction AdaptiveRandomForest::weighted_vote(std::span<const Vote> votes) {
  Prediction p;
  double total = 0.0;
  for (const auto& v : votes) {
    p.scores[index_of(v.label)] += v.weight;
    total += v.weight;
  }
  if (total <= 0.0) {
    p.scores = {};
    for (const auto& v : votes) p.scores[index_of(v.label)] += 1.0;
  }
  p.label = argmax_class(p.scores);
  return p;
}

Prediction AdaptiveRandomForest::predict(std::span<const double> x) const {
  std::vector<Vote> votes;
  votes.reserve(members_.size());
  for (const auto& m : members_) votes.push_back({m.tree->predict(x).label, m.weight()});
  return weighted_vote(votes);
}

Prediction AdaptiveRandomForest::predict(const FeatureVector& fv) const {
  return predict(fv.values);
}

void AdaptiveRandomForest::learn(const FeatureVector& fv, ClassLabel label) {
  if (!schema_ && fv.schema) {
    schema_ = fv.schema;
    for (auto& m : members_) {
      m.tree->set_schema(schema_);
      if (m.background) m.background->set_schema(schema_);
    }
  }
  learn(fv.values, label);
}

void AdaptiveRandomForest::learn(std::span<const double> x, ClassLabel label) {
  const double decay = options_.accuracy_decay;
  for (auto& m : members_) {
    const bool correct = m.tree->predict(x).label == label;
    m.correct = decay * m.correct + (correct ? 1.0 : 0.0);
    m.total = decay * m.total + 1.0;

    const DriftState state = m.monitor.update(correct ? 0.0 : 1.0);
    if (m.monitor.last_change_increased()) {
      if (state == DriftState::kWarning) {
        m.background = fresh_tree(m);
        m.monitor.reset_warning();
        ++m.warnings;
      } else if (state == DriftState::kDrift) {
        m.tree = m.background ? std::move(m.background) : fresh_tree(m);
        m.background.reset();
        m.monitor.reset();
        m.correct = 0.0;
        m.total = 0.0;
        ++m.drifts;
      }
    }

    std::poisson_distribution<int> poisson(options_.lambda);
    const int k = poisson(m.rng);
    if (k == 0) continue;
    m.tree->learn(x, label, static_cast<double>(k));
    if (m.background) m.background->learn(x, label, static_cast<double>(k));
  }
}

std::vector<const HoeffdingTree*> AdaptiveRandomForest::explanation_trees(std::size_t n) const {
  std::vector<const HoeffdingTree*> out;
  for (std::size_t i = 0; i < members_.size() && i < n; ++i) out.push_back(members_[i].tree.get());
  return out;
}

std::size_t AdaptiveRandomForest::drifts() const {
  std::size_t n = 0;
  for (const auto& m : members_) n += m.drifts;
  return n;
}

std::size_t AdaptiveRandomForest::warnings() const {
  std::size_t n = 0;
  for (const auto& m : members_) n += m.warnings;
  return n;
}

nlohmann::json AdaptiveRandomForest::checkpoint() const {
  nlohmann::json members = nlohmann::json::array();
  for (const auto& m : members_) {
    std::ostringstream rng;
    rng << m.rng;
    nlohmann::json mj{{"tree", m.tree->checkpoint()},
                      {"monitor", m.monitor.to_json()},
                      {"rng", rng.str()},
                      {"correct", m.correct},
                      {"total", m.total},
                      {"drifts", m.drifts},
                      {"warnings", m.warnings}};
    if (m.background) mj["background"] = m.background->checkpoint();
    members.push_back(std::move(mj));
  }
  return {{"family", "arfc"}, {"options", options_.to_json()}, {"members", members}};
}

AdaptiveRandomForest AdaptiveRandomForest::restore(const nlohmann::json& j) {
  ForestOptions options = ForestOptions::from_json(j.at("options"));
  options.n_models = j.at("members").size();
  AdaptiveRandomForest f(options, 0);
  for (std::size_t i = 0; i < f.members_.size(); ++i) {
    const auto& mj = j.at("members").at(i);
    Member& m = f.members_[i];
    m.tree = std::make_unique<HoeffdingTree>(HoeffdingTree::restore(mj.at("tree")));
    if (mj.contains("background")) {
      m.background = std::make_unique<HoeffdingTree>(HoeffdingTree::restore(mj.at("background")));
    }
    m.monitor = DriftMonitor::from_json(mj.at("monitor"));
    std::istringstream rng(mj.at("rng").get<std::string>());
    rng >> m.rng;
    m.correct = mj.at("correct").get<double>();
    m.total = mj.at("total").get<double>();
    m.drifts = mj.at("drifts").get<std::size_t>();
    m.warnings = mj.at("warnings").get<std::size_t>();
  }
  f.schema_ = f.members_.front().tree->schema();
  return f;
}

}  // namespace pdm
