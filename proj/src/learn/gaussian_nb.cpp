#include "pdm/learn/gaussian_nb.hpp"

#include <cmath>
#include <limits>

#include "pdm/error.hpp"

namespace pdm {

Prediction GaussianNB::predict(const FeatureVector& fv) const {
  if (total_ == 0) throw NotReadyError("Gaussian naive Bayes has not learned any sample");
  if (fv.size() != n_features_) throw SchemaError("feature count differs from training");
  Prediction p;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (counts_[c] == 0) {
      p.scores[c] = -std::numeric_limits<double>::infinity();
      continue;
    }
    double score = std::log(static_cast<double>(counts_[c]) / static_cast<double>(total_));
    for (std::size_t f = 0; f < n_features_; ++f) {
      score += stats_[c][f].log_pdf(fv.values[f], kVarianceFloor);
    }
    p.scores[c] = score;
  }
  p.label = argmax_class(p.scores);
  return p;
}

void GaussianNB::learn(const FeatureVector& fv, ClassLabel label) {
  if (total_ == 0 && n_features_ == 0) {
    n_features_ = fv.size();
    for (auto& s : stats_) s.assign(n_features_, {});
  } else if (fv.size() != n_features_) {
    throw SchemaError("feature count differs from training");
  }
  const std::size_t c = index_of(label);
  ++counts_[c];
  ++total_;
  for (std::size_t f = 0; f < n_features_; ++f) stats_[c][f].add(fv.values[f]);
}

nlohmann::json GaussianNB::checkpoint() const {
  nlohmann::json stats = nlohmann::json::array();
  for (const auto& per_class : stats_) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& g : per_class) row.push_back(g.to_json());
    stats.push_back(std::move(row));
  }
  return {{"family", "gnb"}, {"n_features", n_features_}, {"total", total_},
          {"counts", counts_}, {"stats", stats}};
}

GaussianNB GaussianNB::restore(const nlohmann::json& j) {
  GaussianNB m;
  m.n_features_ = j.at("n_features").get<std::size_t>();
  m.total_ = j.at("total").get<std::size_t>();
  m.counts_ = j.at("counts").get<std::array<std::size_t, kNumClasses>>();
  const auto& stats = j.at("stats");
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    for (const auto& g : stats.at(c)) m.stats_[c].push_back(RunningGaussian::from_json(g));
  }
  return m;
}

}  // namespace pdm
