#include <doctest.h>

#include <random>

#include "pdm/error.hpp"
#include "pdm/learn/adaptive_forest.hpp"

using namespace pdm;

namespace {

struct Stream {
  std::mt19937_64 rng;
  std::uniform_real_distribution<double> u{0.0, 1.0};
  explicit Stream(std::uint64_t seed) : rng(seed) {}
  std::pair<std::vector<double>, ClassLabel> next() {
    std::vector<double> x(8);
    for (auto& v : x) v = u(rng);
    const std::size_t c = (x[2] > 0.6 ? 1 : 0) + (x[5] > 0.4 ? 2 : 0);
    return {x, class_at(c)};
  }
};

ForestOptions small_forest(double decay = 0.999) {
  ForestOptions o;
  o.n_models = 10;
  o.max_features = 3;
  o.lambda = 6.0;
  o.accuracy_decay = decay;
  return o;
}

}  // namespace

TEST_CASE("weighted vote sums weights per class") {
  using V = AdaptiveRandomForest::Vote;
  const std::vector<V> same{{ClassLabel::kAirLeakClient, 0.5}, {ClassLabel::kAirLeakClient, 0.25}};
  const Prediction p = AdaptiveRandomForest::weighted_vote(same);
  CHECK(p.label == ClassLabel::kAirLeakClient);
  CHECK(p.scores[3] == 0.75);

  const std::vector<V> split{{ClassLabel::kAirLeakDryer, 0.9}, {ClassLabel::kNonFailure, 0.4},
                             {ClassLabel::kNonFailure, 0.4}};
  CHECK(AdaptiveRandomForest::weighted_vote(split).label == ClassLabel::kAirLeakDryer);

  const std::vector<V> zero{{ClassLabel::kAirLeakDryer, 0.0}, {ClassLabel::kOilLeakCompressor, 0.0},
                            {ClassLabel::kOilLeakCompressor, 0.0}};
  const Prediction z = AdaptiveRandomForest::weighted_vote(zero);
  CHECK(z.label == ClassLabel::kOilLeakCompressor);
  CHECK(z.scores[1] == 2.0);

  const std::vector<V> tie{{ClassLabel::kAirLeakClient, 0.5}, {ClassLabel::kOilLeakCompressor, 0.5}};
  CHECK(AdaptiveRandomForest::weighted_vote(tie).label == ClassLabel::kOilLeakCompressor);
}

TEST_CASE("forest learns a stationary stream") {
  AdaptiveRandomForest f(small_forest(), 1);
  Stream s(2);
  int correct = 0;
  for (int i = 0; i < 8000; ++i) {
    auto [x, y] = s.next();
    if (i >= 6000) correct += f.predict(x).label == y;
    f.learn(x, y);
  }
  CHECK(correct >= 0.95 * 2000);
}

TEST_CASE("tree weights equal their test-then-train accuracy") {
  for (double decay : {1.0, 0.999}) {
    AdaptiveRandomForest f(small_forest(decay), 3);
    Stream s(4);
    std::vector<double> correct(f.size(), 0.0), total(f.size(), 0.0);
    int verified = 0;
    for (int i = 0; i < 3000; ++i) {
      auto [x, y] = s.next();
      for (std::size_t t = 0; t < f.size(); ++t) {
        correct[t] = decay * correct[t] + (f.tree(t).predict(x).label == y ? 1.0 : 0.0);
        total[t] = decay * total[t] + 1.0;
      }
      f.learn(x, y);
      if (f.drifts() > 0) break;
      for (std::size_t t = 0; t < f.size(); ++t) {
        CHECK(f.tree_weight(t) == doctest::Approx(correct[t] / total[t]).epsilon(1e-12));
      }
      ++verified;
    }
    CHECK(verified >= 1000);
  }
}

TEST_CASE("forests with the same seed make the same predictions") {
  AdaptiveRandomForest a(small_forest(), 77), b(small_forest(), 77), c(small_forest(), 78);
  Stream s(5);
  bool any_difference = false;
  for (int i = 0; i < 3000; ++i) {
    auto [x, y] = s.next();
    const auto pa = a.predict(x);
    CHECK(pa.scores == b.predict(x).scores);
    any_difference = any_difference || pa.scores != c.predict(x).scores;
    a.learn(x, y);
    b.learn(x, y);
    c.learn(x, y);
  }
  CHECK(any_difference);
}

TEST_CASE("restored forest continues bit-identically") {
  AdaptiveRandomForest a(small_forest(), 9);
  Stream s(10);
  for (int i = 0; i < 2000; ++i) {
    auto [x, y] = s.next();
    a.learn(x, y);
  }
  AdaptiveRandomForest b = AdaptiveRandomForest::restore(a.checkpoint());
  for (int i = 0; i < 2000; ++i) {
    auto [x, y] = s.next();
    CHECK(a.predict(x).scores == b.predict(x).scores);
    a.learn(x, y);
    b.learn(x, y);
  }
  CHECK(a.checkpoint() == b.checkpoint());
}

TEST_CASE("explanation trees are the first foreground members") {
  AdaptiveRandomForest f(small_forest(), 13);
  CHECK(f.explanation_trees(3).size() == 3);
  CHECK(f.explanation_trees(100).size() == 10);
  CHECK(f.explanation_trees(1).front() == &f.tree(0));
}

TEST_CASE("forest options are validated") {
  ForestOptions o = small_forest();
  o.n_models = 0;
  CHECK_THROWS_AS(AdaptiveRandomForest(o, 1), ArgumentError);
  o = small_forest();
  o.accuracy_decay = 0.0;
  CHECK_THROWS_AS(AdaptiveRandomForest(o, 1), ArgumentError);
}
