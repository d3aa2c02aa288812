#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "pdm/error.hpp"
#include "pdm/learn/gaussian_nb.hpp"
#include "support.hpp"

using namespace pdm;

namespace {

struct Batch {
  std::array<std::vector<std::vector<double>>, kNumClasses> rows;

  ClassLabel predict(const std::vector<double>& x) const {
    double total = 0.0;
    for (const auto& r : rows) total += static_cast<double>(r.size());
    double best = -std::numeric_limits<double>::infinity();
    ClassLabel out = ClassLabel::kNonFailure;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const auto& r = rows[c];
      if (r.empty()) continue;
      double score = std::log(static_cast<double>(r.size()) / total);
      for (std::size_t f = 0; f < x.size(); ++f) {
        double mean = 0.0;
        for (const auto& v : r) mean += v[f];
        mean /= static_cast<double>(r.size());
        double ss = 0.0;
        for (const auto& v : r) ss += (v[f] - mean) * (v[f] - mean);
        const double var = std::max(r.size() > 1 ? ss / static_cast<double>(r.size() - 1) : 0.0, 1e-9);
        score += -0.5 * std::log(2.0 * M_PI * var) - (x[f] - mean) * (x[f] - mean) / (2.0 * var);
      }
      if (score > best) {
        best = score;
        out = class_at(c);
      }
    }
    return out;
  }
};

}  // namespace

TEST_CASE("gaussian naive Bayes agrees with a batch fit on a stationary stream") {
  std::mt19937_64 rng(43);
  const auto schema = testing::first_features(4);
  const std::array<std::array<double, 4>, 4> means{{{0, 0, 0, 0}, {2, 1, 0, -1}, {-1, 2, 1, 0}, {1, -2, 2, 1}}};
  std::discrete_distribution<int> cls({60, 20, 12, 8});
  std::normal_distribution<double> noise(0.0, 1.0);
  auto draw = [&](int c) {
    std::vector<double> v(4);
    for (std::size_t f = 0; f < 4; ++f) v[f] = means[c][f] + (1.0 + 0.3 * f) * noise(rng);
    return v;
  };
  GaussianNB nb;
  Batch batch;
  for (int i = 0; i < 3000; ++i) {
    const int c = cls(rng);
    auto v = draw(c);
    nb.learn(testing::vec(schema, v), class_at(c));
    batch.rows[c].push_back(v);
  }
  int agree = 0;
  const int tests = 2000;
  for (int i = 0; i < tests; ++i) {
    auto v = draw(cls(rng));
    agree += nb.predict(testing::vec(schema, v)).label == batch.predict(v);
  }
  CHECK(agree >= 0.99 * tests);
}

TEST_CASE("gaussian naive Bayes needs data and scores unseen classes -inf") {
  GaussianNB nb;
  const auto schema = testing::first_features(2);
  CHECK_THROWS_AS(nb.predict(testing::vec(schema, {0, 0})), NotReadyError);
  nb.learn(testing::vec(schema, {0, 0}), ClassLabel::kAirLeakDryer);
  const Prediction p = nb.predict(testing::vec(schema, {5, 5}));
  CHECK(p.label == ClassLabel::kAirLeakDryer);
  CHECK(std::isinf(p.scores[0]));
  CHECK(p.scores[0] < 0);
  CHECK(std::isfinite(p.scores[2]));
}

TEST_CASE("moving a feature toward a class mean never lowers that class score") {
  std::mt19937_64 rng(47);
  std::normal_distribution<double> noise(0.0, 1.0);
  const auto schema = testing::first_features(3);
  GaussianNB nb;
  for (int i = 0; i < 500; ++i) {
    const int c = i % 2;
    nb.learn(testing::vec(schema, {c * 3.0 + noise(rng), noise(rng), 2.0 * c + noise(rng)}),
             class_at(static_cast<std::size_t>(c)));
  }
  const double mean = nb.stats(ClassLabel::kOilLeakCompressor, 0).mean;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x{noise(rng) * 5, noise(rng), noise(rng)};
    double prev = nb.predict(testing::vec(schema, x)).scores[1];
    for (int step = 0; step < 10; ++step) {
      x[0] += 0.1 * (mean - x[0]);
      const double now = nb.predict(testing::vec(schema, x)).scores[1];
      CHECK(now >= prev - 1e-12);
      prev = now;
    }
  }
}

TEST_CASE("gaussian naive Bayes checkpoint restores identical predictions") {
  std::mt19937_64 rng(53);
  std::normal_distribution<double> noise(0.0, 1.0);
  const auto schema = testing::first_features(3);
  GaussianNB a;
  for (int i = 0; i < 300; ++i) {
    a.learn(testing::vec(schema, {noise(rng), noise(rng) + i % 3, noise(rng)}), class_at(i % 3));
  }
  GaussianNB b = GaussianNB::restore(a.checkpoint());
  for (int i = 0; i < 300; ++i) {
    const auto fv = testing::vec(schema, {noise(rng), noise(rng), noise(rng)});
    CHECK(a.predict(fv).scores == b.predict(fv).scores);
    a.learn(fv, class_at(i % 4));
    b.learn(fv, class_at(i % 4));
  }
}
