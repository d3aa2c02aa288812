#include <doctest.h>

#include <random>
#include <sstream>

#include "pdm/error.hpp"
#include "pdm/eval.hpp"
#include "support.hpp"

using namespace pdm;

namespace {

// Per-class F from explicit label lists.
struct TextbookMetrics {
  double accuracy = 0, macro = 0, micro = 0;
  std::array<double, 4> f{};
};

TextbookMetrics textbook(const std::vector<int>& truth, const std::vector<int>& pred) {
  TextbookMetrics m;
  double tp_all = 0, fp_all = 0, fn_all = 0, hits = 0;
  for (int c = 0; c < 4; ++c) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      tp += truth[i] == c && pred[i] == c;
      fp += truth[i] != c && pred[i] == c;
      fn += truth[i] == c && pred[i] != c;
    }
    const double precision = tp + fp == 0 ? 0 : tp / (tp + fp);
    const double recall = tp + fn == 0 ? 0 : tp / (tp + fn);
    m.f[c] = precision + recall == 0 ? 0 : 2 * precision * recall / (precision + recall);
    m.macro += m.f[c] / 4;
    tp_all += tp;
    fp_all += fp;
    fn_all += fn;
  }
  for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == pred[i];
  m.accuracy = hits / static_cast<double>(truth.size());
  const double p = tp_all / (tp_all + fp_all), r = tp_all / (tp_all + fn_all);
  m.micro = 2 * p * r / (p + r);
  return m;
}

class ConstantModel final : public Classifier {
 public:
  explicit ConstantModel(ClassLabel c) : c_(c) {}
  ModelFamily family() const override { return ModelFamily::kGnb; }
  Prediction predict(const FeatureVector&) const override {
    Prediction p;
    p.label = c_;
    p.scores[index_of(c_)] = 1.0;
    return p;
  }
  void learn(const FeatureVector&, ClassLabel) override {}
  nlohmann::json checkpoint() const override { return {}; }

 private:
  ClassLabel c_;
};

// Predicts the last label it was taught and logs every call.
class SpyModel final : public Classifier {
 public:
  mutable std::vector<std::pair<char, std::uint64_t>> calls;
  ModelFamily family() const override { return ModelFamily::kGnb; }
  Prediction predict(const FeatureVector& fv) const override {
    calls.emplace_back('p', fv.seq_id);
    if (!seen_) throw NotReadyError("no data yet");
    Prediction p;
    p.label = last_;
    return p;
  }
  void learn(const FeatureVector& fv, ClassLabel y) override {
    calls.emplace_back('l', fv.seq_id);
    last_ = y;
    seen_ = true;
  }
  nlohmann::json checkpoint() const override { return {}; }

 private:
  ClassLabel last_ = ClassLabel::kNonFailure;
  bool seen_ = false;
};

std::vector<LabeledVector> random_stream(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> cls({70, 15, 10, 5});
  const auto schema = testing::first_features(2);
  std::vector<LabeledVector> out;
  for (std::size_t i = 0; i < n; ++i) {
    const int c = cls(rng);
    out.push_back({testing::vec(schema, {double(c), double(rng() % 7)}, i, static_cast<Timestamp>(i)),
                   class_at(static_cast<std::size_t>(c))});
  }
  return out;
}

}  // namespace

TEST_CASE("perfect diagonal gives unit scores") {
  ConfusionMatrix cm;
  for (auto c : kAllClasses)
    for (int i = 0; i < 5; ++i) cm.add(c, c);
  const FMeasure f = compute_fmeasure(cm);
  CHECK(f.macro == 1.0);
  CHECK(f.micro == 1.0);
}

TEST_CASE("an absent class scores zero and pulls the macro average down") {
  ConfusionMatrix cm;
  for (int i = 0; i < 10; ++i) {
    cm.add(ClassLabel::kNonFailure, ClassLabel::kNonFailure);
    cm.add(ClassLabel::kOilLeakCompressor, ClassLabel::kOilLeakCompressor);
    cm.add(ClassLabel::kAirLeakDryer, ClassLabel::kAirLeakDryer);
  }
  const FMeasure f = compute_fmeasure(cm);
  CHECK(f.per_class[3] == 0.0);
  CHECK(f.macro == doctest::Approx(0.75));
  CHECK(f.micro == 1.0);
  CHECK_THROWS_AS(compute_fmeasure(ConfusionMatrix{}), ArgumentError);
}

TEST_CASE("F-measures match a textbook implementation on random matrices") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> truth, pred;
    ConfusionMatrix cm;
    for (int i = 0; i < 10000; ++i) {
      const int t = static_cast<int>(rng() % 4);
      const int p = rng() % 3 == 0 ? static_cast<int>(rng() % 4) : t;
      truth.push_back(t);
      pred.push_back(p);
      cm.add(class_at(t), class_at(p));
    }
    const TextbookMetrics want = textbook(truth, pred);
    const PrequentialMetrics got = metrics_from_confusion(cm);
    CHECK(std::abs(got.accuracy - want.accuracy) <= 1e-12);
    CHECK(std::abs(got.macro_f - want.macro) <= 1e-12);
    CHECK(std::abs(got.micro_f - want.micro) <= 1e-12);
    for (int c = 0; c < 4; ++c) CHECK(std::abs(got.per_class_f[c] - want.f[c]) <= 1e-12);
    CHECK(std::abs(got.micro_f - got.accuracy) <= 1e-12);
  }
}

TEST_CASE("a constant majority-class model on the published class counts") {
  ConfusionMatrix cm;
  cm.counts[0][0] = 372718;
  cm.counts[1][0] = 202684;
  cm.counts[2][0] = 22021;
  cm.counts[3][0] = 9001;
  const PrequentialMetrics m = metrics_from_confusion(cm);
  CHECK(m.samples == 606424);
  CHECK(m.accuracy == doctest::Approx(0.6146).epsilon(1e-4));
  CHECK(m.per_class_f[1] == 0.0);
}

TEST_CASE("prequential metrics equal a batch recount of the records") {
  const auto stream = random_stream(5000, 67);
  SpyModel model;
  const PrequentialResult r = prequential_run(model, stream);
  REQUIRE(r.records.size() == stream.size());
  ConfusionMatrix batch;
  for (const auto& rec : r.records) batch.add(rec.truth, rec.predicted);
  CHECK(batch == r.metrics.confusion);
  const PrequentialMetrics again = metrics_from_confusion(batch);
  CHECK(again.accuracy == r.metrics.accuracy);
  CHECK(again.macro_f == r.metrics.macro_f);
  CHECK(again.per_class_f == r.metrics.per_class_f);
  CHECK(r.metrics.micro_f == doctest::Approx(r.metrics.accuracy).epsilon(1e-12));
  CHECK(r.metrics.throughput > 0.0);
  for (const auto& rec : r.records) CHECK(rec.latency_seconds >= 0.0);
}

TEST_CASE("each sample is predicted before the model sees its label") {
  const auto stream = random_stream(300, 71);
  SpyModel model;
  std::size_t hook_calls = 0;
  PrequentialHooks hooks;
  hooks.after_predict = [&](const LabeledVector& lv, const PredictionRecord& rec) {
    CHECK(rec.seq_id == lv.features.seq_id);
    REQUIRE_FALSE(model.calls.empty());
    CHECK(model.calls.back() == std::make_pair('p', lv.features.seq_id));
    ++hook_calls;
  };
  const auto r = prequential_run(model, stream, hooks);
  CHECK(hook_calls == 300);
  REQUIRE(model.calls.size() == 600);
  for (std::size_t i = 0; i < stream.size(); ++i) {
    CHECK(model.calls[2 * i] == std::make_pair('p', std::uint64_t(i)));
    CHECK(model.calls[2 * i + 1] == std::make_pair('l', std::uint64_t(i)));
  }
  CHECK(r.records.front().predicted == ClassLabel::kNonFailure);
}

TEST_CASE("a perfect predictor scores one everywhere") {
  const auto stream = random_stream(1000, 73);
  class Perfect final : public Classifier {
   public:
    ModelFamily family() const override { return ModelFamily::kOracle; }
    Prediction predict(const FeatureVector& fv) const override {
      Prediction p;
      p.label = class_at(static_cast<std::size_t>(fv.values[0]));
      return p;
    }
    void learn(const FeatureVector&, ClassLabel) override {}
    nlohmann::json checkpoint() const override { return {}; }
  } perfect;
  const auto r = prequential_run(perfect, stream);
  CHECK(r.metrics.accuracy == 1.0);
  CHECK(r.metrics.macro_f == 1.0);
}

TEST_CASE("an empty stream is an error") {
  ConstantModel m(ClassLabel::kNonFailure);
  const std::vector<LabeledVector> none;
  CHECK_THROWS_AS(prequential_run(m, none), ArgumentError);
}

TEST_CASE("grid search ranks by macro F") {
  const auto stream = random_stream(2000, 79);
  ModelConfig oracle;
  oracle.family = ModelFamily::kOracle;
  ModelConfig constant;
  constant.family = ModelFamily::kGnb;
  const std::vector<ModelConfig> grid{constant, oracle};
  const auto result = grid_search(grid, stream, [](const ModelConfig& c) -> std::unique_ptr<Classifier> {
    if (c.family == ModelFamily::kOracle) {
      class Perfect final : public Classifier {
       public:
        ModelFamily family() const override { return ModelFamily::kOracle; }
        Prediction predict(const FeatureVector& fv) const override {
          Prediction p;
          p.label = class_at(static_cast<std::size_t>(fv.values[0]));
          return p;
        }
        void learn(const FeatureVector&, ClassLabel) override {}
        nlohmann::json checkpoint() const override { return {}; }
      };
      return std::make_unique<Perfect>();
    }
    return std::make_unique<ConstantModel>(ClassLabel::kNonFailure);
  });
  REQUIRE(result.leaderboard.size() == 2);
  CHECK(result.best.config.family == ModelFamily::kOracle);
  CHECK(result.leaderboard[0].metrics.macro_f >= result.leaderboard[1].metrics.macro_f);

  const std::vector<ModelConfig> single{constant};
  const auto one = grid_search(single, stream, [](const ModelConfig&) {
    return std::make_unique<ConstantModel>(ClassLabel::kNonFailure);
  });
  CHECK(one.leaderboard.size() == 1);
  CHECK(one.to_json()["leaderboard"].size() == 1);

  const std::vector<ModelConfig> empty;
  CHECK_THROWS_AS(grid_search(empty, stream, [](const ModelConfig&) {
                    return std::make_unique<ConstantModel>(ClassLabel::kNonFailure);
                  }),
                  ArgumentError);
}

TEST_CASE("hyperparameter grids have 27 points per tunable family") {
  CHECK(hyperparameter_grid(ModelFamily::kHtc).size() == 27);
  CHECK(hyperparameter_grid(ModelFamily::kHatc).size() == 27);
  CHECK(hyperparameter_grid(ModelFamily::kArfc).size() == 27);
  CHECK(hyperparameter_grid(ModelFamily::kGnb).empty());
  const ModelConfig htc = default_model_config(ModelFamily::kHtc);
  CHECK(htc.depth == 50);
  CHECK(htc.tie_threshold == 0.5);
  CHECK(htc.max_size == 50.0);
  CHECK(default_model_config(ModelFamily::kHatc).max_size == 100.0);
  const ModelConfig arfc = default_model_config(ModelFamily::kArfc);
  CHECK(arfc.models == 50);
  CHECK(arfc.features == 50);
  CHECK(arfc.lambda == 50.0);
}

TEST_CASE("model configs reject unknown keys") {
  CHECK(ModelConfig::from_json({{"family", "htc"}, {"depth", 100}}).depth == 100);
  CHECK_THROWS_AS(ModelConfig::from_json({{"family", "htc"}, {"lambda", 6}}), ConfigError);
  CHECK_THROWS_AS(ModelConfig::from_json({{"family", "svm"}}), ConfigError);
  const ModelConfig c = ModelConfig::from_json({{"family", "arfc"}, {"models", 100}});
  CHECK(ModelConfig::from_json(c.to_json()).models == 100);
}

TEST_CASE("prediction records round-trip through JSON lines") {
  const auto stream = random_stream(100, 83);
  SpyModel model;
  const auto r = prequential_run(model, stream);
  std::stringstream io;
  write_records(io, r.records);
  const auto back = read_records(io);
  REQUIRE(back.size() == r.records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].seq_id == r.records[i].seq_id);
    CHECK(back[i].timestamp == r.records[i].timestamp);
    CHECK(back[i].truth == r.records[i].truth);
    CHECK(back[i].predicted == r.records[i].predicted);
    CHECK(back[i].scores == r.records[i].scores);
  }
}
