#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdm/features.hpp"
#include "pdm/learn/classifier.hpp"
#include "pdm/learn/factory.hpp"

namespace pdm {

// counts[true][predicted]
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

  void add(ClassLabel truth, ClassLabel predicted) {
    ++counts[index_of(truth)][index_of(predicted)];
  }
  std::uint64_t total() const;
  std::uint64_t correct() const;
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct FMeasure {
  double macro = 0.0;
  double micro = 0.0;
  std::array<double, kNumClasses> per_class{};
};

// Per-class F = 2PR/(P+R), 0 when P+R = 0; macro averages all four classes.
// Throws ArgumentError on an empty matrix.
FMeasure compute_fmeasure(const ConfusionMatrix& cm);

struct PrequentialMetrics {
  std::uint64_t samples = 0;
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  double macro_f = 0.0;
  double micro_f = 0.0;
  std::array<double, kNumClasses> per_class_f{};
  // Feature engineering + selection + predict + learn.
  double wall_seconds = 0.0;
  double feature_seconds = 0.0;
  double model_seconds = 0.0;
  double throughput = 0.0;  // samples per wall second

  nlohmann::json to_json() const;
};

// Accuracy and F values from a confusion matrix (timings left at zero).
PrequentialMetrics metrics_from_confusion(const ConfusionMatrix& cm);

struct PredictionRecord {
  std::uint64_t seq_id = 0;
  Timestamp timestamp = 0;
  ClassLabel truth = ClassLabel::kNonFailure;
  ClassLabel predicted = ClassLabel::kNonFailure;
  ClassScores scores{};
  double latency_seconds = 0.0;

  // Latency is excluded so record files are reproducible; non-finite scores
  // are written as null.
  nlohmann::json to_json() const;
  static PredictionRecord from_json(const nlohmann::json& j);
};

struct LabeledVector {
  FeatureVector features;
  ClassLabel label = ClassLabel::kNonFailure;
};

// Pull-based stream; returns nullopt at the end.
using LabeledSource = std::function<std::optional<LabeledVector>()>;

struct PrequentialHooks {
  // Runs after predict and before learn for every sample.
  std::function<void(const LabeledVector&, const PredictionRecord&)> after_predict;
};

struct PrequentialResult {
  PrequentialMetrics metrics;
  std::vector<PredictionRecord> records;
};

// Test-then-train over the source. A model that is not ready yet predicts
// NonFailure. Throws ArgumentError ("no samples") on an empty stream.
PrequentialResult prequential_run(Classifier& model, const LabeledSource& source,
                                  const PrequentialHooks& hooks = {}, bool keep_records = true);

PrequentialResult prequential_run(Classifier& model, std::span<const LabeledVector> stream,
                                  const PrequentialHooks& hooks = {}, bool keep_records = true);

struct GridPoint {
  ModelConfig config;
  PrequentialMetrics metrics;
};

struct GridSearchResult {
  GridPoint best;
  std::vector<GridPoint> leaderboard;  // ranked

  nlohmann::json to_json() const;
};

using ModelMaker = std::function<std::unique_ptr<Classifier>(const ModelConfig&)>;

// Every point replays the same stream on a fresh model; ranked by macro F,
// then by shorter wall time. Throws ArgumentError on an empty grid.
GridSearchResult grid_search(std::span<const ModelConfig> grid,
                             std::span<const LabeledVector> stream, const ModelMaker& make);

void write_records(std::ostream& out, std::span<const PredictionRecord> records);
std::vector<PredictionRecord> read_records(std::istream& in);

// "Model | Accuracy | Macro F | NonFailure | OilLeakCompressor | AirLeakDryer | AirLeakClient | Runtime (s)"
std::string table_header();
std::string table_row(std::string_view model, const PrequentialMetrics& m);

}  // namespace pdm
