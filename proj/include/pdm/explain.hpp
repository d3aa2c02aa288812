#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pdm/eval.hpp"
#include "pdm/features.hpp"
#include "pdm/learn/hoeffding_tree.hpp"

namespace pdm {

struct PathFeature {
  FeatureName feature;
  std::size_t frequency = 0;
  friend bool operator==(const PathFeature&, const PathFeature&) = default;
};

// Features tested on the root-to-leaf path of fv whose right (greater-than)
// branch was taken, with their counts, in path order of first occurrence.
// Throws IntegrityError when a tested feature is missing from fv.
std::vector<PathFeature> decision_path_features(const HoeffdingTree& tree, const FeatureVector& fv);

// Decreasing frequency, then serialized-name order.
void rank_path_features(std::vector<PathFeature>& features);

// Merged path features of the first n_estimators trees (0 means all), top `limit`.
// Throws UnsupportedModelError for models that are not tree based.
std::vector<PathFeature> top_relevant_features(const Classifier& model, const FeatureVector& fv,
                                               std::size_t n_estimators = 0,
                                               std::size_t limit = 5);

// Run-level accumulation of path features.
class FeatureTally {
 public:
  void add(std::span<const PathFeature> features);
  const std::map<FeatureName, std::size_t>& counts() const { return counts_; }
  bool empty() const { return counts_.empty(); }

 private:
  std::map<FeatureName, std::size_t> counts_;
};

struct RankedItem {
  std::string name;
  std::size_t frequency = 0;
  friend bool operator==(const RankedItem&, const RankedItem&) = default;
};

struct ModelSummary {
  std::vector<RankedItem> top_windows;
  std::vector<RankedItem> top_metrics;
  std::vector<RankedItem> top_sensors;
  bool windows_equal = false;  // all four windows tie

  nlohmann::json to_json() const;
};

ModelSummary model_summary(const FeatureTally& tally, std::size_t limit = 5);

struct AnomalyConfig {
  double pattern_sigmas = 3.0;
  double value_iqr_factor = 3.0;
  double std_floor = 1e-9;
  Timestamp pattern_report_seconds = 600;
  Timestamp value_report_seconds = 120;
  std::vector<Sensor> sensors = {kAllSensors.begin(), kAllSensors.begin() + kNumAnalogSensors};

  nlohmann::json to_json() const;
  static AnomalyConfig from_json(const nlohmann::json& j);
};

struct SensorAnomaly {
  Timestamp pattern_seconds = 0;
  Timestamp value_seconds = 0;
};

struct AnomalyReport {
  std::array<SensorAnomaly, kNumSensors> sensors{};
  Timestamp stream_age = 0;
};

// Consecutive-duration tracking of per-sensor deviations from the W_avg window.
// Mean and std come from running sums over a private copy of the window.
class AnomalyTracker {
 public:
  explicit AnomalyTracker(AnomalyConfig config = {});

  // Call after engine.push(sample) for every sample of the stream; anomalies
  // are evaluated once the engine is warm.
  const AnomalyReport& update(const FeatureEngine& engine, const RawSample& sample);
  const AnomalyReport& report() const { return report_; }
  const AnomalyConfig& config() const { return config_; }

 private:
  struct Moments {
    std::vector<double> ring;
    std::size_t head = 0;
    std::size_t size = 0;
    double shift = 0.0;
    double sum = 0.0;
    double sumsq = 0.0;
    std::size_t since_resync = 0;

    void push(double x, std::size_t length);
    double mean() const;
    double population_std() const;
  };

  AnomalyConfig config_;
  AnomalyReport report_;
  std::array<Moments, kNumSensors> moments_;
  std::array<Timestamp, kNumSensors> pattern_start_{};
  std::array<Timestamp, kNumSensors> value_start_{};
  std::array<bool, kNumSensors> pattern_on_{};
  std::array<bool, kNumSensors> value_on_{};
  std::optional<Timestamp> first_;
};

struct Explanation {
  std::uint64_t seq_id = 0;
  ClassLabel predicted = ClassLabel::kNonFailure;
  ClassLabel truth = ClassLabel::kNonFailure;
  std::vector<PathFeature> top_features;
  ModelSummary summary;
  AnomalyReport anomalies;
  std::string text;

  nlohmann::json to_json(const AnomalyConfig& config) const;
};

// Placeholders: {{sample}}, {{features}}, {{model_summary}}, {{anomalies}},
// {{prediction}}. An unknown placeholder raises TemplateError naming it.
std::string_view default_explanation_template();

std::string render_explanation(const Explanation& e, const AnomalyConfig& config,
                               std::string_view tmpl = default_explanation_template());

// Points of one feature over the run for the report plot.
struct FeatureTrace {
  std::string feature;
  std::vector<std::uint64_t> seq_ids;
  std::vector<double> values;
  std::vector<ClassLabel> truth;
};

struct ReportInput {
  std::string title;
  nlohmann::json summary;  // written verbatim to summary.json
  std::span<const PredictionRecord> records;
  // Explanation JSON per record (same order); may be empty.
  std::span<const nlohmann::json> explanations;
  std::vector<FeatureTrace> traces;
};

// Writes records.jsonl, summary.json and report.html under dir.
// Throws IoError when the directory cannot be written.
void emit_report(const ReportInput& input, const std::filesystem::path& dir);

// records.jsonl lines: the prediction record fields plus "explanation" when present.
nlohmann::json join_record(const PredictionRecord& r, const nlohmann::json* explanation);

// Standalone HTML page for a run.
std::string render_report_html(const ReportInput& input);

}  // namespace pdm
