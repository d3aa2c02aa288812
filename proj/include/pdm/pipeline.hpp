#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdm/calibrate.hpp"
#include "pdm/eval.hpp"
#include "pdm/explain.hpp"
#include "pdm/ingest.hpp"
#include "pdm/learn/factory.hpp"
#include "pdm/select.hpp"

namespace pdm {

struct DownsampleConfig {
  std::uint64_t factor = 1;
  DownsampleMode mode = DownsampleMode::kStride;
};

struct ExplainConfig {
  bool enabled = true;
  std::size_t n_estimators = 0;  // trees consulted for forests; 0 means all
  std::size_t every = 1;         // explain every n-th evaluated sample
  std::optional<std::filesystem::path> template_path;
  AnomalyConfig anomaly;
};

struct RunConfig {
  std::filesystem::path data;
  std::optional<std::filesystem::path> events;  // default: the MetroPT failure reports
  int scenario = 2;
  std::optional<std::filesystem::path> window_spec;  // default: calibrate
  std::optional<std::filesystem::path> selection;    // default: variance burn-in
  double variance_threshold = 0.5;
  Timestamp calibration_seconds = 2 * kSecondsPerDay;
  bool evaluation_window = true;
  DownsampleConfig downsample{50, DownsampleMode::kStride};
  DownsampleConfig tune_downsample{500, DownsampleMode::kRandom};
  ModelConfig model = default_model_config(ModelFamily::kArfc);
  std::optional<std::vector<ModelConfig>> grid;  // default: the family's grid
  std::uint64_t seed = 42;
  std::filesystem::path out = "out";
  ExplainConfig explain;
  bool save_checkpoint = false;

  // Rejects unknown keys at every level.
  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  // Scenario range and referenced paths. Throws ConfigError.
  void validate() const;
};

RunConfig load_run_config(const std::filesystem::path& path);

Scenario scenario_of(const RunConfig& config);
EventSet events_of(const RunConfig& config);

// Window spec and frozen feature subset derived from the leading slice.
struct Preparation {
  WindowSpec spec;
  Selection selection;
  EventSet events;
  std::size_t slice_samples = 0;
  bool calibrated = false;
};

Preparation prepare(const RunConfig& config);

// Streams labelled, selected feature vectors from the CSV. Every row feeds
// the sliding windows; rows outside the evaluation window or dropped by the
// downsampler are not emitted.
class FeatureStream {
 public:
  FeatureStream(const RunConfig& config, const Preparation& prep, const DownsampleConfig& ds,
                AnomalyTracker* tracker = nullptr);
  ~FeatureStream();

  std::optional<LabeledVector> next();
  LabeledSource source() {
    return [this] { return next(); };
  }

  const ParseReport& report() const;
  double parse_seconds() const { return parse_seconds_; }
  const FeatureEngine& engine() const { return engine_; }

 private:
  struct Input;
  std::unique_ptr<Input> input_;
  const Preparation& prep_;
  bool evaluation_window_;
  Downsampler downsampler_;
  FeatureEngine engine_;
  AnomalyTracker* tracker_;
  double parse_seconds_ = 0.0;
};

struct RunOutcome {
  PrequentialMetrics metrics;
  nlohmann::json summary;
  std::size_t explanations = 0;
};

// Each command writes under config.out and echoes a short report to `out`.
WindowSpec cmd_calibrate(const RunConfig& config, std::ostream& out);
// Empty for families without hyperparameters.
std::optional<GridSearchResult> cmd_tune(const RunConfig& config, std::ostream& out);
RunOutcome cmd_run(const RunConfig& config, std::ostream& out);
// Prints the stored explanation texts of seq_ids in [first, last].
void cmd_explain(const RunConfig& config, std::uint64_t first, std::uint64_t last,
                 std::ostream& out);
// Rebuilds report.html from the stored records and summary.
void cmd_report(const RunConfig& config, std::ostream& out);

}  // namespace pdm
