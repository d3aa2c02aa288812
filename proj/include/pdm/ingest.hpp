#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pdm/schema.hpp"
#include "pdm/time.hpp"

namespace pdm {

// One 1 Hz reading of all 16 signals.
struct RawSample {
  std::uint64_t seq_id = 0;
  Timestamp timestamp = 0;
  std::array<double, kNumSensors> values{};

  double value(Sensor s) const { return values[index_of(s)]; }
};

struct FailureEvent {
  ClassLabel label = ClassLabel::kAirLeakDryer;
  Timestamp start = 0;
  Timestamp end = 0;
};

struct LabeledSample {
  RawSample sample;
  ClassLabel label = ClassLabel::kNonFailure;
};

struct RowError {
  std::size_t row = 0;  // 1-based line number in the file, header is line 1
  std::string message;
};

struct ParseReport {
  std::size_t rows_read = 0;
  std::size_t rows_skipped = 0;
  std::size_t out_of_order = 0;
  std::vector<RowError> errors;  // first kMaxRecordedErrors only
  static constexpr std::size_t kMaxRecordedErrors = 100;
};

// Incremental CSV reader. The header must name a timestamp column and all
// 16 signals (see parse_sensor for accepted spellings); other columns are
// ignored. Malformed rows are skipped and counted, never fatal.
class CsvSampleReader {
 public:
  explicit CsvSampleReader(std::istream& in);

  std::optional<RawSample> next();

  const ParseReport& report() const { return report_; }

 private:
  std::istream& in_;
  std::size_t timestamp_column_ = 0;
  std::array<std::size_t, kNumSensors> sensor_columns_{};
  std::size_t line_ = 1;
  std::uint64_t next_seq_ = 0;
  std::optional<Timestamp> last_timestamp_;
  ParseReport report_;
  std::string line_buf_;
  std::vector<std::string_view> cells_;
};

struct ParsedStream {
  std::vector<RawSample> samples;
  ParseReport report;
};

ParsedStream parse_stream(std::istream& in);

// Failure reports plus the labelling rule (pre-failure window).
class EventSet {
 public:
  static constexpr Timestamp kDefaultPreWindow = 2 * 3600;

  EventSet() = default;
  // Throws ConfigError when two events overlap after pre-window extension
  // or an event is malformed.
  explicit EventSet(std::vector<FailureEvent> events,
                    Timestamp pre_window = kDefaultPreWindow);

  const std::vector<FailureEvent>& events() const { return events_; }
  Timestamp pre_window() const { return pre_window_; }

  ClassLabel label_at(Timestamp t) const;

  // True when t falls between the start of the calendar day before an
  // event's start and the end of the calendar day after its end.
  bool in_evaluation_window(Timestamp t) const;

  // Union of the evaluation intervals, sorted, inclusive bounds.
  const std::vector<std::pair<Timestamp, Timestamp>>& evaluation_intervals() const {
    return intervals_;
  }

 private:
  std::vector<FailureEvent> events_;
  Timestamp pre_window_ = kDefaultPreWindow;
  std::vector<std::pair<Timestamp, Timestamp>> intervals_;
};

// The three failure reports of the MetroPT air production unit study.
EventSet metropt_events();

// JSON: {"pre_window_seconds": 7200,
//        "events": [{"label": "AirLeakDryer", "start": "...", "end": "..."}]}
EventSet load_events(const std::filesystem::path& path);
EventSet parse_events_json(const std::string& text);

LabeledSample label_sample(const RawSample& s, const EventSet& events);

std::vector<RawSample> filter_evaluation_window(const std::vector<RawSample>& stream,
                                                const EventSet& events);

enum class DownsampleMode { kStride, kRandom };

std::optional<DownsampleMode> parse_downsample_mode(std::string_view s);
std::string_view downsample_mode_name(DownsampleMode m);

// Per-sample keep decision. Random mode hashes (seed, seq_id) so the decision
// for a sample does not depend on which other samples were offered.
class Downsampler {
 public:
  Downsampler(std::uint64_t factor, DownsampleMode mode, std::uint64_t seed = 0);

  bool keep(std::uint64_t seq_id) const;

  std::uint64_t factor() const { return factor_; }
  DownsampleMode mode() const { return mode_; }

 private:
  std::uint64_t factor_;
  DownsampleMode mode_;
  std::uint64_t seed_;
};

std::vector<RawSample> downsample(const std::vector<RawSample>& stream, std::uint64_t factor,
                                  DownsampleMode mode, std::uint64_t seed = 0);

// SplitMix64 finalizer; also used to derive independent RNG seeds.
std::uint64_t mix64(std::uint64_t x);

}  // namespace pdm
