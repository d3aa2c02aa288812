#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pdm/calibrate.hpp"
#include "pdm/ingest.hpp"
#include "pdm/schema.hpp"

namespace pdm {

enum class Metric : std::uint8_t { kRaw, kAvg, kStd, kQ1, kQ2, kQ3, kFft };
enum class WindowKind : std::uint8_t { kAvg, kQ1, kQ2, kQ3, kNone };

inline constexpr std::array<Metric, 6> kEngineeredMetrics = {
    Metric::kAvg, Metric::kStd, Metric::kQ1, Metric::kQ2, Metric::kQ3, Metric::kFft};
inline constexpr std::array<WindowKind, 4> kWindowKinds = {WindowKind::kAvg, WindowKind::kQ1,
                                                           WindowKind::kQ2, WindowKind::kQ3};

std::string_view metric_name(Metric m);          // "fft"
std::string_view window_name(WindowKind w);      // "W_q1"
std::optional<Metric> parse_metric(std::string_view s);
std::optional<WindowKind> parse_window(std::string_view s);

// Human-readable forms used in explanations.
std::string_view metric_label(Metric m);         // "FFT", "Average", ...
std::string_view window_label(WindowKind w);     // "Q1", "AVG"

std::size_t window_length(const WindowSpec& spec, WindowKind w);

// (sensor, metric, window) triple. metric == kRaw iff window == kNone.
struct FeatureName {
  Sensor sensor = Sensor::kDvPressure;
  Metric metric = Metric::kRaw;
  WindowKind window = WindowKind::kNone;

  auto operator<=>(const FeatureName&) const = default;
};

// "<sensor>|<metric>|<window>", e.g. "Reservoirs|fft|W_q1".
std::string to_string(const FeatureName& f);
// Throws IntegrityError on malformed names or raw/window mismatches.
FeatureName parse_feature_name(std::string_view s);

// "FFT of Reservoirs from Q1-size sliding window"
std::string describe(const FeatureName& f);

// Ordered list of feature names shared by every vector of a stream.
class FeatureSchema {
 public:
  explicit FeatureSchema(std::vector<FeatureName> names);

  // 16 raw signals followed by, per sensor and window, the six metrics.
  static std::shared_ptr<const FeatureSchema> full();

  std::size_t size() const { return names_.size(); }
  const FeatureName& operator[](std::size_t i) const { return names_[i]; }
  const std::vector<FeatureName>& names() const { return names_; }
  std::optional<std::size_t> index_of(const FeatureName& f) const;

  friend bool operator==(const FeatureSchema& a, const FeatureSchema& b) {
    return a.names_ == b.names_;
  }

 private:
  std::vector<FeatureName> names_;
  std::map<FeatureName, std::size_t> index_;
};

struct FeatureVector {
  std::uint64_t seq_id = 0;
  Timestamp timestamp = 0;
  std::shared_ptr<const FeatureSchema> schema;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  // Throws SchemaError when the name is not part of the schema.
  double at(const FeatureName& f) const;
};

struct WindowStats {
  double avg = 0.0;
  double std = 0.0;
  double q1 = 0.0;
  double q2 = 0.0;
  double q3 = 0.0;
};

// avg, population std and nearest-rank quartiles of a window (w >= 2).
WindowStats window_stats(std::span<const double> window);

// Largest DFT magnitude over bins 1..floor(w/2) (DC excluded), exact for any w >= 2.
double fft_feature(std::span<const double> window);

// Fixed-length sliding window with an order-statistics index, so quartile
// queries and pushes cost O(log w).
class SlidingWindow {
 public:
  explicit SlidingWindow(std::size_t length);
  ~SlidingWindow();
  SlidingWindow(SlidingWindow&&) noexcept;
  SlidingWindow& operator=(SlidingWindow&&) noexcept;

  void push(double x);

  std::size_t length() const { return length_; }
  std::size_t size() const { return size_; }
  bool full() const { return size_ == length_; }

  // Oldest to newest.
  std::vector<double> chronological() const;
  void chronological(std::vector<double>& out) const;
  // Ascending order, from the order index.
  std::vector<double> sorted() const;

  double mean() const;
  double population_std() const;
  // y[round(k*w/4)] over the current contents, k in {1,2,3}.
  double quartile(int k) const;
  WindowStats stats() const;

 private:
  struct OrderIndex;
  std::size_t length_;
  std::vector<double> ring_;
  std::size_t head_ = 0;  // next write position
  std::size_t size_ = 0;
  std::uint64_t pushed_ = 0;
  std::unique_ptr<OrderIndex> order_;
};

struct ColdStart {
  std::size_t seen = 0;
  std::size_t required = 0;
};

// Per-stream sliding-window state for all sensors and the four lengths.
class FeatureEngine {
 public:
  explicit FeatureEngine(const WindowSpec& spec);

  // Feeds one sample into all 64 windows. Returns true once every window is full.
  bool push(const RawSample& s);

  // push() followed by compute_all() once warm.
  std::variant<FeatureVector, ColdStart> push_sample(const RawSample& s);

  bool ready() const { return seen_ >= spec_.max_length(); }
  ColdStart progress() const { return {seen_, spec_.max_length()}; }

  // The 400-entry vector for the most recently pushed sample.
  FeatureVector compute_all() const;

  // Only the listed entries of the full schema, in the given order.
  FeatureVector compute(const std::shared_ptr<const FeatureSchema>& subset) const;

  double compute_one(const FeatureName& f) const;

  const SlidingWindow& window(Sensor s, WindowKind w) const;
  const WindowSpec& spec() const { return spec_; }
  const RawSample& last_sample() const { return last_; }

 private:
  WindowSpec spec_;
  std::vector<SlidingWindow> windows_;  // sensor-major, 4 per sensor
  std::shared_ptr<const FeatureSchema> full_schema_;
  std::size_t seen_ = 0;
  RawSample last_;
  mutable std::vector<double> scratch_;
};

}  // namespace pdm
