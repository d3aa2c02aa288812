#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

namespace pdm {

// Adaptive windowing change detector over a numeric stream. Elements are
// summarized in an exponential histogram (rows of buckets holding 2^i
// elements); every `clock` insertions all bucket boundaries are tested and the
// oldest bucket is dropped while two sub-windows differ significantly.
class Adwin {
 public:
  static constexpr int kMaxBuckets = 5;
  static constexpr int kClock = 32;
  static constexpr int kMinSubWindow = 5;
  static constexpr std::size_t kGracePeriod = 10;

  explicit Adwin(double delta = 0.002);

  // Returns true when the window was cut during this update.
  bool update(double value);

  double delta() const { return delta_; }
  std::size_t width() const { return width_; }
  double total() const { return total_; }
  double mean() const { return width_ == 0 ? 0.0 : total_ / static_cast<double>(width_); }
  double variance() const {
    return width_ == 0 ? 0.0 : variance_ / static_cast<double>(width_);
  }
  std::size_t bucket_count() const;

  nlohmann::json to_json() const;
  static Adwin from_json(const nlohmann::json& j);

 private:
  struct Row {
    std::vector<double> total;     // index 0 is the oldest bucket of the row
    std::vector<double> variance;
  };

  void insert(double value);
  void compress();
  void drop_oldest_bucket();
  bool detect();
  bool cut(double n0, double n1, double u0, double u1) const;

  double delta_;
  std::uint64_t time_ = 0;
  std::size_t width_ = 0;
  double total_ = 0.0;
  double variance_ = 0.0;
  std::vector<Row> rows_;  // rows_[i] holds buckets of 2^i elements
};

enum class DriftState { kStable, kWarning, kDrift };

// A warning-level and a drift-level detector on the same error stream.
class DriftMonitor {
 public:
  static constexpr double kDefaultWarningDelta = 0.01;
  static constexpr double kDefaultDriftDelta = 0.002;

  explicit DriftMonitor(double warning_delta = kDefaultWarningDelta,
                        double drift_delta = kDefaultDriftDelta);

  // Feeds one value to both detectors. Drift wins over warning.
  DriftState update(double value);

  // Whether the most recent detection moved the window mean up.
  bool last_change_increased() const { return last_increase_; }

  void reset_warning();
  void reset();

  const Adwin& warning_detector() const { return warning_; }
  const Adwin& drift_detector() const { return drift_; }

  nlohmann::json to_json() const;
  static DriftMonitor from_json(const nlohmann::json& j);

 private:
  Adwin warning_;
  Adwin drift_;
  bool last_increase_ = false;
};

}  // namespace pdm
