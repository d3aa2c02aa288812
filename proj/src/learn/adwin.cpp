#include "pdm/learn/adwin.hpp"

#include <cmath>

#include "pdm/error.hpp"

namespace pdm {

Adwin::Adwin(double delta) : delta_(delta) {
  if (!(delta_ > 0.0 && delta_ < 1.0)) throw ArgumentError("ADWIN delta must lie in (0,1)");
  rows_.emplace_back();
}

std::size_t Adwin::bucket_count() const {
  std::size_t n = 0;
  for (const auto& r : rows_) n += r.total.size();
  return n;
}

bool Adwin::update(double value) {
  insert(value);
  ++time_;
  if (time_ % kClock == 0 && width_ > kGracePeriod) return detect();
  return false;
}

void Adwin::insert(double value) {
  ++width_;
  if (width_ > 1) {
    const double prev_mean = total_ / static_cast<double>(width_ - 1);
    variance_ += static_cast<double>(width_ - 1) * (value - prev_mean) * (value - prev_mean) /
                 static_cast<double>(width_);
  }
  total_ += value;
  rows_.front().total.push_back(value);
  rows_.front().variance.push_back(0.0);
  compress();
}

void Adwin::compress() {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (rows_[i].total.size() <= static_cast<std::size_t>(kMaxBuckets)) break;
    if (i + 1 == rows_.size()) rows_.emplace_back();
    Row& row = rows_[i];
    const double n = std::ldexp(1.0, static_cast<int>(i));
    const double u1 = row.total[0] / n;
    const double u2 = row.total[1] / n;
    const double extra = n * n * (u1 - u2) * (u1 - u2) / (n + n);
    rows_[i + 1].total.push_back(row.total[0] + row.total[1]);
    rows_[i + 1].variance.push_back(row.variance[0] + row.variance[1] + extra);
    row.total.erase(row.total.begin(), row.total.begin() + 2);
    row.variance.erase(row.variance.begin(), row.variance.begin() + 2);
  }
}

void Adwin::drop_oldest_bucket() {
  const std::size_t last = rows_.size() - 1;
  Row& row = rows_[last];
  const double n1 = std::ldexp(1.0, static_cast<int>(last));
  width_ -= static_cast<std::size_t>(n1);
  total_ -= row.total[0];
  const double u1 = row.total[0] / n1;
  const double w = static_cast<double>(width_);
  const double mean = width_ == 0 ? 0.0 : total_ / w;
  variance_ -= row.variance[0] + n1 * w * (u1 - mean) * (u1 - mean) / (n1 + w);
  if (width_ == 0 || variance_ < 0.0) variance_ = 0.0;
  row.total.erase(row.total.begin());
  row.variance.erase(row.variance.begin());
  if (row.total.empty() && rows_.size() > 1) rows_.pop_back();
}

bool Adwin::cut(double n0, double n1, double u0, double u1) const {
  const double n = static_cast<double>(width_);
  const double diff = u0 / n0 - u1 / n1;
  const double v = variance();
  const double m = 1.0 / (n0 - kMinSubWindow + 1) + 1.0 / (n1 - kMinSubWindow + 1);
  const double dd = std::log(2.0 * std::log(n) / delta_);
  const double epsilon = std::sqrt(2.0 * m * v * dd) + 2.0 / 3.0 * dd * m;
  return std::fabs(diff) > epsilon;
}

bool Adwin::detect() {
  bool changed = false;
  bool reduce = true;
  while (reduce) {
    reduce = false;
    double n0 = 0.0;
    double n1 = static_cast<double>(width_);
    double u0 = 0.0;
    double u1 = total_;
    bool exit = false;
    for (std::size_t ri = rows_.size(); ri-- > 0 && !exit;) {
      const Row& row = rows_[ri];
      const double size = std::ldexp(1.0, static_cast<int>(ri));
      for (std::size_t k = 0; k < row.total.size(); ++k) {
        n0 += size;
        n1 -= size;
        u0 += row.total[k];
        u1 -= row.total[k];
        if (ri == 0 && k + 1 == row.total.size()) {
          exit = true;
          break;
        }
        if (n1 > kMinSubWindow + 1 && n0 > kMinSubWindow + 1 && cut(n0, n1, u0, u1)) {
          reduce = true;
          changed = true;
          if (width_ > 0) {
            drop_oldest_bucket();
            exit = true;
            break;
          }
        }
      }
    }
  }
  return changed;
}

nlohmann::json Adwin::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rows_) rows.push_back({{"t", r.total}, {"v", r.variance}});
  return {{"delta", delta_}, {"time", time_}, {"width", width_},
          {"total", total_}, {"var", variance_}, {"rows", rows}};
}

Adwin Adwin::from_json(const nlohmann::json& j) {
  Adwin a(j.at("delta").get<double>());
  a.time_ = j.at("time").get<std::uint64_t>();
  a.width_ = j.at("width").get<std::size_t>();
  a.total_ = j.at("total").get<double>();
  a.variance_ = j.at("var").get<double>();
  a.rows_.clear();
  for (const auto& r : j.at("rows")) {
    Row row;
    row.total = r.at("t").get<std::vector<double>>();
    row.variance = r.at("v").get<std::vector<double>>();
    a.rows_.push_back(std::move(row));
  }
  if (a.rows_.empty()) a.rows_.emplace_back();
  return a;
}

DriftMonitor::DriftMonitor(double warning_delta, double drift_delta)
    : warning_(warning_delta), drift_(drift_delta) {}

DriftState DriftMonitor::update(double value) {
  const double warn_before = warning_.mean();
  const double drift_before = drift_.mean();
  const bool warn = warning_.update(value);
  const bool drift = drift_.update(value);
  if (drift) {
    last_increase_ = drift_.mean() > drift_before;
    return DriftState::kDrift;
  }
  if (warn) {
    last_increase_ = warning_.mean() > warn_before;
    return DriftState::kWarning;
  }
  return DriftState::kStable;
}

void DriftMonitor::reset_warning() { warning_ = Adwin(warning_.delta()); }

void DriftMonitor::reset() {
  warning_ = Adwin(warning_.delta());
  drift_ = Adwin(drift_.delta());
  last_increase_ = false;
}

nlohmann::json DriftMonitor::to_json() const {
  return {{"warning", warning_.to_json()}, {"drift", drift_.to_json()}, {"inc", last_increase_}};
}

DriftMonitor DriftMonitor::from_json(const nlohmann::json& j) {
  DriftMonitor m;
  m.warning_ = Adwin::from_json(j.at("warning"));
  m.drift_ = Adwin::from_json(j.at("drift"));
  m.last_increase_ = j.at("inc").get<bool>();
  return m;
}

}  // namespace pdm
