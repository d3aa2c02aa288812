#include "pdm/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "pdm/error.hpp"

namespace pdm {

std::size_t WindowSpec::max_length() const {
  return std::max({w_avg, w_q1, w_q2, w_q3});
}

void validate(const WindowSpec& spec) {
  for (std::size_t w : spec.lengths()) {
    if (w < 2) throw ArgumentError("window lengths must be > 1");
  }
}

std::string to_json(const WindowSpec& spec) {
  nlohmann::ordered_json j;
  j["w_avg"] = spec.w_avg;
  j["w_q1"] = spec.w_q1;
  j["w_q2"] = spec.w_q2;
  j["w_q3"] = spec.w_q3;
  return j.dump(2) + "\n";
}

WindowSpec window_spec_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("window spec is not valid JSON: ") + e.what());
  }
  WindowSpec spec;
  bool seen[4] = {false, false, false, false};
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number_unsigned()) {
      throw ConfigError("window spec field '" + key + "' must be a positive integer");
    }
    const auto v = value.get<std::size_t>();
    if (key == "w_avg") spec.w_avg = v, seen[0] = true;
    else if (key == "w_q1") spec.w_q1 = v, seen[1] = true;
    else if (key == "w_q2") spec.w_q2 = v, seen[2] = true;
    else if (key == "w_q3") spec.w_q3 = v, seen[3] = true;
    else throw ConfigError("unknown key '" + key + "' in window spec");
  }
  if (!(seen[0] && seen[1] && seen[2] && seen[3])) {
    throw ConfigError("window spec needs w_avg, w_q1, w_q2 and w_q3");
  }
  validate(spec);
  return spec;
}

void save_window_spec(const WindowSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json(spec);
}

WindowSpec load_window_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open window spec " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return window_spec_from_json(buf.str());
}

std::vector<std::size_t> find_relative_minima(std::span<const double> series) {
  if (series.size() < 3) throw ArgumentError("relative minima need at least 3 values");
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i + 1 < series.size(); ++i) {
    if (series[i] < series[i - 1] && series[i] <= series[i + 1]) out.push_back(i);
  }
  return out;
}

GapList minima_gaps(std::span<const double> series) {
  const auto minima = find_relative_minima(series);
  GapList gaps;
  for (std::size_t i = 1; i < minima.size(); ++i) gaps.push_back(minima[i] - minima[i - 1]);
  return gaps;
}

GapList merge_gap_lists(const std::vector<GapList>& per_feature) {
  GapList merged;
  for (const auto& g : per_feature) merged.insert(merged.end(), g.begin(), g.end());
  if (merged.empty()) throw CalibrationError("no oscillation detected");
  return merged;
}

double nearest_rank_quartile(std::span<const double> sorted, int k) {
  const std::size_t n = sorted.size();
  auto idx = static_cast<std::size_t>(std::lround(static_cast<double>(k) * n / 4.0));
  return sorted[std::min(idx, n - 1)];
}

WindowSpec window_spec_from_gaps(GapList gaps, std::size_t slice_length) {
  if (gaps.empty()) throw CalibrationError("no oscillation detected");
  std::sort(gaps.begin(), gaps.end());
  std::vector<double> sorted(gaps.begin(), gaps.end());
  const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / sorted.size();

  const std::size_t upper = std::max<std::size_t>(2, slice_length);
  auto finish = [upper](double v) {
    auto w = static_cast<std::size_t>(std::llround(v));
    return std::clamp<std::size_t>(w, 2, upper);
  };
  return WindowSpec{finish(mean), finish(nearest_rank_quartile(sorted, 1)),
                    finish(nearest_rank_quartile(sorted, 2)),
                    finish(nearest_rank_quartile(sorted, 3))};
}

std::vector<RawSample> leading_slice(const std::vector<RawSample>& stream, Timestamp seconds) {
  std::vector<RawSample> out;
  if (stream.empty()) return out;
  const Timestamp stop = stream.front().timestamp + seconds;
  for (const auto& s : stream) {
    if (s.timestamp >= stop) break;
    out.push_back(s);
  }
  return out;
}

WindowSpec calibrate_windows(const std::vector<RawSample>& slice,
                             std::span<const Sensor> analog) {
  std::vector<GapList> per_feature;
  if (slice.size() >= 3) {
    std::vector<double> series(slice.size());
    for (Sensor s : analog) {
      std::transform(slice.begin(), slice.end(), series.begin(),
                     [s](const RawSample& r) { return r.value(s); });
      per_feature.push_back(minima_gaps(series));
    }
  }
  return window_spec_from_gaps(merge_gap_lists(per_feature), slice.size());
}

std::vector<Sensor> analog_sensors() {
  std::vector<Sensor> out;
  for (Sensor s : kAllSensors) {
    if (is_analog(s)) out.push_back(s);
  }
  return out;
}

}  // namespace pdm
