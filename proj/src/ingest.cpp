#include "pdm/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "pdm/error.hpp"

namespace pdm {
namespace {

void split_csv(std::string_view line, std::vector<std::string_view>& cells) {
  cells.clear();
  std::size_t pos = 0;
  while (true) {
    if (pos < line.size() && line[pos] == '"') {
      const std::size_t close = line.find('"', pos + 1);
      const std::size_t stop = close == std::string_view::npos ? line.size() : close;
      cells.push_back(line.substr(pos + 1, stop - pos - 1));
      pos = line.find(',', stop);
    } else {
      const std::size_t comma = line.find(',', pos);
      cells.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos
                                                                       : comma - pos));
      pos = comma;
    }
    if (pos == std::string_view::npos) break;
    ++pos;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

CsvSampleReader::CsvSampleReader(std::istream& in) : in_(in) {
  if (!std::getline(in_, line_buf_)) {
    throw SchemaError("missing header row");
  }
  if (line_buf_.size() >= 3 && static_cast<unsigned char>(line_buf_[0]) == 0xEF) {
    line_buf_.erase(0, 3);  // UTF-8 BOM
  }
  split_csv(line_buf_, cells_);
  std::optional<std::size_t> ts_col;
  std::array<std::optional<std::size_t>, kNumSensors> found{};
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const std::string_view name = trim(cells_[i]);
    const std::string key = lower(name);
    if (key == "timestamp" || key == "time" || key == "datetime") {
      if (!ts_col) ts_col = i;
      continue;
    }
    if (auto s = parse_sensor(name); s && !found[index_of(*s)]) {
      found[index_of(*s)] = i;
    }
  }
  if (!ts_col) throw SchemaError("missing column 'timestamp'");
  timestamp_column_ = *ts_col;
  for (Sensor s : kAllSensors) {
    if (!found[index_of(s)]) {
      throw SchemaError("missing column '" + std::string(sensor_name(s)) + "'");
    }
    sensor_columns_[index_of(s)] = *found[index_of(s)];
  }
}

std::optional<RawSample> CsvSampleReader::next() {
  while (std::getline(in_, line_buf_)) {
    ++line_;
    if (trim(line_buf_).empty()) continue;
    ++report_.rows_read;
    split_csv(line_buf_, cells_);

    auto reject = [&](std::string message) {
      ++report_.rows_skipped;
      if (report_.errors.size() < ParseReport::kMaxRecordedErrors) {
        report_.errors.push_back({line_, std::move(message)});
      }
    };

    RawSample sample;
    if (timestamp_column_ >= cells_.size()) {
      reject("missing timestamp cell");
      continue;
    }
    try {
      sample.timestamp = parse_timestamp(cells_[timestamp_column_]);
    } catch (const ArgumentError& e) {
      reject(e.what());
      continue;
    }
    bool ok = true;
    for (Sensor s : kAllSensors) {
      const std::size_t col = sensor_columns_[index_of(s)];
      double v = 0.0;
      if (col >= cells_.size() || !parse_double(cells_[col], v)) {
        reject("non-numeric value in column '" + std::string(sensor_name(s)) + "'");
        ok = false;
        break;
      }
      if (!is_analog(s) && v != 0.0 && v != 1.0) {
        reject("digital column '" + std::string(sensor_name(s)) + "' outside {0,1}");
        ok = false;
        break;
      }
      sample.values[index_of(s)] = v;
    }
    if (!ok) continue;

    if (last_timestamp_ && sample.timestamp < *last_timestamp_) {
      ++report_.out_of_order;
    }
    last_timestamp_ = sample.timestamp;
    sample.seq_id = next_seq_++;
    return sample;
  }
  return std::nullopt;
}

ParsedStream parse_stream(std::istream& in) {
  CsvSampleReader reader(in);
  ParsedStream out;
  while (auto s = reader.next()) out.samples.push_back(*s);
  out.report = reader.report();
  return out;
}

EventSet::EventSet(std::vector<FailureEvent> events, Timestamp pre_window)
    : events_(std::move(events)), pre_window_(pre_window) {
  if (pre_window_ < 0) throw ConfigError("pre_window must be non-negative");
  for (const auto& e : events_) {
    if (e.label == ClassLabel::kNonFailure) {
      throw ConfigError("failure event cannot carry the NonFailure label");
    }
    if (!(e.start < e.end)) {
      throw ConfigError("failure event " + format_timestamp(e.start) + " .. " +
                        format_timestamp(e.end) + " must have start < end");
    }
  }
  std::sort(events_.begin(), events_.end(),
            [](const FailureEvent& a, const FailureEvent& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < events_.size(); ++i) {
    for (std::size_t j = i + 1; j < events_.size(); ++j) {
      const auto& a = events_[i];
      const auto& b = events_[j];
      if (a.start - pre_window_ <= b.end && b.start - pre_window_ <= a.end) {
        throw ConfigError("overlapping failure events after pre-window extension: " +
                          std::string(class_name(a.label)) + " [" + format_timestamp(a.start) +
                          ", " + format_timestamp(a.end) + "] and " +
                          std::string(class_name(b.label)) + " [" + format_timestamp(b.start) +
                          ", " + format_timestamp(b.end) + "]");
      }
    }
  }
  // Evaluation intervals, unioned.
  std::vector<std::pair<Timestamp, Timestamp>> raw;
  for (const auto& e : events_) {
    raw.emplace_back(start_of_day(day_index(e.start) - 1),
                     start_of_day(day_index(e.end) + 2) - 1);
  }
  std::sort(raw.begin(), raw.end());
  for (const auto& iv : raw) {
    if (!intervals_.empty() && iv.first <= intervals_.back().second + 1) {
      intervals_.back().second = std::max(intervals_.back().second, iv.second);
    } else {
      intervals_.push_back(iv);
    }
  }
}

ClassLabel EventSet::label_at(Timestamp t) const {
  for (const auto& e : events_) {
    if (t >= e.start - pre_window_ && t <= e.end) return e.label;
  }
  return ClassLabel::kNonFailure;
}

bool EventSet::in_evaluation_window(Timestamp t) const {
  for (const auto& [lo, hi] : intervals_) {
    if (t >= lo && t <= hi) return true;
  }
  return false;
}

EventSet metropt_events() {
  return EventSet({
      {ClassLabel::kAirLeakDryer, parse_timestamp("28-02-22 21:53"),
       parse_timestamp("01-03-22 02:00")},
      {ClassLabel::kAirLeakClient, parse_timestamp("23-03-22 14:54"),
       parse_timestamp("23-03-22 15:24")},
      {ClassLabel::kOilLeakCompressor, parse_timestamp("30-05-22 12:00"),
       parse_timestamp("02-06-22 06:18")},
  });
}

EventSet parse_events_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("events file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("events file must hold a JSON object");
  Timestamp pre = EventSet::kDefaultPreWindow;
  std::vector<FailureEvent> events;
  for (const auto& [key, value] : doc.items()) {
    if (key == "pre_window_seconds") {
      if (!value.is_number_integer()) throw ConfigError("pre_window_seconds must be an integer");
      pre = value.get<Timestamp>();
    } else if (key == "events") {
      if (!value.is_array()) throw ConfigError("'events' must be an array");
      for (const auto& item : value) {
        if (!item.is_object()) throw ConfigError("event entries must be objects");
        FailureEvent e;
        bool has_label = false, has_start = false, has_end = false;
        for (const auto& [k, v] : item.items()) {
          if (!v.is_string()) throw ConfigError("event field '" + k + "' must be a string");
          const auto s = v.get<std::string>();
          if (k == "label") {
            auto c = parse_class(s);
            if (!c) throw ConfigError("unknown class label '" + s + "'");
            e.label = *c;
            has_label = true;
          } else if (k == "start") {
            e.start = parse_timestamp(s);
            has_start = true;
          } else if (k == "end") {
            e.end = parse_timestamp(s);
            has_end = true;
          } else {
            throw ConfigError("unknown event field '" + k + "'");
          }
        }
        if (!has_label || !has_start || !has_end) {
          throw ConfigError("event entries need label, start and end");
        }
        events.push_back(e);
      }
    } else {
      throw ConfigError("unknown key '" + key + "' in events file");
    }
  }
  return EventSet(std::move(events), pre);
}

EventSet load_events(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open events file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_events_json(buf.str());
}

LabeledSample label_sample(const RawSample& s, const EventSet& events) {
  return {s, events.label_at(s.timestamp)};
}

std::vector<RawSample> filter_evaluation_window(const std::vector<RawSample>& stream,
                                                const EventSet& events) {
  std::vector<RawSample> out;
  for (const auto& s : stream) {
    if (events.in_evaluation_window(s.timestamp)) out.push_back(s);
  }
  return out;
}

std::optional<DownsampleMode> parse_downsample_mode(std::string_view s) {
  if (s == "stride") return DownsampleMode::kStride;
  if (s == "random") return DownsampleMode::kRandom;
  return std::nullopt;
}

std::string_view downsample_mode_name(DownsampleMode m) {
  return m == DownsampleMode::kStride ? "stride" : "random";
}

Downsampler::Downsampler(std::uint64_t factor, DownsampleMode mode, std::uint64_t seed)
    : factor_(factor), mode_(mode), seed_(seed) {
  if (factor_ == 0) throw ArgumentError("downsample factor must be >= 1");
}

bool Downsampler::keep(std::uint64_t seq_id) const {
  if (factor_ == 1) return true;
  if (mode_ == DownsampleMode::kStride) return seq_id % factor_ == 0;
  const std::uint64_t h = mix64(mix64(seed_) ^ seq_id);
  return h < std::numeric_limits<std::uint64_t>::max() / factor_;
}

std::vector<RawSample> downsample(const std::vector<RawSample>& stream, std::uint64_t factor,
                                  DownsampleMode mode, std::uint64_t seed) {
  const Downsampler ds(factor, mode, seed);
  std::vector<RawSample> out;
  for (const auto& s : stream) {
    if (ds.keep(s.seq_id)) out.push_back(s);
  }
  return out;
}

}  // namespace pdm
