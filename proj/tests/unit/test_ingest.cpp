#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

#include "pdm/error.hpp"
#include "pdm/ingest.hpp"
#include "pdm/synthetic.hpp"

using namespace pdm;

namespace {

std::string header() {
  std::string h = "timestamp";
  for (Sensor s : kAllSensors) h += "," + std::string(sensor_name(s));
  return h + "\n";
}

std::string row(const std::string& ts, double analog, int digital) {
  std::string r = ts;
  for (std::size_t i = 0; i < kNumSensors; ++i) {
    r += ",";
    r += i < kNumAnalogSensors ? std::to_string(analog) : std::to_string(digital);
  }
  return r + "\n";
}

std::size_t count_label(const EventSet& ev, Timestamp from, Timestamp to, ClassLabel c) {
  std::size_t n = 0;
  for (Timestamp t = from; t <= to; ++t) n += ev.label_at(t) == c;
  return n;
}

}  // namespace

TEST_CASE("csv reader assigns sequence ids to accepted rows only") {
  std::stringstream in(header() + row("2022-02-01 00:00:00", 1.5, 1) +
                       row("2022-02-01 00:00:01", 2.5, 0) + "2022-02-01 00:00:02,oops\n" +
                       row("2022-02-01 00:00:03", 3.5, 2) + row("2022-02-01 00:00:04", 4.5, 1));
  const ParsedStream p = parse_stream(in);
  REQUIRE(p.samples.size() == 3);
  CHECK(p.samples[0].seq_id == 0);
  CHECK(p.samples[2].seq_id == 2);
  CHECK(p.samples[2].value(Sensor::kTp2) == doctest::Approx(4.5));
  CHECK(p.report.rows_read == 5);
  CHECK(p.report.rows_skipped == 2);
  REQUIRE(p.report.errors.size() == 2);
  CHECK(p.report.errors[0].row == 4);
}

TEST_CASE("csv reader counts out-of-order timestamps without dropping them") {
  std::stringstream in(header() + row("2022-02-01 00:00:05", 1, 1) + row("2022-02-01 00:00:01", 1, 1) +
                       row("2022-02-01 00:00:06", 1, 1));
  const ParsedStream p = parse_stream(in);
  CHECK(p.samples.size() == 3);
  CHECK(p.report.out_of_order == 1);
}

TEST_CASE("csv reader rejects a header without every signal") {
  std::stringstream in("timestamp,TP2,TP3\n2022-02-01 00:00:00,1,2\n");
  CHECK_THROWS_AS(CsvSampleReader{in}, SchemaError);
  std::stringstream no_time("TP2\n1\n");
  CHECK_THROWS_AS(CsvSampleReader{no_time}, SchemaError);
}

TEST_CASE("failure reports label the two hours before each event") {
  const EventSet ev = metropt_events();
  const Timestamp start = parse_timestamp("2022-02-28 21:53:00");
  CHECK(ev.label_at(start - 7200) == ClassLabel::kAirLeakDryer);
  CHECK(ev.label_at(start - 7201) == ClassLabel::kNonFailure);
  CHECK(ev.label_at(parse_timestamp("2022-03-01 02:00:00")) == ClassLabel::kAirLeakDryer);
  CHECK(ev.label_at(parse_timestamp("2022-03-01 02:00:01")) == ClassLabel::kNonFailure);

  const Timestamp day0 = parse_timestamp("2022-02-27 00:00:00");
  const Timestamp day_end = parse_timestamp("2022-03-02 23:59:59");
  CHECK(count_label(ev, day0, day_end, ClassLabel::kAirLeakDryer) == 22021);
  CHECK(count_label(ev, parse_timestamp("2022-03-22 00:00:00"),
                    parse_timestamp("2022-03-24 23:59:59"), ClassLabel::kAirLeakClient) == 9001);
}

TEST_CASE("evaluation window spans the day before to the day after each event") {
  const EventSet ev = metropt_events();
  CHECK(ev.in_evaluation_window(parse_timestamp("2022-02-27 00:00:00")));
  CHECK_FALSE(ev.in_evaluation_window(parse_timestamp("2022-02-26 23:59:59")));
  CHECK(ev.in_evaluation_window(parse_timestamp("2022-03-02 23:59:59")));
  CHECK_FALSE(ev.in_evaluation_window(parse_timestamp("2022-03-03 00:00:00")));
  CHECK(ev.in_evaluation_window(parse_timestamp("2022-06-03 12:00:00")));
  CHECK(ev.evaluation_intervals().size() == 3);
}

TEST_CASE("overlapping events are rejected with both events named") {
  const Timestamp t = parse_timestamp("2022-03-01 10:00:00");
  try {
    EventSet({{ClassLabel::kAirLeakDryer, t, t + 3600},
              {ClassLabel::kAirLeakClient, t + 7200, t + 9000}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("AirLeakDryer") != std::string::npos);
    CHECK(msg.find("AirLeakClient") != std::string::npos);
  }
  CHECK_NOTHROW(EventSet({{ClassLabel::kAirLeakDryer, t, t + 3600},
                          {ClassLabel::kAirLeakClient, t + 3600 + 7201, t + 20000}}));
}

TEST_CASE("events JSON rejects unknown keys and round-trips") {
  const auto o = default_synthetic_options();
  const EventSet ev = parse_events_json(events_json(o.events, 3600));
  CHECK(ev.pre_window() == 3600);
  REQUIRE(ev.events().size() == 3);
  CHECK(ev.events()[0].label == ClassLabel::kAirLeakDryer);
  CHECK_THROWS_AS(parse_events_json(R"({"events": [], "colour": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_events_json(R"({"events": [{"label": "X", "start": "2022-01-01 00:00", "end": "2022-01-02 00:00"}]})"),
                  ConfigError);
}

TEST_CASE("labelling and evaluation-window filtering commute") {
  auto o = default_synthetic_options();
  o.duration = kSecondsPerDay * 5;
  std::vector<RawSample> stream;
  std::mt19937_64 rng(7);
  for (Timestamp t = o.start; t < o.start + o.duration; t += 1 + static_cast<Timestamp>(rng() % 97)) {
    RawSample s;
    s.seq_id = stream.size();
    s.timestamp = t;
    stream.push_back(s);
  }
  const EventSet ev(o.events);
  std::vector<LabeledSample> a;
  for (const auto& s : filter_evaluation_window(stream, ev)) a.push_back(label_sample(s, ev));
  std::vector<LabeledSample> b;
  for (const auto& s : stream) {
    auto l = label_sample(s, ev);
    if (ev.in_evaluation_window(l.sample.timestamp)) b.push_back(l);
  }
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].sample.seq_id == b[i].sample.seq_id);
    CHECK(a[i].label == b[i].label);
  }
}

TEST_CASE("stride downsampling keeps every factor-th sequence id") {
  std::vector<RawSample> stream(1000);
  for (std::size_t i = 0; i < stream.size(); ++i) stream[i].seq_id = i;
  const auto kept = downsample(stream, 50, DownsampleMode::kStride);
  REQUIRE(kept.size() == 20);
  for (std::size_t i = 0; i < kept.size(); ++i) CHECK(kept[i].seq_id == 50 * i);
  CHECK(downsample(stream, 1, DownsampleMode::kStride).size() == 1000);
  CHECK_THROWS_AS(Downsampler(0, DownsampleMode::kStride), ArgumentError);
}

TEST_CASE("random downsampling decisions depend only on seed and sequence id") {
  std::vector<RawSample> stream(200000);
  for (std::size_t i = 0; i < stream.size(); ++i) stream[i].seq_id = i;
  const auto a = downsample(stream, 500, DownsampleMode::kRandom, 11);
  const auto b = downsample(stream, 500, DownsampleMode::kRandom, 11);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].seq_id == b[i].seq_id);
  // roughly 1 in 500 survives
  CHECK(a.size() > 300);
  CHECK(a.size() < 500);

  std::vector<RawSample> odd;
  for (const auto& s : stream)
    if (s.seq_id % 2) odd.push_back(s);
  std::set<std::uint64_t> from_full;
  for (const auto& s : a)
    if (s.seq_id % 2) from_full.insert(s.seq_id);
  std::set<std::uint64_t> from_subset;
  for (const auto& s : downsample(odd, 500, DownsampleMode::kRandom, 11)) from_subset.insert(s.seq_id);
  CHECK(from_full == from_subset);

  const auto other = downsample(stream, 500, DownsampleMode::kRandom, 12);
  bool differs = other.size() != a.size();
  for (std::size_t i = 0; !differs && i < a.size(); ++i) differs = a[i].seq_id != other[i].seq_id;
  CHECK(differs);
}
