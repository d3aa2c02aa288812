#include "pdm/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include <json.hpp>

namespace pdm {
namespace {

struct Effect {
  double period = 1.0;
  double flow = 0.0;
  double h1 = 0.0;
  double tp3 = 0.0;
  double oil_temp = 0.0;
  double motor = 0.0;
  bool oil_level_low = false;
};

Effect failure_effect(const SyntheticOptions& o, Timestamp t) {
  Effect e;
  for (const auto& ev : o.events) {
    const Timestamp from = ev.start - o.pre_window;
    if (t < from || t > ev.end) continue;
    const double f =
        0.3 + 0.7 * static_cast<double>(t - from) / static_cast<double>(std::max<Timestamp>(ev.end - from, 1));
    switch (ev.label) {
      case ClassLabel::kAirLeakDryer:
        e.period = 1.0 - 0.5 * f;
        e.h1 = 2.0 * f;
        e.flow = 5.0 * f;
        break;
      case ClassLabel::kAirLeakClient:
        e.period = 1.0 - 0.6 * f;
        e.flow = 15.0 * f;
        e.tp3 = -0.3 * f;
        break;
      case ClassLabel::kOilLeakCompressor:
        e.period = 1.0 - 0.2 * f;
        e.oil_temp = 10.0 * f;
        e.motor = 1.2 * f;
        e.oil_level_low = f > 0.5;
        break;
      case ClassLabel::kNonFailure:
        break;
    }
  }
  return e;
}

}  // namespace

SyntheticOptions default_synthetic_options() {
  SyntheticOptions o;
  o.start = parse_timestamp("2022-02-01 00:00:00");
  o.events = {
      {ClassLabel::kAirLeakDryer, parse_timestamp("2022-02-03 10:00:00"),
       parse_timestamp("2022-02-03 12:00:00")},
      {ClassLabel::kOilLeakCompressor, parse_timestamp("2022-02-04 02:00:00"),
       parse_timestamp("2022-02-04 06:00:00")},
      {ClassLabel::kAirLeakClient, parse_timestamp("2022-02-04 15:00:00"),
       parse_timestamp("2022-02-04 15:30:00")},
  };
  return o;
}

std::vector<RawSample> synthetic_stream(const SyntheticOptions& o) {
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<RawSample> out;
  out.reserve(static_cast<std::size_t>(o.duration));

  double phase = 0.0, period = o.cycle_seconds, level = 1.0;
  bool towers = false;
  for (Timestamp k = 0; k < o.duration; ++k) {
    const Timestamp t = o.start + k;
    const Effect e = failure_effect(o, t);
    if (k == 0 || phase >= period) {
      phase = 0.0;
      period = std::max(20.0, o.cycle_seconds * (1.0 + o.cycle_jitter * unit(rng)) * e.period);
      level = 1.0 + 0.03 * unit(rng);
      towers = !towers;
    }
    const double load_len = 0.3 * period;
    const bool loading = phase < load_len;
    const double u = loading ? phase / load_len : 1.0;
    const double v = loading ? 0.0 : (phase - load_len) / (period - load_len);

    RawSample s;
    s.seq_id = static_cast<std::uint64_t>(k);
    s.timestamp = t;
    auto set = [&](Sensor sensor, double x) { s.values[index_of(sensor)] = x; };
    const double reservoirs = loading ? 8.3 + 1.75 * u * level : 8.3 + 1.75 * level * (1.0 - v);
    set(Sensor::kTp2, loading ? 8.3 + 1.8 * u * level : 10.1 * level * std::exp(-8.0 * v));
    set(Sensor::kReservoirs, reservoirs);
    set(Sensor::kTp3, reservoirs + 0.02 + e.tp3);
    set(Sensor::kH1, (loading ? 0.2 + 0.3 * u : 9.5 - 1.2 * v) + e.h1);
    set(Sensor::kDvPressure, loading ? 0.01 : 2.0 * std::exp(-12.0 * v));
    set(Sensor::kOilTemperature,
        (loading ? 58.0 + 10.0 * u * level : 58.0 + 10.0 * level * (1.0 - v)) + e.oil_temp);
    set(Sensor::kMc, (loading ? 5.5 + 0.5 * u : 0.04) + (loading ? e.motor : 0.0));
    set(Sensor::kFlowmeter, (loading ? 18.0 + 2.0 * u : 17.5) + e.flow);
    set(Sensor::kComp, loading ? 0.0 : 1.0);
    set(Sensor::kDvElectric, loading ? 1.0 : 0.0);
    set(Sensor::kTowers, towers ? 1.0 : 0.0);
    set(Sensor::kMpg, loading ? 1.0 : 0.0);
    set(Sensor::kLps, 0.0);
    set(Sensor::kPressureSwitch, 1.0);
    set(Sensor::kOilLevel, e.oil_level_low ? 0.0 : 1.0);
    set(Sensor::kCaudalImpulses, loading ? 1.0 : 0.0);
    out.push_back(s);
    phase += 1.0;
  }
  return out;
}

void write_csv(std::ostream& out, const std::vector<RawSample>& samples) {
  out << ",timestamp";
  for (Sensor s : kAllSensors) out << ',' << sensor_name(s);
  out << '\n';
  char buf[32];
  for (const auto& s : samples) {
    std::string ts = format_timestamp(s.timestamp);
    ts[10] = ' ';
    out << s.seq_id << ',' << ts;
    for (double v : s.values) {
      std::snprintf(buf, sizeof buf, ",%.6g", v);
      out << buf;
    }
    out << '\n';
  }
}

void write_synthetic_csv(std::ostream& out, const SyntheticOptions& options) {
  write_csv(out, synthetic_stream(options));
}

std::string events_json(const std::vector<FailureEvent>& events, Timestamp pre_window) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& e : events) {
    list.push_back({{"label", class_name(e.label)},
                    {"start", format_timestamp(e.start)},
                    {"end", format_timestamp(e.end)}});
  }
  return nlohmann::json{{"pre_window_seconds", pre_window}, {"events", list}}.dump(2);
}

}  // namespace pdm
