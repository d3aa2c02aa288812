#include "pdm/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "pdm/error.hpp"

namespace pdm {
namespace {

FeatureName tree_feature_name(const HoeffdingTree& tree, const FeatureVector& fv,
                              std::size_t feature) {
  const auto& schema = tree.schema() ? tree.schema() : fv.schema;
  if (!schema) throw IntegrityError("tree feature has no name: neither tree nor vector carries a schema");
  if (feature >= schema->size()) {
    throw IntegrityError("tree tests feature index " + std::to_string(feature) +
                         " beyond its schema");
  }
  return (*schema)[feature];
}

double feature_value(const FeatureVector& fv, const FeatureName& name, std::size_t index) {
  if (!fv.schema) {
    if (index >= fv.values.size()) {
      throw IntegrityError("feature " + to_string(name) + " is absent from the vector");
    }
    return fv.values[index];
  }
  const auto at = fv.schema->index_of(name);
  if (!at || *at >= fv.values.size()) {
    throw IntegrityError("feature " + to_string(name) + " is absent from the vector");
  }
  return fv.values[*at];
}

template <class Key, class NameFn>
std::vector<RankedItem> top_items(const std::map<Key, std::size_t>& tally, NameFn name,
                                  std::size_t limit) {
  std::vector<RankedItem> items;
  for (const auto& [key, n] : tally) items.push_back({std::string(name(key)), n});
  std::sort(items.begin(), items.end(), [](const RankedItem& a, const RankedItem& b) {
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    return a.name < b.name;
  });
  if (items.size() > limit) items.resize(limit);
  return items;
}

nlohmann::json ranked_json(const std::vector<RankedItem>& items) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& i : items) out.push_back({{"name", i.name}, {"frequency", i.frequency}});
  return out;
}

std::string join_labels(const std::vector<RankedItem>& items,
                        std::string_view (*label)(std::string_view)) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += label(items[i].name);
  }
  return out;
}

std::string_view window_display(std::string_view name) {
  const auto w = parse_window(name);
  return w ? window_label(*w) : name;
}

std::string_view metric_display(std::string_view name) {
  const auto m = parse_metric(name);
  return m ? metric_label(*m) : name;
}

std::string_view identity(std::string_view s) { return s; }

std::string html_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::vector<PathFeature> decision_path_features(const HoeffdingTree& tree,
                                                const FeatureVector& fv) {
  std::vector<PathFeature> out;
  const HoeffdingTree::Node* node = tree.root();
  while (node && !node->is_leaf()) {
    const FeatureName name = tree_feature_name(tree, fv, node->feature());
    const double v = feature_value(fv, name, node->feature());
    if (v > node->threshold()) {
      auto it = std::find_if(out.begin(), out.end(),
                             [&](const PathFeature& p) { return p.feature == name; });
      if (it == out.end()) {
        out.push_back({name, 1});
      } else {
        ++it->frequency;
      }
      node = node->right();
    } else {
      node = node->left();
    }
  }
  return out;
}

void rank_path_features(std::vector<PathFeature>& features) {
  std::sort(features.begin(), features.end(), [](const PathFeature& a, const PathFeature& b) {
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    return to_string(a.feature) < to_string(b.feature);
  });
}

std::vector<PathFeature> top_relevant_features(const Classifier& model, const FeatureVector& fv,
                                               std::size_t n_estimators, std::size_t limit) {
  const ModelFamily f = model.family();
  if (f != ModelFamily::kHtc && f != ModelFamily::kHatc && f != ModelFamily::kArfc) {
    throw UnsupportedModelError("explanations need a tree-based model, not " +
                                std::string(family_name(f)));
  }
  const auto trees = model.explanation_trees(n_estimators == 0 ? SIZE_MAX : n_estimators);
  std::map<FeatureName, std::size_t> merged;
  for (const HoeffdingTree* t : trees) {
    for (const auto& p : decision_path_features(*t, fv)) merged[p.feature] += p.frequency;
  }
  std::vector<PathFeature> out;
  for (const auto& [name, n] : merged) out.push_back({name, n});
  rank_path_features(out);
  if (out.size() > limit) out.resize(limit);
  return out;
}

void FeatureTally::add(std::span<const PathFeature> features) {
  for (const auto& p : features) counts_[p.feature] += p.frequency;
}

nlohmann::json ModelSummary::to_json() const {
  return {{"top_windows", ranked_json(top_windows)},
          {"top_metrics", ranked_json(top_metrics)},
          {"top_sensors", ranked_json(top_sensors)},
          {"windows_equal", windows_equal}};
}

ModelSummary model_summary(const FeatureTally& tally, std::size_t limit) {
  std::map<WindowKind, std::size_t> windows;
  std::map<Metric, std::size_t> metrics;
  std::map<Sensor, std::size_t> sensors;
  for (const auto& [name, n] : tally.counts()) {
    // re-validate the triple; a raw metric must come without a window
    parse_feature_name(to_string(name));
    if (name.window != WindowKind::kNone) windows[name.window] += n;
    metrics[name.metric] += n;
    sensors[name.sensor] += n;
  }
  ModelSummary s;
  s.top_windows = top_items(windows, window_name, limit);
  s.top_metrics = top_items(metrics, metric_name, limit);
  s.top_sensors = top_items(sensors, sensor_name, limit);
  s.windows_equal = windows.size() == kWindowKinds.size() &&
                    std::all_of(windows.begin(), windows.end(), [&](const auto& kv) {
                      return kv.second == windows.begin()->second;
                    });
  return s;
}

nlohmann::json AnomalyConfig::to_json() const {
  nlohmann::json names = nlohmann::json::array();
  for (Sensor s : sensors) names.push_back(sensor_name(s));
  return {{"pattern_sigmas", pattern_sigmas},
          {"value_iqr_factor", value_iqr_factor},
          {"std_floor", std_floor},
          {"pattern_report_seconds", pattern_report_seconds},
          {"value_report_seconds", value_report_seconds},
          {"sensors", names}};
}

AnomalyConfig AnomalyConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("anomaly settings must be an object");
  AnomalyConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "pattern_sigmas") {
        c.pattern_sigmas = v.get<double>();
      } else if (key == "value_iqr_factor") {
        c.value_iqr_factor = v.get<double>();
      } else if (key == "std_floor") {
        c.std_floor = v.get<double>();
      } else if (key == "pattern_report_seconds") {
        c.pattern_report_seconds = v.get<Timestamp>();
      } else if (key == "value_report_seconds") {
        c.value_report_seconds = v.get<Timestamp>();
      } else if (key == "sensors") {
        c.sensors.clear();
        for (const auto& s : v) {
          const auto sensor = parse_sensor(s.get<std::string>());
          if (!sensor) throw ConfigError("unknown sensor '" + s.get<std::string>() + "'");
          c.sensors.push_back(*sensor);
        }
      } else {
        throw ConfigError("unknown key '" + key + "' in anomaly settings");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad anomaly setting: ") + e.what());
  }
  return c;
}

AnomalyTracker::AnomalyTracker(AnomalyConfig config) : config_(std::move(config)) {}

void AnomalyTracker::Moments::push(double x, std::size_t length) {
  if (ring.size() != length) {
    ring.assign(length, 0.0);
    head = size = 0;
    shift = x;
    sum = sumsq = 0.0;
  }
  const double d = x - shift;
  if (size == length) {
    const double old = ring[head] - shift;
    sum -= old;
    sumsq -= old * old;
  } else {
    ++size;
  }
  ring[head] = x;
  head = (head + 1) % length;
  sum += d;
  sumsq += d * d;
  if (++since_resync >= 4 * length) {
    since_resync = 0;
    shift = x;
    sum = sumsq = 0.0;
    for (std::size_t i = 0; i < size; ++i) {
      const double v = ring[(head + length - size + i) % length] - shift;
      sum += v;
      sumsq += v * v;
    }
  }
}

double AnomalyTracker::Moments::mean() const {
  return size == 0 ? 0.0 : shift + sum / static_cast<double>(size);
}

double AnomalyTracker::Moments::population_std() const {
  if (size == 0) return 0.0;
  const double n = static_cast<double>(size);
  const double m = sum / n;
  return std::sqrt(std::max(0.0, sumsq / n - m * m));
}

const AnomalyReport& AnomalyTracker::update(const FeatureEngine& engine, const RawSample& sample) {
  const Timestamp t = sample.timestamp;
  const std::size_t length = engine.spec().w_avg;
  for (Sensor s : config_.sensors) moments_[index_of(s)].push(sample.value(s), length);
  if (!engine.ready()) return report_;
  if (!first_) first_ = t;
  report_.stream_age = t - *first_ + 1;
  for (Sensor s : config_.sensors) {
    const std::size_t i = index_of(s);
    const SlidingWindow& w = engine.window(s, WindowKind::kAvg);
    const Moments& mo = moments_[i];
    const double x = sample.value(s);

    const double sd = std::max(mo.population_std(), config_.std_floor);
    const bool pattern = std::fabs(x - mo.mean()) > config_.pattern_sigmas * sd;
    const double q1 = w.quartile(1);
    const double q3 = w.quartile(3);
    const double fence = config_.value_iqr_factor * (q3 - q1);
    const bool value = x < q1 - fence || x > q3 + fence;

    auto track = [&](bool on, bool& active, Timestamp& start, Timestamp& seconds) {
      if (!on) {
        active = false;
        seconds = 0;
        return;
      }
      if (!active) start = t;
      active = true;
      seconds = std::min(t - start + 1, report_.stream_age);
    };
    track(pattern, pattern_on_[i], pattern_start_[i], report_.sensors[i].pattern_seconds);
    track(value, value_on_[i], value_start_[i], report_.sensors[i].value_seconds);
  }
  return report_;
}

nlohmann::json Explanation::to_json(const AnomalyConfig& config) const {
  nlohmann::json top = nlohmann::json::array();
  for (const auto& p : top_features) {
    top.push_back({{"sensor", sensor_name(p.feature.sensor)},
                   {"metric", metric_name(p.feature.metric)},
                   {"window", window_name(p.feature.window)},
                   {"frequency", p.frequency}});
  }
  nlohmann::json found = nlohmann::json::array();
  for (Sensor s : config.sensors) {
    const auto& a = anomalies.sensors[index_of(s)];
    if (a.pattern_seconds > 0) {
      found.push_back(
          {{"sensor", sensor_name(s)}, {"kind", "pattern"}, {"seconds", a.pattern_seconds}});
    }
    if (a.value_seconds > 0) {
      found.push_back(
          {{"sensor", sensor_name(s)}, {"kind", "value"}, {"seconds", a.value_seconds}});
    }
  }
  return {{"seq_id", seq_id},
          {"predicted", class_name(predicted)},
          {"true", class_name(truth)},
          {"top_features", top},
          {"model_summary", summary.to_json()},
          {"anomalies", found},
          {"text", text}};
}

std::string_view default_explanation_template() {
  return "For sample {{sample}}, the five most representative features are:\n"
         "{{features}}\n"
         "\n"
         "The most representative parameters for the ML model are:\n"
         "{{model_summary}}\n"
         "\n"
         "Given sensors with\n"
         "{{anomalies}}\n"
         "then the prediction is that\n"
         "    {{prediction}}.\n";
}

std::string render_explanation(const Explanation& e, const AnomalyConfig& config,
                               std::string_view tmpl) {
  std::string features;
  if (e.top_features.empty()) {
    features = "    (no feature took a greater-than branch on the decision path)";
  }
  for (std::size_t i = 0; i < e.top_features.size(); ++i) {
    if (i) features += '\n';
    features += "    " + std::to_string(i + 1) + ". " + describe(e.top_features[i].feature);
  }

  std::string summary = "    Sliding windows: ";
  if (e.summary.windows_equal) {
    summary += "four sliding windows contribute equally.";
  } else if (e.summary.top_windows.empty()) {
    summary += "none.";
  } else {
    summary += join_labels(e.summary.top_windows, window_display) + ".";
  }
  summary += "\n    Signal Pre-Processing Technique: ";
  summary += e.summary.top_metrics.empty() ? std::string("none")
                                           : join_labels(e.summary.top_metrics, metric_display);
  summary += ".\n    Sensors: ";
  summary += e.summary.top_sensors.empty() ? std::string("none")
                                           : join_labels(e.summary.top_sensors, identity);
  summary += ".";

  std::string patterns, values;
  for (Sensor s : config.sensors) {
    const auto& a = e.anomalies.sensors[index_of(s)];
    if (a.pattern_seconds > config.pattern_report_seconds) {
      patterns += "\n    -  " + std::string(sensor_name(s)) + " (> " +
                  std::to_string(a.pattern_seconds / 60) + " minutes)";
    }
    if (a.value_seconds > config.value_report_seconds) {
      values += "\n    -  " + std::string(sensor_name(s)) + " (> " +
                std::to_string(a.value_seconds / 60) + " minutes)";
    }
  }
  std::string anomalies;
  if (patterns.empty() && values.empty()) {
    anomalies = "    no sensors with abnormal behavior";
  } else {
    anomalies = "    abnormal patterns:" + (patterns.empty() ? std::string(" none") : patterns) +
                "\nand anomalous values:" + (values.empty() ? std::string(" none") : values);
  }

  const std::map<std::string, std::string, std::less<>> fields{
      {"sample", std::to_string(e.seq_id)},
      {"features", features},
      {"model_summary", summary},
      {"anomalies", anomalies},
      {"prediction", std::string(class_phrase(e.predicted))}};

  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) {
      throw TemplateError("unterminated placeholder at offset " + std::to_string(open));
    }
    out.append(tmpl.substr(pos, open - pos));
    const auto key = tmpl.substr(open + 2, close - open - 2);
    const auto it = fields.find(key);
    if (it == fields.end()) throw TemplateError("unknown placeholder '" + std::string(key) + "'");
    out += it->second;
    pos = close + 2;
  }
  return out;
}

nlohmann::json join_record(const PredictionRecord& r, const nlohmann::json* explanation) {
  nlohmann::json j = r.to_json();
  if (explanation && !explanation->is_null()) j["explanation"] = *explanation;
  return j;
}

std::string render_report_html(const ReportInput& input) {
  std::ostringstream h;
  h << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>" << html_escape(input.title)
    << "</title>\n<style>body{font-family:sans-serif;margin:2em;max-width:1100px}"
       "table{border-collapse:collapse}td,th{border:1px solid #999;padding:4px 8px;"
       "text-align:right}th{background:#eee}pre{background:#f6f6f6;padding:1em}"
       ".abn{fill:#f4c7c3}</style></head><body>\n";
  h << "<h1>" << html_escape(input.title) << "</h1>\n";

  const auto& s = input.summary;
  if (s.contains("metrics") && s["metrics"].is_object() && s["metrics"].contains("accuracy")) {
    const auto& m = s["metrics"];
    h << "<h2>Online failure detection results</h2>\n<table><tr><th>Model</th>"
         "<th>Accuracy (%)</th><th>Macro F (%)</th>";
    for (auto c : kAllClasses) h << "<th>F " << class_name(c) << " (%)</th>";
    h << "<th>Runtime (s)</th><th>Samples/s</th></tr>\n<tr><td>"
      << html_escape(s.value("model", std::string("model"))) << "</td><td>"
      << fmt("%.2f", 100.0 * m["accuracy"].get<double>()) << "</td><td>"
      << fmt("%.2f", 100.0 * m["macro_f"].get<double>()) << "</td>";
    for (auto c : kAllClasses) {
      h << "<td>" << fmt("%.2f", 100.0 * m["per_class_f"][std::string(class_name(c))].get<double>())
        << "</td>";
    }
    h << "<td>" << fmt("%.2f", m["wall_seconds"].get<double>()) << "</td><td>"
      << fmt("%.1f", m["throughput"].get<double>()) << "</td></tr></table>\n";
  } else {
    h << "<p>No samples were evaluated.</p>\n";
  }
  h << "<h2>Run summary</h2>\n<pre>" << html_escape(s.dump(2)) << "</pre>\n";

  h << "<h2>Explanation examples</h2>\n";
  std::set<std::string> shown;
  for (const auto& e : input.explanations) {
    if (!e.is_object() || !e.contains("text")) continue;
    const auto cls = e.at("predicted").get<std::string>();
    if (!shown.insert(cls).second) continue;
    h << "<h3>Predicted " << html_escape(cls) << "</h3>\n<pre>"
      << html_escape(e.at("text").get<std::string>()) << "</pre>\n";
  }
  if (shown.empty()) h << "<p>No explanations were produced for this run.</p>\n";

  for (const auto& t : input.traces) {
    if (t.values.empty()) continue;
    constexpr double kW = 1000, kH = 240, kPad = 30;
    const auto [lo_it, hi_it] = std::minmax_element(t.values.begin(), t.values.end());
    const double lo = *lo_it, hi = *hi_it > *lo_it ? *hi_it : *lo_it + 1.0;
    const double n = static_cast<double>(std::max<std::size_t>(t.values.size() - 1, 1));
    auto px = [&](std::size_t i) { return kPad + (kW - 2 * kPad) * static_cast<double>(i) / n; };
    auto py = [&](double v) { return kH - kPad - (kH - 2 * kPad) * (v - lo) / (hi - lo); };
    h << "<h2>" << html_escape(t.feature) << "</h2>\n<svg width=\"" << kW << "\" height=\"" << kH
      << "\" xmlns=\"http://www.w3.org/2000/svg\">\n";
    for (std::size_t i = 0; i < t.values.size();) {
      if (t.truth[i] == ClassLabel::kNonFailure) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j + 1 < t.values.size() && t.truth[j + 1] != ClassLabel::kNonFailure) ++j;
      h << "<rect class=\"abn\" x=\"" << fmt("%.1f", px(i)) << "\" y=\"" << kPad << "\" width=\""
        << fmt("%.1f", std::max(px(j) - px(i), 1.0)) << "\" height=\"" << kH - 2 * kPad
        << "\"/>\n";
      i = j + 1;
    }
    h << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1\" points=\"";
    for (std::size_t i = 0; i < t.values.size(); ++i) {
      h << fmt("%.1f", px(i)) << ',' << fmt("%.1f", py(t.values[i])) << ' ';
    }
    h << "\"/>\n<text x=\"" << kPad << "\" y=\"" << kPad - 8 << "\" font-size=\"12\">max "
      << fmt("%.4g", hi) << "</text>\n<text x=\"" << kPad << "\" y=\"" << kH - 8
      << "\" font-size=\"12\">min " << fmt("%.4g", lo)
      << " (shaded: failure periods, white: normal operation)</text>\n</svg>\n";
  }
  h << "</body></html>\n";
  return h.str();
}

void emit_report(const ReportInput& input, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());

  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("records.jsonl");
    for (std::size_t i = 0; i < input.records.size(); ++i) {
      const nlohmann::json* e = i < input.explanations.size() ? &input.explanations[i] : nullptr;
      out << join_record(input.records[i], e).dump() << '\n';
    }
    if (!out) throw IoError("failed writing records.jsonl");
  }
  {
    auto out = open("summary.json");
    out << input.summary.dump(2) << '\n';
  }
  {
    auto out = open("report.html");
    out << render_report_html(input);
    if (!out) throw IoError("failed writing report.html");
  }
}

}  // namespace pdm
