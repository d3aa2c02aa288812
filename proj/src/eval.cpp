#include "pdm/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

#include "pdm/error.hpp"

namespace pdm {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

nlohmann::json score_json(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

}  // namespace

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t n = 0;
  for (const auto& row : counts)
    for (auto c : row) n += c;
  return n;
}

std::uint64_t ConfusionMatrix::correct() const {
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < kNumClasses; ++i) n += counts[i][i];
  return n;
}

FMeasure compute_fmeasure(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) throw ArgumentError("confusion matrix is empty");
  FMeasure f;
  std::uint64_t tp_sum = 0, fp_sum = 0, fn_sum = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::uint64_t tp = cm.counts[c][c], fp = 0, fn = 0;
    for (std::size_t o = 0; o < kNumClasses; ++o) {
      if (o == c) continue;
      fp += cm.counts[o][c];
      fn += cm.counts[c][o];
    }
    tp_sum += tp;
    fp_sum += fp;
    fn_sum += fn;
    const double p = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double r = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    f.per_class[c] = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    f.macro += f.per_class[c];
  }
  f.macro /= static_cast<double>(kNumClasses);
  const double p = static_cast<double>(tp_sum) / static_cast<double>(tp_sum + fp_sum);
  const double r = static_cast<double>(tp_sum) / static_cast<double>(tp_sum + fn_sum);
  f.micro = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  return f;
}

PrequentialMetrics metrics_from_confusion(const ConfusionMatrix& cm) {
  PrequentialMetrics m;
  m.confusion = cm;
  m.samples = cm.total();
  if (m.samples == 0) return m;
  const FMeasure f = compute_fmeasure(cm);
  m.accuracy = static_cast<double>(cm.correct()) / static_cast<double>(m.samples);
  m.macro_f = f.macro;
  m.micro_f = f.micro;
  m.per_class_f = f.per_class;
  return m;
}

nlohmann::json PrequentialMetrics::to_json() const {
  nlohmann::json per_class = nlohmann::json::object();
  nlohmann::json cm = nlohmann::json::array();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    per_class[std::string(class_name(class_at(c)))] = per_class_f[c];
    cm.push_back(confusion.counts[c]);
  }
  return {{"samples", samples},
          {"accuracy", accuracy},
          {"macro_f", macro_f},
          {"micro_f", micro_f},
          {"per_class_f", per_class},
          {"confusion", cm},
          {"wall_seconds", wall_seconds},
          {"feature_seconds", feature_seconds},
          {"model_seconds", model_seconds},
          {"throughput", throughput}};
}

nlohmann::json PredictionRecord::to_json() const {
  nlohmann::json scores_json = nlohmann::json::array();
  for (double s : scores) scores_json.push_back(score_json(s));
  return {{"seq_id", seq_id},
          {"timestamp", format_timestamp(timestamp)},
          {"true", class_name(truth)},
          {"predicted", class_name(predicted)},
          {"scores", scores_json}};
}

PredictionRecord PredictionRecord::from_json(const nlohmann::json& j) {
  PredictionRecord r;
  try {
    r.seq_id = j.at("seq_id").get<std::uint64_t>();
    r.timestamp = parse_timestamp(j.at("timestamp").get<std::string>());
    const auto truth = parse_class(j.at("true").get<std::string>());
    const auto predicted = parse_class(j.at("predicted").get<std::string>());
    if (!truth || !predicted) throw DataError("record has an unknown class label");
    r.truth = *truth;
    r.predicted = *predicted;
    const auto& s = j.at("scores");
    if (s.size() != kNumClasses) throw DataError("record must hold four scores");
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      r.scores[c] = s[c].is_null() ? -HUGE_VAL : s[c].get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed prediction record: ") + e.what());
  }
  return r;
}

PrequentialResult prequential_run(Classifier& model, const LabeledSource& source,
                                  const PrequentialHooks& hooks, bool keep_records) {
  PrequentialResult result;
  ConfusionMatrix cm;
  double feature_seconds = 0.0;
  double model_seconds = 0.0;
  const auto start = Clock::now();
  for (;;) {
    const auto t0 = Clock::now();
    std::optional<LabeledVector> item = source();
    feature_seconds += seconds_since(t0);
    if (!item) break;

    const auto t1 = Clock::now();
    PredictionRecord rec;
    rec.seq_id = item->features.seq_id;
    rec.timestamp = item->features.timestamp;
    rec.truth = item->label;
    try {
      const Prediction p = model.predict(item->features);
      rec.predicted = p.label;
      rec.scores = p.scores;
    } catch (const NotReadyError&) {
      rec.predicted = ClassLabel::kNonFailure;
    }
    rec.latency_seconds = seconds_since(t1);
    if (hooks.after_predict) hooks.after_predict(*item, rec);
    const auto t2 = Clock::now();
    model.learn(item->features, item->label);
    model_seconds += rec.latency_seconds + seconds_since(t2);

    cm.add(rec.truth, rec.predicted);
    if (keep_records) result.records.push_back(rec);
  }
  const double wall = seconds_since(start);
  if (cm.total() == 0) throw ArgumentError("no samples");
  result.metrics = metrics_from_confusion(cm);
  result.metrics.feature_seconds = feature_seconds;
  result.metrics.model_seconds = model_seconds;
  result.metrics.wall_seconds = std::max(wall, feature_seconds + model_seconds);
  result.metrics.throughput =
      result.metrics.wall_seconds > 0.0
          ? static_cast<double>(result.metrics.samples) / result.metrics.wall_seconds
          : 0.0;
  return result;
}

PrequentialResult prequential_run(Classifier& model, std::span<const LabeledVector> stream,
                                  const PrequentialHooks& hooks, bool keep_records) {
  std::size_t next = 0;
  return prequential_run(
      model,
      [&]() -> std::optional<LabeledVector> {
        if (next == stream.size()) return std::nullopt;
        return stream[next++];
      },
      hooks, keep_records);
}

nlohmann::json GridSearchResult::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < leaderboard.size(); ++i) {
    const auto& p = leaderboard[i];
    rows.push_back({{"rank", i + 1},
                    {"hyperparameters", p.config.to_json()},
                    {"label", p.config.label()},
                    {"metrics", p.metrics.to_json()}});
  }
  return {{"best", best.config.to_json()}, {"leaderboard", rows}};
}

GridSearchResult grid_search(std::span<const ModelConfig> grid,
                             std::span<const LabeledVector> stream, const ModelMaker& make) {
  if (grid.empty()) throw ArgumentError("hyperparameter grid is empty");
  GridSearchResult result;
  for (const auto& config : grid) {
    auto model = make(config);
    auto run = prequential_run(*model, stream, {}, false);
    result.leaderboard.push_back({config, run.metrics});
  }
  std::stable_sort(result.leaderboard.begin(), result.leaderboard.end(),
                   [](const GridPoint& a, const GridPoint& b) {
                     if (a.metrics.macro_f != b.metrics.macro_f) {
                       return a.metrics.macro_f > b.metrics.macro_f;
                     }
                     return a.metrics.wall_seconds < b.metrics.wall_seconds;
                   });
  result.best = result.leaderboard.front();
  return result;
}

void write_records(std::ostream& out, std::span<const PredictionRecord> records) {
  for (const auto& r : records) out << r.to_json().dump() << '\n';
}

std::vector<PredictionRecord> read_records(std::istream& in) {
  std::vector<PredictionRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("record line is not JSON: ") + e.what());
    }
    out.push_back(PredictionRecord::from_json(j));
  }
  return out;
}

std::string table_header() {
  std::string h = "Model  | Accuracy | Macro F";
  for (auto c : kAllClasses) h += " | " + std::string(class_name(c));
  h += " | Runtime (s)";
  return h;
}

std::string table_row(std::string_view model, const PrequentialMetrics& m) {
  char buf[64];
  std::string row(model);
  row.resize(std::max<std::size_t>(row.size(), 6), ' ');
  std::snprintf(buf, sizeof buf, " | %8.2f | %7.2f", 100.0 * m.accuracy, 100.0 * m.macro_f);
  row += buf;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto width = static_cast<int>(class_name(class_at(c)).size());
    std::snprintf(buf, sizeof buf, " | %*.2f", width, 100.0 * m.per_class_f[c]);
    row += buf;
  }
  std::snprintf(buf, sizeof buf, " | %11.2f", m.wall_seconds);
  row += buf;
  return row;
}

}  // namespace pdm
