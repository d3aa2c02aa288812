#include "pdm/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "pdm/error.hpp"
#include "pdm/learn/hoeffding_tree.hpp"

namespace pdm {
namespace {

using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

template <class F>
auto in_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e);
  } catch (const nlohmann::json::exception& e) {
    throw StageError(stage, DataError(e.what()));
  }
}

DownsampleConfig downsample_from_json(const nlohmann::json& j, DownsampleConfig d) {
  if (!j.is_object()) throw ConfigError("downsample settings must be an object");
  for (const auto& [key, v] : j.items()) {
    if (key == "factor") {
      if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0) {
        throw ConfigError("downsample factor must be a positive integer");
      }
      d.factor = v.get<std::uint64_t>();
    } else if (key == "mode") {
      const auto m = parse_downsample_mode(v.get<std::string>());
      if (!m) throw ConfigError("downsample mode must be 'stride' or 'random'");
      d.mode = *m;
    } else {
      throw ConfigError("unknown key '" + key + "' in downsample settings");
    }
  }
  return d;
}

nlohmann::json downsample_json(const DownsampleConfig& d) {
  return {{"factor", d.factor}, {"mode", downsample_mode_name(d.mode)}};
}

ExplainConfig explain_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("explain settings must be an object");
  ExplainConfig e;
  for (const auto& [key, v] : j.items()) {
    if (key == "enabled") {
      e.enabled = v.get<bool>();
    } else if (key == "n_estimators") {
      e.n_estimators = v.get<std::size_t>();
    } else if (key == "every") {
      e.every = v.get<std::size_t>();
      if (e.every == 0) throw ConfigError("explain.every must be positive");
    } else if (key == "template") {
      e.template_path = v.get<std::string>();
    } else if (key == "anomaly") {
      e.anomaly = AnomalyConfig::from_json(v);
    } else {
      throw ConfigError("unknown key '" + key + "' in explain settings");
    }
  }
  return e;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out << content;
  if (!out) throw IoError("failed writing " + p.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

bool is_tree_based(ModelFamily f) {
  return f == ModelFamily::kHtc || f == ModelFamily::kHatc || f == ModelFamily::kArfc;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "data") {
        c.data = v.get<std::string>();
      } else if (key == "events") {
        c.events = v.get<std::string>();
      } else if (key == "scenario") {
        c.scenario = v.get<int>();
      } else if (key == "window_spec") {
        c.window_spec = v.get<std::string>();
      } else if (key == "selection") {
        c.selection = v.get<std::string>();
      } else if (key == "variance_threshold") {
        c.variance_threshold = v.get<double>();
      } else if (key == "calibration_seconds") {
        c.calibration_seconds = v.get<Timestamp>();
      } else if (key == "evaluation_window") {
        c.evaluation_window = v.get<bool>();
      } else if (key == "downsample") {
        c.downsample = downsample_from_json(v, c.downsample);
      } else if (key == "tune_downsample") {
        c.tune_downsample = downsample_from_json(v, c.tune_downsample);
      } else if (key == "model") {
        c.model = ModelConfig::from_json(v);
      } else if (key == "grid") {
        if (!v.is_array()) throw ConfigError("'grid' must be an array of model settings");
        std::vector<ModelConfig> grid;
        for (const auto& point : v) grid.push_back(ModelConfig::from_json(point));
        c.grid = std::move(grid);
      } else if (key == "seed") {
        if (!v.is_number_integer()) throw ConfigError("seed must be an integer");
        c.seed = v.get<std::uint64_t>();
      } else if (key == "out") {
        c.out = v.get<std::string>();
      } else if (key == "explain") {
        c.explain = explain_from_json(v);
      } else if (key == "save_checkpoint") {
        c.save_checkpoint = v.get<bool>();
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return c;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j{{"data", data.string()},
                   {"scenario", scenario},
                   {"variance_threshold", variance_threshold},
                   {"calibration_seconds", calibration_seconds},
                   {"evaluation_window", evaluation_window},
                   {"downsample", downsample_json(downsample)},
                   {"tune_downsample", downsample_json(tune_downsample)},
                   {"model", model.to_json()},
                   {"seed", seed},
                   {"out", out.string()},
                   {"save_checkpoint", save_checkpoint}};
  if (events) j["events"] = events->string();
  if (window_spec) j["window_spec"] = window_spec->string();
  if (selection) j["selection"] = selection->string();
  if (grid) {
    nlohmann::json g = nlohmann::json::array();
    for (const auto& p : *grid) g.push_back(p.to_json());
    j["grid"] = g;
  }
  nlohmann::json e{{"enabled", explain.enabled},
                   {"n_estimators", explain.n_estimators},
                   {"every", explain.every},
                   {"anomaly", explain.anomaly.to_json()}};
  if (explain.template_path) e["template"] = explain.template_path->string();
  j["explain"] = e;
  return j;
}

void RunConfig::validate() const {
  if (scenario != 1 && scenario != 2) throw ConfigError("scenario must be 1 or 2");
  if (data.empty()) throw ConfigError("no data path given");
  auto must_exist = [](const fs::path& p, const char* what) {
    if (!fs::exists(p)) throw ConfigError(std::string(what) + " path does not exist: " + p.string());
  };
  must_exist(data, "data");
  if (events) must_exist(*events, "events");
  if (window_spec) must_exist(*window_spec, "window spec");
  if (selection) must_exist(*selection, "selection");
  if (explain.template_path) must_exist(*explain.template_path, "template");
  if (calibration_seconds <= 0) throw ConfigError("calibration_seconds must be positive");
  if (!(variance_threshold >= 0.0)) throw ConfigError("variance_threshold must be non-negative");
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
  }
  return RunConfig::from_json(j);
}

Scenario scenario_of(const RunConfig& config) {
  return config.scenario == 1 ? Scenario::kMeanStd : Scenario::kFull;
}

EventSet events_of(const RunConfig& config) {
  return config.events ? load_events(*config.events) : metropt_events();
}

struct FeatureStream::Input {
  explicit Input(const fs::path& path) : file(path, std::ios::binary), reader(file) {}
  std::ifstream file;
  CsvSampleReader reader;
};

namespace {

std::unique_ptr<std::ifstream> open_data(const fs::path& path) {
  auto in = std::make_unique<std::ifstream>(path, std::ios::binary);
  if (!*in) throw IoError("cannot open data file " + path.string());
  return in;
}

}  // namespace

Preparation prepare(const RunConfig& config) {
  Preparation prep;
  prep.events = in_stage("events", [&] { return events_of(config); });

  std::vector<RawSample> slice = in_stage("ingest", [&] {
    auto in = open_data(config.data);
    CsvSampleReader reader(*in);
    std::vector<RawSample> out;
    while (auto s = reader.next()) {
      if (!out.empty() && s->timestamp - out.front().timestamp >= config.calibration_seconds) break;
      out.push_back(*s);
    }
    if (out.empty()) throw DataError("data file holds no valid samples");
    return out;
  });
  prep.slice_samples = slice.size();

  prep.spec = in_stage("calibrate", [&] {
    if (config.window_spec) return load_window_spec(*config.window_spec);
    prep.calibrated = true;
    const auto analog = analog_sensors();
    return calibrate_windows(slice, analog);
  });

  prep.selection = in_stage("select", [&] {
    if (config.selection) return load_selection(*config.selection);
    const auto candidates = scenario_candidates(scenario_of(config));
    FeatureEngine engine(prep.spec);
    Downsampler keep(config.downsample.factor, DownsampleMode::kStride);
    VarianceState state;
    for (const auto& s : slice) {
      if (!engine.push(s) || !keep.keep(s.seq_id)) continue;
      state.update(engine.compute(candidates));
    }
    if (state.count() < 2) {
      throw DataError("calibration slice too short for the variance burn-in (" +
                      std::to_string(state.count()) + " vectors after warm-up)");
    }
    Selection sel = selected_features(state, config.variance_threshold);
    if (sel.size() == 0) throw DataError("no feature exceeds the variance threshold");
    return sel;
  });
  return prep;
}

FeatureStream::FeatureStream(const RunConfig& config, const Preparation& prep,
                             const DownsampleConfig& ds, AnomalyTracker* tracker)
    : input_(std::make_unique<Input>(config.data)),
      prep_(prep),
      evaluation_window_(config.evaluation_window),
      downsampler_(ds.factor, ds.mode, config.seed),
      engine_(prep.spec),
      tracker_(tracker) {
  if (!input_->file) throw IoError("cannot open data file " + config.data.string());
}

FeatureStream::~FeatureStream() = default;

const ParseReport& FeatureStream::report() const { return input_->reader.report(); }

std::optional<LabeledVector> FeatureStream::next() {
  for (;;) {
    const auto t0 = Clock::now();
    std::optional<RawSample> s = input_->reader.next();
    parse_seconds_ += std::chrono::duration<double>(Clock::now() - t0).count();
    if (!s) return std::nullopt;
    const bool warm = engine_.push(*s);
    if (tracker_) tracker_->update(engine_, *s);
    if (!warm) continue;
    if (evaluation_window_ && !prep_.events.in_evaluation_window(s->timestamp)) continue;
    if (!downsampler_.keep(s->seq_id)) continue;
    LabeledVector lv;
    lv.features = engine_.compute(prep_.selection.schema);
    lv.label = prep_.events.label_at(s->timestamp);
    return lv;
  }
}

WindowSpec cmd_calibrate(const RunConfig& config, std::ostream& out) {
  config.validate();
  std::vector<RawSample> slice = in_stage("ingest", [&] {
    auto in = open_data(config.data);
    CsvSampleReader reader(*in);
    std::vector<RawSample> samples;
    while (auto s = reader.next()) {
      if (!samples.empty() && s->timestamp - samples.front().timestamp >= config.calibration_seconds) {
        break;
      }
      samples.push_back(*s);
    }
    return samples;
  });
  const WindowSpec spec = in_stage("calibrate", [&] {
    const auto analog = analog_sensors();
    return calibrate_windows(slice, analog);
  });
  ensure_dir(config.out);
  save_window_spec(spec, config.out / "window_spec.json");
  out << "window lengths (W_avg, W_q1, W_q2, W_q3): " << spec.w_avg << ", " << spec.w_q1 << ", "
      << spec.w_q2 << ", " << spec.w_q3 << "\n"
      << "calibration samples: " << slice.size() << "\n"
      << "written to " << (config.out / "window_spec.json").string() << "\n";
  return spec;
}

std::optional<GridSearchResult> cmd_tune(const RunConfig& config, std::ostream& out) {
  config.validate();
  const ModelFamily family = config.model.family;
  std::vector<ModelConfig> grid;
  if (config.grid) {
    grid = *config.grid;
    if (grid.empty()) throw ConfigError("hyperparameter grid is empty");
  } else {
    grid = hyperparameter_grid(family);
    if (grid.empty()) {
      out << "no hyperparameters; nothing to tune\n";
      return std::nullopt;
    }
  }

  const Preparation prep = prepare(config);
  std::vector<LabeledVector> stream = in_stage("features", [&] {
    FeatureStream fs(config, prep, config.tune_downsample);
    std::vector<LabeledVector> items;
    while (auto lv = fs.next()) items.push_back(std::move(*lv));
    if (items.empty()) throw DataError("tuning stream is empty");
    return items;
  });

  GridSearchResult result = in_stage("tune", [&] {
    return grid_search(grid, stream, [&](const ModelConfig& c) {
      return make_model(c, config.seed, prep.events);
    });
  });

  ensure_dir(config.out);
  nlohmann::json board = result.to_json();
  board["tuning_samples"] = stream.size();
  board["tune_downsample"] = downsample_json(config.tune_downsample);
  write_file(config.out / "leaderboard.json", board.dump(2) + "\n");
  out << "tuning samples: " << stream.size() << ", grid points: " << grid.size() << "\n";
  out << "rank | hyperparameters | macro F | accuracy | seconds\n";
  for (std::size_t i = 0; i < result.leaderboard.size(); ++i) {
    const auto& p = result.leaderboard[i];
    out << std::setw(4) << i + 1 << " | " << p.config.label() << " | " << std::fixed
        << std::setprecision(4) << p.metrics.macro_f << " | " << p.metrics.accuracy << " | "
        << std::setprecision(2) << p.metrics.wall_seconds << "\n";
  }
  out.unsetf(std::ios::floatfield);
  out << "best: " << result.best.config.label() << "\n";
  return result;
}

RunOutcome cmd_run(const RunConfig& config, std::ostream& out) {
  config.validate();
  const Preparation prep = prepare(config);
  ensure_dir(config.out);
  save_window_spec(prep.spec, config.out / "window_spec.json");
  save_selection(prep.selection, config.out / "selection.txt");

  std::unique_ptr<Classifier> model =
      in_stage("model", [&] { return make_model(config.model, config.seed, prep.events); });
  const bool explaining = config.explain.enabled && is_tree_based(model->family());
  const std::string tmpl = config.explain.template_path
                               ? read_file(*config.explain.template_path)
                               : std::string(default_explanation_template());

  AnomalyTracker tracker(config.explain.anomaly);
  FeatureStream stream(config, prep, config.downsample, explaining ? &tracker : nullptr);

  std::vector<nlohmann::json> explanations;
  std::vector<std::vector<double>> kept_values;
  FeatureTally tally;
  std::size_t seen = 0, explained = 0;
  PrequentialHooks hooks;
  hooks.after_predict = [&](const LabeledVector& lv, const PredictionRecord& rec) {
    kept_values.push_back(lv.features.values);
    const bool now = explaining && seen++ % config.explain.every == 0;
    if (!now) {
      explanations.emplace_back(nullptr);
      return;
    }
    Explanation e;
    e.seq_id = rec.seq_id;
    e.predicted = rec.predicted;
    e.truth = rec.truth;
    e.top_features = top_relevant_features(*model, lv.features, config.explain.n_estimators);
    tally.add(e.top_features);
    e.summary = model_summary(tally);
    e.anomalies = tracker.report();
    e.text = render_explanation(e, config.explain.anomaly, tmpl);
    explanations.push_back(e.to_json(config.explain.anomaly));
    ++explained;
  };

  PrequentialResult result =
      in_stage("prequential", [&] { return prequential_run(*model, stream.source(), hooks); });

  PrequentialMetrics& m = result.metrics;
  const double parse = stream.parse_seconds();
  m.feature_seconds = std::max(0.0, m.feature_seconds - parse);
  m.wall_seconds = std::max(m.wall_seconds - parse, m.feature_seconds + m.model_seconds);
  m.throughput = m.wall_seconds > 0.0 ? static_cast<double>(m.samples) / m.wall_seconds : 0.0;

  std::vector<FeatureName> traced;
  {
    std::vector<std::pair<std::size_t, FeatureName>> ranked;
    for (const auto& [name, n] : tally.counts()) ranked.emplace_back(n, name);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; i < ranked.size() && i < 2; ++i) traced.push_back(ranked[i].second);
    if (traced.empty() && prep.selection.size() > 0) traced.push_back((*prep.selection.schema)[0]);
  }
  std::vector<FeatureTrace> traces;
  nlohmann::json traces_json = nlohmann::json::array();
  for (const auto& name : traced) {
    const auto idx = prep.selection.schema->index_of(name);
    if (!idx) continue;
    FeatureTrace t;
    t.feature = describe(name);
    for (std::size_t i = 0; i < result.records.size(); ++i) {
      t.seq_ids.push_back(result.records[i].seq_id);
      t.values.push_back(kept_values[i][*idx]);
      t.truth.push_back(result.records[i].truth);
    }
    nlohmann::json truth = nlohmann::json::array();
    for (auto c : t.truth) truth.push_back(index_of(c));
    traces_json.push_back(
        {{"feature", t.feature}, {"seq_ids", t.seq_ids}, {"values", t.values}, {"truth", truth}});
    traces.push_back(std::move(t));
  }

  const auto& report = stream.report();
  nlohmann::json summary{
      {"model", upper(family_name(config.model.family))},
      {"hyperparameters", config.model.to_json()},
      {"scenario", config.scenario},
      {"seed", config.seed},
      {"window_spec",
       {{"w_avg", prep.spec.w_avg}, {"w_q1", prep.spec.w_q1}, {"w_q2", prep.spec.w_q2},
        {"w_q3", prep.spec.w_q3}, {"calibrated", prep.calibrated}}},
      {"selection",
       {{"threshold", prep.selection.threshold},
        {"burn_in", prep.selection.burn_in},
        {"features", prep.selection.size()}}},
      {"downsample", downsample_json(config.downsample)},
      {"evaluation_window", config.evaluation_window},
      {"ingest",
       {{"rows_read", report.rows_read},
        {"rows_skipped", report.rows_skipped},
        {"out_of_order", report.out_of_order},
        {"parse_seconds", parse}}},
      {"metrics", m.to_json()},
      {"explanations", explained}};
  if (!tally.empty()) summary["model_summary"] = model_summary(tally).to_json();

  in_stage("report", [&] {
    ReportInput input;
    input.title = "Online failure detection: " + upper(family_name(config.model.family)) +
                  ", scenario " + std::to_string(config.scenario);
    input.summary = summary;
    input.records = result.records;
    input.explanations = explanations;
    input.traces = std::move(traces);
    emit_report(input, config.out);
    write_file(config.out / "traces.json", traces_json.dump() + "\n");
    std::ostringstream timings;
    for (const auto& r : result.records) {
      timings << nlohmann::json{{"seq_id", r.seq_id}, {"latency_seconds", r.latency_seconds}}.dump()
              << '\n';
    }
    write_file(config.out / "timings.jsonl", timings.str());
    if (config.save_checkpoint) write_file(config.out / "model.json", model->checkpoint().dump());
  });

  out << "window lengths: " << prep.spec.w_avg << ", " << prep.spec.w_q1 << ", " << prep.spec.w_q2
      << ", " << prep.spec.w_q3 << "; selected features: " << prep.selection.size() << "\n";
  out << table_header() << "\n"
      << table_row(upper(family_name(config.model.family)), m) << "\n";
  out << "samples: " << m.samples << ", throughput: " << std::fixed << std::setprecision(1)
      << m.throughput << " samples/s (features " << std::setprecision(2) << m.feature_seconds
      << " s, model " << m.model_seconds << " s, parsing " << parse << " s excluded)\n";
  out.unsetf(std::ios::floatfield);

  RunOutcome outcome;
  outcome.metrics = m;
  outcome.summary = std::move(summary);
  outcome.explanations = explained;
  return outcome;
}

void cmd_explain(const RunConfig& config, std::uint64_t first, std::uint64_t last,
                 std::ostream& out) {
  if (last < first) throw ArgumentError("empty sample range");
  const fs::path records_path = config.out / "records.jsonl";
  const fs::path summary_path = config.out / "summary.json";
  if (!fs::exists(records_path)) {
    throw ArgumentError("no run records under " + config.out.string() + "; run 'pdm run' first");
  }
  std::string family;
  if (fs::exists(summary_path)) {
    const auto summary = nlohmann::json::parse(read_file(summary_path), nullptr, false);
    if (summary.is_object() && summary.contains("model")) family = summary["model"].get<std::string>();
  }
  std::ifstream in(records_path);
  std::string line;
  std::size_t found = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw DataError("corrupt line in " + records_path.string());
    const auto id = j.at("seq_id").get<std::uint64_t>();
    if (id < first || id > last) continue;
    if (family == "GNB" || family == "ORACLE") {
      throw UnsupportedModelError("explanations need a tree-based model; this run used " + family);
    }
    if (found++) out << "\n";
    if (j.contains("explanation")) {
      out << j["explanation"]["text"].get<std::string>();
    } else {
      out << "Sample " << id << ": no explanation recorded (predicted "
          << j["predicted"].get<std::string>() << ").\n";
    }
  }
  if (found == 0) {
    throw ArgumentError(first == last ? "unknown seq_id " + std::to_string(first)
                                      : "no records with seq_id in [" + std::to_string(first) +
                                            ", " + std::to_string(last) + "]");
  }
}

void cmd_report(const RunConfig& config, std::ostream& out) {
  const fs::path dir = config.out;
  const fs::path records_path = dir / "records.jsonl";
  if (!fs::exists(records_path)) {
    throw ArgumentError("no run records under " + dir.string() + "; run 'pdm run' first");
  }
  ReportInput input;
  input.summary = nlohmann::json::parse(read_file(dir / "summary.json"), nullptr, false);
  if (input.summary.is_discarded()) throw DataError("summary.json is not valid JSON");
  input.title = "Online failure detection: " + input.summary.value("model", std::string("model")) +
                ", scenario " + std::to_string(input.summary.value("scenario", 0));

  std::vector<PredictionRecord> records;
  std::vector<nlohmann::json> explanations;
  std::ifstream in(records_path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw DataError("corrupt line in " + records_path.string());
    records.push_back(PredictionRecord::from_json(j));
    explanations.push_back(j.contains("explanation") ? j["explanation"] : nlohmann::json());
  }
  input.records = records;
  input.explanations = explanations;
  if (fs::exists(dir / "traces.json")) {
    const auto traces = nlohmann::json::parse(read_file(dir / "traces.json"), nullptr, false);
    if (traces.is_array()) {
      for (const auto& t : traces) {
        FeatureTrace ft;
        ft.feature = t.at("feature").get<std::string>();
        ft.seq_ids = t.at("seq_ids").get<std::vector<std::uint64_t>>();
        ft.values = t.at("values").get<std::vector<double>>();
        for (const auto& c : t.at("truth")) ft.truth.push_back(class_at(c.get<std::size_t>()));
        input.traces.push_back(std::move(ft));
      }
    }
  }
  write_file(dir / "report.html", render_report_html(input));
  out << "report written to " << (dir / "report.html").string() << " (" << records.size()
      << " records)\n";
}

}  // namespace pdm
