#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pdm/error.hpp"
#include "pdm/pipeline.hpp"
#include "pdm/synthetic.hpp"
#include "pdm/time.hpp"

using namespace pdm;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// One synthetic day with an event of each class and a six-hour calibration slice.
struct Fixture {
  fs::path dir;
  RunConfig config;

  explicit Fixture(const std::string& name) {
    dir = fs::temp_directory_path() / ("pdm_pipeline_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    SyntheticOptions o;
    o.start = parse_timestamp("2022-02-01 00:00:00");
    o.duration = kSecondsPerDay;
    o.cycle_seconds = 300.0;
    o.seed = 5;
    o.events = {
        {ClassLabel::kAirLeakDryer, parse_timestamp("2022-02-01 10:00:00"),
         parse_timestamp("2022-02-01 11:00:00")},
        {ClassLabel::kOilLeakCompressor, parse_timestamp("2022-02-01 14:00:00"),
         parse_timestamp("2022-02-01 16:00:00")},
        {ClassLabel::kAirLeakClient, parse_timestamp("2022-02-01 19:00:00"),
         parse_timestamp("2022-02-01 19:30:00")},
    };
    {
      std::ofstream csv(dir / "data.csv");
      write_synthetic_csv(csv, o);
    }
    {
      std::ofstream ev(dir / "events.json");
      ev << events_json(o.events, o.pre_window);
    }
    config.data = dir / "data.csv";
    config.events = dir / "events.json";
    config.calibration_seconds = 6 * 3600;
    config.downsample = {60, DownsampleMode::kStride};
    config.tune_downsample = {240, DownsampleMode::kRandom};
    config.model = default_model_config(ModelFamily::kHtc);
    config.out = dir / "out";
  }
  ~Fixture() { fs::remove_all(dir); }
};

}  // namespace

TEST_CASE("run configs reject unknown keys and validate paths") {
  CHECK_THROWS_AS(RunConfig::from_json({{"data", "x.csv"}, {"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json({{"data", "x.csv"}, {"model", {{"family", "htc"}, {"lambda", 2}}}}),
                  ConfigError);
  RunConfig c = RunConfig::from_json({{"data", "/nonexistent/data.csv"}, {"scenario", 1}});
  CHECK(c.scenario == 1);
  CHECK(c.model.family == ModelFamily::kArfc);
  try {
    c.validate();
    FAIL("missing data accepted");
  } catch (const Error& e) {
    CHECK(e.exit_code() == ExitCode::kUsage);
  }
  c.data = fs::temp_directory_path();
  c.scenario = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  const RunConfig round = RunConfig::from_json(RunConfig{}.to_json());
  CHECK(round.to_json() == RunConfig{}.to_json());
}

TEST_CASE("calibration on a constant-gap stream gives that gap for every window") {
  const fs::path dir = fs::temp_directory_path() / "pdm_pipeline_gap";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::vector<RawSample> samples;
  const Timestamp t0 = parse_timestamp("2022-01-01 00:00:00");
  for (std::uint64_t i = 0; i < 6 * 3600; ++i) {
    RawSample s;
    s.seq_id = i;
    s.timestamp = t0 + static_cast<Timestamp>(i);
    for (std::size_t k = 0; k < kNumAnalogSensors; ++k) s.values[k] = static_cast<double>(i % 120);
    samples.push_back(s);
  }
  {
    std::ofstream csv(dir / "gap.csv");
    write_csv(csv, samples);
  }
  RunConfig c;
  c.data = dir / "gap.csv";
  c.out = dir / "out";
  std::ostringstream log;
  const WindowSpec spec = cmd_calibrate(c, log);
  CHECK(spec == WindowSpec{120, 120, 120, 120});
  CHECK(fs::exists(c.out / "window_spec.json"));
  fs::remove_all(dir);
}

TEST_CASE("a stage failure keeps the exit code of its cause") {
  Fixture f("missing");
  f.config.data = f.dir / "absent.csv";
  std::ostringstream log;
  try {
    cmd_run(f.config, log);
    FAIL("run without data succeeded");
  } catch (const Error& e) {
    CHECK(e.exit_code() == ExitCode::kUsage);
  }
  std::ofstream(f.dir / "empty.csv") << ",timestamp\n";
  f.config.data = f.dir / "empty.csv";
  try {
    cmd_run(f.config, log);
    FAIL("run on an empty file succeeded");
  } catch (const Error& e) {
    CHECK(e.exit_code() == ExitCode::kData);
    CHECK(std::string(e.what()).find("ingest") != std::string::npos);
  }
}

TEST_CASE("tuning a family without hyperparameters is a no-op") {
  Fixture f("tune_gnb");
  f.config.model.family = ModelFamily::kGnb;
  std::ostringstream log;
  CHECK_FALSE(cmd_tune(f.config, log).has_value());
  CHECK(log.str().find("nothing to tune") != std::string::npos);
}

TEST_CASE("a single-point grid is its own winner") {
  Fixture f("tune_single");
  ModelConfig only = default_model_config(ModelFamily::kHtc);
  only.depth = 7;
  f.config.grid = std::vector<ModelConfig>{only};
  std::ostringstream log;
  const auto result = cmd_tune(f.config, log);
  REQUIRE(result.has_value());
  CHECK(result->leaderboard.size() == 1);
  CHECK(result->best.config.depth == 7);
  CHECK(fs::exists(f.config.out / "leaderboard.json"));
}

TEST_CASE("identical runs write identical records") {
  Fixture f("determinism");
  std::ostringstream log;
  const RunOutcome a = cmd_run(f.config, log);
  const std::string first = slurp(f.config.out / "records.jsonl");
  const RunOutcome b = cmd_run(f.config, log);
  const std::string second = slurp(f.config.out / "records.jsonl");
  CHECK(a.metrics.samples > 100);
  CHECK(a.metrics.confusion == b.metrics.confusion);
  CHECK(first == second);
  for (const char* name : {"window_spec.json", "selection.txt", "summary.json", "report.html",
                           "traces.json", "timings.jsonl"}) {
    CHECK_MESSAGE(fs::exists(f.config.out / name), name);
  }
  CHECK(a.explanations > 0);
}

TEST_CASE("the oracle model scores perfectly through the whole pipeline") {
  Fixture f("oracle");
  f.config.model.family = ModelFamily::kOracle;
  f.config.downsample = {5, DownsampleMode::kStride};
  std::ostringstream log;
  const RunOutcome r = cmd_run(f.config, log);
  CHECK(r.metrics.accuracy == 1.0);
  for (std::size_t c = 0; c < kNumClasses; ++c) CHECK(r.metrics.per_class_f[c] == 1.0);
  std::ostringstream text;
  CHECK_THROWS_AS(cmd_explain(f.config, 0, UINT64_MAX, text), UnsupportedModelError);
}

TEST_CASE("explain prints stored texts and rejects unknown samples") {
  Fixture f("explain");
  std::ostringstream log;
  cmd_run(f.config, log);
  std::ifstream rec(f.config.out / "records.jsonl");
  std::string line;
  REQUIRE(std::getline(rec, line));
  const auto id = nlohmann::json::parse(line)["seq_id"].get<std::uint64_t>();
  std::ostringstream text;
  cmd_explain(f.config, id, id, text);
  CHECK(text.str().find("then the prediction is that") != std::string::npos);
  CHECK_THROWS_AS(cmd_explain(f.config, 1, 1, text), ArgumentError);
  CHECK_THROWS_AS(cmd_explain(f.config, 5, 4, text), ArgumentError);
  std::ostringstream report;
  cmd_report(f.config, report);
  CHECK(fs::exists(f.config.out / "report.html"));
}
