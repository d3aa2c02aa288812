#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pdm/error.hpp"
#include "pdm/pipeline.hpp"

namespace {

struct Overrides {
  std::string config;
  std::string data;
  std::string events;
  std::string out;
  std::string window_spec;
  std::string selection;
  std::string model;
  std::string downsample_mode;
  std::optional<std::uint64_t> downsample_factor;
  std::optional<std::uint64_t> seed;
  std::optional<int> scenario;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration");
  cmd->add_option("--data", o.data, "sensor CSV file");
  cmd->add_option("--events", o.events, "failure events JSON (default: MetroPT reports)");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--window-spec", o.window_spec, "window lengths JSON (default: calibrate)");
  cmd->add_option("--selection", o.selection, "frozen feature selection file");
  cmd->add_option("--model", o.model, "gnb, htc, hatc, arfc or oracle");
  cmd->add_option("--scenario", o.scenario, "feature preset, 1 or 2");
  cmd->add_option("--downsample-factor", o.downsample_factor, "keep one sample in N");
  cmd->add_option("--downsample-mode", o.downsample_mode, "stride or random");
  cmd->add_option("--seed", o.seed, "random seed");
}

pdm::RunConfig resolve(const Overrides& o, bool tuning) {
  pdm::RunConfig c = o.config.empty() ? pdm::RunConfig{} : pdm::load_run_config(o.config);
  if (!o.data.empty()) c.data = o.data;
  if (!o.events.empty()) c.events = o.events;
  if (!o.out.empty()) c.out = o.out;
  if (!o.window_spec.empty()) c.window_spec = o.window_spec;
  if (!o.selection.empty()) c.selection = o.selection;
  if (!o.model.empty()) {
    const auto family = pdm::parse_family(o.model);
    if (!family) throw pdm::ConfigError("unknown model family '" + o.model + "'");
    if (*family != c.model.family) c.model = pdm::default_model_config(*family);
  }
  if (o.scenario) c.scenario = *o.scenario;
  if (o.seed) c.seed = *o.seed;
  auto& ds = tuning ? c.tune_downsample : c.downsample;
  if (o.downsample_factor) {
    if (*o.downsample_factor == 0) throw pdm::ConfigError("downsample factor must be positive");
    ds.factor = *o.downsample_factor;
  }
  if (!o.downsample_mode.empty()) {
    const auto mode = pdm::parse_downsample_mode(o.downsample_mode);
    if (!mode) throw pdm::ConfigError("downsample mode must be 'stride' or 'random'");
    ds.mode = *mode;
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming failure classification and explanation for air production unit sensors"};
  app.require_subcommand(1);

  Overrides calibrate_o, tune_o, run_o, explain_o, report_o;
  auto* calibrate = app.add_subcommand("calibrate", "derive sliding-window lengths");
  add_common(calibrate, calibrate_o);
  auto* tune = app.add_subcommand("tune", "prequential grid search");
  add_common(tune, tune_o);
  auto* run = app.add_subcommand("run", "prequential evaluation with explanations and report");
  add_common(run, run_o);
  auto* explain = app.add_subcommand("explain", "print stored explanations of a run");
  add_common(explain, explain_o);
  std::optional<std::uint64_t> seq_id;
  std::string range;
  explain->add_option("--seq-id", seq_id, "sample to explain");
  explain->add_option("--range", range, "inclusive range FIRST:LAST");
  auto* report = app.add_subcommand("report", "rebuild report.html from a run directory");
  add_common(report, report_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(pdm::ExitCode::kUsage);
  }

  try {
    if (calibrate->parsed()) {
      pdm::cmd_calibrate(resolve(calibrate_o, false), std::cout);
    } else if (tune->parsed()) {
      pdm::cmd_tune(resolve(tune_o, true), std::cout);
    } else if (run->parsed()) {
      pdm::cmd_run(resolve(run_o, false), std::cout);
    } else if (explain->parsed()) {
      std::uint64_t first = 0, last = 0;
      if (seq_id) {
        first = last = *seq_id;
      } else if (!range.empty()) {
        const auto colon = range.find(':');
        try {
          if (colon == std::string::npos) throw std::invalid_argument(range);
          first = std::stoull(range.substr(0, colon));
          last = std::stoull(range.substr(colon + 1));
        } catch (const std::logic_error&) {
          throw pdm::ArgumentError("--range expects FIRST:LAST, got '" + range + "'");
        }
      } else {
        throw pdm::ArgumentError("explain needs --seq-id or --range");
      }
      pdm::cmd_explain(resolve(explain_o, false), first, last, std::cout);
    } else if (report->parsed()) {
      pdm::cmd_report(resolve(report_o, false), std::cout);
    }
  } catch (const pdm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return static_cast<int>(pdm::ExitCode::kInternal);
  }
  return 0;
}
