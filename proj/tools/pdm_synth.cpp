#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pdm/error.hpp"
#include "pdm/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write a synthetic compressor sensor stream and its failure events"};
  pdm::SyntheticOptions o = pdm::default_synthetic_options();
  std::string csv_path, events_path;
  double days = 5.0;
  app.add_option("--csv", csv_path, "output CSV path")->required();
  app.add_option("--events", events_path, "output events JSON path")->required();
  app.add_option("--days", days, "stream length in days");
  app.add_option("--cycle-seconds", o.cycle_seconds, "mean compressor cycle length");
  app.add_option("--jitter", o.cycle_jitter, "relative spread of the cycle length");
  app.add_option("--seed", o.seed, "random seed");
  CLI11_PARSE(app, argc, argv);

  try {
    if (!(days > 0.0)) throw pdm::ArgumentError("--days must be positive");
    o.duration = static_cast<pdm::Timestamp>(days * pdm::kSecondsPerDay);
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw pdm::IoError("cannot write " + csv_path);
    pdm::write_synthetic_csv(csv, o);
    std::ofstream events(events_path);
    if (!events) throw pdm::IoError("cannot write " + events_path);
    events << pdm::events_json(o.events, o.pre_window) << "\n";
  } catch (const pdm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  }
  return 0;
}
