#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pdm/ingest.hpp"

namespace pdm {

// Smooth compressor-cycle signals at 1 Hz: pressure builds while the motor
// runs, then decays while it idles. Failures shorten the cycle and shift the
// sensors they affect, ramping up over the labelled interval.
struct SyntheticOptions {
  Timestamp start = 0;
  Timestamp duration = 5 * kSecondsPerDay;
  double cycle_seconds = 900.0;
  double cycle_jitter = 0.25;  // relative half-width of the per-cycle period spread
  std::uint64_t seed = 1;
  std::vector<FailureEvent> events;
  Timestamp pre_window = EventSet::kDefaultPreWindow;
};

// Five days from 2022-02-01 with one event of each failure class on days 3-4.
SyntheticOptions default_synthetic_options();

std::vector<RawSample> synthetic_stream(const SyntheticOptions& options);

// Header in the dataset's column spelling, one row per sample.
void write_synthetic_csv(std::ostream& out, const SyntheticOptions& options);
void write_csv(std::ostream& out, const std::vector<RawSample>& samples);

std::string events_json(const std::vector<FailureEvent>& events, Timestamp pre_window);

}  // namespace pdm
