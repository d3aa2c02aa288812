#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pdm/ingest.hpp"

namespace pdm {

// Lengths, in samples, of the four sliding-window filters.
struct WindowSpec {
  std::size_t w_avg = 0;
  std::size_t w_q1 = 0;
  std::size_t w_q2 = 0;
  std::size_t w_q3 = 0;

  std::array<std::size_t, 4> lengths() const { return {w_avg, w_q1, w_q2, w_q3}; }
  std::size_t max_length() const;

  friend bool operator==(const WindowSpec&, const WindowSpec&) = default;
};

// Throws ArgumentError unless every length is > 1.
void validate(const WindowSpec& spec);

std::string to_json(const WindowSpec& spec);
WindowSpec window_spec_from_json(const std::string& text);
void save_window_spec(const WindowSpec& spec, const std::filesystem::path& path);
WindowSpec load_window_spec(const std::filesystem::path& path);

using GapList = std::vector<std::size_t>;

// Interior indices i with x[i] < x[i-1] and x[i] <= x[i+1]. A flat valley is
// reported once, at its first index.
std::vector<std::size_t> find_relative_minima(std::span<const double> series);

// Distances between consecutive minima.
GapList minima_gaps(std::span<const double> series);

GapList merge_gap_lists(const std::vector<GapList>& per_feature);

// Nearest-rank order statistic y[round(k*n/4)] of an ascending sequence,
// clamped to the last index (k = 1, 2, 3).
double nearest_rank_quartile(std::span<const double> sorted, int k);

// Derives the window lengths from a merged gap list.
WindowSpec window_spec_from_gaps(GapList gaps, std::size_t slice_length);

// Leading part of the stream spanning `seconds` from the first timestamp.
std::vector<RawSample> leading_slice(const std::vector<RawSample>& stream,
                                     Timestamp seconds = 2 * kSecondsPerDay);

WindowSpec calibrate_windows(const std::vector<RawSample>& slice,
                             std::span<const Sensor> analog_sensors);

// Analog signals of the dataset.
std::vector<Sensor> analog_sensors();

}  // namespace pdm
