#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace pdm {

// Wall-clock seconds since 1970-01-01 00:00:00 in the dataset's local time.
// No timezone conversion is applied anywhere: calendar days are plain
// 86400-second buckets of this value.
using Timestamp = std::int64_t;

inline constexpr Timestamp kSecondsPerDay = 86400;

// Accepts "YYYY-MM-DD HH:MM:SS", ISO "YYYY-MM-DDTHH:MM:SS" (fractional
// seconds and a trailing 'Z' are ignored), "YYYY-MM-DD HH:MM" and the
// failure-report style "DD-MM-YY HH:MM". Throws ArgumentError otherwise.
Timestamp parse_timestamp(std::string_view text);

// "YYYY-MM-DDTHH:MM:SS"
std::string format_timestamp(Timestamp t);

constexpr std::int64_t day_index(Timestamp t) {
  return t >= 0 ? t / kSecondsPerDay : -((-t + kSecondsPerDay - 1) / kSecondsPerDay);
}

constexpr Timestamp start_of_day(std::int64_t day) { return day * kSecondsPerDay; }

}  // namespace pdm
