#include "pdm/time.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

#include "pdm/error.hpp"

namespace pdm {
namespace {

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  const char* first = s.data() + pos;
  const char* last = first + len;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

Timestamp compose(int year, int month, int day, int hour, int minute, int second,
                  std::string_view text) {
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour < 0 || hour > 23 || minute < 0 || minute > 59 || second < 0 ||
      second > 60) {
    throw ArgumentError("invalid timestamp '" + std::string(text) + "'");
  }
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<Timestamp>(days) * kSecondsPerDay + hour * 3600 + minute * 60 + second;
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  std::string_view s = text;
  while (!s.empty() && (s.front() == ' ' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '"' || s.back() == '\r' ||
                        s.back() == 'Z')) {
    s.remove_suffix(1);
  }
  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;

  // YYYY-MM-DD[ T]HH:MM[:SS[.fff]]
  if (s.size() >= 16 && s[4] == '-' && s[7] == '-' && (s[10] == ' ' || s[10] == 'T') &&
      s[13] == ':') {
    bool ok = read_int(s, 0, 4, year) && read_int(s, 5, 2, month) &&
              read_int(s, 8, 2, day) && read_int(s, 11, 2, hour) &&
              read_int(s, 14, 2, minute);
    if (ok && s.size() > 16) {
      ok = s[16] == ':' && read_int(s, 17, 2, second) &&
           (s.size() == 19 || s[19] == '.');
    }
    if (ok) return compose(year, month, day, hour, minute, second, text);
  }
  // DD-MM-YY HH:MM
  if (s.size() == 14 && s[2] == '-' && s[5] == '-' && s[8] == ' ' && s[11] == ':') {
    if (read_int(s, 0, 2, day) && read_int(s, 3, 2, month) && read_int(s, 6, 2, year) &&
        read_int(s, 9, 2, hour) && read_int(s, 12, 2, minute)) {
      return compose(2000 + year, month, day, hour, minute, 0, text);
    }
  }
  throw ArgumentError("unrecognized timestamp '" + std::string(text) + "'");
}

std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const std::int64_t day = day_index(t);
  const std::int64_t secs = t - start_of_day(day);
  const year_month_day ymd{sys_days{days{day}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(secs / 3600), static_cast<int>((secs / 60) % 60),
                static_cast<int>(secs % 60));
  return buf;
}

}  // namespace pdm
