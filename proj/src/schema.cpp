#include "pdm/schema.hpp"

#include <algorithm>
#include <cctype>
#include <utility>

namespace pdm {
namespace {

constexpr std::array<std::string_view, kNumSensors> kSensorNames = {
    "DV pressure", "Flowmeter",       "H1",          "MC",
    "Oil temperature", "Reservoirs",  "TP2",         "TP3",
    "Caudal impulses", "COMP",        "DV electric", "LPS",
    "MPG",         "Oil level",       "Pressure switch", "Towers",
};

constexpr std::array<std::pair<std::string_view, Sensor>, 6> kSensorAliases = {{
    {"motor current", Sensor::kMc},
    {"dv eletric", Sensor::kDvElectric},
    {"flow rate", Sensor::kCaudalImpulses},
    {"mgp", Sensor::kMpg},
    {"air dryer tower", Sensor::kTowers},
    {"dv electrical", Sensor::kDvElectric},
}};

constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "NonFailure", "OilLeakCompressor", "AirLeakDryer", "AirLeakClient"};

constexpr std::array<std::string_view, kNumClasses> kClassPhrases = {
    "there is no failure",
    "there is an oil leak in the compressor",
    "there is an air leak in the air dryer",
    "there is an air leak in the clients",
};

std::string normalize(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '_') c = ' ';
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  auto first = out.find_first_not_of(" \t\r\"");
  auto last = out.find_last_not_of(" \t\r\"");
  if (first == std::string::npos) return {};
  return out.substr(first, last - first + 1);
}

}  // namespace

std::string_view sensor_name(Sensor s) { return kSensorNames[index_of(s)]; }

std::optional<Sensor> parse_sensor(std::string_view name) {
  const std::string key = normalize(name);
  for (Sensor s : kAllSensors) {
    if (normalize(sensor_name(s)) == key) return s;
  }
  for (const auto& [alias, s] : kSensorAliases) {
    if (alias == key) return s;
  }
  return std::nullopt;
}

std::string_view class_name(ClassLabel c) { return kClassNames[index_of(c)]; }

std::optional<ClassLabel> parse_class(std::string_view name) {
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    if (kClassNames[i] == name) return class_at(i);
  }
  return std::nullopt;
}

std::string_view class_phrase(ClassLabel c) { return kClassPhrases[index_of(c)]; }

}  // namespace pdm
