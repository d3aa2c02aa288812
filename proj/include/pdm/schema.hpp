#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace pdm {

// The 16 air-production-unit signals, numbered as in the dataset
// documentation (1-8 analog, 9-16 digital).
enum class Sensor : std::uint8_t {
  kDvPressure = 0,
  kFlowmeter,
  kH1,
  kMc,
  kOilTemperature,
  kReservoirs,
  kTp2,
  kTp3,
  kCaudalImpulses,
  kComp,
  kDvElectric,
  kLps,
  kMpg,
  kOilLevel,
  kPressureSwitch,
  kTowers,
};

inline constexpr std::size_t kNumSensors = 16;
inline constexpr std::size_t kNumAnalogSensors = 8;

inline constexpr std::array<Sensor, kNumSensors> kAllSensors = {
    Sensor::kDvPressure,     Sensor::kFlowmeter,  Sensor::kH1,
    Sensor::kMc,             Sensor::kOilTemperature, Sensor::kReservoirs,
    Sensor::kTp2,            Sensor::kTp3,        Sensor::kCaudalImpulses,
    Sensor::kComp,           Sensor::kDvElectric, Sensor::kLps,
    Sensor::kMpg,            Sensor::kOilLevel,   Sensor::kPressureSwitch,
    Sensor::kTowers,
};

constexpr std::size_t index_of(Sensor s) { return static_cast<std::size_t>(s); }

// 1-based number in the dataset's feature table.
constexpr int sensor_number(Sensor s) { return static_cast<int>(s) + 1; }

constexpr bool is_analog(Sensor s) { return index_of(s) < kNumAnalogSensors; }

// Canonical column name ("DV pressure", "Oil temperature", ...).
std::string_view sensor_name(Sensor s);

// Accepts canonical names plus the common CSV spellings
// (underscores, "Motor_current", "DV_eletric", ...). Case-insensitive.
std::optional<Sensor> parse_sensor(std::string_view name);

enum class ClassLabel : std::uint8_t {
  kNonFailure = 0,
  kOilLeakCompressor = 1,
  kAirLeakDryer = 2,
  kAirLeakClient = 3,
};

inline constexpr std::size_t kNumClasses = 4;

inline constexpr std::array<ClassLabel, kNumClasses> kAllClasses = {
    ClassLabel::kNonFailure, ClassLabel::kOilLeakCompressor,
    ClassLabel::kAirLeakDryer, ClassLabel::kAirLeakClient};

constexpr std::size_t index_of(ClassLabel c) { return static_cast<std::size_t>(c); }

constexpr ClassLabel class_at(std::size_t i) { return static_cast<ClassLabel>(i); }

std::string_view class_name(ClassLabel c);
std::optional<ClassLabel> parse_class(std::string_view name);

// "there is an air leak in the air dryer"
std::string_view class_phrase(ClassLabel c);

}  // namespace pdm
