#include <doctest.h>

#include "pdm/error.hpp"
#include "pdm/schema.hpp"
#include "pdm/time.hpp"

using namespace pdm;

TEST_CASE("sensor numbering follows the dataset table") {
  CHECK(sensor_number(Sensor::kDvPressure) == 1);
  CHECK(sensor_number(Sensor::kFlowmeter) == 2);
  CHECK(sensor_number(Sensor::kReservoirs) == 6);
  CHECK(sensor_number(Sensor::kTp3) == 8);
  CHECK(sensor_number(Sensor::kTowers) == 16);
  CHECK(is_analog(Sensor::kTp3));
  CHECK_FALSE(is_analog(Sensor::kCaudalImpulses));
}

TEST_CASE("sensor names round-trip and common spellings parse") {
  for (Sensor s : kAllSensors) CHECK(parse_sensor(sensor_name(s)) == s);
  CHECK(parse_sensor("Motor_current") == Sensor::kMc);
  CHECK(parse_sensor("DV_eletric") == Sensor::kDvElectric);
  CHECK(parse_sensor("oil_temperature") == Sensor::kOilTemperature);
  CHECK(parse_sensor("TP2") == Sensor::kTp2);
  CHECK_FALSE(parse_sensor("voltage").has_value());
}

TEST_CASE("class labels round-trip and render as phrases") {
  for (ClassLabel c : kAllClasses) CHECK(parse_class(class_name(c)) == c);
  CHECK(class_phrase(ClassLabel::kAirLeakDryer) == "there is an air leak in the air dryer");
  CHECK(index_of(ClassLabel::kNonFailure) == 0);
  CHECK(index_of(ClassLabel::kAirLeakClient) == 3);
}

TEST_CASE("timestamps parse in dataset and report formats") {
  const Timestamp t = parse_timestamp("2022-02-28 21:53:00");
  CHECK(parse_timestamp("28-02-22 21:53") == t);
  CHECK(parse_timestamp("2022-02-28T21:53:00Z") == t);
  CHECK(parse_timestamp("2022-02-28 21:53:00.000") == t);
  CHECK(parse_timestamp("2022-02-28 21:53") == t);
  CHECK(format_timestamp(t) == "2022-02-28T21:53:00");
  CHECK(parse_timestamp("2022-03-01 00:00:00") - t == 2 * 3600 + 7 * 60);
  CHECK(parse_timestamp("1970-01-01 00:00:00") == 0);
  CHECK(day_index(parse_timestamp("2022-03-01 23:59:59")) ==
        day_index(parse_timestamp("2022-03-01 00:00:00")));
  CHECK_THROWS_AS(parse_timestamp("yesterday"), ArgumentError);
  CHECK_THROWS_AS(parse_timestamp("2022-02-30 10:00:00"), ArgumentError);
}
