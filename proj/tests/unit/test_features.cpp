#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "pdm/error.hpp"
#include "pdm/features.hpp"
#include "support.hpp"

using namespace pdm;
using testing::rel_err;

namespace {

// Reference statistics from a plain copy of the window.
WindowStats recompute(std::vector<double> w) {
  const double n = static_cast<double>(w.size());
  double mean = 0.0;
  for (double x : w) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : w) ss += (x - mean) * (x - mean);
  std::sort(w.begin(), w.end());
  auto q = [&](int k) {
    return w[std::min<std::size_t>(static_cast<std::size_t>(std::lround(k * n / 4.0)), w.size() - 1)];
  };
  return {mean, std::sqrt(ss / n), q(1), q(2), q(3)};
}

double direct_dft_max(const std::vector<double>& x) {
  const std::size_t w = x.size();
  double best = 0.0;
  for (std::size_t k = 1; k <= w / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < w; ++t) {
      acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * t) /
                                        static_cast<double>(w));
    }
    best = std::max(best, std::abs(acc));
  }
  return best;
}

}  // namespace

TEST_CASE("window stats of a tiny window") {
  const std::vector<double> w{4, 1, 3, 2};
  const WindowStats s = window_stats(w);
  CHECK(s.avg == doctest::Approx(2.5));
  CHECK(s.std == doctest::Approx(std::sqrt(1.25)));
  CHECK(s.q1 == 2.0);
  CHECK(s.q2 == 3.0);
  CHECK(s.q3 == 4.0);
}

TEST_CASE("incremental window stats match a full recompute after every push") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t length : {2, 3, 8, 117, 531}) {
    SlidingWindow sw(length);
    std::vector<double> history;
    std::size_t checked = 0;
    for (int i = 0; i < 12000; ++i) {
      double x = 7.0 + 3.0 * noise(rng);
      if (i % 13 == 0) x = std::round(x);  // duplicates exercise tie handling
      sw.push(x);
      history.push_back(x);
      if (!sw.full()) continue;
      const std::vector<double> window(history.end() - static_cast<std::ptrdiff_t>(length), history.end());
      CHECK(sw.chronological() == window);
      if (i % 7 != 0) continue;
      const WindowStats got = sw.stats();
      const WindowStats want = recompute(window);
      CHECK(rel_err(got.avg, want.avg) <= 1e-12);
      CHECK(rel_err(got.std, want.std) <= 1e-12);
      CHECK(got.q1 == want.q1);
      CHECK(got.q2 == want.q2);
      CHECK(got.q3 == want.q3);
      ++checked;
    }
    CHECK(checked > 1000);
  }
}

TEST_CASE("FFT feature of a pure tone at an exact bin") {
  std::vector<double> x(8);
  for (std::size_t t = 0; t < 8; ++t) x[t] = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 4.0);
  CHECK(fft_feature(x) == doctest::Approx(4.0).epsilon(1e-12));
  const std::vector<double> flat(16, 3.0);
  CHECK(fft_feature(flat) == doctest::Approx(0.0));
}

TEST_CASE("FFT feature matches a direct DFT for arbitrary lengths") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (std::size_t w : {2, 3, 5, 16, 97, 116, 531, 864, 1399}) {
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<double> x(w);
      for (auto& v : x) v = 10.0 + u(rng);
      CHECK(rel_err(fft_feature(x), direct_dft_max(x)) <= 1e-9);
    }
  }
}

TEST_CASE("quartiles are window members and tolerate one spurious value") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> w(8 + rng() % 40);
    for (auto& v : w) v = u(rng);
    const WindowStats s = window_stats(w);
    CHECK(std::find(w.begin(), w.end(), s.q2) != w.end());
    std::vector<double> sorted = w;
    std::sort(sorted.begin(), sorted.end());
    const auto spiked = [&] {
      auto c = w;
      c[rng() % c.size()] = 1e9;
      return c;
    }();
    const double moved = std::fabs(window_stats(spiked).q2 - s.q2);
    double max_gap = 0.0;
    for (std::size_t i = 1; i < sorted.size(); ++i) max_gap = std::max(max_gap, sorted[i] - sorted[i - 1]);
    CHECK(moved <= max_gap + 1e-15);
  }
}

TEST_CASE("feature names serialize, parse and describe") {
  const FeatureName f{Sensor::kReservoirs, Metric::kFft, WindowKind::kQ1};
  CHECK(to_string(f) == "Reservoirs|fft|W_q1");
  CHECK(parse_feature_name("Reservoirs|fft|W_q1") == f);
  CHECK(describe(f) == "FFT of Reservoirs from Q1-size sliding window");
  CHECK(parse_feature_name("TP2|raw|none") == FeatureName{Sensor::kTp2, Metric::kRaw, WindowKind::kNone});
  CHECK_THROWS_AS(parse_feature_name("TP2|raw|W_q1"), IntegrityError);
  CHECK_THROWS_AS(parse_feature_name("TP2|avg|none"), IntegrityError);
  CHECK_THROWS_AS(parse_feature_name("Nope|avg|W_q1"), IntegrityError);
  for (const auto& n : FeatureSchema::full()->names()) CHECK(parse_feature_name(to_string(n)) == n);
}

TEST_CASE("the full schema lists 16 raw signals and 384 engineered features") {
  const auto full = FeatureSchema::full();
  REQUIRE(full->size() == 400);
  for (std::size_t i = 0; i < 16; ++i) CHECK((*full)[i].metric == Metric::kRaw);
  CHECK((*full)[16] == FeatureName{Sensor::kDvPressure, Metric::kAvg, WindowKind::kAvg});
  CHECK((*full)[399] == FeatureName{Sensor::kTowers, Metric::kFft, WindowKind::kQ3});
  CHECK_THROWS_AS(FeatureSchema({(*full)[3], (*full)[3]}), SchemaError);
}

TEST_CASE("the engine withholds vectors until the longest window is full") {
  const WindowSpec spec{6, 3, 4, 5};
  FeatureEngine engine(spec);
  std::mt19937_64 rng(31);
  std::vector<std::vector<double>> history(kNumSensors);
  for (std::uint64_t i = 0; i < 40; ++i) {
    RawSample s;
    s.seq_id = i;
    s.timestamp = static_cast<Timestamp>(1000 + i);
    for (std::size_t k = 0; k < kNumSensors; ++k) {
      s.values[k] = static_cast<double>(rng() % 100) / 7.0;
      history[k].push_back(s.values[k]);
    }
    auto out = engine.push_sample(s);
    if (i + 1 < 6) {
      REQUIRE(std::holds_alternative<ColdStart>(out));
      CHECK(std::get<ColdStart>(out).seen == i + 1);
      CHECK(std::get<ColdStart>(out).required == 6);
      continue;
    }
    REQUIRE(std::holds_alternative<FeatureVector>(out));
    const FeatureVector& fv = std::get<FeatureVector>(out);
    CHECK(fv.size() == 400);
    CHECK(fv.seq_id == i);
    for (Sensor sensor : kAllSensors) {
      const auto& h = history[index_of(sensor)];
      CHECK(fv.at({sensor, Metric::kRaw, WindowKind::kNone}) == h.back());
      for (WindowKind w : kWindowKinds) {
        const std::size_t len = window_length(spec, w);
        const std::vector<double> win(h.end() - static_cast<std::ptrdiff_t>(len), h.end());
        const WindowStats want = recompute(win);
        CHECK(rel_err(fv.at({sensor, Metric::kAvg, w}), want.avg) <= 1e-12);
        CHECK(rel_err(fv.at({sensor, Metric::kStd, w}), want.std) <= 1e-12);
        CHECK(fv.at({sensor, Metric::kQ1, w}) == want.q1);
        CHECK(fv.at({sensor, Metric::kQ2, w}) == want.q2);
        CHECK(fv.at({sensor, Metric::kQ3, w}) == want.q3);
        CHECK(rel_err(fv.at({sensor, Metric::kFft, w}), direct_dft_max(win)) <= 1e-9);
      }
    }
  }
}

TEST_CASE("subset computation equals projecting the full vector") {
  FeatureEngine engine(WindowSpec{9, 4, 5, 7});
  std::mt19937_64 rng(37);
  for (std::uint64_t i = 0; i < 30; ++i) {
    RawSample s;
    s.seq_id = i;
    for (auto& v : s.values) v = static_cast<double>(rng() % 1000) / 10.0;
    engine.push(s);
  }
  const FeatureVector all = engine.compute_all();
  std::vector<FeatureName> names;
  for (std::size_t i = 0; i < all.size(); i += 7) names.push_back((*all.schema)[i]);
  std::reverse(names.begin(), names.end());
  const auto subset = std::make_shared<const FeatureSchema>(names);
  const FeatureVector part = engine.compute(subset);
  REQUIRE(part.size() == names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    CHECK(part.values[i] == all.at(names[i]));
    CHECK(engine.compute_one(names[i]) == all.at(names[i]));
  }
  CHECK_THROWS_AS(part.at({Sensor::kTowers, Metric::kFft, WindowKind::kQ2}), SchemaError);
}
