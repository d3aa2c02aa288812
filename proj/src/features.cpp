#include "pdm/features.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <unordered_map>

#include <ext/pb_ds/assoc_container.hpp>
#include <ext/pb_ds/tree_policy.hpp>
#include <fftw3.h>

#include "pdm/error.hpp"

namespace pdm {
namespace {

constexpr std::array<std::string_view, 7> kMetricNames = {"raw", "avg", "std", "q1",
                                                          "q2",  "q3",  "fft"};
constexpr std::array<std::string_view, 7> kMetricLabels = {
    "Raw value", "Average", "Standard deviation", "Q1", "Q2", "Q3", "FFT"};
constexpr std::array<std::string_view, 5> kWindowNames = {"W_avg", "W_q1", "W_q2", "W_q3",
                                                          "none"};
constexpr std::array<std::string_view, 5> kWindowLabels = {"AVG", "Q1", "Q2", "Q3", "none"};

// Real-to-complex transform of one fixed length. FFTW_ESTIMATE keeps the
// chosen algorithm, and therefore the rounding, identical between runs.
class SpectrumPlan {
 public:
  explicit SpectrumPlan(std::size_t n) : n_(n) {
    in_ = fftw_alloc_real(n_);
    out_ = fftw_alloc_complex(n_ / 2 + 1);
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n_), in_, out_, FFTW_ESTIMATE);
  }
  ~SpectrumPlan() {
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  SpectrumPlan(const SpectrumPlan&) = delete;
  SpectrumPlan& operator=(const SpectrumPlan&) = delete;

  double max_non_dc_magnitude(std::span<const double> x) {
    std::copy(x.begin(), x.end(), in_);
    fftw_execute(plan_);
    double best = 0.0;
    for (std::size_t k = 1; k <= n_ / 2; ++k) {
      best = std::max(best, std::hypot(out_[k][0], out_[k][1]));
    }
    return best;
  }

 private:
  std::size_t n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

SpectrumPlan& plan_for(std::size_t n) {
  thread_local std::unordered_map<std::size_t, std::unique_ptr<SpectrumPlan>> plans;
  auto& slot = plans[n];
  if (!slot) slot = std::make_unique<SpectrumPlan>(n);
  return *slot;
}

std::size_t window_slot(Sensor s, WindowKind w) {
  return index_of(s) * 4 + static_cast<std::size_t>(w);
}

}  // namespace

std::string_view metric_name(Metric m) { return kMetricNames[static_cast<std::size_t>(m)]; }
std::string_view window_name(WindowKind w) { return kWindowNames[static_cast<std::size_t>(w)]; }
std::string_view metric_label(Metric m) { return kMetricLabels[static_cast<std::size_t>(m)]; }
std::string_view window_label(WindowKind w) {
  return kWindowLabels[static_cast<std::size_t>(w)];
}

std::optional<Metric> parse_metric(std::string_view s) {
  for (std::size_t i = 0; i < kMetricNames.size(); ++i) {
    if (kMetricNames[i] == s) return static_cast<Metric>(i);
  }
  return std::nullopt;
}

std::optional<WindowKind> parse_window(std::string_view s) {
  for (std::size_t i = 0; i < kWindowNames.size(); ++i) {
    if (kWindowNames[i] == s) return static_cast<WindowKind>(i);
  }
  return std::nullopt;
}

std::size_t window_length(const WindowSpec& spec, WindowKind w) {
  switch (w) {
    case WindowKind::kAvg: return spec.w_avg;
    case WindowKind::kQ1: return spec.w_q1;
    case WindowKind::kQ2: return spec.w_q2;
    case WindowKind::kQ3: return spec.w_q3;
    case WindowKind::kNone: break;
  }
  return 1;
}

std::string to_string(const FeatureName& f) {
  std::string out(sensor_name(f.sensor));
  out += '|';
  out += metric_name(f.metric);
  out += '|';
  out += window_name(f.window);
  return out;
}

FeatureName parse_feature_name(std::string_view s) {
  const auto p1 = s.find('|');
  const auto p2 = p1 == std::string_view::npos ? p1 : s.find('|', p1 + 1);
  if (p2 == std::string_view::npos || s.find('|', p2 + 1) != std::string_view::npos) {
    throw IntegrityError("malformed feature name '" + std::string(s) + "'");
  }
  const auto sensor = parse_sensor(s.substr(0, p1));
  const auto metric = parse_metric(s.substr(p1 + 1, p2 - p1 - 1));
  const auto window = parse_window(s.substr(p2 + 1));
  if (!sensor || !metric || !window ||
      ((*metric == Metric::kRaw) != (*window == WindowKind::kNone))) {
    throw IntegrityError("malformed feature name '" + std::string(s) + "'");
  }
  return {*sensor, *metric, *window};
}

std::string describe(const FeatureName& f) {
  std::string out(metric_label(f.metric));
  out += " of ";
  out += sensor_name(f.sensor);
  if (f.metric != Metric::kRaw) {
    out += " from ";
    out += window_label(f.window);
    out += "-size sliding window";
  }
  return out;
}

FeatureSchema::FeatureSchema(std::vector<FeatureName> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!index_.emplace(names_[i], i).second) {
      throw SchemaError("duplicate feature " + to_string(names_[i]));
    }
  }
}

std::shared_ptr<const FeatureSchema> FeatureSchema::full() {
  static const auto schema = [] {
    std::vector<FeatureName> names;
    for (Sensor s : kAllSensors) names.push_back({s, Metric::kRaw, WindowKind::kNone});
    for (Sensor s : kAllSensors) {
      for (WindowKind w : kWindowKinds) {
        for (Metric m : kEngineeredMetrics) names.push_back({s, m, w});
      }
    }
    return std::make_shared<const FeatureSchema>(std::move(names));
  }();
  return schema;
}

std::optional<std::size_t> FeatureSchema::index_of(const FeatureName& f) const {
  auto it = index_.find(f);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double FeatureVector::at(const FeatureName& f) const {
  const auto i = schema ? schema->index_of(f) : std::nullopt;
  if (!i) throw SchemaError("feature " + to_string(f) + " absent from vector");
  return values[*i];
}

WindowStats window_stats(std::span<const double> window) {
  const std::size_t w = window.size();
  if (w < 2) throw ArgumentError("window statistics need w >= 2");
  double sum = 0.0;
  for (double x : window) sum += x;
  const double mean = sum / static_cast<double>(w);
  double ss = 0.0;
  for (double x : window) ss += (x - mean) * (x - mean);
  std::vector<double> sorted(window.begin(), window.end());
  std::sort(sorted.begin(), sorted.end());
  return {mean, std::sqrt(ss / static_cast<double>(w)), nearest_rank_quartile(sorted, 1),
          nearest_rank_quartile(sorted, 2), nearest_rank_quartile(sorted, 3)};
}

double fft_feature(std::span<const double> window) {
  if (window.size() < 2) throw ArgumentError("fft feature needs w >= 2");
  return plan_for(window.size()).max_non_dc_magnitude(window);
}

struct SlidingWindow::OrderIndex {
  using Key = std::pair<double, std::uint64_t>;
  __gnu_pbds::tree<Key, __gnu_pbds::null_type, std::less<Key>, __gnu_pbds::rb_tree_tag,
                   __gnu_pbds::tree_order_statistics_node_update>
      tree;
};

SlidingWindow::SlidingWindow(std::size_t length)
    : length_(length), ring_(length), order_(std::make_unique<OrderIndex>()) {
  if (length_ < 2) throw ArgumentError("sliding window length must be >= 2");
}

SlidingWindow::~SlidingWindow() = default;
SlidingWindow::SlidingWindow(SlidingWindow&&) noexcept = default;
SlidingWindow& SlidingWindow::operator=(SlidingWindow&&) noexcept = default;

void SlidingWindow::push(double x) {
  if (size_ == length_) {
    const std::uint64_t oldest = pushed_ - length_;
    order_->tree.erase({ring_[head_], oldest});
  } else {
    ++size_;
  }
  ring_[head_] = x;
  order_->tree.insert({x, pushed_});
  ++pushed_;
  head_ = (head_ + 1) % length_;
}

void SlidingWindow::chronological(std::vector<double>& out) const {
  out.resize(size_);
  const std::size_t start = (head_ + length_ - size_) % length_;
  for (std::size_t i = 0; i < size_; ++i) out[i] = ring_[(start + i) % length_];
}

std::vector<double> SlidingWindow::chronological() const {
  std::vector<double> out;
  chronological(out);
  return out;
}

std::vector<double> SlidingWindow::sorted() const {
  std::vector<double> out;
  out.reserve(size_);
  for (const auto& key : order_->tree) out.push_back(key.first);
  return out;
}

double SlidingWindow::mean() const {
  if (size_ == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < size_; ++i) sum += ring_[i];
  return sum / static_cast<double>(size_);
}

double SlidingWindow::population_std() const {
  if (size_ == 0) return 0.0;
  const double m = mean();
  double ss = 0.0;
  for (std::size_t i = 0; i < size_; ++i) ss += (ring_[i] - m) * (ring_[i] - m);
  return std::sqrt(ss / static_cast<double>(size_));
}

double SlidingWindow::quartile(int k) const {
  if (size_ == 0) throw NotReadyError("empty window");
  auto idx = static_cast<std::size_t>(std::lround(static_cast<double>(k) * size_ / 4.0));
  idx = std::min(idx, size_ - 1);
  return order_->tree.find_by_order(idx)->first;
}

WindowStats SlidingWindow::stats() const {
  return {mean(), population_std(), quartile(1), quartile(2), quartile(3)};
}

FeatureEngine::FeatureEngine(const WindowSpec& spec)
    : spec_(spec), full_schema_(FeatureSchema::full()) {
  validate(spec_);
  windows_.reserve(kNumSensors * 4);
  for (std::size_t s = 0; s < kNumSensors; ++s) {
    for (WindowKind w : kWindowKinds) windows_.emplace_back(window_length(spec_, w));
  }
}

bool FeatureEngine::push(const RawSample& s) {
  for (Sensor sensor : kAllSensors) {
    const double x = s.value(sensor);
    for (WindowKind w : kWindowKinds) windows_[window_slot(sensor, w)].push(x);
  }
  ++seen_;
  last_ = s;
  return ready();
}

std::variant<FeatureVector, ColdStart> FeatureEngine::push_sample(const RawSample& s) {
  if (!push(s)) return progress();
  return compute_all();
}

const SlidingWindow& FeatureEngine::window(Sensor s, WindowKind w) const {
  return windows_[window_slot(s, w)];
}

double FeatureEngine::compute_one(const FeatureName& f) const {
  if (f.metric == Metric::kRaw) return last_.value(f.sensor);
  const auto& win = window(f.sensor, f.window);
  switch (f.metric) {
    case Metric::kAvg: return win.mean();
    case Metric::kStd: return win.population_std();
    case Metric::kQ1: return win.quartile(1);
    case Metric::kQ2: return win.quartile(2);
    case Metric::kQ3: return win.quartile(3);
    case Metric::kFft:
      win.chronological(scratch_);
      return fft_feature(scratch_);
    case Metric::kRaw: break;
  }
  return 0.0;
}

FeatureVector FeatureEngine::compute(const std::shared_ptr<const FeatureSchema>& subset) const {
  if (!ready()) throw NotReadyError("feature windows are still warming up");
  FeatureVector fv;
  fv.seq_id = last_.seq_id;
  fv.timestamp = last_.timestamp;
  fv.schema = subset;
  fv.values.resize(subset->size());

  // Mean and std share one pass per window.
  std::array<std::optional<std::pair<double, double>>, kNumSensors * 4> moments{};
  for (std::size_t i = 0; i < subset->size(); ++i) {
    const FeatureName& f = (*subset)[i];
    if (f.metric == Metric::kAvg || f.metric == Metric::kStd) {
      auto& slot = moments[window_slot(f.sensor, f.window)];
      if (!slot) {
        const auto& win = window(f.sensor, f.window);
        slot.emplace(win.mean(), win.population_std());
      }
      fv.values[i] = f.metric == Metric::kAvg ? slot->first : slot->second;
    } else {
      fv.values[i] = compute_one(f);
    }
  }
  return fv;
}

FeatureVector FeatureEngine::compute_all() const { return compute(full_schema_); }

}  // namespace pdm
