#include "pdm/select.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pdm/error.hpp"

namespace pdm {

void VarianceState::update(const FeatureVector& fv) {
  if (!schema_) {
    if (!fv.schema) throw SchemaError("feature vector without schema");
    schema_ = fv.schema;
    mean_.assign(schema_->size(), 0.0);
    m2_.assign(schema_->size(), 0.0);
  } else if (fv.schema != schema_ && !(fv.schema && *fv.schema == *schema_)) {
    throw SchemaError("feature vector keys differ from the variance state keys");
  }
  ++count_;
  const double n = static_cast<double>(count_);
  for (std::size_t i = 0; i < mean_.size(); ++i) {
    const double x = fv.values[i];
    const double delta = x - mean_[i];
    mean_[i] += delta / n;
    m2_[i] += delta * (x - mean_[i]);
  }
}

double VarianceState::variance(std::size_t i) const {
  return count_ == 0 ? 0.0 : m2_[i] / static_cast<double>(count_);
}

std::vector<double> VarianceState::variances() const {
  std::vector<double> out(mean_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = variance(i);
  return out;
}

Selection selected_features(const VarianceState& state, double threshold) {
  if (state.count() < 2) throw NotReadyError("variance selection needs at least 2 vectors");
  std::vector<FeatureName> names;
  for (std::size_t i = 0; i < state.schema()->size(); ++i) {
    if (state.variance(i) > threshold) names.push_back((*state.schema())[i]);
  }
  return {threshold, state.count(), std::make_shared<const FeatureSchema>(std::move(names))};
}

FeatureVector apply_selection(const FeatureVector& fv, const Selection& selection) {
  FeatureVector out;
  out.seq_id = fv.seq_id;
  out.timestamp = fv.timestamp;
  out.schema = selection.schema;
  if (!selection.schema) return out;
  out.values.reserve(selection.schema->size());
  for (const auto& name : selection.schema->names()) out.values.push_back(fv.at(name));
  return out;
}

std::shared_ptr<const FeatureSchema> scenario_candidates(Scenario scenario) {
  std::vector<FeatureName> names;
  for (const auto& f : FeatureSchema::full()->names()) {
    if (f.metric == Metric::kRaw) continue;
    if (scenario == Scenario::kMeanStd &&
        (f.window != WindowKind::kAvg || (f.metric != Metric::kAvg && f.metric != Metric::kStd))) {
      continue;
    }
    names.push_back(f);
  }
  return std::make_shared<const FeatureSchema>(std::move(names));
}

std::string to_text(const Selection& selection) {
  char header[96];
  std::snprintf(header, sizeof header, "# threshold=%.17g burn_in=%zu\n", selection.threshold,
                selection.burn_in);
  std::string out = header;
  if (selection.schema) {
    for (const auto& f : selection.schema->names()) out += to_string(f) + "\n";
  }
  return out;
}

Selection selection_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty selection file");
  Selection sel;
  {
    double threshold = 0.0;
    std::size_t burn_in = 0;
    if (std::sscanf(line.c_str(), "# threshold=%lf burn_in=%zu", &threshold, &burn_in) != 2) {
      throw ConfigError("selection file header must read '# threshold=<t> burn_in=<n>'");
    }
    sel.threshold = threshold;
    sel.burn_in = burn_in;
  }
  std::vector<FeatureName> names;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    names.push_back(parse_feature_name(line));
  }
  sel.schema = std::make_shared<const FeatureSchema>(std::move(names));
  return sel;
}

void save_selection(const Selection& selection, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_text(selection);
}

Selection load_selection(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open selection file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return selection_from_text(buf.str());
}

}  // namespace pdm
