#include "cgsmask/metrics.hpp"

#include <sstream>

namespace cgsmask {

GroundTruth::GroundTruth(std::vector<std::pair<Index, Index>> salient, Index features, Index steps)
    : dense_(BinaryMatrix::Zero(features, steps)) {
  if (features < 1 || steps < 1) throw DimensionError("ground truth shape must be at least 1x1");
  for (const auto& [d, t] : salient) {
    if (d < 0 || d >= features || t < 0 || t >= steps) {
      std::ostringstream os;
      os << "salient index (" << d + 1 << "," << t + 1 << ") outside " << features << "x" << steps;
      throw DimensionError(os.str());
    }
    dense_(d, t) = 1;
  }
  *this = GroundTruth(dense_);
}

GroundTruth::GroundTruth(BinaryMatrix dense) : dense_(std::move(dense)) {
  if (dense_.rows() < 1 || dense_.cols() < 1) throw DimensionError("ground truth shape must be at least 1x1");
  for (Index d = 0; d < dense_.rows(); ++d) {
    for (Index t = 0; t < dense_.cols(); ++t) {
      if (dense_(d, t) > 1) throw RangeError("ground truth entries must be 0 or 1");
      if (dense_(d, t)) salient_.emplace_back(d, t);
    }
  }
  if (salient_.empty()) throw RangeError("ground truth needs at least one salient point");
}

std::vector<double> MetricsConfig::default_alpha_grid() {
  std::vector<double> grid;
  grid.reserve(99);
  for (int k = 1; k <= 99; ++k) grid.push_back(k / 100.0);
  return grid;
}

void MetricsConfig::validate() const {
  if (!(discreteness_threshold > 0.0 && discreteness_threshold < 1.0)) {
    throw ConfigError("discreteness threshold must lie in (0,1)");
  }
  if (alpha_grid.empty()) throw ConfigError("alpha grid is empty");
  for (std::size_t k = 0; k < alpha_grid.size(); ++k) {
    if (!(alpha_grid[k] > 0.0 && alpha_grid[k] < 1.0)) throw ConfigError("alpha grid values must lie in (0,1)");
    if (k > 0 && alpha_grid[k] <= alpha_grid[k - 1]) throw ConfigError("alpha grid must be strictly increasing");
  }
}

Index argmax(const Vector& v) {
  if (v.size() == 0) throw DimensionError("argmax of an empty vector");
  Index best = 0;
  for (Index k = 1; k < v.size(); ++k) {
    if (v[k] > v[best]) best = k;
  }
  return best;
}

double dataset_cross_entropy(const BlackBoxModel& model, std::span<const MaskedSample> samples,
                             const PerturbationSpec& spec, double eps) {
  if (samples.empty()) throw MetricError("cross entropy over an empty dataset");
  if (model.task() != TaskKind::Classification) throw ModelError("cross entropy needs a classification model");
  double total = 0.0;
  for (const auto& s : samples) {
    const ModelOutput y = model.predict(s.x);
    validate_output(y);
    const ModelOutput y_hat = model.predict(apply_mask(s.x, s.mask, spec));
    validate_output(y_hat);
    if (y.task != TaskKind::Classification || y_hat.task != TaskKind::Classification) {
      throw ModelError("cross entropy needs probability outputs");
    }
    if (y.values.size() != y_hat.values.size()) throw ModelError("model output length changed between calls");
    total -= std::log(std::clamp(y_hat.values[argmax(y.values)], eps, 1.0));
  }
  return total / static_cast<double>(samples.size());
}

}  // namespace cgsmask
