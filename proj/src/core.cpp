#include "cgsmask/core.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "cgsmask/parallel.hpp"

namespace cgsmask {

std::string to_string(TaskKind task) {
  return task == TaskKind::Regression ? "regression" : "classification";
}

TaskKind parse_task_kind(const std::string& name) {
  if (name == "regression") return TaskKind::Regression;
  if (name == "classification") return TaskKind::Classification;
  throw ConfigError("unknown task kind '" + name + "'");
}

TimeSeries::TimeSeries(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw DimensionError("time series needs at least one feature and one time step");
  }
  if (!values_.allFinite()) throw RangeError("time series contains non-finite values");
}

void validate_output(const ModelOutput& y) {
  if (!y.values.allFinite()) throw ModelError("model output contains non-finite values");
  if (y.task != TaskKind::Classification) return;
  if (y.values.size() == 0) throw ModelError("classification output is empty");
  if ((y.values.array() < 0.0).any() || (y.values.array() > 1.0).any()) {
    throw ModelError("classification output has entries outside [0,1]");
  }
  const double sum = y.values.sum();
  if (std::abs(sum - 1.0) > 1e-6) {
    std::ostringstream os;
    os << "classification output sums to " << sum << ", expected 1";
    throw ModelError(os.str());
  }
}

std::vector<ModelOutput> BlackBoxModel::predict_batch(std::span<const TimeSeries> xs) const {
  std::vector<ModelOutput> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(predict(x));
  return out;
}

std::string describe(const Strip& s) {
  std::ostringstream os;
  os << "strip{feature=" << s.feature + 1 << ", start=" << s.start + 1 << ", length=" << s.length << "}";
  return os.str();
}

BinaryMatrix materialize(std::span<const Strip> strips, Index features, Index steps) {
  if (features < 1 || steps < 1) throw DimensionError("mask shape must be at least 1x1");
  BinaryMatrix m = BinaryMatrix::Zero(features, steps);
  for (const auto& s : strips) {
    if (s.feature < 0 || s.feature >= features || s.start < 0 || s.length < 1 || s.last() >= steps) {
      std::ostringstream os;
      os << describe(s) << " out of bounds for " << features << "x" << steps << " mask";
      throw DimensionError(os.str());
    }
    m.row(s.feature).segment(s.start, s.length).setOnes();
  }
  return m;
}

DenseMask::DenseMask(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) throw DimensionError("mask shape must be at least 1x1");
  if (!values_.allFinite()) throw RangeError("mask contains non-finite values");
  if ((values_.array() < 0.0).any() || (values_.array() > 1.0).any()) {
    throw RangeError("mask entries must lie in [0,1]");
  }
}

bool DenseMask::is_binary() const {
  return ((values_.array() == 0.0) || (values_.array() == 1.0)).all();
}

StripMask::StripMask(std::vector<Strip> strips, Index features, Index steps)
    : strips_(std::move(strips)), dense_(materialize(strips_, features, steps)) {}

Index StripMask::popcount() const { return dense_.cast<Index>().sum(); }

DenseMask StripMask::to_dense_mask() const { return DenseMask(dense_.cast<double>()); }

void validate_pair(const TimeSeries& x, const DenseMask& m) {
  if (x.features() != m.features() || x.steps() != m.steps()) {
    std::ostringstream os;
    os << "shape mismatch: series is " << x.features() << "x" << x.steps() << ", mask is " << m.features()
       << "x" << m.steps();
    throw DimensionError(os.str());
  }
}

int workers_from_env(int fallback) {
  if (const char* env = std::getenv("CGSMASK_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 1024) return static_cast<int>(v);
  }
  return fallback;
}

}  // namespace cgsmask
