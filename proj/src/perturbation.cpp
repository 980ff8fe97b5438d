#include "cgsmask/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cgsmask {

void PerturbationSpec::validate() const {
  if (kind == Kind::Constant && !std::isfinite(constant)) {
    throw ConfigError("constant perturbation value must be finite");
  }
  if (kind == Kind::WindowMean && window < 1) throw ConfigError("window half-width K must be >= 1");
}

PerturbationSpec parse_perturbation(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  PerturbationSpec spec;
  try {
    if (head == "zero" && arg.empty()) {
      spec = PerturbationSpec::make_constant(0.0);
    } else if (head == "constant") {
      spec = PerturbationSpec::make_constant(arg.empty() ? 0.0 : std::stod(arg));
    } else if (head == "mean" && arg.empty()) {
      spec = PerturbationSpec::global_mean();
    } else if (head == "window") {
      spec = PerturbationSpec::window_mean(arg.empty() ? 3 : std::stoi(arg));
    } else {
      throw ConfigError("unknown perturbation '" + text + "'");
    }
  } catch (const std::logic_error&) {
    throw ConfigError("bad perturbation argument in '" + text + "'");
  }
  spec.validate();
  return spec;
}

std::string to_string(const PerturbationSpec& spec) {
  std::ostringstream os;
  switch (spec.kind) {
    case PerturbationSpec::Kind::Constant:
      os << "constant:" << spec.constant;
      break;
    case PerturbationSpec::Kind::GlobalMean:
      os << "mean";
      break;
    case PerturbationSpec::Kind::WindowMean:
      os << "window:" << spec.window;
      break;
  }
  return os.str();
}

Matrix perturbation_matrix(const TimeSeries& x, const PerturbationSpec& spec) {
  spec.validate();
  const Matrix& v = x.values();
  const Index T = x.steps();
  switch (spec.kind) {
    case PerturbationSpec::Kind::Constant:
      return Matrix::Constant(x.features(), T, spec.constant);
    case PerturbationSpec::Kind::GlobalMean:
      return v.rowwise().mean().replicate(1, T);
    case PerturbationSpec::Kind::WindowMean:
      break;
  }

  if (T == 1) throw DimensionError("window-mean perturbation needs at least two time steps");
  const Index K = spec.window;
  Matrix p(x.features(), T);
  for (Index t = 0; t < T; ++t) {
    const Index lo = std::max<Index>(0, t - K);
    const Index hi = std::min<Index>(T - 1, t + K);
    const auto count = static_cast<double>(hi - lo);  // window minus the centre point
    p.col(t) = (v.middleCols(lo, hi - lo + 1).rowwise().sum() - v.col(t)) / count;
  }
  return p;
}

TimeSeries apply_mask(const TimeSeries& x, const DenseMask& m, const PerturbationSpec& spec) {
  validate_pair(x, m);
  return TimeSeries(blend(x.values(), m.values(), perturbation_matrix(x, spec)));
}

TimeSeries apply_binary_mask(const TimeSeries& x, const BinaryMatrix& m, const Matrix& perturbation) {
  if (m.rows() != x.features() || m.cols() != x.steps() || perturbation.rows() != x.features() ||
      perturbation.cols() != x.steps()) {
    throw DimensionError("binary mask shape does not match series");
  }
  return TimeSeries((m.array() != 0).select(perturbation, x.values()));
}

}  // namespace cgsmask
