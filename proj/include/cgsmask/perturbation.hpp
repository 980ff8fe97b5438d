#ifndef CGSMASK_PERTURBATION_HPP
#define CGSMASK_PERTURBATION_HPP

#include <string>

#include "cgsmask/core.hpp"

namespace cgsmask {

/// Baseline values that replace masked inputs.
struct PerturbationSpec {
  enum class Kind { Constant, GlobalMean, WindowMean };

  Kind kind = Kind::Constant;
  double constant = 0.0;
  int window = 3;  // half-width K for WindowMean

  static PerturbationSpec make_constant(double c) { return {Kind::Constant, c, 3}; }
  static PerturbationSpec global_mean() { return {Kind::GlobalMean, 0.0, 3}; }
  static PerturbationSpec window_mean(int k = 3) { return {Kind::WindowMean, 0.0, k}; }

  void validate() const;
};

/// Parses "constant:<c>", "zero", "mean", "window" or "window:<K>".
PerturbationSpec parse_perturbation(const std::string& text);
std::string to_string(const PerturbationSpec& spec);

/// Per-point perturbation values P. WindowMean averages the in-range
/// neighbours t' in [t-K, t-1] U [t+1, t+K], dividing by their count.
Matrix perturbation_matrix(const TimeSeries& x, const PerturbationSpec& spec);

/// Elementwise m * P + (1 - m) * x.
template <typename DerivedX, typename DerivedM, typename DerivedP>
Matrix blend(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedM>& m,
             const Eigen::MatrixBase<DerivedP>& p) {
  const auto w = m.template cast<double>().array();
  return (w * p.array() + (1.0 - w) * x.array()).matrix();
}

/// Perturbed input Gamma_M(X).
TimeSeries apply_mask(const TimeSeries& x, const DenseMask& m, const PerturbationSpec& spec);

/// Same as apply_mask with a precomputed perturbation matrix and a binary mask;
/// masked entries are copied from P verbatim.
TimeSeries apply_binary_mask(const TimeSeries& x, const BinaryMatrix& m, const Matrix& perturbation);

}  // namespace cgsmask

#endif  // CGSMASK_PERTURBATION_HPP
