#ifndef CGSMASK_METRICS_HPP
#define CGSMASK_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cgsmask/core.hpp"
#include "cgsmask/perturbation.hpp"

namespace cgsmask {

/// Known salient set A and its indicator matrix C.
class GroundTruth {
 public:
  GroundTruth(std::vector<std::pair<Index, Index>> salient, Index features, Index steps);
  explicit GroundTruth(BinaryMatrix dense);

  /// Sorted, 0-based (feature, step) pairs.
  const std::vector<std::pair<Index, Index>>& salient() const { return salient_; }
  const BinaryMatrix& dense() const { return dense_; }
  Index size() const { return static_cast<Index>(salient_.size()); }
  Index features() const { return dense_.rows(); }
  Index steps() const { return dense_.cols(); }

  friend bool operator==(const GroundTruth& a, const GroundTruth& b) { return a.dense_ == b.dense_; }

 private:
  std::vector<std::pair<Index, Index>> salient_;
  BinaryMatrix dense_;
};

struct MetricsConfig {
  double discreteness_threshold = 0.10;
  std::vector<double> alpha_grid = default_alpha_grid();

  static std::vector<double> default_alpha_grid();  // 0.01, 0.02, ..., 0.99
  void validate() const;
};

struct PrecisionRecall {
  std::optional<double> precision;  // empty when no point reaches the threshold
  double recall = 0.0;
};

struct AreaScores {
  double aup = 0.0;
  double aur = 0.0;
};

namespace detail {

template <typename Derived>
void require_shape(const Eigen::MatrixBase<Derived>& m, const GroundTruth& gt) {
  if (m.rows() != gt.features() || m.cols() != gt.steps()) throw DimensionError("mask and ground truth differ in shape");
}

inline double xlogx(double v) { return v <= 0.0 ? 0.0 : v * std::log(v); }

}  // namespace detail

/// 1 where m >= alpha.
template <typename Derived>
BinaryMatrix binarize(const Eigen::MatrixBase<Derived>& m, double alpha) {
  return (m.template cast<double>().array() >= alpha).template cast<std::uint8_t>();
}

template <typename Derived>
PrecisionRecall precision_recall(const Eigen::MatrixBase<Derived>& m, const GroundTruth& gt, double alpha) {
  detail::require_shape(m, gt);
  const auto selected = (m.template cast<double>().array() >= alpha);
  const auto truth = gt.dense().array() != 0;
  const auto hits = static_cast<double>((selected && truth).count());
  const auto picked = static_cast<double>(selected.count());
  PrecisionRecall pr;
  if (picked > 0) pr.precision = hits / picked;
  pr.recall = hits / static_cast<double>(gt.size());
  return pr;
}

/// Mean precision and recall over cfg.alpha_grid. Thresholds where nothing is
/// selected are left out of the precision mean; MetricError if that is all of them.
template <typename Derived>
AreaScores aup_aur(const Eigen::MatrixBase<Derived>& m, const GroundTruth& gt, const MetricsConfig& cfg = {}) {
  cfg.validate();
  double p_sum = 0.0;
  double r_sum = 0.0;
  std::size_t p_count = 0;
  for (const double alpha : cfg.alpha_grid) {
    const PrecisionRecall pr = precision_recall(m, gt, alpha);
    if (pr.precision) {
      p_sum += *pr.precision;
      ++p_count;
    }
    r_sum += pr.recall;
  }
  if (p_count == 0) throw MetricError("AUP undefined: mask selects no point at any threshold");
  return {p_sum / static_cast<double>(p_count), r_sum / static_cast<double>(cfg.alpha_grid.size())};
}

/// Number of adjacent-in-time pairs whose values differ by more than beta.
template <typename Derived>
Index discreteness(const Eigen::MatrixBase<Derived>& m, double beta = 0.10) {
  if (m.cols() < 2) return 0;
  const auto v = m.template cast<double>();
  const Index T = v.cols();
  return ((v.rightCols(T - 1) - v.leftCols(T - 1)).array().abs() > beta).count();
}

/// Sum of binary entropies of the entries, with 0 ln 0 = 0.
template <typename Derived>
double entropy(const Eigen::MatrixBase<Derived>& m) {
  const auto v = m.template cast<double>().eval();
  if ((v.array() < 0.0).any() || (v.array() > 1.0).any()) throw RangeError("entropy needs entries in [0,1]");
  double e = 0.0;
  for (Index d = 0; d < v.rows(); ++d) {
    for (Index t = 0; t < v.cols(); ++t) e -= detail::xlogx(v(d, t)) + detail::xlogx(1.0 - v(d, t));
  }
  return e;
}

/// Indices of the ceil(q * D * T) largest entries, larger values first and
/// ties in row-major order.
template <typename Derived>
std::vector<Index> top_indices(const Eigen::MatrixBase<Derived>& m, double q) {
  if (!(q > 0.0 && q <= 1.0)) throw RangeError("top fraction must lie in (0,1]");
  const Matrix v = m.template cast<double>();
  const Index n = v.size();
  const auto k = std::min<Index>(n, static_cast<Index>(std::ceil(q * static_cast<double>(n) - 1e-9)));
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return v.data()[a] > v.data()[b]; });
  order.resize(static_cast<std::size_t>(std::max<Index>(k, 1)));
  return order;
}

/// 1 on the ceil(q * D * T) largest entries.
template <typename Derived>
BinaryMatrix top_fraction(const Eigen::MatrixBase<Derived>& m, double q) {
  BinaryMatrix out = BinaryMatrix::Zero(m.rows(), m.cols());
  for (const Index k : top_indices(m, q)) out.data()[k] = 1;
  return out;
}

/// Keeps the original values of the top ceil(q * D * T) entries, zero elsewhere.
template <typename Derived>
Matrix top_fraction_values(const Eigen::MatrixBase<Derived>& m, double q) {
  const Matrix v = m.template cast<double>();
  Matrix out = Matrix::Zero(v.rows(), v.cols());
  for (const Index k : top_indices(v, q)) out.data()[k] = v.data()[k];
  return out;
}

/// Position of the largest entry; ties go to the lowest index.
Index argmax(const Vector& v);

struct MaskedSample {
  TimeSeries x;
  DenseMask mask;
};

/// Mean cross entropy between the predicted class of f(X_n) and f(Gamma_M(X_n)).
double dataset_cross_entropy(const BlackBoxModel& model, std::span<const MaskedSample> samples,
                             const PerturbationSpec& spec, double eps = 1e-12);

}  // namespace cgsmask

#endif  // CGSMASK_METRICS_HPP
