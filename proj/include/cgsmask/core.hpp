#ifndef CGSMASK_CORE_HPP
#define CGSMASK_CORE_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cgsmask/error.hpp"

namespace cgsmask {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Real D x T matrix; rows are features, columns are time steps.
using Matrix = MatrixX<double>;
/// 0/1 matrix with one byte per entry.
using BinaryMatrix = MatrixX<std::uint8_t>;
using Vector = Eigen::VectorXd;

enum class TaskKind { Regression, Classification };

std::string to_string(TaskKind task);
TaskKind parse_task_kind(const std::string& name);

/// Model input X: D features observed over T time steps, all entries finite.
class TimeSeries {
 public:
  explicit TimeSeries(Matrix values);

  Index features() const { return values_.rows(); }
  Index steps() const { return values_.cols(); }
  const Matrix& values() const { return values_; }
  double operator()(Index d, Index t) const { return values_(d, t); }

  friend bool operator==(const TimeSeries& a, const TimeSeries& b) {
    return a.values_ == b.values_;
  }

 private:
  Matrix values_;
};

/// Flattened model prediction. Classification outputs are probability vectors.
struct ModelOutput {
  Vector values;
  TaskKind task = TaskKind::Regression;
};

/// Throws ModelError if the output is non-finite or, for classification,
/// not a probability vector (entries in [0,1], sum within 1e-6 of 1).
void validate_output(const ModelOutput& y);

/// Opaque evaluator X -> f(X). Implementations must be deterministic.
class BlackBoxModel {
 public:
  virtual ~BlackBoxModel() = default;

  virtual ModelOutput predict(const TimeSeries& x) const = 0;
  virtual TaskKind task() const = 0;

  /// True when predict() may be called from several threads at once.
  virtual bool concurrent_safe() const { return false; }
  virtual bool supports_batch() const { return false; }

  virtual std::vector<ModelOutput> predict_batch(std::span<const TimeSeries> xs) const;
};

/// Consecutive run of `length` time steps on one feature. Indices are 0-based
/// in memory; every file format converts to 1-based.
struct Strip {
  Index feature = 0;
  Index start = 0;
  Index length = 1;

  Index last() const { return start + length - 1; }

  friend bool operator==(const Strip&, const Strip&) = default;
};

std::string describe(const Strip& s);

/// Union of strip footprints as a D x T 0/1 matrix. Throws DimensionError on
/// the first strip that leaves the grid.
BinaryMatrix materialize(std::span<const Strip> strips, Index features, Index steps);

/// Weighted mask with entries in [0,1].
class DenseMask {
 public:
  explicit DenseMask(Matrix values);

  Index features() const { return values_.rows(); }
  Index steps() const { return values_.cols(); }
  const Matrix& values() const { return values_; }
  double operator()(Index d, Index t) const { return values_(d, t); }

  bool is_binary() const;

  friend bool operator==(const DenseMask& a, const DenseMask& b) {
    return a.values_ == b.values_;
  }

 private:
  Matrix values_;
};

/// Binary mask defined by a list of strips. The dense footprint is built once
/// at construction and never goes stale since the type is immutable.
class StripMask {
 public:
  StripMask(std::vector<Strip> strips, Index features, Index steps);

  const std::vector<Strip>& strips() const { return strips_; }
  std::size_t strip_count() const { return strips_.size(); }
  const BinaryMatrix& dense() const { return dense_; }
  Index features() const { return dense_.rows(); }
  Index steps() const { return dense_.cols(); }
  Index popcount() const;

  DenseMask to_dense_mask() const;

  friend bool operator==(const StripMask& a, const StripMask& b) {
    return a.strips_ == b.strips_ && a.dense_ == b.dense_;
  }

 private:
  std::vector<Strip> strips_;
  BinaryMatrix dense_;
};

/// Checks that x and m have the same shape and m is a valid mask.
void validate_pair(const TimeSeries& x, const DenseMask& m);

}  // namespace cgsmask

#endif  // CGSMASK_CORE_HPP
