#ifndef CGSMASK_FITNESS_HPP
#define CGSMASK_FITNESS_HPP

#include <atomic>
#include <cstddef>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cgsmask/core.hpp"
#include "cgsmask/perturbation.hpp"

namespace cgsmask {

inline constexpr double kDefaultLogClamp = 1e-12;

/// Sum of squared differences between two regression outputs.
double error_regression(const ModelOutput& y, const ModelOutput& y_hat);

/// Cross entropy -sum_c y_c log(clamp(y_hat_c, eps, 1)).
double error_classification(const ModelOutput& y, const ModelOutput& y_hat, double eps = kDefaultLogClamp);

/// Dispatches on y.task.
double perturbation_error(const ModelOutput& y, const ModelOutput& y_hat, double eps = kDefaultLogClamp);

struct FitnessOptions {
  double log_clamp = kDefaultLogClamp;
  /// Evaluate f(X) twice at construction and fail if the model is not deterministic.
  bool verify_determinism = true;
};

/// Perturbation error of masks against one (model, input) pair.
///
/// f(X) is computed once. Results are memoised by dense-mask content, so two
/// strip decompositions of the same footprint share one model call, and a
/// DenseMask whose entries are all 0/1 hits the same entry as the equivalent
/// StripMask. Thread-safe; model calls are serialised unless the model
/// declares itself concurrent-safe.
class FitnessEvaluator {
 public:
  FitnessEvaluator(const BlackBoxModel& model, TimeSeries x, PerturbationSpec spec, FitnessOptions options = {});

  double evaluate(const StripMask& m);
  double evaluate(const DenseMask& m);
  double evaluate(const BinaryMatrix& m);

  /// Evaluates a batch of binary masks. Cache misses are deduplicated before
  /// any model call, so the number of calls is independent of `workers`.
  std::vector<double> evaluate_batch(std::span<const BinaryMatrix* const> masks, int workers);

  const TimeSeries& input() const { return x_; }
  const ModelOutput& reference_output() const { return reference_; }
  const Matrix& perturbation() const { return perturbation_; }
  const PerturbationSpec& spec() const { return spec_; }
  const BlackBoxModel& model() const { return model_; }

  /// Model calls made for masks (the reference f(X) calls are not counted).
  std::size_t model_calls() const { return model_calls_.load(); }
  std::size_t cache_hits() const { return cache_hits_.load(); }
  std::size_t cache_size() const;

 private:
  double compute(const TimeSeries& perturbed);
  bool lookup(const std::string& key, double& out) const;
  void store(const std::string& key, double value);

  const BlackBoxModel& model_;
  TimeSeries x_;
  PerturbationSpec spec_;
  FitnessOptions options_;
  Matrix perturbation_;
  ModelOutput reference_;

  mutable std::shared_mutex cache_mutex_;
  std::unordered_map<std::string, double> cache_;
  std::mutex model_mutex_;
  std::atomic<std::size_t> model_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

}  // namespace cgsmask

#endif  // CGSMASK_FITNESS_HPP
