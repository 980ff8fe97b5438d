#include "cgsmask/fitness.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <optional>

#include "cgsmask/parallel.hpp"

namespace cgsmask {

namespace {

void check_lengths(const ModelOutput& y, const ModelOutput& y_hat) {
  if (y.values.size() != y_hat.values.size()) {
    throw DimensionError("model outputs differ in length: " + std::to_string(y.values.size()) + " vs " +
                         std::to_string(y_hat.values.size()));
  }
}

std::string shape_prefix(char tag, Index rows, Index cols) {
  std::string key(1 + 2 * sizeof(Index), '\0');
  key[0] = tag;
  std::memcpy(key.data() + 1, &rows, sizeof(Index));
  std::memcpy(key.data() + 1 + sizeof(Index), &cols, sizeof(Index));
  return key;
}

std::string binary_key(const BinaryMatrix& m) {
  std::string key = shape_prefix('b', m.rows(), m.cols());
  key.append(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()));
  return key;
}

std::string dense_key(const Matrix& m) {
  std::string key = shape_prefix('d', m.rows(), m.cols());
  key.append(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()) * sizeof(double));
  return key;
}

}  // namespace

double error_regression(const ModelOutput& y, const ModelOutput& y_hat) {
  check_lengths(y, y_hat);
  return (y.values - y_hat.values).squaredNorm();
}

double error_classification(const ModelOutput& y, const ModelOutput& y_hat, double eps) {
  check_lengths(y, y_hat);
  validate_output({y.values, TaskKind::Classification});
  validate_output({y_hat.values, TaskKind::Classification});
  double sum = 0.0;
  for (Index c = 0; c < y.values.size(); ++c) {
    if (y.values[c] == 0.0) continue;
    sum -= y.values[c] * std::log(std::clamp(y_hat.values[c], eps, 1.0));
  }
  return sum;
}

double perturbation_error(const ModelOutput& y, const ModelOutput& y_hat, double eps) {
  return y.task == TaskKind::Classification ? error_classification(y, y_hat, eps) : error_regression(y, y_hat);
}

FitnessEvaluator::FitnessEvaluator(const BlackBoxModel& model, TimeSeries x, PerturbationSpec spec,
                                   FitnessOptions options)
    : model_(model),
      x_(std::move(x)),
      spec_(spec),
      options_(options),
      perturbation_(perturbation_matrix(x_, spec_)),
      reference_(model_.predict(x_)) {
  validate_output(reference_);
  if (reference_.task != model_.task()) throw ModelError("model output task differs from declared task");
  if (options_.verify_determinism) {
    const ModelOutput again = model_.predict(x_);
    if (again.values.size() != reference_.values.size() || again.values != reference_.values) {
      throw ModelError("model is not deterministic: two evaluations of f(X) differ");
    }
  }
}

double FitnessEvaluator::compute(const TimeSeries& perturbed) {
  std::optional<ModelOutput> y_hat;
  if (model_.concurrent_safe()) {
    y_hat = model_.predict(perturbed);
  } else {
    std::lock_guard lock(model_mutex_);
    y_hat = model_.predict(perturbed);
  }
  model_calls_.fetch_add(1);
  validate_output(*y_hat);
  if (y_hat->values.size() != reference_.values.size()) {
    throw ModelError("model output length changed between calls");
  }
  const double delta = perturbation_error(reference_, *y_hat, options_.log_clamp);
  if (!std::isfinite(delta)) throw ModelError("perturbation error is not finite");
  return delta;
}

bool FitnessEvaluator::lookup(const std::string& key, double& out) const {
  std::shared_lock lock(cache_mutex_);
  const auto it = cache_.find(key);
  if (it == cache_.end()) return false;
  out = it->second;
  return true;
}

void FitnessEvaluator::store(const std::string& key, double value) {
  std::unique_lock lock(cache_mutex_);
  cache_.emplace(key, value);
}

std::size_t FitnessEvaluator::cache_size() const {
  std::shared_lock lock(cache_mutex_);
  return cache_.size();
}

double FitnessEvaluator::evaluate(const BinaryMatrix& m) {
  if (m.rows() != x_.features() || m.cols() != x_.steps()) throw DimensionError("mask shape does not match input");
  const std::string key = binary_key(m);
  double value = 0.0;
  if (lookup(key, value)) {
    cache_hits_.fetch_add(1);
    return value;
  }
  value = compute(apply_binary_mask(x_, m, perturbation_));
  store(key, value);
  return value;
}

double FitnessEvaluator::evaluate(const StripMask& m) { return evaluate(m.dense()); }

double FitnessEvaluator::evaluate(const DenseMask& m) {
  validate_pair(x_, m);
  if (m.is_binary()) return evaluate(BinaryMatrix(m.values().cast<std::uint8_t>()));
  const std::string key = dense_key(m.values());
  double value = 0.0;
  if (lookup(key, value)) {
    cache_hits_.fetch_add(1);
    return value;
  }
  value = compute(TimeSeries(blend(x_.values(), m.values(), perturbation_)));
  store(key, value);
  return value;
}

std::vector<double> FitnessEvaluator::evaluate_batch(std::span<const BinaryMatrix* const> masks, int workers) {
  std::vector<double> out(masks.size(), 0.0);
  std::vector<std::string> keys(masks.size());
  std::vector<std::size_t> pending;  // first index of each distinct uncached mask
  std::unordered_map<std::string, std::size_t> first_seen;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const BinaryMatrix& m = *masks[i];
    if (m.rows() != x_.features() || m.cols() != x_.steps()) throw DimensionError("mask shape does not match input");
    keys[i] = binary_key(m);
    if (lookup(keys[i], out[i])) {
      cache_hits_.fetch_add(1);
      continue;
    }
    if (first_seen.emplace(keys[i], i).second) {
      pending.push_back(i);
    } else {
      cache_hits_.fetch_add(1);
    }
  }

  const int effective = model_.concurrent_safe() ? workers : 1;
  parallel_for(pending.size(), effective, [&](std::size_t k) {
    const std::size_t i = pending[k];
    out[i] = compute(apply_binary_mask(x_, *masks[i], perturbation_));
  });

  for (const std::size_t i : pending) store(keys[i], out[i]);
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const auto it = first_seen.find(keys[i]);
    if (it != first_seen.end()) out[i] = out[it->second];
  }
  return out;
}

}  // namespace cgsmask
