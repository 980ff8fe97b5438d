#include "cgsmask/baselines.hpp"

#include <mutex>
#include <optional>

#include "cgsmask/fitness.hpp"
#include "cgsmask/metrics.hpp"
#include "cgsmask/parallel.hpp"
#include "cgsmask/random.hpp"

namespace cgsmask {

namespace {

/// Serialises predict() for models that are not concurrent-safe.
class GuardedModel {
 public:
  explicit GuardedModel(const BlackBoxModel& model) : model_(model) {}

  ModelOutput predict(const TimeSeries& x) {
    std::optional<ModelOutput> y;
    if (model_.concurrent_safe()) {
      y = model_.predict(x);
    } else {
      std::lock_guard lock(mutex_);
      y = model_.predict(x);
    }
    validate_output(*y);
    return std::move(*y);
  }

 private:
  const BlackBoxModel& model_;
  std::mutex mutex_;
};

int effective_workers(const BlackBoxModel& model, int workers) { return model.concurrent_safe() ? workers : 1; }

}  // namespace

void BaselineConfig::validate() const {
  if (repeats < 1) throw ConfigError("baseline repeats must be >= 1");
  if (rise_masks < 1) throw ConfigError("rise_masks must be >= 1");
  if (!(rise_keep_prob > 0.0 && rise_keep_prob < 1.0)) throw ConfigError("rise_keep_prob must lie in (0,1)");
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

DenseMask min_max_normalize(const Matrix& raw) {
  if (!raw.allFinite()) throw RangeError("saliency map contains non-finite values");
  const double lo = raw.minCoeff();
  const double hi = raw.maxCoeff();
  if (!(hi > lo)) return DenseMask(Matrix::Zero(raw.rows(), raw.cols()));
  Matrix out = ((raw.array() - lo) / (hi - lo)).matrix();
  return DenseMask(out.cwiseMax(0.0).cwiseMin(1.0));
}

Matrix feature_occlusion_raw(const BlackBoxModel& model, const TimeSeries& x, const PerturbationSpec& spec,
                             int workers) {
  GuardedModel guarded(model);
  const ModelOutput y = guarded.predict(x);
  const Matrix p = perturbation_matrix(x, spec);
  const Index D = x.features();
  const Index T = x.steps();
  Matrix raw(D, T);
  parallel_for(static_cast<std::size_t>(D * T), effective_workers(model, workers), [&](std::size_t k) {
    const Index d = static_cast<Index>(k) / T;
    const Index t = static_cast<Index>(k) % T;
    Matrix occluded = x.values();
    occluded(d, t) = p(d, t);
    raw(d, t) = perturbation_error(y, guarded.predict(TimeSeries(std::move(occluded))));
  });
  return raw;
}

DenseMask feature_occlusion(const BlackBoxModel& model, const TimeSeries& x, const PerturbationSpec& spec,
                            int workers) {
  return min_max_normalize(feature_occlusion_raw(model, x, spec, workers));
}

Matrix feature_permutation_raw(const BlackBoxModel& model, const TimeSeries& x, const BaselineConfig& cfg) {
  cfg.validate();
  const Index D = x.features();
  const Index T = x.steps();
  if (T < 2) throw DimensionError("feature permutation needs at least two time steps");
  GuardedModel guarded(model);
  const ModelOutput y = guarded.predict(x);
  Matrix raw(D, T);
  parallel_for(static_cast<std::size_t>(D * T), effective_workers(model, cfg.workers), [&](std::size_t k) {
    const Index d = static_cast<Index>(k) / T;
    const Index t = static_cast<Index>(k) % T;
    StreamRng rng(cfg.seed, {0xf9ULL, static_cast<std::uint64_t>(k)});
    double sum = 0.0;
    for (int r = 0; r < cfg.repeats; ++r) {
      Index other = rng.uniform_int(0, T - 2);
      if (other >= t) ++other;
      Matrix swapped = x.values();
      swapped(d, t) = x(d, other);
      sum += perturbation_error(y, guarded.predict(TimeSeries(std::move(swapped))));
    }
    raw(d, t) = sum / cfg.repeats;
  });
  return raw;
}

DenseMask feature_permutation(const BlackBoxModel& model, const TimeSeries& x, const BaselineConfig& cfg) {
  return min_max_normalize(feature_permutation_raw(model, x, cfg));
}

Matrix rise_raw(const BlackBoxModel& model, const TimeSeries& x, const BaselineConfig& cfg,
                const PerturbationSpec& spec) {
  cfg.validate();
  GuardedModel guarded(model);
  const ModelOutput y = guarded.predict(x);
  const Matrix p = perturbation_matrix(x, spec);
  const Index D = x.features();
  const Index T = x.steps();
  const auto K = static_cast<std::size_t>(cfg.rise_masks);
  const bool classification = y.task == TaskKind::Classification;
  const Index target = classification ? argmax(y.values) : 0;

  std::vector<BinaryMatrix> keep(K);
  std::vector<double> score(K, 0.0);
  parallel_for(K, effective_workers(model, cfg.workers), [&](std::size_t k) {
    StreamRng rng(cfg.seed, {0x815eULL, static_cast<std::uint64_t>(k)});
    BinaryMatrix b(D, T);
    for (Index i = 0; i < b.size(); ++i) b.data()[i] = rng.bernoulli(cfg.rise_keep_prob) ? 1 : 0;
    // perturb where the keep mask is 0
    const BinaryMatrix drop = (1 - b.array()).matrix();
    const ModelOutput y_hat = guarded.predict(apply_binary_mask(x, drop, p));
    score[k] = classification ? y_hat.values[target] : -error_regression(y, y_hat);
    keep[k] = std::move(b);
  });

  // accumulated in mask order so the sum does not depend on scheduling
  Matrix raw = Matrix::Zero(D, T);
  for (std::size_t k = 0; k < K; ++k) raw += score[k] * keep[k].cast<double>();
  return raw / (static_cast<double>(K) * cfg.rise_keep_prob);
}

DenseMask rise(const BlackBoxModel& model, const TimeSeries& x, const BaselineConfig& cfg,
               const PerturbationSpec& spec) {
  return min_max_normalize(rise_raw(model, x, cfg, spec));
}

}  // namespace cgsmask
