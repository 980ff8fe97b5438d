#ifndef CGSMASK_BASELINES_HPP
#define CGSMASK_BASELINES_HPP

#include <cstdint>

#include "cgsmask/core.hpp"
#include "cgsmask/perturbation.hpp"

namespace cgsmask {

struct BaselineConfig {
  int repeats = 8;             // feature permutation draws per point
  int rise_masks = 500;        // Monte Carlo masks for RISE
  double rise_keep_prob = 0.5;
  std::uint64_t seed = 0;
  int workers = 1;

  void validate() const;
};

/// Rescales to [0,1]; a constant map becomes all zeros.
DenseMask min_max_normalize(const Matrix& raw);

/// Perturbation error of occluding each single point.
Matrix feature_occlusion_raw(const BlackBoxModel& model, const TimeSeries& x, const PerturbationSpec& spec,
                             int workers = 1);
DenseMask feature_occlusion(const BlackBoxModel& model, const TimeSeries& x, const PerturbationSpec& spec,
                            int workers = 1);

/// Mean perturbation error of swapping x(d,t) with x(d,t') for random t' != t.
Matrix feature_permutation_raw(const BlackBoxModel& model, const TimeSeries& x, const BaselineConfig& cfg);
DenseMask feature_permutation(const BlackBoxModel& model, const TimeSeries& x, const BaselineConfig& cfg);

/// RISE with full-resolution Bernoulli keep masks. The score of a mask is the
/// probability of the original class (classification) or the negated squared
/// error of the output (regression); saliency is sum_k score_k B_k / (K p).
Matrix rise_raw(const BlackBoxModel& model, const TimeSeries& x, const BaselineConfig& cfg,
                const PerturbationSpec& spec);
DenseMask rise(const BlackBoxModel& model, const TimeSeries& x, const BaselineConfig& cfg,
               const PerturbationSpec& spec);

}  // namespace cgsmask

#endif  // CGSMASK_BASELINES_HPP
