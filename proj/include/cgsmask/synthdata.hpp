#ifndef CGSMASK_SYNTHDATA_HPP
#define CGSMASK_SYNTHDATA_HPP

#include <cstdint>
#include <memory>
#include <string>

#include "cgsmask/core.hpp"
#include "cgsmask/metrics.hpp"
#include "cgsmask/random.hpp"

namespace cgsmask {

struct ArmaConfig {
  double beta1 = 0.25;
  double beta2 = 0.1;
  double beta3 = 0.05;
  double noise_std = 1.0;
  std::uint64_t seed = 0;
};

/// x(d,t) = b1 x(d,t-1) + b2 x(d,t-2) + b3 x(d,t-3) + noise(d,t), with zero history.
Matrix arma_filter(const Matrix& noise, const ArmaConfig& cfg);

/// ARMA series with i.i.d. N(0, noise_std^2) innovations, one RNG stream per feature.
TimeSeries arma_generate(const ArmaConfig& cfg, Index features, Index steps);

enum class DatasetKind { RareFeature, RareTime, Mixture, Random };

std::string to_string(DatasetKind kind);
DatasetKind parse_dataset_kind(const std::string& name);

/// Salient-set sizes for a D x T instance. At D = T = 50 these are
/// 5 features x 25 steps (rare feature), 5 steps x 25 features (rare time)
/// and 250 points (mixture, random); other sizes scale as
/// max(1, D/10), max(1, T/2), max(1, T/10), max(1, D/2), max(1, D*T/10).
struct SalientLayout {
  Index rare_features;    // salient features in rare-feature data
  Index feature_window;   // consecutive steps per salient feature
  Index rare_steps;       // consecutive salient steps in rare-time data
  Index step_features;    // features salient at those steps
  Index random_points;    // |A| for random and mixture data

  static SalientLayout for_shape(Index features, Index steps);
};

/// Salient set of the given kind:
///  - RareFeature: distinct random features, each with its own random window.
///  - RareTime: one random block of consecutive steps crossed with a random
///    feature subset shared by every step in the block.
///  - Mixture: union of the two, padded with uniform points to random_points.
///  - Random: random_points distinct uniform points.
GroundTruth place_salient(DatasetKind kind, Index features, Index steps, StreamRng& rng);

/// Regression model f(X) = sum over A of x(d,t)^2.
class WhiteBoxModel final : public BlackBoxModel {
 public:
  explicit WhiteBoxModel(GroundTruth gt) : gt_(std::move(gt)) {}

  ModelOutput predict(const TimeSeries& x) const override;
  TaskKind task() const override { return TaskKind::Regression; }
  bool concurrent_safe() const override { return true; }

  const GroundTruth& ground_truth() const { return gt_; }

 private:
  GroundTruth gt_;
};

std::shared_ptr<WhiteBoxModel> make_white_box(const GroundTruth& gt);

struct SyntheticInstance {
  TimeSeries x;
  GroundTruth gt;
  std::shared_ptr<const WhiteBoxModel> model;
  DatasetKind kind;
};

SyntheticInstance make_instance(DatasetKind kind, std::uint64_t seed, Index features = 50, Index steps = 50);

/// Strip budget used on each synthetic kind.
struct StripSettings {
  int strip_count;
  int len_min;
  int len_max;
};

StripSettings default_strip_settings(DatasetKind kind);

}  // namespace cgsmask

#endif  // CGSMASK_SYNTHDATA_HPP
