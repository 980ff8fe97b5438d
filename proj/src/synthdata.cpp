#include "cgsmask/synthdata.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace cgsmask {

namespace {

/// k distinct values from [0, n), in draw order.
std::vector<Index> sample_distinct(Index n, Index k, StreamRng& rng) {
  if (k > n) throw DimensionError("cannot sample " + std::to_string(k) + " distinct values from " + std::to_string(n));
  std::vector<Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(i, n - 1));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(k));
  return pool;
}

void mark_rare_feature(BinaryMatrix& c, const SalientLayout& layout, StreamRng& rng) {
  const Index T = c.cols();
  for (const Index d : sample_distinct(c.rows(), layout.rare_features, rng)) {
    const Index start = rng.uniform_int(0, T - layout.feature_window);
    c.row(d).segment(start, layout.feature_window).setOnes();
  }
}

void mark_rare_time(BinaryMatrix& c, const SalientLayout& layout, StreamRng& rng) {
  const Index start = rng.uniform_int(0, c.cols() - layout.rare_steps);
  for (const Index d : sample_distinct(c.rows(), layout.step_features, rng)) {
    c.row(d).segment(start, layout.rare_steps).setOnes();
  }
}

void pad_uniform(BinaryMatrix& c, Index target, StreamRng& rng) {
  std::vector<Index> free;
  for (Index k = 0; k < c.size(); ++k) {
    if (!c.data()[k]) free.push_back(k);
  }
  const Index have = c.size() - static_cast<Index>(free.size());
  if (have >= target) return;
  for (const Index k : sample_distinct(static_cast<Index>(free.size()), target - have, rng)) {
    c.data()[free[static_cast<std::size_t>(k)]] = 1;
  }
}

}  // namespace

Matrix arma_filter(const Matrix& noise, const ArmaConfig& cfg) {
  Matrix x = Matrix::Zero(noise.rows(), noise.cols());
  for (Index d = 0; d < noise.rows(); ++d) {
    for (Index t = 0; t < noise.cols(); ++t) {
      double v = noise(d, t);
      if (t >= 1) v += cfg.beta1 * x(d, t - 1);
      if (t >= 2) v += cfg.beta2 * x(d, t - 2);
      if (t >= 3) v += cfg.beta3 * x(d, t - 3);
      x(d, t) = v;
    }
  }
  return x;
}

TimeSeries arma_generate(const ArmaConfig& cfg, Index features, Index steps) {
  if (features < 1 || steps < 1) throw DimensionError("ARMA series needs D, T >= 1");
  if (!(cfg.noise_std >= 0.0)) throw ConfigError("noise_std must be >= 0");
  Matrix noise = Matrix::Zero(features, steps);
  if (cfg.noise_std > 0.0) {
    for (Index d = 0; d < features; ++d) {
      StreamRng rng(cfg.seed, {0xa5a5ULL, static_cast<std::uint64_t>(d)});
      std::normal_distribution<double> normal(0.0, cfg.noise_std);
      for (Index t = 0; t < steps; ++t) noise(d, t) = normal(rng);
    }
  }
  return TimeSeries(arma_filter(noise, cfg));
}

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::RareFeature:
      return "rare_feature";
    case DatasetKind::RareTime:
      return "rare_time";
    case DatasetKind::Mixture:
      return "mixture";
    case DatasetKind::Random:
      return "random";
  }
  return "unknown";
}

DatasetKind parse_dataset_kind(const std::string& name) {
  if (name == "rare_feature") return DatasetKind::RareFeature;
  if (name == "rare_time") return DatasetKind::RareTime;
  if (name == "mixture") return DatasetKind::Mixture;
  if (name == "random") return DatasetKind::Random;
  throw ConfigError("unknown dataset kind '" + name + "'");
}

SalientLayout SalientLayout::for_shape(Index features, Index steps) {
  if (features < 1 || steps < 1) throw DimensionError("dataset shape must be at least 1x1");
  return {std::max<Index>(1, features / 10), std::max<Index>(1, steps / 2), std::max<Index>(1, steps / 10),
          std::max<Index>(1, features / 2), std::max<Index>(1, features * steps / 10)};
}

GroundTruth place_salient(DatasetKind kind, Index features, Index steps, StreamRng& rng) {
  const SalientLayout layout = SalientLayout::for_shape(features, steps);
  BinaryMatrix c = BinaryMatrix::Zero(features, steps);
  switch (kind) {
    case DatasetKind::RareFeature:
      mark_rare_feature(c, layout, rng);
      break;
    case DatasetKind::RareTime:
      mark_rare_time(c, layout, rng);
      break;
    case DatasetKind::Mixture:
      mark_rare_feature(c, layout, rng);
      mark_rare_time(c, layout, rng);
      pad_uniform(c, layout.random_points, rng);
      break;
    case DatasetKind::Random:
      pad_uniform(c, layout.random_points, rng);
      break;
  }
  return GroundTruth(std::move(c));
}

ModelOutput WhiteBoxModel::predict(const TimeSeries& x) const {
  if (x.features() != gt_.features() || x.steps() != gt_.steps()) {
    throw DimensionError("white-box model input shape does not match its ground truth");
  }
  double sum = 0.0;
  for (const auto& [d, t] : gt_.salient()) sum += x(d, t) * x(d, t);
  ModelOutput y;
  y.values = Vector::Constant(1, sum);
  y.task = TaskKind::Regression;
  return y;
}

std::shared_ptr<WhiteBoxModel> make_white_box(const GroundTruth& gt) { return std::make_shared<WhiteBoxModel>(gt); }

SyntheticInstance make_instance(DatasetKind kind, std::uint64_t seed, Index features, Index steps) {
  ArmaConfig arma;
  arma.seed = StreamRng(seed, {1})();
  TimeSeries x = arma_generate(arma, features, steps);
  StreamRng placement(seed, {2, static_cast<std::uint64_t>(kind)});
  GroundTruth gt = place_salient(kind, features, steps, placement);
  auto model = make_white_box(gt);
  return SyntheticInstance{std::move(x), std::move(gt), std::move(model), kind};
}

StripSettings default_strip_settings(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::RareFeature:
      return {14, 6, 10};
    case DatasetKind::RareTime:
      return {25, 3, 5};
    case DatasetKind::Mixture:
      return {45, 2, 8};
    case DatasetKind::Random:
      return {55, 1, 6};
  }
  return {14, 6, 10};
}

}  // namespace cgsmask
