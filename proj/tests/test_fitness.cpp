#include <doctest.h>

#include <cmath>

#include "cgsmask/error.hpp"
#include "cgsmask/fitness.hpp"
#include "cgsmask/random.hpp"
#include "cgsmask/synthdata.hpp"
#include "models.hpp"
#include "oracles.hpp"

using namespace cgsmask;

namespace {

ModelOutput reg(std::initializer_list<double> v) {
  ModelOutput y{Vector(static_cast<Index>(v.size())), TaskKind::Regression};
  Index i = 0;
  for (double x : v) y.values(i++) = x;
  return y;
}

ModelOutput cls(std::initializer_list<double> v) {
  ModelOutput y = reg(v);
  y.task = TaskKind::Classification;
  return y;
}

ModelOutput random_probs(StreamRng& rng, Index n) {
  ModelOutput y{Vector(n), TaskKind::Classification};
  for (Index i = 0; i < n; ++i) y.values(i) = rng.uniform() + 1e-3;
  y.values /= y.values.sum();
  return y;
}

}  // namespace

TEST_CASE("error_regression") {
  CHECK(error_regression(reg({1.0}), reg({1.0})) == 0.0);
  CHECK(error_regression(reg({1.0}), reg({0.5})) == 0.25);
  CHECK(error_regression(reg({1, 2}), reg({0, 0})) == 5.0);
  CHECK_THROWS_AS(error_regression(reg({1, 2}), reg({0})), DimensionError);
}

TEST_CASE("error_regression symmetry and zero diagonal") {
  StreamRng rng(4);
  for (int i = 0; i < 100; ++i) {
    ModelOutput a = reg({rng.uniform(), rng.uniform(), rng.uniform()});
    ModelOutput b = reg({rng.uniform(), rng.uniform(), rng.uniform()});
    CHECK(error_regression(a, b) == error_regression(b, a));
    CHECK(error_regression(a, a) == 0.0);
  }
}

TEST_CASE("error_classification") {
  CHECK(error_classification(cls({1, 0}), cls({1, 0})) == 0.0);
  CHECK(std::abs(error_classification(cls({1, 0}), cls({0.5, 0.5})) - std::log(2.0)) < 1e-12);
  CHECK(std::abs(error_classification(cls({0.5, 0.5}), cls({0.5, 0.5})) - std::log(2.0)) < 1e-12);
  // clamped instead of infinite
  CHECK(std::abs(error_classification(cls({1, 0}), cls({0, 1})) + std::log(1e-12)) < 1e-9);
}

TEST_CASE("cross entropy is at least the entropy of y") {
  StreamRng rng(8);
  for (int i = 0; i < 200; ++i) {
    const ModelOutput y = random_probs(rng, 4);
    const ModelOutput y_hat = random_probs(rng, 4);
    double h = 0.0;
    for (Index c = 0; c < 4; ++c) h -= y.values(c) * std::log(y.values(c));
    CHECK(error_classification(y, y_hat) >= h - 1e-12);
    CHECK(std::abs(error_classification(y, y) - h) < 1e-12);
  }
}

TEST_CASE("perturbation_error dispatches on task") {
  CHECK(perturbation_error(reg({1.0}), reg({0.5})) == 0.25);
  CHECK(std::abs(perturbation_error(cls({1, 0}), cls({0.5, 0.5})) - std::log(2.0)) < 1e-12);
}

TEST_CASE("evaluator on the white-box model") {
  const SyntheticInstance inst = make_instance(DatasetKind::RareFeature, 3, 10, 12);
  FitnessEvaluator ev(*inst.model, inst.x, PerturbationSpec::make_constant(0.0));

  CHECK(ev.evaluate(DenseMask(Matrix::Zero(10, 12))) == 0.0);

  const double f = oracle::white_box(inst.x.values(), inst.gt.dense());
  const double all = ev.evaluate(BinaryMatrix(inst.gt.dense()));
  CHECK(all == doctest::Approx(f * f).epsilon(1e-12));

  // covering any salient point gives a positive error, covering none gives zero
  StreamRng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    BinaryMatrix m(10, 12);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.bernoulli(0.05) ? 1 : 0;
    const bool touches = (m.array() * inst.gt.dense().array()).cast<int>().sum() > 0;
    const double delta = ev.evaluate(m);
    CHECK(delta == doctest::Approx(oracle::white_box_delta(inst.x.values(), inst.gt.dense(), m)).epsilon(1e-12));
    if (touches) {
      CHECK(delta > 0.0);
    } else {
      CHECK(delta == 0.0);
    }
  }
}

TEST_CASE("evaluator cache is keyed by footprint") {
  testing::FnModel model([](const Matrix& x) { return testing::scalar(x.sum()); });
  Matrix xv = Matrix::Ones(2, 6);
  FitnessEvaluator ev(model, TimeSeries(xv), PerturbationSpec::make_constant(0.0));

  const StripMask a({{0, 0, 4}}, 2, 6);
  const StripMask b({{0, 0, 2}, {0, 2, 2}}, 2, 6);
  const double fa = ev.evaluate(a);
  const std::size_t calls = ev.model_calls();
  const double fb = ev.evaluate(b);
  CHECK(fa == 16.0);
  CHECK(fb == fa);
  CHECK(ev.model_calls() == calls);
  CHECK(ev.cache_hits() == 1);

  // a binary dense mask shares the strip mask's entry
  const double fc = ev.evaluate(a.to_dense_mask());
  CHECK(fc == fa);
  CHECK(ev.model_calls() == calls);

  Matrix half = Matrix::Zero(2, 6);
  half(1, 1) = 0.5;
  CHECK(ev.evaluate(DenseMask(half)) == 0.25);
  CHECK(ev.model_calls() == calls + 1);
}

TEST_CASE("evaluate_batch matches serial evaluation for any worker count") {
  const SyntheticInstance inst = make_instance(DatasetKind::Random, 2, 8, 10);
  StreamRng rng(17);
  std::vector<BinaryMatrix> masks;
  for (int k = 0; k < 40; ++k) {
    BinaryMatrix m(8, 10);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.bernoulli(0.2) ? 1 : 0;
    masks.push_back(m);
    if (k % 5 == 0) masks.push_back(m);  // duplicates
  }
  std::vector<const BinaryMatrix*> ptrs;
  for (const auto& m : masks) ptrs.push_back(&m);

  FitnessEvaluator serial(*inst.model, inst.x, PerturbationSpec::make_constant(0.0));
  std::vector<double> expected;
  for (const auto& m : masks) expected.push_back(serial.evaluate(m));

  for (int workers : {1, 3, 8}) {
    FitnessEvaluator ev(*inst.model, inst.x, PerturbationSpec::make_constant(0.0));
    CHECK(ev.evaluate_batch(ptrs, workers) == expected);
    CHECK(ev.model_calls() == serial.model_calls());
  }
}

TEST_CASE("evaluator rejects nondeterministic and mismatched models") {
  int counter = 0;
  testing::FnModel flaky([&counter](const Matrix&) { return testing::scalar(counter++); }, TaskKind::Regression, false);
  CHECK_THROWS_AS(FitnessEvaluator(flaky, TimeSeries(Matrix::Ones(1, 2)), PerturbationSpec{}), ModelError);

  testing::FnModel model([](const Matrix& x) { return testing::scalar(x.sum()); });
  FitnessEvaluator ev(model, TimeSeries(Matrix::Ones(2, 2)), PerturbationSpec{});
  CHECK_THROWS_AS(ev.evaluate(BinaryMatrix::Zero(3, 2)), DimensionError);
}
