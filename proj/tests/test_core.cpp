#include <doctest.h>

#include <algorithm>

#include "cgsmask/core.hpp"
#include "cgsmask/error.hpp"
#include "cgsmask/metrics.hpp"
#include "cgsmask/random.hpp"
#include "oracles.hpp"

using namespace cgsmask;

namespace {

BinaryMatrix bin(std::initializer_list<std::initializer_list<int>> rows) {
  BinaryMatrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
  Index d = 0;
  for (const auto& r : rows) {
    Index t = 0;
    for (int v : r) m(d, t++) = static_cast<std::uint8_t>(v);
    ++d;
  }
  return m;
}

}  // namespace

TEST_CASE("materialize full row") {
  const std::vector<Strip> s = {{0, 0, 3}};
  CHECK(materialize(s, 1, 3) == bin({{1, 1, 1}}));
}

TEST_CASE("materialize empty set") {
  CHECK(materialize({}, 2, 2) == bin({{0, 0}, {0, 0}}));
}

TEST_CASE("materialize overlapping strips is a union") {
  const std::vector<Strip> s = {{0, 0, 2}, {0, 1, 2}};
  CHECK(materialize(s, 1, 4) == bin({{1, 1, 1, 0}}));
}

TEST_CASE("materialize out of bounds names the strip") {
  const std::vector<Strip> s = {{0, 0, 2}, {1, 3, 2}};
  try {
    materialize(s, 2, 4);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string what = e.what();
    CHECK(what.find(describe(s[1])) != std::string::npos);
  }
  const std::vector<Strip> bad_feature = {{2, 0, 1}};
  CHECK_THROWS_AS(materialize(bad_feature, 2, 4), DimensionError);
  const std::vector<Strip> bad_length = {{0, 0, 0}};
  CHECK_THROWS_AS(materialize(bad_length, 2, 4), DimensionError);
}

TEST_CASE("materialize properties on random strip sets") {
  StreamRng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Index D = rng.uniform_int(1, 6);
    const Index T = rng.uniform_int(1, 12);
    std::vector<Strip> strips;
    const int U = static_cast<int>(rng.uniform_int(0, 6));
    Index total = 0;
    for (int u = 0; u < U; ++u) {
      const Index l = rng.uniform_int(1, T);
      strips.push_back({rng.uniform_int(0, D - 1), rng.uniform_int(0, T - l), l});
      total += l;
    }
    const BinaryMatrix m = materialize(strips, D, T);
    CHECK(m == oracle::footprint(strips, D, T));

    std::vector<Strip> shuffled = strips;
    std::reverse(shuffled.begin(), shuffled.end());
    CHECK(materialize(shuffled, D, T) == m);

    const Index pop = m.cast<Index>().sum();
    CHECK(pop <= total);
    bool overlap = false;
    for (std::size_t a = 0; a < strips.size(); ++a)
      for (std::size_t b = a + 1; b < strips.size(); ++b)
        if (strips[a].feature == strips[b].feature && strips[a].start <= strips[b].last() &&
            strips[b].start <= strips[a].last())
          overlap = true;
    CHECK((pop == total) == !overlap);

    const StripMask sm(strips, D, T);
    CHECK(sm.popcount() == pop);
    CHECK(entropy(sm.to_dense_mask().values()) == 0.0);
  }
}

TEST_CASE("validate_pair") {
  const TimeSeries x(Matrix::Zero(2, 3));
  CHECK_NOTHROW(validate_pair(x, DenseMask(Matrix::Zero(2, 3))));
  CHECK_THROWS_AS(validate_pair(x, DenseMask(Matrix::Zero(3, 2))), DimensionError);
  Matrix m = Matrix::Zero(2, 3);
  m(0, 1) = 1.2;
  CHECK_THROWS_AS(DenseMask{m}, RangeError);
}

TEST_CASE("TimeSeries rejects non-finite and empty input") {
  Matrix m = Matrix::Zero(2, 2);
  m(1, 1) = std::nan("");
  CHECK_THROWS(TimeSeries{m});
  CHECK_THROWS(TimeSeries{Matrix(0, 3)});
}

TEST_CASE("validate_output checks probability vectors") {
  ModelOutput ok{Vector::Zero(2), TaskKind::Classification};
  ok.values << 0.6, 0.4;
  CHECK_NOTHROW(validate_output(ok));
  ModelOutput bad = ok;
  bad.values << 0.6, 0.6;
  CHECK_THROWS_AS(validate_output(bad), ModelError);
  ModelOutput negative = ok;
  negative.values << 1.5, -0.5;
  CHECK_THROWS_AS(validate_output(negative), ModelError);
}

TEST_CASE("DenseMask binary detection") {
  Matrix m = Matrix::Zero(1, 3);
  m(0, 0) = 1.0;
  CHECK(DenseMask(m).is_binary());
  m(0, 1) = 0.5;
  CHECK_FALSE(DenseMask(m).is_binary());
}

TEST_CASE("task kind round trip") {
  CHECK(parse_task_kind(to_string(TaskKind::Regression)) == TaskKind::Regression);
  CHECK(parse_task_kind(to_string(TaskKind::Classification)) == TaskKind::Classification);
  CHECK_THROWS(parse_task_kind("ranking"));
}

TEST_CASE("StreamRng keyed streams are reproducible and distinct") {
  StreamRng a(5, {1, 2, 3}), b(5, {1, 2, 3}), c(5, {1, 2, 4});
  bool differ = false;
  for (int i = 0; i < 16; ++i) {
    const auto va = a(), vb = b(), vc = c();
    CHECK(va == vb);
    differ = differ || va != vc;
  }
  CHECK(differ);

  StreamRng r(9);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 50000; ++i) {
    const auto v = r.uniform_int(2, 6);
    REQUIRE(v >= 2);
    REQUIRE(v <= 6);
    ++counts[static_cast<std::size_t>(v - 2)];
  }
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}
