// Independent reference implementations used by the tests. Plain loops only,
// nothing shared with the library beyond the data types.

#ifndef CGSMASK_TESTS_ORACLES_HPP
#define CGSMASK_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "cgsmask/core.hpp"
#include "cgsmask/random.hpp"

namespace oracle {

using cgsmask::BinaryMatrix;
using cgsmask::Index;
using cgsmask::Matrix;

inline BinaryMatrix footprint(const std::vector<cgsmask::Strip>& strips, Index D, Index T) {
  BinaryMatrix m(D, T);
  for (Index d = 0; d < D; ++d)
    for (Index t = 0; t < T; ++t) m(d, t) = 0;
  for (const auto& s : strips)
    for (Index k = 0; k < s.length; ++k) m(s.feature, s.start + k) = 1;
  return m;
}

// f = sum over A of x^2, evaluated with loops.
inline double white_box(const Matrix& x, const BinaryMatrix& a) {
  double f = 0.0;
  for (Index d = 0; d < x.rows(); ++d)
    for (Index t = 0; t < x.cols(); ++t)
      if (a(d, t)) f += x(d, t) * x(d, t);
  return f;
}

// Perturbation error of a binary mask under the white-box model and zero baseline.
inline double white_box_delta(const Matrix& x, const BinaryMatrix& a, const BinaryMatrix& mask) {
  Matrix xh = x;
  for (Index d = 0; d < x.rows(); ++d)
    for (Index t = 0; t < x.cols(); ++t)
      if (mask(d, t)) xh(d, t) = 0.0;
  const double diff = white_box(x, a) - white_box(xh, a);
  return diff * diff;
}

// Best single-strip placement with fixed length l, by exhaustive enumeration.
inline double brute_force_single_strip(const Matrix& x, const BinaryMatrix& a, Index l) {
  double best = -1.0;
  for (Index d = 0; d < x.rows(); ++d) {
    for (Index b = 0; b + l <= x.cols(); ++b) {
      const BinaryMatrix m = footprint({{d, b, l}}, x.rows(), x.cols());
      best = std::max(best, white_box_delta(x, a, m));
    }
  }
  return best;
}

struct Areas {
  double aup;
  double aur;
};

// Areas under precision and recall as exact integrals over alpha in [0, 1].
// Between consecutive distinct mask values the selected set is constant, so
// every distinct value is a breakpoint. Precision is averaged over the part of
// [0, 1] where the selection is non-empty.
inline Areas exact_areas(const Matrix& m, const BinaryMatrix& truth) {
  std::set<double> values;
  for (Index i = 0; i < m.size(); ++i) values.insert(m.data()[i]);
  std::vector<double> cuts = {0.0};
  for (double v : values)
    if (v > 0.0 && v < 1.0) cuts.push_back(v);
  cuts.push_back(1.0);

  Index positives = 0;
  for (Index i = 0; i < truth.size(); ++i) positives += truth.data()[i];

  double p_int = 0.0, p_len = 0.0, r_int = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double lo = cuts[k], hi = cuts[k + 1];
    const double alpha = hi;  // selection on (lo, hi] equals {m >= hi}
    Index picked = 0, hits = 0;
    for (Index i = 0; i < m.size(); ++i) {
      if (m.data()[i] >= alpha) {
        ++picked;
        hits += truth.data()[i];
      }
    }
    const double width = hi - lo;
    r_int += width * static_cast<double>(hits) / static_cast<double>(positives);
    if (picked > 0) {
      p_int += width * static_cast<double>(hits) / static_cast<double>(picked);
      p_len += width;
    }
  }
  return {p_len > 0 ? p_int / p_len : 0.0, r_int};
}

inline Index transitions(const Matrix& m, double beta) {
  Index n = 0;
  for (Index d = 0; d < m.rows(); ++d)
    for (Index t = 0; t + 1 < m.cols(); ++t)
      if (std::abs(m(d, t + 1) - m(d, t)) > beta) ++n;
  return n;
}

inline Matrix random_matrix(Index rows, Index cols, cgsmask::StreamRng& rng) {
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform();
  return m;
}

}  // namespace oracle

#endif  // CGSMASK_TESTS_ORACLES_HPP
