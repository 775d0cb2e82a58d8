#ifndef IVMBL_ISOTONIC_HPP_
#define IVMBL_ISOTONIC_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "ivmbl/error.hpp"

namespace ivmbl {

namespace detail {

inline void check_weighted(std::span<const double> values, std::span<const double> weights) {
  if (values.empty()) throw ParameterError("isotonic projection of an empty sequence");
  if (values.size() != weights.size()) {
    throw ParameterError("isotonic projection: values and weights differ in length");
  }
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw ParameterError("isotonic projection: weights must be positive and finite");
    }
  }
}

}  // namespace detail

/// Weighted least-squares projection onto nondecreasing sequences
/// (pool-adjacent-violators, stack of blocks, linear time).
///
/// Writes the projection of `values` into `out` (which may alias `values`).
inline void pava_weighted_into(std::span<const double> values, std::span<const double> weights,
                               std::span<double> out) {
  detail::check_weighted(values, weights);
  const std::size_t n = values.size();
  // Blocks are kept as (weighted sum, total weight, mean, end index exclusive).
  // Sums use extended precision so pooled means of exact data round exactly.
  std::vector<long double> sum;
  std::vector<long double> weight;
  std::vector<double> mean;
  std::vector<std::size_t> end;
  sum.reserve(n);
  weight.reserve(n);
  mean.reserve(n);
  end.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    long double s = static_cast<long double>(weights[i]) * values[i];
    long double w = weights[i];
    double m = values[i];
    while (!mean.empty() && mean.back() >= m) {
      s += sum.back();
      w += weight.back();
      m = static_cast<double>(s / w);
      sum.pop_back();
      weight.pop_back();
      mean.pop_back();
      end.pop_back();
    }
    sum.push_back(s);
    weight.push_back(w);
    mean.push_back(m);
    end.push_back(i + 1);
  }
  std::size_t start = 0;
  for (std::size_t b = 0; b < mean.size(); ++b) {
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(start),
              out.begin() + static_cast<std::ptrdiff_t>(end[b]), mean[b]);
    start = end[b];
  }
}

inline std::vector<double> pava_weighted(std::span<const double> values,
                                         std::span<const double> weights) {
  std::vector<double> out(values.size());
  pava_weighted_into(values, weights, out);
  return out;
}

/// Min-max representation of the isotonic projection:
///   out[b] = min_{l >= b} max_{k <= b} avg_w(values[k..l]).
/// Cubic time; used to check `pava_weighted`.
inline std::vector<double> minmax_oracle(std::span<const double> values,
                                         std::span<const double> weights) {
  detail::check_weighted(values, weights);
  const std::size_t n = values.size();
  std::vector<double> prefix_wu(n + 1, 0.0);
  std::vector<double> prefix_w(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    prefix_wu[i + 1] = prefix_wu[i] + weights[i] * values[i];
    prefix_w[i + 1] = prefix_w[i] + weights[i];
  }
  std::vector<double> out(n);
  for (std::size_t b = 0; b < n; ++b) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t l = b; l < n; ++l) {
      double inner = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k <= b; ++k) {
        const double avg = (prefix_wu[l + 1] - prefix_wu[k]) / (prefix_w[l + 1] - prefix_w[k]);
        inner = std::max(inner, avg);
      }
      best = std::min(best, inner);
    }
    out[b] = best;
  }
  return out;
}

}  // namespace ivmbl

#endif  // IVMBL_ISOTONIC_HPP_
