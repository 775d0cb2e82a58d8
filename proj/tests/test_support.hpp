#ifndef IVMBL_TESTS_TEST_SUPPORT_HPP_
#define IVMBL_TESTS_TEST_SUPPORT_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "ivmbl/dataset.hpp"
#include "ivmbl/rng.hpp"

namespace ivmbl::testing {

/// Dataset built from explicit per-cell outcome lists.
inline IVDataset from_cells(const std::vector<double>& c00, const std::vector<double>& c01,
                            const std::vector<double>& c10, const std::vector<double>& c11) {
  std::vector<double> y;
  std::vector<int> z;
  std::vector<int> d;
  auto add = [&](const std::vector<double>& vals, int zz, int dd) {
    for (double v : vals) {
      y.push_back(v);
      z.push_back(zz);
      d.push_back(dd);
    }
  };
  add(c00, 0, 0);
  add(c01, 0, 1);
  add(c10, 1, 0);
  add(c11, 1, 1);
  return IVDataset(std::move(y), std::move(z), std::move(d));
}

/// Random dataset with every cell holding at least `min_per_cell` rows.
/// Treatment uptake is 0.3 at z=0 and 0.7 at z=1. Outcomes are drawn from a small integer range when `ties` is set.
inline IVDataset random_dataset(std::uint64_t seed, std::size_t n, bool ties = false,
                                std::size_t min_per_cell = 2) {
  auto rng = child_stream(seed, 0, 77);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> small(0, 9);
  std::uniform_int_distribution<int> bit(0, 1);
  std::bernoulli_distribution uptake[2] = {std::bernoulli_distribution(0.3),
                                           std::bernoulli_distribution(0.7)};
  std::vector<double> y(n);
  std::vector<int> z(n);
  std::vector<int> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i < 4 * min_per_cell) {
      z[i] = static_cast<int>((i / min_per_cell) / 2);
      d[i] = static_cast<int>((i / min_per_cell) % 2);
    } else {
      z[i] = bit(rng);
      d[i] = uptake[z[i]](rng) ? 1 : 0;
    }
    y[i] = ties ? static_cast<double>(small(rng)) : gauss(rng) + 0.7 * d[i];
  }
  return IVDataset(std::move(y), std::move(z), std::move(d));
}

}  // namespace ivmbl::testing

#endif  // IVMBL_TESTS_TEST_SUPPORT_HPP_
