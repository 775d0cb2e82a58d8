#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ivmbl/blik.hpp"
#include "test_support.hpp"

namespace ivmbl {
namespace {

using testing::from_cells;

TEST(BinomialJ, HalfHalfIsMinusLogTwo) { EXPECT_DOUBLE_EQ(binomial_j(0.5, 0.5), -std::log(2.0)); }

TEST(BinomialJ, EndpointsUseOneLogTerm) {
  EXPECT_DOUBLE_EQ(binomial_j(1.0, 0.3), std::log(0.3));
  EXPECT_DOUBLE_EQ(binomial_j(0.0, 0.3), std::log(0.7));
  EXPECT_TRUE(std::isfinite(binomial_j(0.5, 0.0)));
  EXPECT_TRUE(std::isfinite(binomial_j(0.5, 1.0)));
  EXPECT_DOUBLE_EQ(binomial_j(1.0, 1.0), 0.0);
}

TEST(BinomialJ, MaximisedAtX) {
  for (double x : {0.1, 0.35, 0.8}) {
    const double best = binomial_j(x, x);
    for (double y = 0.01; y < 1.0; y += 0.01) EXPECT_LE(binomial_j(x, y), best + 1e-15);
  }
}

TEST(BinomialLoglik, SingleKnotToyMatchesHandSum) {
  const auto ds = from_cells({1.0}, {2.0}, {3.0}, {4.0});
  const TruncationSet window{2, 2, 0.25};  // the single knot Y_(2) = 2
  const auto chi = ComplianceProportions::from_nt_at(0.2, 0.3);
  const ThetaVector theta{{0.3}, {0.4}, {0.6}, {0.7}};
  // F00(2) = 1, F01(2) = 1, F10(2) = 0, F11(2) = 0
  const double l0 = 0.5 / 0.7;
  const double l1 = 0.5 / 0.8;
  const double hand = (std::log(1.0 - 0.3) + std::log(l0 * 0.3 + (1.0 - l0) * 0.4)) +
                      (std::log(0.3) + std::log(0.7)) +
                      (std::log(0.2) + std::log(1.0 - 0.4)) +
                      (std::log(1.0 - 0.2) + std::log(1.0 - (l1 * 0.6 + (1.0 - l1) * 0.7)));
  EXPECT_NEAR(binomial_loglik(ds, window, theta, chi), hand / 16.0, 1e-14);
}

TEST(BinomialLoglik, TermsSumToTotal) {
  const auto ds = testing::random_dataset(5, 40);
  const auto g = make_knot_grid(ds, truncation_indices(40, 0.1));
  const auto p = plugin_proportions(g.counts);
  const auto theta = ThetaVector{g.F(Cell::k00), g.F(Cell::k10), g.F(Cell::k11), g.F(Cell::k01)};
  const auto t = binomial_loglik_terms(g, theta, p);
  EXPECT_DOUBLE_EQ(t.total(), binomial_loglik(g, theta, p));
}

TEST(BinomialLoglik, RejectsNonPositiveComplierShare) {
  const auto ds = from_cells({1.0}, {2.0}, {3.0}, {4.0});
  const auto bad = ComplianceProportions::from_nt_at(0.6, 0.4);
  const ThetaVector theta{{0.5}, {0.5}, {0.5}, {0.5}};
  EXPECT_THROW(binomial_loglik(ds, TruncationSet{2, 2, 0.25}, theta, bad), ParameterError);
}

TEST(BinomialLoglik, RejectsWrongLength) {
  const auto ds = from_cells({1.0}, {2.0}, {3.0}, {4.0});
  const ThetaVector theta = ThetaVector::zeros(3);
  EXPECT_THROW(binomial_loglik(ds, TruncationSet{2, 2, 0.25}, theta,
                               ComplianceProportions::from_nt_at(0.2, 0.2)),
               ParameterError);
}

TEST(BinomialLoglik, PluginPointBeatsPerturbations) {
  auto rng = child_stream(21, 0);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto ds = testing::random_dataset(200 + s, 80);
    const auto g = make_knot_grid(ds, truncation_indices(ds.size(), 0.05));
    const auto p = plugin_proportions(g.counts);
    if (p.degenerate) continue;
    const auto best_theta = plugin_theta(g, p);
    const double best = binomial_loglik(g, best_theta, p);
    for (int rep = 0; rep < 20; ++rep) {
      auto t = best_theta;
      for (auto* curve : {&t.co0, &t.nt, &t.co1, &t.at}) {
        for (double& v : *curve) v += noise(rng);
      }
      const auto chi = ComplianceProportions::from_nt_at(
          std::clamp(p.phi_nt + noise(rng), 0.01, 0.45), std::clamp(p.phi_at + noise(rng), 0.01, 0.45));
      EXPECT_LE(binomial_loglik(g, t, chi), best + 1e-9);
    }
  }
}

TEST(BinomialLoglik, InvariantUnderMonotoneTransform) {
  const auto ds = testing::random_dataset(6, 50);
  std::vector<double> y = ds.y();
  for (double& v : y) v = std::exp(v);
  const IVDataset tr(y, ds.z(), ds.d());
  const auto t = truncation_indices(50, 0.05);
  const auto g1 = make_knot_grid(ds, t);
  const auto g2 = make_knot_grid(tr, t);
  const auto p = plugin_proportions(g1.counts);
  const auto theta = ThetaVector{g1.F(Cell::k00), g1.F(Cell::k10), g1.F(Cell::k11), g1.F(Cell::k01)};
  EXPECT_EQ(binomial_loglik(g1, theta, p), binomial_loglik(g2, theta, p));
}

}  // namespace
}  // namespace ivmbl
