#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ivmbl/em_pava.hpp"
#include "ivmbl/scenario.hpp"
#include "test_support.hpp"

namespace ivmbl {
namespace {

using testing::from_cells;

KnotGrid one_knot_grid(CellCounts counts, std::array<double, 4> f) {
  KnotGrid g;
  g.knots = {0.0};
  g.multiplicity = {1.0};
  for (Cell c : kAllCells) g.ecdf[index_of(c)] = {f[index_of(c)]};
  g.counts = counts;
  g.n = counts.total();
  g.trunc = TruncationSet{1, 1, 0.05};
  return g;
}

/// Cell 00 mixes the cell-10 sample with four complier values, and cell 11
/// mixes the cell-01 sample with four more; with phi = 1/3 each the plug-in
/// complier curves are exactly the complier ECDFs.
IVDataset proper_plugin_dataset() {
  const std::vector<double> nt{1, 2, 3, 4};
  const std::vector<double> at{2, 3, 5, 6};
  return from_cells({1, 2, 3, 4, 1.5, 2.5, 3.5, 4.5}, at, nt, {2, 3, 5, 6, 0.5, 2.2, 3.3, 6.5});
}

void expect_feasible(const ThetaVector& t) {
  for (const auto* c : {&t.co0, &t.nt, &t.co1, &t.at}) {
    for (std::size_t k = 0; k < c->size(); ++k) {
      EXPECT_GE((*c)[k], 0.0);
      EXPECT_LE((*c)[k], 1.0);
      if (k > 0) {
        EXPECT_LE((*c)[k - 1], (*c)[k]);
      }
    }
  }
}

TEST(EStep, HandValue) {
  const auto g = one_knot_grid({1, 1, 1, 1}, {0.5, 0.5, 0.5, 0.5});
  const auto chi = ComplianceProportions::from_nt_at(0.5, 0.0);
  const ThetaVector theta{{0.2}, {0.6}, {0.5}, {0.5}};
  const auto r = e_step(g, theta, chi);
  // 0.5*0.2 / (0.5*0.2 + 0.5*0.6)
  EXPECT_DOUBLE_EQ(r.r0[0], 0.25);
  // 0.5*0.8 / (0.5*0.8 + 0.5*0.4)
  EXPECT_DOUBLE_EQ(r.rho0[0], 2.0 / 3.0);
}

TEST(EStep, AllCompliers) {
  const auto g = one_knot_grid({1, 1, 1, 1}, {0.5, 0.5, 0.5, 0.5});
  const auto chi = ComplianceProportions::from_nt_at(0.0, 0.0);
  for (double v : {0.0, 0.3, 1.0}) {
    const ThetaVector theta{{v}, {0.4}, {v}, {0.9}};
    const auto r = e_step(g, theta, chi);
    EXPECT_EQ(r.r0[0], 1.0);
    EXPECT_EQ(r.r1[0], 1.0);
    EXPECT_EQ(r.rho0[0], 1.0);
    EXPECT_EQ(r.rho1[0], 1.0);
  }
}

TEST(EStep, EqualCurvesGivePriorRatio) {
  const auto g = one_knot_grid({1, 1, 1, 1}, {0.5, 0.5, 0.5, 0.5});
  const auto chi = ComplianceProportions::from_nt_at(0.3, 0.2);
  for (double v : {0.0, 0.4, 1.0}) {
    const ThetaVector theta{{v}, {v}, {v}, {v}};
    const auto r = e_step(g, theta, chi);
    EXPECT_DOUBLE_EQ(r.r0[0], 0.5 / 0.8);
    EXPECT_DOUBLE_EQ(r.rho0[0], 0.5 / 0.8);
    EXPECT_DOUBLE_EQ(r.r1[0], 0.5 / 0.7);
  }
}

TEST(MStep, HandToyNeverTaker) {
  const auto g = one_knot_grid({2, 1, 2, 1}, {0.5, 0.5, 0.5, 0.5});
  const Responsibilities r{{0.5}, {0.5}, {0.5}, {0.5}};
  const auto m = m_step(g, r);
  // (2*0.5*0.5 + 2*0.5) / (2*0.5*0.5 + 2*0.5*0.5 + 2)
  EXPECT_DOUBLE_EQ(m.theta.nt[0], 0.5);
  EXPECT_DOUBLE_EQ(m.weights.nt[0], 3.0);
}

TEST(MStep, FullComplierResponsibility) {
  const auto ds = testing::random_dataset(7, 30);
  const auto g = make_knot_grid(ds, truncation_indices(30, 0.1));
  const std::vector<double> ones(g.size(), 1.0);
  const auto m = m_step(g, Responsibilities{ones, ones, ones, ones});
  for (std::size_t k = 0; k < g.size(); ++k) {
    EXPECT_DOUBLE_EQ(m.theta.co0[k], g.F(Cell::k00)[k]);
    EXPECT_DOUBLE_EQ(m.theta.co1[k], g.F(Cell::k11)[k]);
  }
  EXPECT_NEAR(m.chi.phi_nt, g.count(Cell::k10) / 30.0, 1e-12);
  EXPECT_NEAR(m.chi.phi_at, g.count(Cell::k01) / 30.0, 1e-12);
}

TEST(FitMbl, ProperPluginIsReturnedUnchanged) {
  const auto ds = proper_plugin_dataset();
  const auto trunc = truncation_indices(ds.size(), 0.05);
  const auto g = make_knot_grid(ds, trunc);
  const auto p = plugin_proportions(g.counts);
  ASSERT_NEAR(p.phi_co, 1.0 / 3.0, 1e-15);
  const auto plug = plugin_values(g, p);
  ASSERT_TRUE(find_violations({g.knots, plug.co0}).empty());
  ASSERT_TRUE(find_violations({g.knots, plug.co1}).empty());

  const auto fit = fit_mbl(ds, trunc);
  for (std::size_t k = 0; k < g.size(); ++k) {
    EXPECT_NEAR(fit.theta.co0[k], plug.co0[k], 1e-6);
    EXPECT_NEAR(fit.theta.co1[k], plug.co1[k], 1e-6);
    EXPECT_NEAR(fit.theta.nt[k], g.F(Cell::k10)[k], 1e-6);
    EXPECT_NEAR(fit.theta.at[k], g.F(Cell::k01)[k], 1e-6);
  }
  EXPECT_NEAR(fit.chi.phi_nt, p.phi_nt, 1e-6);
  EXPECT_NEAR(fit.chi.phi_at, p.phi_at, 1e-6);
  EXPECT_TRUE(fit.converged);
}

TEST(FitMbl, TraceAscendsAndOutputIsFeasible) {
  for (std::uint64_t s = 0; s < 15; ++s) {
    const auto ds = testing::random_dataset(300 + s, 120, s % 3 == 0);
    const auto fit = fit_mbl(ds, truncation_indices(ds.size(), 0.05));
    for (std::size_t i = 1; i < fit.loglik_trace.size(); ++i) {
      EXPECT_GE(fit.loglik_trace[i], fit.loglik_trace[i - 1] - 1e-9);
    }
    expect_feasible(fit.theta);
    EXPECT_GE(fit.chi.phi_nt, 0.0);
    EXPECT_GE(fit.chi.phi_at, 0.0);
    EXPECT_GT(fit.chi.phi_co, 0.0);
    EXPECT_NEAR(fit.chi.phi_co + fit.chi.phi_nt + fit.chi.phi_at, 1.0, 1e-12);
  }
}

TEST(FitMbl, WeakIvScenarioStaysFeasible) {
  auto sc = normal_estimation_scenario(IvStrength::kWeak, true, 500);
  auto rng = child_stream(31, 0);
  const auto ds = generate_dataset(sc, rng);
  const auto fit = fit_mbl(ds, truncation_indices(ds.size(), 0.05));
  expect_feasible(fit.theta);
  EXPECT_TRUE(fit.converged);
}

TEST(FitMbl, FixedSharesAreKept) {
  const auto ds = testing::random_dataset(8, 80);
  const auto chi = ComplianceProportions::from_nt_at(0.3, 0.25);
  FitOptions o;
  o.fixed_chi = chi;
  const auto fit = fit_mbl(ds, truncation_indices(80, 0.05), o);
  EXPECT_EQ(fit.chi.phi_nt, 0.3);
  EXPECT_EQ(fit.chi.phi_at, 0.25);
}

TEST(FitMbl, NonConvergenceIsReported) {
  const auto ds = testing::random_dataset(9, 80);
  FitOptions o;
  o.max_iter = 1;
  o.tol = -1.0;
  const auto fit = fit_mbl(ds, truncation_indices(80, 0.05), o);
  EXPECT_FALSE(fit.converged);
  EXPECT_EQ(fit.iterations, 1u);
  EXPECT_NE(fit.warning.find("did not converge"), std::string::npos);
}

TEST(FitMbl, EmptyCellRejected) {
  const auto ds = from_cells({1, 2}, {3, 4}, {}, {5, 6});
  EXPECT_THROW(fit_mbl(ds, truncation_indices(ds.size(), 0.1)), EstimationError);
}

TEST(FitMbl, ExplicitStart) {
  const auto ds = testing::random_dataset(10, 60);
  const auto t = truncation_indices(60, 0.05);
  const auto g = make_knot_grid(ds, t);
  FitOptions o;
  o.init = InitStrategy::kExplicit;
  o.initial_theta = ThetaVector{g.F(Cell::k00), g.F(Cell::k10), g.F(Cell::k11), g.F(Cell::k01)};
  o.initial_chi = ComplianceProportions::from_nt_at(0.3, 0.3);
  const auto fit = fit_mbl(g, o);
  EXPECT_DOUBLE_EQ(fit.loglik_trace.front(), binomial_loglik(g, *o.initial_theta, *o.initial_chi));
  expect_feasible(fit.theta);
}

TEST(FitMblNull, SingleClassGivesPooledEcdf) {
  const auto ds = from_cells({1, 3, 5, 7}, {}, {}, {2, 4, 6, 8, 9, 10});
  const auto t = TruncationSet{1, ds.size(), 0.0};
  const auto g = make_knot_grid(ds, t);
  const auto p = plugin_proportions(g.counts);
  ASSERT_EQ(p.phi_co, 1.0);
  const auto nf = fit_mbl_null(g, p);
  for (std::size_t k = 0; k < g.size(); ++k) {
    EXPECT_NEAR(nf.psi_co[k], static_cast<double>(k + 1) / 10.0, 1e-9);
  }
}

TEST(FitMblNull, IdenticalCellsTrackPooledEcdf) {
  Scenario sc = power_scenario(IvStrength::kStrong, 0.0, 4000);
  sc.nt = sc.co0;
  sc.at = sc.co0;
  auto rng = child_stream(32, 0);
  const auto ds = generate_dataset(sc, rng);
  const auto t = truncation_indices(ds.size(), 0.05);
  const auto g = make_knot_grid(ds, t);
  const auto nf = fit_mbl_null(g, plugin_proportions(g.counts));
  double sup = 0.0;
  const auto sorted = ds.sorted_outcomes();
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double e = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), g.knots[k]) -
                                         sorted.begin()) /
                     static_cast<double>(ds.size());
    sup = std::max({sup, std::abs(nf.psi_co[k] - e), std::abs(nf.psi_nt[k] - e),
                    std::abs(nf.psi_at[k] - e)});
  }
  EXPECT_LE(sup, 0.05);
}

TEST(FitMblNull, TraceAscendsAndFeasible) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto ds = testing::random_dataset(400 + s, 150);
    const auto g = make_knot_grid(ds, truncation_indices(ds.size(), 0.05));
    const auto p = plugin_proportions(g.counts);
    if (p.degenerate) continue;
    const auto nf = fit_mbl_null(g, p);
    for (std::size_t i = 1; i < nf.loglik_trace.size(); ++i) {
      EXPECT_GE(nf.loglik_trace[i], nf.loglik_trace[i - 1] - 1e-9);
    }
    expect_feasible(nf.as_theta());
  }
}

TEST(FitMblNull, DegenerateSharesRejected) {
  const auto ds = testing::random_dataset(11, 40);
  const auto g = make_knot_grid(ds, truncation_indices(40, 0.05));
  EXPECT_THROW(fit_mbl_null(g, ComplianceProportions::from_nt_at(0.6, 0.5)), EstimationError);
}

}  // namespace
}  // namespace ivmbl
