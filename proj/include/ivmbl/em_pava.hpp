#ifndef IVMBL_EM_PAVA_HPP_
#define IVMBL_EM_PAVA_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ivmbl/blik.hpp"
#include "ivmbl/dataset.hpp"
#include "ivmbl/empirical.hpp"
#include "ivmbl/error.hpp"
#include "ivmbl/isotonic.hpp"
#include "ivmbl/plugin.hpp"

namespace ivmbl {

/// Posterior complier probabilities at each knot: r for outcomes at or below
/// the knot, rho for outcomes above it; suffix 0 for cell (0,0), 1 for (1,1).
struct Responsibilities {
  std::vector<double> r0;
  std::vector<double> r1;
  std::vector<double> rho0;
  std::vector<double> rho1;
};

namespace detail {

/// a / (a + b) with the prior ratio as the answer to 0/0.
inline double posterior_share(double a, double b, double prior_a, double prior_b) {
  const double den = a + b;
  if (den > 0.0) return a / den;
  const double prior = prior_a + prior_b;
  return prior > 0.0 ? prior_a / prior : 0.0;
}

}  // namespace detail

inline Responsibilities e_step(const KnotGrid& g, const ThetaVector& theta,
                               const ComplianceProportions& chi) {
  const double co = chi.phi_co;
  const double nt = chi.phi_nt;
  const double at = chi.phi_at;
  const std::size_t k = g.size();
  Responsibilities r{std::vector<double>(k), std::vector<double>(k), std::vector<double>(k),
                     std::vector<double>(k)};
  for (std::size_t i = 0; i < k; ++i) {
    r.r0[i] = detail::posterior_share(co * theta.co0[i], nt * theta.nt[i], co, nt);
    r.r1[i] = detail::posterior_share(co * theta.co1[i], at * theta.at[i], co, at);
    r.rho0[i] = detail::posterior_share(co * (1.0 - theta.co0[i]), nt * (1.0 - theta.nt[i]), co, nt);
    r.rho1[i] = detail::posterior_share(co * (1.0 - theta.co1[i]), at * (1.0 - theta.at[i]), co, at);
  }
  return r;
}

/// Unrestricted maximiser of the expected complete-data objective, together
/// with the per-knot PAVA weights that make the isotonic projection of each
/// curve the restricted maximiser.
struct MStepResult {
  ThetaVector theta;
  ComplianceProportions chi;
  ThetaVector weights;
};

inline MStepResult m_step(const KnotGrid& g, const Responsibilities& r) {
  const std::size_t k = g.size();
  const double n00 = g.count(Cell::k00);
  const double n01 = g.count(Cell::k01);
  const double n10 = g.count(Cell::k10);
  const double n11 = g.count(Cell::k11);
  const auto& f00 = g.F(Cell::k00);
  const auto& f01 = g.F(Cell::k01);
  const auto& f10 = g.F(Cell::k10);
  const auto& f11 = g.F(Cell::k11);

  MStepResult out{ThetaVector::zeros(k), {}, ThetaVector::zeros(k)};
  double sum_nt = 0.0;
  double sum_at = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double below0 = f00[i] * r.r0[i];
    const double above0 = (1.0 - f00[i]) * r.rho0[i];
    out.weights.co0[i] = n00 * (below0 + above0);
    out.theta.co0[i] = (below0 + above0) > 0.0 ? below0 / (below0 + above0) : f00[i];

    const double nt_below = n00 * f00[i] * (1.0 - r.r0[i]) + n10 * f10[i];
    out.weights.nt[i] = n00 * f00[i] * (1.0 - r.r0[i]) + n00 * (1.0 - f00[i]) * (1.0 - r.rho0[i]) + n10;
    out.theta.nt[i] = out.weights.nt[i] > 0.0 ? nt_below / out.weights.nt[i] : f10[i];

    const double below1 = f11[i] * r.r1[i];
    const double above1 = (1.0 - f11[i]) * r.rho1[i];
    out.weights.co1[i] = n11 * (below1 + above1);
    out.theta.co1[i] = (below1 + above1) > 0.0 ? below1 / (below1 + above1) : f11[i];

    const double at_below = n11 * f11[i] * (1.0 - r.r1[i]) + n01 * f01[i];
    out.weights.at[i] = n11 * f11[i] * (1.0 - r.r1[i]) + n11 * (1.0 - f11[i]) * (1.0 - r.rho1[i]) + n01;
    out.theta.at[i] = out.weights.at[i] > 0.0 ? at_below / out.weights.at[i] : f01[i];

    sum_nt += g.multiplicity[i] * out.weights.nt[i];
    sum_at += g.multiplicity[i] * out.weights.at[i];
  }
  const double denom = g.window_size() * static_cast<double>(g.n);
  out.chi = ComplianceProportions::from_nt_at(sum_nt / denom, sum_at / denom);
  return out;
}

enum class InitStrategy {
  /// Isotonic projection of the clipped plug-in curves (cell CDFs when the
  /// plug-in shares are degenerate).
  kPluginProjection,
  /// Start from `FitOptions::initial_theta` / `initial_chi`.
  kExplicit,
};

struct FitOptions {
  std::size_t max_iter = 500;
  double tol = 1e-8;
  InitStrategy init = InitStrategy::kPluginProjection;
  std::optional<ThetaVector> initial_theta;
  std::optional<ComplianceProportions> initial_chi;
  /// Hold the class shares fixed instead of estimating them.
  std::optional<ComplianceProportions> fixed_chi;
};

struct MblFit {
  std::vector<double> knots;
  ThetaVector theta;
  ComplianceProportions chi;
  std::vector<double> loglik_trace;
  std::size_t iterations = 0;
  bool converged = false;
  std::string warning;

  double loglik() const { return loglik_trace.back(); }
};

struct NullFit {
  std::vector<double> knots;
  std::vector<double> psi_co;
  std::vector<double> psi_nt;
  std::vector<double> psi_at;
  double loglik = 0.0;
  std::vector<double> loglik_trace;
  std::size_t iterations = 0;
  bool converged = false;
  std::string warning;

  /// The null curves laid out as a ThetaVector (shared complier curve).
  ThetaVector as_theta() const { return {psi_co, psi_nt, psi_co, psi_at}; }
};

namespace detail {

inline constexpr double kWeightFloor = 1e-12;
inline constexpr double kChiFloor = 1e-3;

/// Isotonic projection with multiplicity-scaled weights, then a guard against
/// rounding just outside [0, 1].
inline void project_curve(std::vector<double>& values, const std::vector<double>& weights,
                          const std::vector<double>& multiplicity, std::vector<double>& scratch) {
  scratch.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    scratch[i] = std::max(weights[i] * multiplicity[i], kWeightFloor);
  }
  pava_weighted_into(values, scratch, values);
  for (double& v : values) v = std::clamp(v, 0.0, 1.0);
}

inline std::vector<double> clipped_projection(std::vector<double> values,
                                              const std::vector<double>& multiplicity) {
  for (double& v : values) v = std::clamp(v, 0.0, 1.0);
  pava_weighted_into(values, multiplicity, values);
  for (double& v : values) v = std::clamp(v, 0.0, 1.0);
  return values;
}

inline ComplianceProportions floored_shares(const ComplianceProportions& p) {
  const double co = std::max(p.phi_co, kChiFloor);
  const double nt = std::max(p.phi_nt, kChiFloor);
  const double at = std::max(p.phi_at, kChiFloor);
  const double s = co + nt + at;
  return ComplianceProportions::from_nt_at(nt / s, at / s);
}

inline ThetaVector warm_start_theta(const KnotGrid& g, const ComplianceProportions& plug) {
  if (plug.degenerate) {
    return {g.F(Cell::k00), g.F(Cell::k10), g.F(Cell::k11), g.F(Cell::k01)};
  }
  const auto v = plugin_values(g, plug);
  return {clipped_projection(v.co0, g.multiplicity), g.F(Cell::k10),
          clipped_projection(v.co1, g.multiplicity), g.F(Cell::k01)};
}

}  // namespace detail

/// Maximum binomial likelihood fit by EM with isotonic M-steps.
///
/// Each iteration computes responsibilities, the closed-form unrestricted
/// update, and projects every curve with its own weights. The class shares
/// are re-estimated unless `opts.fixed_chi` is set. Stops once the objective
/// changes by less than `opts.tol`.
inline MblFit fit_mbl(const KnotGrid& g, const FitOptions& opts = {}) {
  for (Cell c : kAllCells) {
    if (g.counts[c] == 0) throw EstimationError("empty cell " + cell_name(c));
  }
  const auto plug = plugin_proportions(g.counts);

  MblFit fit;
  fit.knots = g.knots;
  if (opts.init == InitStrategy::kExplicit && opts.initial_theta) {
    fit.theta = *opts.initial_theta;
  } else {
    fit.theta = detail::warm_start_theta(g, plug);
  }
  if (opts.fixed_chi) {
    opts.fixed_chi->require_nondegenerate("fit with fixed shares");
    fit.chi = *opts.fixed_chi;
  } else if (opts.init == InitStrategy::kExplicit && opts.initial_chi) {
    fit.chi = *opts.initial_chi;
  } else {
    fit.chi = detail::floored_shares(plug);
  }

  fit.loglik_trace.push_back(binomial_loglik(g, fit.theta, fit.chi));
  std::vector<double> scratch;
  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    const auto resp = e_step(g, fit.theta, fit.chi);
    auto ms = m_step(g, resp);
    detail::project_curve(ms.theta.co0, ms.weights.co0, g.multiplicity, scratch);
    detail::project_curve(ms.theta.nt, ms.weights.nt, g.multiplicity, scratch);
    detail::project_curve(ms.theta.co1, ms.weights.co1, g.multiplicity, scratch);
    detail::project_curve(ms.theta.at, ms.weights.at, g.multiplicity, scratch);
    fit.theta = std::move(ms.theta);
    if (!opts.fixed_chi) fit.chi = ms.chi;
    const double ll = binomial_loglik(g, fit.theta, fit.chi);
    const double prev = fit.loglik_trace.back();
    fit.loglik_trace.push_back(ll);
    fit.iterations = it + 1;
    if (std::abs(ll - prev) < opts.tol) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged) {
    fit.warning = "EM-PAVA did not converge within " + std::to_string(opts.max_iter) +
                  " iterations";
  }
  return fit;
}

inline MblFit fit_mbl(const IVDataset& ds, const TruncationSet& trunc, const FitOptions& opts = {}) {
  ds.require_nonempty_cells();
  return fit_mbl(make_knot_grid(ds, trunc), opts);
}

/// Fit under the null of a single complier curve shared by both arms, with
/// the class shares frozen at `props`.
///
/// The complier update pools the complier-attributed counts of cells (0,0)
/// and (1,1); its PAVA weight is the sum of the two complier weights.
inline NullFit fit_mbl_null(const KnotGrid& g, const ComplianceProportions& props,
                            const FitOptions& opts = {}) {
  props.require_nondegenerate("null fit");
  const std::size_t k = g.size();
  const double n00 = g.count(Cell::k00);
  const double n11 = g.count(Cell::k11);
  if (n00 + n11 == 0.0) throw EstimationError("null fit needs cells (0,0) or (1,1)");

  NullFit fit;
  fit.knots = g.knots;
  if (opts.init == InitStrategy::kExplicit && opts.initial_theta) {
    fit.psi_co = opts.initial_theta->co0;
    fit.psi_nt = opts.initial_theta->nt;
    fit.psi_at = opts.initial_theta->at;
  } else {
    const auto v = plugin_values(g, props);
    std::vector<double> pooled(k);
    for (std::size_t i = 0; i < k; ++i) {
      pooled[i] = (n00 * std::clamp(v.co0[i], 0.0, 1.0) + n11 * std::clamp(v.co1[i], 0.0, 1.0)) /
                  (n00 + n11);
    }
    fit.psi_co = detail::clipped_projection(std::move(pooled), g.multiplicity);
    fit.psi_nt = g.F(Cell::k10);
    fit.psi_at = g.F(Cell::k01);
  }

  ThetaVector theta = fit.as_theta();
  fit.loglik_trace.push_back(binomial_loglik(g, theta, props));
  std::vector<double> scratch;
  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    const auto resp = e_step(g, theta, props);
    auto ms = m_step(g, resp);
    const auto& f00 = g.F(Cell::k00);
    const auto& f11 = g.F(Cell::k11);
    std::vector<double> co(k);
    std::vector<double> w_co(k);
    for (std::size_t i = 0; i < k; ++i) {
      const double below = n00 * f00[i] * resp.r0[i] + n11 * f11[i] * resp.r1[i];
      w_co[i] = ms.weights.co0[i] + ms.weights.co1[i];
      co[i] = w_co[i] > 0.0 ? below / w_co[i] : 0.5 * (f00[i] + f11[i]);
    }
    detail::project_curve(co, w_co, g.multiplicity, scratch);
    detail::project_curve(ms.theta.nt, ms.weights.nt, g.multiplicity, scratch);
    detail::project_curve(ms.theta.at, ms.weights.at, g.multiplicity, scratch);
    fit.psi_co = std::move(co);
    fit.psi_nt = std::move(ms.theta.nt);
    fit.psi_at = std::move(ms.theta.at);
    theta = fit.as_theta();
    const double ll = binomial_loglik(g, theta, props);
    const double prev = fit.loglik_trace.back();
    fit.loglik_trace.push_back(ll);
    fit.iterations = it + 1;
    if (std::abs(ll - prev) < opts.tol) {
      fit.converged = true;
      break;
    }
  }
  fit.loglik = fit.loglik_trace.back();
  if (!fit.converged) {
    fit.warning = "null EM-PAVA did not converge within " + std::to_string(opts.max_iter) +
                  " iterations";
  }
  return fit;
}

inline NullFit fit_mbl_null(const IVDataset& ds, const TruncationSet& trunc,
                            const ComplianceProportions& props, const FitOptions& opts = {}) {
  return fit_mbl_null(make_knot_grid(ds, trunc), props, opts);
}

}  // namespace ivmbl

#endif  // IVMBL_EM_PAVA_HPP_
