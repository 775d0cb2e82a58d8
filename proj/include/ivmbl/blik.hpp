#ifndef IVMBL_BLIK_HPP_
#define IVMBL_BLIK_HPP_

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ivmbl/dataset.hpp"
#include "ivmbl/empirical.hpp"
#include "ivmbl/error.hpp"
#include "ivmbl/plugin.hpp"

namespace ivmbl {

/// Candidate class CDFs at the knots of a KnotGrid.
struct ThetaVector {
  std::vector<double> co0;
  std::vector<double> nt;
  std::vector<double> co1;
  std::vector<double> at;

  std::size_t size() const { return co0.size(); }

  static ThetaVector zeros(std::size_t k) {
    return {std::vector<double>(k, 0.0), std::vector<double>(k, 0.0),
            std::vector<double>(k, 0.0), std::vector<double>(k, 0.0)};
  }
};

/// Probability clamp inside J; keeps log terms finite at 0 and 1.
inline constexpr double kProbClamp = 1e-12;

/// J(x, y) = x log y + (1 - x) log(1 - y). Each log argument is floored at
/// kProbClamp, and a term with zero coefficient is skipped.
inline double binomial_j(double x, double y) {
  double out = 0.0;
  if (x > 0.0) out += x * std::log(std::fmax(y, kProbClamp));
  if (x < 1.0) out += (1.0 - x) * std::log1p(-std::fmin(y, 1.0 - kProbClamp));
  return out;
}

/// Per-cell contributions to the sample binomial log-likelihood.
struct LoglikTerms {
  std::array<double, 4> cell{};  // indexed by Cell

  double total() const { return cell[0] + cell[1] + cell[2] + cell[3]; }
};

namespace detail {

inline double log_or_neg_inf(double p) {
  return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Sample binomial log-likelihood split by cell. `chi` supplies the class
/// shares (phi_nt, phi_at, phi_co); it must have a positive complier share.
///
/// Each cell term is (1/n) * sum over window positions b of
///   (n_uv / n) * { log P(cell uv) + J(F_uv(Y_(b)), theta_uv(Y_(b))) },
/// with theta_00 and theta_11 the complier/non-complier mixtures.
inline LoglikTerms binomial_loglik_terms(const KnotGrid& g, const ThetaVector& theta,
                                         const ComplianceProportions& chi) {
  if (!(chi.phi_co > 0.0)) {
    throw ParameterError("binomial log-likelihood needs a positive complier share");
  }
  if (theta.co0.size() != g.size() || theta.nt.size() != g.size() ||
      theta.co1.size() != g.size() || theta.at.size() != g.size()) {
    throw ParameterError("theta does not match the knot grid");
  }
  const double l0 = chi.phi_co / (chi.phi_co + chi.phi_nt);
  const double l1 = chi.phi_co / (chi.phi_co + chi.phi_at);
  const double n = static_cast<double>(g.n);
  const double scale = 1.0 / (n * n);
  const double c00 = g.count(Cell::k00);
  const double c01 = g.count(Cell::k01);
  const double c10 = g.count(Cell::k10);
  const double c11 = g.count(Cell::k11);
  const auto& f00 = g.F(Cell::k00);
  const auto& f01 = g.F(Cell::k01);
  const auto& f10 = g.F(Cell::k10);
  const auto& f11 = g.F(Cell::k11);

  double s00 = 0.0, s01 = 0.0, s10 = 0.0, s11 = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double m = g.multiplicity[k];
    if (c00 > 0) s00 += m * binomial_j(f00[k], l0 * theta.co0[k] + (1.0 - l0) * theta.nt[k]);
    if (c10 > 0) s10 += m * binomial_j(f10[k], theta.nt[k]);
    if (c01 > 0) s01 += m * binomial_j(f01[k], theta.at[k]);
    if (c11 > 0) s11 += m * binomial_j(f11[k], l1 * theta.co1[k] + (1.0 - l1) * theta.at[k]);
  }
  const double w = g.window_size();
  LoglikTerms t;
  auto term = [&](double count, double log_p, double s) {
    if (count == 0.0) return 0.0;
    return scale * count * (w * log_p + s);
  };
  t.cell[index_of(Cell::k00)] = term(c00, detail::log_or_neg_inf(1.0 - chi.phi_at), s00);
  t.cell[index_of(Cell::k10)] = term(c10, detail::log_or_neg_inf(chi.phi_nt), s10);
  t.cell[index_of(Cell::k01)] = term(c01, detail::log_or_neg_inf(chi.phi_at), s01);
  t.cell[index_of(Cell::k11)] = term(c11, detail::log_or_neg_inf(1.0 - chi.phi_nt), s11);
  return t;
}

inline double binomial_loglik(const KnotGrid& g, const ThetaVector& theta,
                              const ComplianceProportions& chi) {
  return binomial_loglik_terms(g, theta, chi).total();
}

inline double binomial_loglik(const IVDataset& ds, const TruncationSet& trunc,
                              const ThetaVector& theta, const ComplianceProportions& chi) {
  return binomial_loglik(make_knot_grid(ds, trunc), theta, chi);
}

/// The unrestricted maximiser of the sample objective: plug-in complier
/// curves, never-taker and always-taker curves equal to the cell-10 and
/// cell-01 empirical CDFs.
inline ThetaVector plugin_theta(const KnotGrid& g, const ComplianceProportions& p) {
  const auto v = plugin_values(g, p);
  return {v.co0, g.F(Cell::k10), v.co1, g.F(Cell::k01)};
}

}  // namespace ivmbl

#endif  // IVMBL_BLIK_HPP_
