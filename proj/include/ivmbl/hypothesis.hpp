#ifndef IVMBL_HYPOTHESIS_HPP_
#define IVMBL_HYPOTHESIS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ivmbl/blik.hpp"
#include "ivmbl/dataset.hpp"
#include "ivmbl/em_pava.hpp"
#include "ivmbl/empirical.hpp"
#include "ivmbl/error.hpp"
#include "ivmbl/parallel.hpp"
#include "ivmbl/plugin.hpp"
#include "ivmbl/rng.hpp"

namespace ivmbl {

enum class TestVariant { kBlrt, kBlrtApprox, kKs, kAd };

inline constexpr std::array<TestVariant, 4> kAllVariants = {
    TestVariant::kBlrt, TestVariant::kBlrtApprox, TestVariant::kKs, TestVariant::kAd};

inline const char* to_string(TestVariant v) {
  switch (v) {
    case TestVariant::kBlrt: return "blrt";
    case TestVariant::kBlrtApprox: return "blrt_approx";
    case TestVariant::kKs: return "ks";
    case TestVariant::kAd: return "ad";
  }
  return "?";
}

/// Accepts "blrt", "blrt_approx" / "blrt-approx", "ks", "ad".
inline TestVariant parse_variant(const std::string& s) {
  if (s == "blrt") return TestVariant::kBlrt;
  if (s == "blrt_approx" || s == "blrt-approx") return TestVariant::kBlrtApprox;
  if (s == "ks") return TestVariant::kKs;
  if (s == "ad") return TestVariant::kAd;
  throw ParameterError("unknown test variant '" + s + "'");
}

struct TestResult {
  TestVariant variant = TestVariant::kBlrt;
  double statistic = 0.0;
  double p_value = 1.0;
  std::vector<double> replicates;
  std::size_t B = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

/// (1 + #{replicates >= statistic}) / (B + 1).
inline double add_one_pvalue(double statistic, const std::vector<double>& replicates) {
  std::size_t hits = 0;
  for (double r : replicates) hits += r >= statistic ? 1 : 0;
  return (1.0 + static_cast<double>(hits)) / (static_cast<double>(replicates.size()) + 1.0);
}

// ---------------------------------------------------------------------------
// Statistics

namespace detail {

inline FitOptions with_fixed_chi(const ComplianceProportions& p) {
  FitOptions o;
  o.fixed_chi = p;
  return o;
}

}  // namespace detail

/// Both fits behind the BLRT, with the shares frozen at the plug-in values.
struct BlrtFits {
  ComplianceProportions props;
  MblFit alternative;
  NullFit null;
  double statistic = 0.0;
};

inline BlrtFits blrt_fits(const KnotGrid& g) {
  for (Cell c : kAllCells) {
    if (g.counts[c] == 0) throw EstimationError("empty cell " + cell_name(c));
  }
  BlrtFits out;
  out.props = plugin_proportions(g.counts);
  out.props.require_nondegenerate("BLRT");
  out.null = fit_mbl_null(g, out.props);
  out.alternative = fit_mbl(g, detail::with_fixed_chi(out.props));
  // The null curves are feasible for the alternative, so restarting from them
  // can only help when the first ascent stalled below the null maximum.
  if (out.alternative.loglik() < out.null.loglik) {
    auto opts = detail::with_fixed_chi(out.props);
    opts.init = InitStrategy::kExplicit;
    opts.initial_theta = out.null.as_theta();
    auto retry = fit_mbl(g, opts);
    if (retry.loglik() > out.alternative.loglik()) out.alternative = std::move(retry);
  }
  out.statistic = std::max(0.0, out.alternative.loglik() - out.null.loglik);
  return out;
}

inline double blrt_statistic(const KnotGrid& g) { return blrt_fits(g).statistic; }

inline double blrt_statistic(const IVDataset& ds, const TruncationSet& trunc) {
  ds.require_nonempty_cells();
  return blrt_statistic(make_knot_grid(ds, trunc));
}

/// Squared inverse complier weights 1/lambda_uv^2 of the variance of the
/// plug-in gap, indexed by Cell. A weight of zero marks a cell whose term
/// drops out (no never-takers or no always-takers).
inline std::array<double, 4> inverse_lambda_sq(const ComplianceProportions& p) {
  std::array<double, 4> w{};
  const double r0 = (1.0 - p.lambda0) / p.lambda0;
  const double r1 = (1.0 - p.lambda1) / p.lambda1;
  w[index_of(Cell::k00)] = 1.0 / (p.lambda0 * p.lambda0);
  w[index_of(Cell::k01)] = r1 * r1;
  w[index_of(Cell::k10)] = r0 * r0;
  w[index_of(Cell::k11)] = 1.0 / (p.lambda1 * p.lambda1);
  return w;
}

/// Weight applied to the Anderson-Darling-type sum. A second-order expansion
/// of the two constrained maxima gives half the squared standardized gap per
/// window position.
inline constexpr double kApproxScale = 0.5;

/// Weighted sum of squared plug-in complier gaps over the window,
///   (1/2n) * sum_b gap(b)^2 / sum_uv (1/lambda_uv^2) (n/n_uv) F_uv(1 - F_uv),
/// the quadratic approximation of the BLRT statistic. Appends a note to
/// `warnings` when a cell term is dropped.
inline double blrt_statistic_approx(const KnotGrid& g, std::vector<std::string>* warnings = nullptr) {
  const auto p = plugin_proportions(g.counts);
  p.require_nondegenerate("approximate BLRT");
  const auto plug = plugin_values(g, p);
  const auto inv = inverse_lambda_sq(p);
  const double n = static_cast<double>(g.n);
  bool dropped = false;
  std::array<double, 4> coef{};
  for (Cell c : kAllCells) {
    const double nc = g.count(c);
    if (inv[index_of(c)] == 0.0 || nc == 0.0) {
      dropped = true;
      continue;
    }
    coef[index_of(c)] = inv[index_of(c)] * n / nc;
  }
  if (dropped && warnings) {
    warnings->push_back("approximate BLRT: a cell without mixing was dropped from the variance");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    double var = 0.0;
    for (Cell c : kAllCells) {
      const double a = coef[index_of(c)];
      if (a == 0.0) continue;
      const double f = g.F(c)[k];
      var += a * std::max(f * (1.0 - f), kProbClamp);
    }
    const double gap = plug.co0[k] - plug.co1[k];
    acc += g.multiplicity[k] * gap * gap / var;
  }
  return kApproxScale * acc / n;
}

inline double blrt_statistic_approx(const IVDataset& ds, const TruncationSet& trunc,
                                    std::vector<std::string>* warnings = nullptr) {
  return blrt_statistic_approx(make_knot_grid(ds, trunc), warnings);
}

namespace detail {

/// Pooled distinct values with per-arm counts, in increasing order.
struct PooledSteps {
  std::vector<std::size_t> count0;
  std::vector<std::size_t> count1;
  std::size_t m = 0;
  std::size_t k = 0;
};

inline PooledSteps pooled_steps(const IVDataset& ds) {
  PooledSteps s;
  const auto& y = ds.y();
  const auto& z = ds.z();
  double last = 0.0;
  bool first = true;
  for (std::size_t idx : ds.order()) {
    if (first || y[idx] != last) {
      s.count0.push_back(0);
      s.count1.push_back(0);
      last = y[idx];
      first = false;
    }
    if (z[idx] == 0) {
      ++s.count0.back();
      ++s.m;
    } else {
      ++s.count1.back();
      ++s.k;
    }
  }
  if (s.m == 0) throw EstimationError("instrument arm z=0 is empty");
  if (s.k == 0) throw EstimationError("instrument arm z=1 is empty");
  return s;
}

}  // namespace detail

/// sup_t |F0(t) - F1(t)| for the Z=0 and Z=1 arms.
inline double ks_statistic(const IVDataset& ds) {
  const auto s = detail::pooled_steps(ds);
  std::size_t c0 = 0, c1 = 0;
  double best = 0.0;
  for (std::size_t j = 0; j < s.count0.size(); ++j) {
    c0 += s.count0[j];
    c1 += s.count1[j];
    const double d = std::abs(static_cast<double>(c0) / static_cast<double>(s.m) -
                              static_cast<double>(c1) / static_cast<double>(s.k));
    best = std::max(best, d);
  }
  return best;
}

/// Two-sample Anderson-Darling sum over pooled distinct values,
///   sum_t (F0(t) - F1(t))^2 / (H(t)(1 - H(t))) * dH(t),
/// skipping the last step where H = 1.
inline double ad_statistic(const IVDataset& ds) {
  const auto s = detail::pooled_steps(ds);
  const double big_n = static_cast<double>(s.m + s.k);
  std::size_t c0 = 0, c1 = 0;
  double acc = 0.0;
  for (std::size_t j = 0; j < s.count0.size(); ++j) {
    c0 += s.count0[j];
    c1 += s.count1[j];
    if (c0 + c1 == s.m + s.k) break;
    const double h = static_cast<double>(c0 + c1) / big_n;
    const double d = static_cast<double>(c0) / static_cast<double>(s.m) -
                     static_cast<double>(c1) / static_cast<double>(s.k);
    const double dh = static_cast<double>(s.count0[j] + s.count1[j]) / big_n;
    acc += d * d / (h * (1.0 - h)) * dh;
  }
  return acc;
}

inline double compute_statistic(TestVariant v, const IVDataset& ds, const TruncationSet& trunc,
                                std::vector<std::string>* warnings = nullptr) {
  switch (v) {
    case TestVariant::kBlrt: return blrt_statistic(ds, trunc);
    case TestVariant::kBlrtApprox: return blrt_statistic_approx(ds, trunc, warnings);
    case TestVariant::kKs: return ks_statistic(ds);
    case TestVariant::kAd: return ad_statistic(ds);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Null bootstrap

/// Draws datasets from the fitted null model: the observed instrument
/// vector, classes from the plug-in shares, outcomes from the null curves.
struct NullSampler {
  ComplianceProportions props;
  NullFit psi;
  std::vector<int> z_template;

  static NullSampler from_data(const IVDataset& ds, const TruncationSet& trunc) {
    ds.require_nonempty_cells();
    const auto g = make_knot_grid(ds, trunc);
    NullSampler s;
    s.props = plugin_proportions(g.counts);
    s.props.require_nondegenerate("null sampler");
    s.psi = fit_mbl_null(g, s.props);
    s.z_template = ds.z();
    return s;
  }
};

namespace detail {

/// Inverse-CDF draw from a step function on `knots`: atom
/// curve[b] - curve[b-1] at knot b, with leftover mass on the end knots.
inline double draw_from_steps(const std::vector<double>& knots, const std::vector<double>& curve,
                              double u) {
  const auto it = std::upper_bound(curve.begin(), curve.end(), u);
  if (it == curve.end()) return knots.back();
  return knots[static_cast<std::size_t>(it - curve.begin())];
}

}  // namespace detail

inline IVDataset bootstrap_null_dataset(const NullSampler& s, Rng& rng) {
  s.props.require_nondegenerate("null sampler");
  if (s.psi.knots.empty()) throw ParameterError("null sampler has no knots");
  const std::size_t n = s.z_template.size();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> y(n);
  std::vector<int> d(n);
  for (std::size_t a = 0; a < n; ++a) {
    const double u = unif(rng);
    const std::vector<double>* curve = &s.psi.psi_co;
    if (u < s.props.phi_co) {
      d[a] = s.z_template[a];
    } else if (u < s.props.phi_co + s.props.phi_nt) {
      d[a] = 0;
      curve = &s.psi.psi_nt;
    } else {
      d[a] = 1;
      curve = &s.psi.psi_at;
    }
    y[a] = detail::draw_from_steps(s.psi.knots, *curve, unif(rng));
  }
  return IVDataset(std::move(y), s.z_template, std::move(d));
}

inline constexpr std::size_t kMaxRedraws = 10;

struct BootstrapOptions {
  std::size_t B = 500;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

/// Observed statistics and null-bootstrap p-values for several variants at
/// once; every variant sees the same replicate datasets. Replicate t uses
/// the stream child_stream(seed, t, attempt), and a replicate on which any
/// statistic fails (e.g. an empty cell) is redrawn up to kMaxRedraws times.
inline std::vector<TestResult> bootstrap_pvalues(const IVDataset& ds, const TruncationSet& trunc,
                                                 const std::vector<TestVariant>& variants,
                                                 const BootstrapOptions& opts) {
  if (opts.B < 1) throw ParameterError("bootstrap needs B >= 1");
  if (variants.empty()) throw ParameterError("no test variant requested");
  const auto sampler = NullSampler::from_data(ds, trunc);

  std::vector<TestResult> out(variants.size());
  for (std::size_t v = 0; v < variants.size(); ++v) {
    out[v].variant = variants[v];
    out[v].B = opts.B;
    out[v].seed = opts.seed;
    out[v].statistic = compute_statistic(variants[v], ds, trunc, &out[v].warnings);
    out[v].replicates.assign(opts.B, 0.0);
  }
  if (!sampler.psi.converged) {
    for (auto& r : out) r.warnings.push_back("null fit: " + sampler.psi.warning);
  }

  std::vector<std::size_t> redraws(opts.B, 0);
  std::vector<std::uint8_t> dropped(opts.B, 0);
  parallel_for(opts.B, opts.threads, [&](std::size_t t) {
    for (std::size_t attempt = 0;; ++attempt) {
      auto rng = child_stream(opts.seed, t, attempt);
      try {
        const auto rep = bootstrap_null_dataset(sampler, rng);
        const auto rep_trunc = truncation_indices(rep.size(), trunc.kappa);
        std::vector<std::string> local;
        std::vector<double> stats(variants.size());
        for (std::size_t v = 0; v < variants.size(); ++v) {
          stats[v] = compute_statistic(variants[v], rep, rep_trunc, &local);
        }
        for (std::size_t v = 0; v < variants.size(); ++v) out[v].replicates[t] = stats[v];
        dropped[t] = local.empty() ? 0 : 1;
        redraws[t] = attempt;
        return;
      } catch (const EstimationError&) {
        if (attempt + 1 >= kMaxRedraws) {
          throw EstimationError("bootstrap replicate " + std::to_string(t) + " failed after " +
                                std::to_string(kMaxRedraws) + " draws");
        }
      }
    }
  });

  std::size_t total_redraws = 0;
  std::size_t total_dropped = 0;
  for (std::size_t t = 0; t < opts.B; ++t) {
    total_redraws += redraws[t];
    total_dropped += dropped[t];
  }
  for (auto& r : out) {
    r.p_value = add_one_pvalue(r.statistic, r.replicates);
    if (total_redraws > 0) {
      r.warnings.push_back(std::to_string(total_redraws) + " degenerate bootstrap draws redrawn");
    }
    if (r.variant == TestVariant::kBlrtApprox && total_dropped > 0) {
      r.warnings.push_back(std::to_string(total_dropped) +
                           " replicates dropped a variance cell in the approximate BLRT");
    }
  }
  return out;
}

inline TestResult bootstrap_pvalue(const IVDataset& ds, const TruncationSet& trunc,
                                   TestVariant variant, const BootstrapOptions& opts) {
  return bootstrap_pvalues(ds, trunc, {variant}, opts).front();
}

// ---------------------------------------------------------------------------
// Closed-form null curves

struct TauCurves {
  std::vector<double> knots;
  std::vector<double> co;
  std::vector<double> nt;
  std::vector<double> at;
};

/// Inverse-variance combination of the two plug-in complier curves, with the
/// matching corrections to the never-taker and always-taker CDFs. These track
/// the constrained null fit to first order.
inline TauCurves tau_null_curves(const KnotGrid& g) {
  for (Cell c : kAllCells) {
    if (g.counts[c] == 0) throw EstimationError("empty cell " + cell_name(c));
  }
  const auto p = plugin_proportions(g.counts);
  p.require_nondegenerate("null plug-in curves");
  const auto plug = plugin_values(g, p);
  const double n = static_cast<double>(g.n);
  const double l0 = p.lambda0;
  const double l1 = p.lambda1;
  const auto inv = inverse_lambda_sq(p);
  const double scale = l0 * l0 * l1 * l1;
  auto var = [&](Cell c, std::size_t k) {
    const double f = g.F(c)[k];
    return n / g.count(c) * std::max(f * (1.0 - f), kProbClamp);
  };

  TauCurves out{g.knots, std::vector<double>(g.size()), std::vector<double>(g.size()),
                std::vector<double>(g.size())};
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double c00 = scale * inv[index_of(Cell::k00)] * var(Cell::k00, k);
    const double c01 = scale * inv[index_of(Cell::k01)] * var(Cell::k01, k);
    const double c10 = scale * inv[index_of(Cell::k10)] * var(Cell::k10, k);
    const double c11 = scale * inv[index_of(Cell::k11)] * var(Cell::k11, k);
    const double total = c00 + c01 + c10 + c11;
    const double gap = plug.co0[k] - plug.co1[k];
    // lambda_10 * C_10 and lambda_01 * C_01 written without the singular ratio.
    const double lc10 = l0 * l1 * l1 * (1.0 - l0) * var(Cell::k10, k);
    const double lc01 = l1 * l0 * l0 * (1.0 - l1) * var(Cell::k01, k);
    out.co[k] = ((c01 + c11) * plug.co0[k] + (c10 + c00) * plug.co1[k]) / total;
    out.nt[k] = g.F(Cell::k10)[k] + lc10 * gap / total;
    out.at[k] = g.F(Cell::k01)[k] - lc01 * gap / total;
  }
  return out;
}

inline TauCurves tau_null_curves(const IVDataset& ds, const TruncationSet& trunc) {
  ds.require_nonempty_cells();
  return tau_null_curves(make_knot_grid(ds, trunc));
}

}  // namespace ivmbl

#endif  // IVMBL_HYPOTHESIS_HPP_
