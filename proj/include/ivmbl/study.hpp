#ifndef IVMBL_STUDY_HPP_
#define IVMBL_STUDY_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ivmbl/dataset.hpp"
#include "ivmbl/em_pava.hpp"
#include "ivmbl/error.hpp"
#include "ivmbl/hypothesis.hpp"
#include "ivmbl/parallel.hpp"
#include "ivmbl/plugin.hpp"
#include "ivmbl/rng.hpp"
#include "ivmbl/scenario.hpp"

namespace ivmbl {

enum class Method { kMbl, kPlugin };

inline const char* to_string(Method m) { return m == Method::kMbl ? "mbl" : "plugin"; }

inline Method parse_method(const std::string& s) {
  if (s == "mbl") return Method::kMbl;
  if (s == "plugin") return Method::kPlugin;
  throw ParameterError("unknown method '" + s + "' (expected mbl or plugin)");
}

/// Running mean and standard error.
struct Summary {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++count;
  }
  double mean() const { return count ? sum / static_cast<double>(count) : std::nan(""); }
  double se() const {
    if (count < 2) return 0.0;
    const double c = static_cast<double>(count);
    const double var = std::max(0.0, (sum_sq - sum * sum / c) / (c - 1.0));
    return std::sqrt(var / c);
  }
};

struct EstimationRow {
  std::string scenario;
  Method method = Method::kMbl;
  int arm = 0;
  double mean_l2 = 0.0;
  double se_l2 = 0.0;
  std::size_t replications = 0;
  std::size_t failures = 0;
};

struct PowerRow {
  std::string scenario;
  double mu = 0.0;
  TestVariant variant = TestVariant::kBlrt;
  double rejection_rate = 0.0;
  std::size_t sims = 0;
  std::size_t failures = 0;
};

struct StudyReport {
  std::vector<EstimationRow> estimation;
  std::vector<PowerRow> power;
};

struct EstimationConfig {
  std::vector<Scenario> scenarios;
  std::vector<Method> methods = {Method::kMbl, Method::kPlugin};
  std::size_t reps = 500;
  double kappa = kDefaultKappa;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

namespace detail {

struct ReplicateL2 {
  // [method][arm]; empty when that estimate failed on this replicate
  std::optional<double> l2[2][2];
};

}  // namespace detail

/// Mean and SE of the L2 distance between estimated and true complier CDFs
/// for every scenario x method x arm. Replicate r of scenario s draws from
/// child_stream(seed, r, s). A replicate whose estimate cannot be formed (an
/// empty cell, or non-positive plug-in complier share) counts as a failure.
inline StudyReport run_estimation_study(const EstimationConfig& cfg) {
  if (cfg.reps < 1) throw ParameterError("estimation study needs reps >= 1");
  StudyReport report;
  for (std::size_t s = 0; s < cfg.scenarios.size(); ++s) {
    const Scenario& sc = cfg.scenarios[s];
    sc.validate();
    const QuantileGrid truth0(sc.co0);
    const QuantileGrid truth1(sc.co1);
    std::vector<detail::ReplicateL2> results(cfg.reps);
    parallel_for(cfg.reps, cfg.threads, [&](std::size_t r) {
      auto rng = child_stream(cfg.seed, r, s);
      const auto ds = generate_dataset(sc, rng);
      const auto c = ds.counts();
      if (c.n00 == 0 || c.n01 == 0 || c.n10 == 0 || c.n11 == 0) return;
      const auto trunc = truncation_indices(ds.size(), cfg.kappa);
      const auto grid = make_knot_grid(ds, trunc);
      auto& out = results[r];
      for (Method m : cfg.methods) {
        const int mi = static_cast<int>(m);
        if (m == Method::kPlugin) {
          const auto p = plugin_proportions(grid.counts);
          if (p.degenerate) continue;
          const auto v = plugin_values(grid, p);
          const double a = l2_distance(truth0, RawCurve{grid.knots, v.co0});
          const double b = l2_distance(truth1, RawCurve{grid.knots, v.co1});
          if (std::isfinite(a)) out.l2[mi][0] = a;
          if (std::isfinite(b)) out.l2[mi][1] = b;
        } else {
          const auto fit = fit_mbl(grid);
          out.l2[mi][0] = l2_distance(truth0, RawCurve{fit.knots, fit.theta.co0});
          out.l2[mi][1] = l2_distance(truth1, RawCurve{fit.knots, fit.theta.co1});
        }
      }
    });
    for (Method m : cfg.methods) {
      const int mi = static_cast<int>(m);
      for (int arm = 0; arm < 2; ++arm) {
        Summary sum;
        std::size_t failures = 0;
        for (const auto& r : results) {
          if (r.l2[mi][arm]) {
            sum.add(*r.l2[mi][arm]);
          } else {
            ++failures;
          }
        }
        report.estimation.push_back(
            {sc.id, m, arm, sum.mean(), sum.se(), sum.count, failures});
      }
    }
  }
  return report;
}

struct PowerConfig {
  std::vector<IvStrength> strengths = {IvStrength::kStrong};
  std::vector<double> mus = {0.0};
  std::size_t n = 300;
  std::vector<TestVariant> variants = {kAllVariants.begin(), kAllVariants.end()};
  std::size_t sims = 1000;
  std::size_t B = 500;
  double alpha = 0.05;
  double kappa = kDefaultKappa;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

/// Rejection rates at level alpha for each (strength, mu, variant). Each
/// simulated dataset is tested with all variants on shared bootstrap draws.
/// Simulation i of design cell c uses child_stream(seed, i, 2c) for the data
/// and a bootstrap seed taken from child_stream(seed, i, 2c + 1).
inline StudyReport run_power_study(const PowerConfig& cfg) {
  if (cfg.sims < 1) throw ParameterError("power study needs sims >= 1");
  if (cfg.B < 1) throw ParameterError("power study needs B >= 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ParameterError("alpha must lie in (0,1)");
  StudyReport report;
  std::size_t cell = 0;
  for (IvStrength iv : cfg.strengths) {
    for (double mu : cfg.mus) {
      const auto sc = power_scenario(iv, mu, cfg.n);
      sc.validate();
      // rejected[i][v]: 1 reject, 0 accept, -1 failed
      std::vector<std::vector<int>> rejected(cfg.sims, std::vector<int>(cfg.variants.size(), -1));
      parallel_for(cfg.sims, cfg.threads, [&](std::size_t i) {
        auto rng = child_stream(cfg.seed, i, 2 * cell);
        const auto ds = generate_dataset(sc, rng);
        BootstrapOptions bo;
        bo.B = cfg.B;
        bo.seed = child_stream(cfg.seed, i, 2 * cell + 1)();
        bo.threads = 1;
        try {
          const auto res =
              bootstrap_pvalues(ds, truncation_indices(ds.size(), cfg.kappa), cfg.variants, bo);
          for (std::size_t v = 0; v < res.size(); ++v) {
            rejected[i][v] = res[v].p_value <= cfg.alpha ? 1 : 0;
          }
        } catch (const EstimationError&) {
          // left as failed
        }
      });
      for (std::size_t v = 0; v < cfg.variants.size(); ++v) {
        std::size_t hits = 0, ok = 0;
        for (const auto& r : rejected) {
          if (r[v] < 0) continue;
          ++ok;
          hits += static_cast<std::size_t>(r[v]);
        }
        report.power.push_back({sc.id, mu, cfg.variants[v],
                                ok ? static_cast<double>(hits) / static_cast<double>(ok) : std::nan(""),
                                ok, cfg.sims - ok});
      }
      ++cell;
    }
  }
  return report;
}

inline void write_estimation_csv(const StudyReport& r, std::ostream& out) {
  out << "scenario,method,arm,mean_l2,se_l2,replications,failures\n";
  out.precision(10);
  for (const auto& row : r.estimation) {
    out << row.scenario << ',' << to_string(row.method) << ',' << row.arm << ',' << row.mean_l2
        << ',' << row.se_l2 << ',' << row.replications << ',' << row.failures << '\n';
  }
}

inline void write_power_csv(const StudyReport& r, std::ostream& out) {
  out << "scenario,mu,variant,rejection_rate,sims,failures\n";
  out.precision(10);
  for (const auto& row : r.power) {
    out << row.scenario << ',' << row.mu << ',' << to_string(row.variant) << ','
        << row.rejection_rate << ',' << row.sims << ',' << row.failures << '\n';
  }
}

}  // namespace ivmbl

#endif  // IVMBL_STUDY_HPP_
