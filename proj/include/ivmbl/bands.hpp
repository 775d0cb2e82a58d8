#ifndef IVMBL_BANDS_HPP_
#define IVMBL_BANDS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ivmbl/dataset.hpp"
#include "ivmbl/em_pava.hpp"
#include "ivmbl/empirical.hpp"
#include "ivmbl/error.hpp"
#include "ivmbl/isotonic.hpp"
#include "ivmbl/parallel.hpp"
#include "ivmbl/rng.hpp"

namespace ivmbl {

enum class CurveKind { kCo0, kCo1, kNt, kAt };

inline const char* to_string(CurveKind c) {
  switch (c) {
    case CurveKind::kCo0: return "co0";
    case CurveKind::kCo1: return "co1";
    case CurveKind::kNt: return "nt";
    case CurveKind::kAt: return "at";
  }
  return "?";
}

inline CurveKind parse_curve(const std::string& s) {
  if (s == "co0") return CurveKind::kCo0;
  if (s == "co1") return CurveKind::kCo1;
  if (s == "nt") return CurveKind::kNt;
  if (s == "at") return CurveKind::kAt;
  throw ParameterError("unknown curve '" + s + "' (expected co0, co1, nt or at)");
}

inline const std::vector<double>& select_curve(const ThetaVector& t, CurveKind c) {
  switch (c) {
    case CurveKind::kCo0: return t.co0;
    case CurveKind::kCo1: return t.co1;
    case CurveKind::kNt: return t.nt;
    case CurveKind::kAt: return t.at;
  }
  return t.co0;
}

/// B bootstrap curves evaluated on a common set of knots, one row each.
struct BootstrapCurveMatrix {
  std::vector<double> knots;
  std::vector<std::vector<double>> rows;
  CurveKind curve = CurveKind::kCo1;

  std::size_t B() const { return rows.size(); }
};

struct BandOptions {
  std::size_t B = 500;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  CurveKind curve = CurveKind::kCo1;
  FitOptions fit;
};

namespace detail {

inline IVDataset resample_rows(const IVDataset& ds, Rng& rng) {
  const std::size_t n = ds.size();
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<double> y(n);
  std::vector<int> z(n);
  std::vector<int> d(n);
  for (std::size_t a = 0; a < n; ++a) {
    const std::size_t i = pick(rng);
    y[a] = ds.y()[i];
    z[a] = ds.z()[i];
    d[a] = ds.d()[i];
  }
  return IVDataset(std::move(y), std::move(z), std::move(d));
}

}  // namespace detail

/// MBL curves refitted on row resamples (with replacement) of `ds`, each
/// evaluated on the knots of the fit to the original data. A resample that
/// leaves a cell empty is redrawn, at most 10 times per row.
inline BootstrapCurveMatrix bootstrap_curves(const IVDataset& ds, const TruncationSet& trunc,
                                             const BandOptions& opts) {
  if (opts.B < 10) throw ParameterError("bootstrap bands need B >= 10");
  ds.require_nonempty_cells();
  const auto grid = make_knot_grid(ds, trunc);
  BootstrapCurveMatrix m;
  m.knots = grid.knots;
  m.curve = opts.curve;
  m.rows.assign(opts.B, {});
  constexpr std::size_t kMaxAttempts = 10;
  parallel_for(opts.B, opts.threads, [&](std::size_t b) {
    for (std::size_t attempt = 0;; ++attempt) {
      auto rng = child_stream(opts.seed, b, attempt);
      const auto rs = detail::resample_rows(ds, rng);
      if (rs.counts().n00 == 0 || rs.counts().n01 == 0 || rs.counts().n10 == 0 ||
          rs.counts().n11 == 0) {
        if (attempt + 1 >= kMaxAttempts) {
          throw EstimationError("bootstrap row " + std::to_string(b) +
                                " kept an empty cell after 10 draws");
        }
        continue;
      }
      const auto fit = fit_mbl(rs, truncation_indices(rs.size(), trunc.kappa), opts.fit);
      const RawCurve c{fit.knots, select_curve(fit.theta, opts.curve)};
      auto& row = m.rows[b];
      row.resize(m.knots.size());
      for (std::size_t k = 0; k < m.knots.size(); ++k) row[k] = c.evaluate_extrapolated(m.knots[k]);
      return;
    }
  });
  return m;
}

struct ConfidenceBand {
  std::vector<double> knots;
  std::vector<double> lower;
  std::vector<double> upper;
  /// Envelope depth: lower = rank `depth`, upper = rank B + 1 - `depth` of
  /// each sorted column.
  std::size_t depth = 1;
  /// depth / (B + 1), the marginal quantile level of the lower envelope.
  double s_hat = 0.0;
  double coverage_target = 0.95;
  /// Bootstrap rows lying inside the band at every knot.
  std::size_t rows_inside = 0;
};

namespace detail {

inline std::vector<std::vector<double>> sorted_columns(const BootstrapCurveMatrix& m) {
  const std::size_t B = m.B();
  std::vector<std::vector<double>> cols(m.knots.size(), std::vector<double>(B));
  for (std::size_t b = 0; b < B; ++b) {
    if (m.rows[b].size() != m.knots.size()) {
      throw ParameterError("bootstrap row length does not match the knots");
    }
    for (std::size_t k = 0; k < m.knots.size(); ++k) cols[k][b] = m.rows[b][k];
  }
  for (auto& c : cols) std::sort(c.begin(), c.end());
  return cols;
}

inline bool row_inside(const std::vector<double>& row, const std::vector<std::vector<double>>& cols,
                       std::size_t depth) {
  const std::size_t B = cols.empty() ? 0 : cols.front().size();
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (row[k] < cols[k][depth - 1] || row[k] > cols[k][B - depth]) return false;
  }
  return true;
}

}  // namespace detail

/// Envelope of the sorted columns at a given depth (1 = full range).
inline ConfidenceBand band_at_depth(const BootstrapCurveMatrix& m, std::size_t depth) {
  const std::size_t B = m.B();
  if (B == 0) throw ParameterError("empty bootstrap matrix");
  if (depth < 1 || 2 * depth > B + 1) throw ParameterError("band depth out of range");
  const auto cols = detail::sorted_columns(m);
  ConfidenceBand band;
  band.knots = m.knots;
  band.depth = depth;
  band.s_hat = static_cast<double>(depth) / static_cast<double>(B + 1);
  band.lower.resize(m.knots.size());
  band.upper.resize(m.knots.size());
  for (std::size_t k = 0; k < m.knots.size(); ++k) {
    band.lower[k] = cols[k][depth - 1];
    band.upper[k] = cols[k][B - depth];
  }
  for (const auto& row : m.rows) band.rows_inside += detail::row_inside(row, cols, depth) ? 1 : 0;
  return band;
}

/// Sorted-quantile envelope band. Columns are sorted; each row gets the
/// deepest envelope that still contains it (binary search over depth); the
/// band is the deepest envelope containing at least ceil((1 - alpha) B) rows.
inline ConfidenceBand confidence_band(const BootstrapCurveMatrix& m, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0,1)");
  const std::size_t B = m.B();
  if (B == 0) throw ParameterError("empty bootstrap matrix");
  if (static_cast<double>(B) * alpha < 1.0 - 1e-12) {
    throw ParameterError("bands need B >= 1/alpha");
  }
  const auto cols = detail::sorted_columns(m);
  const std::size_t max_depth = (B + 1) / 2;

  std::vector<std::size_t> deepest(B);
  for (std::size_t b = 0; b < B; ++b) {
    std::size_t lo = 1, hi = max_depth;  // row is always inside at depth 1
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo + 1) / 2;
      if (detail::row_inside(m.rows[b], cols, mid)) {
        lo = mid;
      } else {
        hi = mid - 1;
      }
    }
    deepest[b] = lo;
  }
  const auto needed = static_cast<std::size_t>(std::ceil((1.0 - alpha) * static_cast<double>(B) - 1e-9));
  // The needed-th largest deepest depth is the deepest envelope with enough rows.
  std::sort(deepest.begin(), deepest.end(), std::greater<>());
  const std::size_t depth = deepest[std::max<std::size_t>(needed, 1) - 1];
  auto band = band_at_depth(m, depth);
  band.coverage_target = 1.0 - alpha;
  return band;
}

/// Isotonic projection of both envelopes. Projection preserves pointwise
/// order, so lower <= upper still holds.
inline void monotonize(ConfidenceBand& band) {
  if (band.lower.empty()) return;
  const std::vector<double> w(band.lower.size(), 1.0);
  pava_weighted_into(band.lower, w, band.lower);
  pava_weighted_into(band.upper, w, band.upper);
}

}  // namespace ivmbl

#endif  // IVMBL_BANDS_HPP_
