#ifndef IVMBL_EMPIRICAL_HPP_
#define IVMBL_EMPIRICAL_HPP_

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ivmbl/dataset.hpp"
#include "ivmbl/error.hpp"

namespace ivmbl {

/// Right-continuous nondecreasing step function with values in [0, 1].
///
/// Evaluates to the value at the largest knot <= t and to 0 below the first
/// knot. Curves estimated on a truncated window are extrapolated to 0 and 1 by
/// `evaluate_extrapolated`.
class StepCDF {
 public:
  StepCDF() = default;

  /// `knots` must be strictly increasing; `values` nondecreasing in [0, 1].
  StepCDF(std::vector<double> knots, std::vector<double> values)
      : knots_(std::move(knots)), values_(std::move(values)) {
    if (knots_.size() != values_.size()) {
      throw ParameterError("StepCDF: knots and values differ in length");
    }
    for (std::size_t i = 0; i < knots_.size(); ++i) {
      if (i > 0 && !(knots_[i] > knots_[i - 1])) {
        throw ParameterError("StepCDF: knots must be strictly increasing");
      }
      if (!(values_[i] >= 0.0 && values_[i] <= 1.0)) {
        throw ParameterError("StepCDF: value outside [0,1]");
      }
      if (i > 0 && values_[i] < values_[i - 1]) {
        throw ParameterError("StepCDF: values must be nondecreasing");
      }
    }
  }

  /// Builds a curve from possibly repeated, sorted evaluation points. For each
  /// run of equal points the last (largest) value is kept.
  static StepCDF from_sorted_points(std::span<const double> points,
                                    std::span<const double> values) {
    std::vector<double> k;
    std::vector<double> v;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!k.empty() && points[i] == k.back()) {
        v.back() = values[i];
      } else {
        k.push_back(points[i]);
        v.push_back(values[i]);
      }
    }
    return StepCDF(std::move(k), std::move(v));
  }

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return knots_.size(); }

  /// Value at the largest knot <= t; 0 below the first knot.
  double operator()(double t) const {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    if (it == knots_.begin()) return 0.0;
    return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
  }

  /// As operator(), but 1 strictly above the last knot.
  double evaluate_extrapolated(double t) const {
    if (knots_.empty()) return 0.0;
    if (t > knots_.back()) return 1.0;
    return (*this)(t);
  }

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
};

/// Curve on knots whose values are unconstrained (may leave [0,1] and may
/// decrease). Used for plug-in complier curves.
struct RawCurve {
  std::vector<double> knots;
  std::vector<double> values;

  /// Right-continuous evaluation with 0 below the first knot and 1 above the
  /// last one.
  double evaluate_extrapolated(double t) const {
    if (knots.empty()) return 0.0;
    if (t > knots.back()) return 1.0;
    auto it = std::upper_bound(knots.begin(), knots.end(), t);
    if (it == knots.begin()) return 0.0;
    return values[static_cast<std::size_t>(it - knots.begin()) - 1];
  }
};

namespace detail {

/// Empirical CDF of `sorted_sample` at each of `sorted_points`.
inline std::vector<double> ecdf_at(std::span<const double> sorted_sample,
                                   std::span<const double> sorted_points) {
  std::vector<double> out(sorted_points.size(), 0.0);
  if (sorted_sample.empty()) return out;
  const double m = static_cast<double>(sorted_sample.size());
  std::size_t j = 0;
  for (std::size_t i = 0; i < sorted_points.size(); ++i) {
    while (j < sorted_sample.size() && sorted_sample[j] <= sorted_points[i]) ++j;
    out[i] = static_cast<double>(j) / m;
  }
  return out;
}

inline std::vector<double> sorted_copy(std::span<const double> pts) {
  std::vector<double> s(pts.begin(), pts.end());
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace detail

/// Per-cell empirical CDFs indexed by Cell.
using CellCdfs = std::array<StepCDF, 4>;

/// Empirical CDF of each (z,d) cell evaluated at `eval_points` (any order;
/// duplicates collapse). Throws EstimationError if a cell is empty.
inline CellCdfs empirical_cell_cdfs(const IVDataset& ds,
                                    std::span<const double> eval_points) {
  ds.require_nonempty_cells();
  const auto pts = detail::sorted_copy(eval_points);
  std::array<std::vector<double>, 4> samples;
  for (std::size_t idx : ds.order()) samples[index_of(ds.cell(idx))].push_back(ds.y()[idx]);
  CellCdfs out;
  for (Cell c : kAllCells) {
    const auto vals = detail::ecdf_at(samples[index_of(c)], pts);
    out[index_of(c)] = StepCDF::from_sorted_points(pts, vals);
  }
  return out;
}

/// Cell CDFs at every observed outcome.
inline CellCdfs empirical_cell_cdfs(const IVDataset& ds) {
  const auto pts = ds.sorted_outcomes();
  return empirical_cell_cdfs(ds, pts);
}

/// Empirical CDFs of the Z=0 and Z=1 arms (ignoring D) at every observed
/// outcome.
inline std::pair<StepCDF, StepCDF> group_cdfs(const IVDataset& ds) {
  std::array<std::vector<double>, 2> arms;
  for (std::size_t idx : ds.order()) {
    arms[static_cast<std::size_t>(ds.z()[idx])].push_back(ds.y()[idx]);
  }
  if (arms[0].empty()) throw EstimationError("instrument arm z=0 is empty");
  if (arms[1].empty()) throw EstimationError("instrument arm z=1 is empty");
  const auto pts = ds.sorted_outcomes();
  return {StepCDF::from_sorted_points(pts, detail::ecdf_at(arms[0], pts)),
          StepCDF::from_sorted_points(pts, detail::ecdf_at(arms[1], pts))};
}

/// Distinct order-statistic knots inside the truncation window, with the
/// number of window positions that share each value and the per-cell
/// empirical CDFs there. Every likelihood computation runs on this grid.
///
/// Cells that are empty get an all-zero CDF; their count of zero removes
/// them from every sum.
struct KnotGrid {
  std::vector<double> knots;
  std::vector<double> multiplicity;
  std::array<std::vector<double>, 4> ecdf;
  CellCounts counts;
  std::size_t n = 0;
  TruncationSet trunc;

  std::size_t size() const { return knots.size(); }
  const std::vector<double>& F(Cell c) const { return ecdf[index_of(c)]; }
  double count(Cell c) const { return static_cast<double>(counts[c]); }
  /// Number of order-statistic positions in the window (|I_kappa|).
  double window_size() const { return static_cast<double>(trunc.size()); }
};

inline KnotGrid make_knot_grid(const IVDataset& ds, const TruncationSet& trunc) {
  if (trunc.hi > ds.size() || trunc.lo < 1 || trunc.lo > trunc.hi) {
    throw ParameterError("truncation window does not fit the dataset");
  }
  KnotGrid g;
  g.n = ds.size();
  g.counts = ds.counts();
  g.trunc = trunc;
  const auto& order = ds.order();
  const auto& y = ds.y();
  for (std::size_t b = trunc.lo; b <= trunc.hi; ++b) {
    const double v = y[order[b - 1]];
    if (!g.knots.empty() && g.knots.back() == v) {
      g.multiplicity.back() += 1.0;
    } else {
      g.knots.push_back(v);
      g.multiplicity.push_back(1.0);
    }
  }
  std::array<std::size_t, 4> running{};
  for (auto& e : g.ecdf) e.assign(g.knots.size(), 0.0);
  std::size_t j = 0;
  for (std::size_t k = 0; k < g.knots.size(); ++k) {
    while (j < order.size() && y[order[j]] <= g.knots[k]) {
      running[index_of(ds.cell(order[j]))] += 1;
      ++j;
    }
    for (Cell c : kAllCells) {
      const auto nc = g.counts[c];
      g.ecdf[index_of(c)][k] =
          nc == 0 ? 0.0 : static_cast<double>(running[index_of(c)]) / static_cast<double>(nc);
    }
  }
  return g;
}

}  // namespace ivmbl

#endif  // IVMBL_EMPIRICAL_HPP_
