#ifndef IVMBL_PLUGIN_HPP_
#define IVMBL_PLUGIN_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "ivmbl/dataset.hpp"
#include "ivmbl/empirical.hpp"
#include "ivmbl/error.hpp"

namespace ivmbl {

/// Shares of never-takers, always-takers and compliers, plus the complier
/// shares lambda0 (within cell z=0,d=0) and lambda1 (within cell z=1,d=1).
///
/// phi_co = 1 - phi_nt - phi_at holds exactly. When phi_co <= 0 the object is
/// flagged `degenerate` and the lambdas are left at 0.
struct ComplianceProportions {
  double phi_nt = 0.0;
  double phi_at = 0.0;
  double phi_co = 1.0;
  double lambda0 = 1.0;
  double lambda1 = 1.0;
  bool degenerate = false;

  static ComplianceProportions from_nt_at(double nt, double at) {
    ComplianceProportions p;
    p.phi_nt = nt;
    p.phi_at = at;
    p.phi_co = 1.0 - nt - at;
    p.degenerate = !(p.phi_co > 0.0);
    if (!p.degenerate) {
      p.lambda0 = p.phi_co / (p.phi_co + p.phi_nt);
      p.lambda1 = p.phi_co / (p.phi_co + p.phi_at);
    } else {
      p.lambda0 = 0.0;
      p.lambda1 = 0.0;
    }
    return p;
  }

  void require_nondegenerate(const char* context) const {
    if (degenerate) {
      throw EstimationError(std::string(context) +
                            ": non-positive complier share (phi_co = " +
                            std::to_string(phi_co) + ")");
    }
  }
};

inline ComplianceProportions plugin_proportions(const CellCounts& c) {
  const std::size_t arm0 = c.n00 + c.n01;
  const std::size_t arm1 = c.n10 + c.n11;
  if (arm0 == 0) throw EstimationError("instrument arm z=0 is empty");
  if (arm1 == 0) throw EstimationError("instrument arm z=1 is empty");
  const double at = static_cast<double>(c.n01) / static_cast<double>(arm0);
  const double nt = static_cast<double>(c.n10) / static_cast<double>(arm1);
  return ComplianceProportions::from_nt_at(nt, at);
}

/// Plug-in complier curves on the knots of `grid`, index 0 for the untreated
/// arm (from cells 00 and 10) and index 1 for the treated arm (11 and 01).
struct PluginValues {
  std::vector<double> co0;
  std::vector<double> co1;
};

inline PluginValues plugin_values(const KnotGrid& grid, const ComplianceProportions& p) {
  p.require_nondegenerate("plug-in complier curves");
  const auto& f00 = grid.F(Cell::k00);
  const auto& f01 = grid.F(Cell::k01);
  const auto& f10 = grid.F(Cell::k10);
  const auto& f11 = grid.F(Cell::k11);
  PluginValues out;
  out.co0.resize(grid.size());
  out.co1.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out.co0[k] = (f00[k] - (1.0 - p.lambda0) * f10[k]) / p.lambda0;
    out.co1[k] = (f11[k] - (1.0 - p.lambda1) * f01[k]) / p.lambda1;
  }
  return out;
}

struct PluginCurves {
  RawCurve co0;
  RawCurve co1;
  StepCDF nt;
  StepCDF at;
};

/// Plug-in estimates at the knots of the truncation window. Complier curves
/// are returned unprojected.
inline PluginCurves plugin_complier_cdfs(const IVDataset& ds, const ComplianceProportions& p,
                                         const TruncationSet& trunc) {
  p.require_nondegenerate("plug-in complier curves");
  ds.require_nonempty_cells();
  const auto grid = make_knot_grid(ds, trunc);
  const auto v = plugin_values(grid, p);
  PluginCurves out;
  out.co0 = {grid.knots, v.co0};
  out.co1 = {grid.knots, v.co1};
  out.nt = StepCDF(grid.knots, grid.F(Cell::k10));
  out.at = StepCDF(grid.knots, grid.F(Cell::k01));
  return out;
}

enum class ViolationKind { kBelowZero, kAboveOne, kDecreasing };

inline const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::kBelowZero: return "below_zero";
    case ViolationKind::kAboveOne: return "above_one";
    case ViolationKind::kDecreasing: return "decreasing";
  }
  return "?";
}

struct Violation {
  std::size_t index;
  double knot;
  double value;
  ViolationKind kind;
};

/// Knots where a curve leaves [0,1] or drops below its predecessor.
inline std::vector<Violation> find_violations(const RawCurve& c) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < c.values.size(); ++i) {
    const double v = c.values[i];
    if (v < 0.0) out.push_back({i, c.knots[i], v, ViolationKind::kBelowZero});
    if (v > 1.0) out.push_back({i, c.knots[i], v, ViolationKind::kAboveOne});
    if (i > 0 && v < c.values[i - 1]) {
      out.push_back({i, c.knots[i], v, ViolationKind::kDecreasing});
    }
  }
  return out;
}

}  // namespace ivmbl

#endif  // IVMBL_PLUGIN_HPP_
