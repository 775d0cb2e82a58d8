#ifndef IVMBL_SCENARIO_HPP_
#define IVMBL_SCENARIO_HPP_

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "ivmbl/dataset.hpp"
#include "ivmbl/error.hpp"
#include "ivmbl/rng.hpp"

namespace ivmbl {

enum class Family { kNormal, kGamma };

inline const char* to_string(Family f) { return f == Family::kNormal ? "normal" : "gamma"; }

/// Outcome law of one compliance class: N(a, b^2) or Gamma(shape a, rate b).
struct ClassDistribution {
  Family family = Family::kNormal;
  double a = 0.0;
  double b = 1.0;

  static ClassDistribution normal(double mean, double sd) { return {Family::kNormal, mean, sd}; }
  static ClassDistribution gamma(double shape, double rate) { return {Family::kGamma, shape, rate}; }

  void validate() const {
    if (family == Family::kNormal) {
      if (!std::isfinite(a) || !(b > 0.0)) throw ParameterError("normal needs finite mean, sd > 0");
    } else if (!(a > 0.0) || !(b > 0.0)) {
      throw ParameterError("gamma needs shape > 0 and rate > 0");
    }
  }

  double cdf(double x) const {
    if (family == Family::kNormal) return boost::math::cdf(boost::math::normal(a, b), x);
    if (x <= 0.0) return 0.0;
    return boost::math::cdf(boost::math::gamma_distribution<>(a, 1.0 / b), x);
  }

  double quantile(double p) const {
    if (family == Family::kNormal) return boost::math::quantile(boost::math::normal(a, b), p);
    return boost::math::quantile(boost::math::gamma_distribution<>(a, 1.0 / b), p);
  }

  double draw(Rng& rng) const {
    if (family == Family::kNormal) return std::normal_distribution<double>(a, b)(rng);
    return std::gamma_distribution<double>(a, 1.0 / b)(rng);
  }

  std::string describe() const {
    return std::string(family == Family::kNormal ? "N(" : "Gamma(") + std::to_string(a) + "," +
           std::to_string(b) + ")";
  }
};

/// Data-generating design: class shares, instrument probability, and one
/// outcome law per (class, arm).
struct Scenario {
  std::string id;
  double phi_co = 1.0 / 3.0;
  double phi_nt = 1.0 / 3.0;
  double phi_at = 1.0 / 3.0;
  double p_z = 0.5;
  ClassDistribution co0;
  ClassDistribution co1;
  ClassDistribution nt;
  ClassDistribution at;
  std::size_t n = 1000;

  void validate() const {
    const double s = phi_co + phi_nt + phi_at;
    if (phi_co < 0.0 || phi_nt < 0.0 || phi_at < 0.0 || std::abs(s - 1.0) > 1e-9) {
      throw ParameterError("scenario shares must be nonnegative and sum to 1");
    }
    if (!(p_z > 0.0 && p_z < 1.0)) throw ParameterError("p_z must lie in (0,1)");
    if (n < 4) throw ParameterError("scenario needs n >= 4");
    co0.validate();
    co1.validate();
    nt.validate();
    at.validate();
  }
};

enum class IvStrength { kStrong, kWeak };

inline void set_shares(Scenario& s, IvStrength iv) {
  if (iv == IvStrength::kStrong) {
    s.phi_co = 1.0 / 3.0;
    s.phi_nt = 1.0 / 3.0;
    s.phi_at = 1.0 / 3.0;
  } else {
    s.phi_co = 0.10;
    s.phi_nt = 0.45;
    s.phi_at = 0.45;
  }
}

/// Normal-mixture estimation design: compliers N(0,16) (or N(1,16) vs
/// N(-1,16) with an effect), never-takers N(2,16), always-takers N(-2,16).
inline Scenario normal_estimation_scenario(IvStrength iv, bool effect, std::size_t n = 1000) {
  Scenario s;
  s.id = std::string("normal_") + (iv == IvStrength::kStrong ? "strong" : "weak") +
         (effect ? "_effect" : "_noeffect");
  set_shares(s, iv);
  s.co0 = ClassDistribution::normal(effect ? 1.0 : 0.0, 4.0);
  s.co1 = ClassDistribution::normal(effect ? -1.0 : 0.0, 4.0);
  s.nt = ClassDistribution::normal(2.0, 4.0);
  s.at = ClassDistribution::normal(-2.0, 4.0);
  s.n = n;
  return s;
}

/// Gamma-complier estimation design: compliers Gamma(1.2,1) (or Gamma(1.1,1)
/// vs Gamma(1.3,1)), never-takers N(1,1), always-takers N(1.4,1).
inline Scenario gamma_estimation_scenario(IvStrength iv, bool effect, std::size_t n = 1000) {
  Scenario s;
  s.id = std::string("gamma_") + (iv == IvStrength::kStrong ? "strong" : "weak") +
         (effect ? "_effect" : "_noeffect");
  set_shares(s, iv);
  s.co0 = ClassDistribution::gamma(effect ? 1.1 : 1.2, 1.0);
  s.co1 = ClassDistribution::gamma(effect ? 1.3 : 1.2, 1.0);
  s.nt = ClassDistribution::normal(1.0, 1.0);
  s.at = ClassDistribution::normal(1.4, 1.0);
  s.n = n;
  return s;
}

/// Testing design: compliers N(-mu,1) untreated vs N(mu,1) treated,
/// never-takers N(-1,1), always-takers N(1,1).
inline Scenario power_scenario(IvStrength iv, double mu, std::size_t n = 300) {
  Scenario s;
  s.id = std::string("power_") + (iv == IvStrength::kStrong ? "strong" : "weak") + "_mu" +
         std::to_string(mu);
  set_shares(s, iv);
  s.co0 = ClassDistribution::normal(-mu, 1.0);
  s.co1 = ClassDistribution::normal(mu, 1.0);
  s.nt = ClassDistribution::normal(-1.0, 1.0);
  s.at = ClassDistribution::normal(1.0, 1.0);
  s.n = n;
  return s;
}

enum class ComplianceClass { kComplier = 0, kNeverTaker = 1, kAlwaysTaker = 2 };

/// Treatment implied by instrument and class.
constexpr int treatment_for(int z, ComplianceClass s) {
  switch (s) {
    case ComplianceClass::kComplier: return z;
    case ComplianceClass::kNeverTaker: return 0;
    case ComplianceClass::kAlwaysTaker: return 1;
  }
  return 0;
}

inline IVDataset generate_dataset(const Scenario& sc, Rng& rng) {
  sc.validate();
  std::bernoulli_distribution instrument(sc.p_z);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> y(sc.n);
  std::vector<int> z(sc.n);
  std::vector<int> d(sc.n);
  for (std::size_t a = 0; a < sc.n; ++a) {
    z[a] = instrument(rng) ? 1 : 0;
    const double u = unif(rng);
    ComplianceClass s = ComplianceClass::kComplier;
    if (u >= sc.phi_co) {
      s = u < sc.phi_co + sc.phi_nt ? ComplianceClass::kNeverTaker : ComplianceClass::kAlwaysTaker;
    }
    d[a] = treatment_for(z[a], s);
    switch (s) {
      case ComplianceClass::kComplier: y[a] = (d[a] == 1 ? sc.co1 : sc.co0).draw(rng); break;
      case ComplianceClass::kNeverTaker: y[a] = sc.nt.draw(rng); break;
      case ComplianceClass::kAlwaysTaker: y[a] = sc.at.draw(rng); break;
    }
  }
  return IVDataset(std::move(y), std::move(z), std::move(d));
}

/// Quantiles of a true CDF at the midpoints of an equal-probability grid,
/// cached so repeated distance evaluations avoid quantile inversions.
class QuantileGrid {
 public:
  static constexpr std::size_t kDefaultPoints = 10000;

  explicit QuantileGrid(const ClassDistribution& dist, std::size_t points = kDefaultPoints)
      : p_(points), t_(points) {
    dist.validate();
    for (std::size_t i = 0; i < points; ++i) {
      p_[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(points);
      t_[i] = dist.quantile(p_[i]);
    }
  }

  const std::vector<double>& probabilities() const { return p_; }
  const std::vector<double>& quantiles() const { return t_; }

 private:
  std::vector<double> p_;
  std::vector<double> t_;
};

/// Integral of (F - Fhat)^2 dF, computed as the midpoint rule in probability
/// space: mean over grid points of (p - Fhat(F^{-1}(p)))^2. `curve` needs an
/// `evaluate_extrapolated(double)` member.
template <typename Curve>
double l2_distance(const QuantileGrid& grid, const Curve& curve) {
  const auto& p = grid.probabilities();
  const auto& t = grid.quantiles();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double diff = p[i] - curve.evaluate_extrapolated(t[i]);
    acc += diff * diff;
  }
  return acc / static_cast<double>(p.size());
}

template <typename Curve>
double l2_distance(const ClassDistribution& truth, const Curve& curve) {
  return l2_distance(QuantileGrid(truth), curve);
}

}  // namespace ivmbl

#endif  // IVMBL_SCENARIO_HPP_
