#ifndef IVMBL_IO_HPP_
#define IVMBL_IO_HPP_

#include <charconv>
#include <ostream>
#include <string>
#include <vector>

#include "ivmbl/bands.hpp"
#include "ivmbl/em_pava.hpp"
#include "ivmbl/error.hpp"

namespace ivmbl {

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void write_curve_csv(const std::vector<double>& knots, const std::vector<double>& values,
                            std::ostream& out) {
  if (knots.size() != values.size()) throw ParameterError("curve knots and values differ in length");
  out << "knot,value\n";
  for (std::size_t k = 0; k < knots.size(); ++k) {
    out << format_double(knots[k]) << ',' << format_double(values[k]) << '\n';
  }
}

/// knot,f_co0,f_nt,f_co1,f_at
inline void write_fit_csv(const MblFit& fit, std::ostream& out) {
  out << "knot,f_co0,f_nt,f_co1,f_at\n";
  for (std::size_t k = 0; k < fit.knots.size(); ++k) {
    out << format_double(fit.knots[k]) << ',' << format_double(fit.theta.co0[k]) << ','
        << format_double(fit.theta.nt[k]) << ',' << format_double(fit.theta.co1[k]) << ','
        << format_double(fit.theta.at[k]) << '\n';
  }
}

/// knot,lower,estimate,upper
inline void write_band_csv(const ConfidenceBand& band, const std::vector<double>& estimate,
                           std::ostream& out) {
  if (estimate.size() != band.knots.size()) {
    throw ParameterError("band estimate does not match the knots");
  }
  out << "knot,lower,estimate,upper\n";
  for (std::size_t k = 0; k < band.knots.size(); ++k) {
    out << format_double(band.knots[k]) << ',' << format_double(band.lower[k]) << ','
        << format_double(estimate[k]) << ',' << format_double(band.upper[k]) << '\n';
  }
}

}  // namespace ivmbl

#endif  // IVMBL_IO_HPP_
