#ifndef IVMBL_DATASET_HPP_
#define IVMBL_DATASET_HPP_

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ivmbl/error.hpp"

namespace ivmbl {

/// The four (instrument, treatment) cells. The enumerator value is 2*z + d.
enum class Cell : std::uint8_t { k00 = 0, k01 = 1, k10 = 2, k11 = 3 };

inline constexpr std::array<Cell, 4> kAllCells = {Cell::k00, Cell::k01, Cell::k10,
                                                  Cell::k11};

constexpr std::size_t index_of(Cell c) { return static_cast<std::size_t>(c); }

constexpr Cell make_cell(int z, int d) { return static_cast<Cell>(2 * z + d); }

inline std::string cell_name(Cell c) {
  switch (c) {
    case Cell::k00: return "(z=0,d=0)";
    case Cell::k01: return "(z=0,d=1)";
    case Cell::k10: return "(z=1,d=0)";
    case Cell::k11: return "(z=1,d=1)";
  }
  return "(?)";
}

struct CellCounts {
  std::size_t n00 = 0;
  std::size_t n01 = 0;
  std::size_t n10 = 0;
  std::size_t n11 = 0;

  std::size_t total() const { return n00 + n01 + n10 + n11; }

  std::size_t operator[](Cell c) const {
    switch (c) {
      case Cell::k00: return n00;
      case Cell::k01: return n01;
      case Cell::k10: return n10;
      case Cell::k11: return n11;
    }
    return 0;
  }

  std::size_t& at(Cell c) {
    switch (c) {
      case Cell::k00: return n00;
      case Cell::k01: return n01;
      case Cell::k10: return n10;
      default: return n11;
    }
  }

  bool operator==(const CellCounts&) const = default;
};

/// Observed (outcome, instrument, treatment) triples.
///
/// Immutable after construction. Construction validates the rows and builds a
/// stable ascending order of the outcomes (ties broken by row index), which
/// every estimator uses as its order statistics.
class IVDataset {
 public:
  IVDataset(std::vector<double> y, std::vector<int> z, std::vector<int> d)
      : y_(std::move(y)), z_(std::move(z)), d_(std::move(d)) {
    if (y_.size() != z_.size() || y_.size() != d_.size()) {
      throw DataError("columns y, z, d have different lengths");
    }
    if (y_.empty()) throw DataError("dataset has no rows");
    for (std::size_t i = 0; i < y_.size(); ++i) {
      auto row = [i] { return std::to_string(i + 1); };
      if (!std::isfinite(y_[i])) throw DataError("non-finite outcome at row " + row());
      if (z_[i] != 0 && z_[i] != 1) throw DataError("non-binary instrument at row " + row());
      if (d_[i] != 0 && d_[i] != 1) throw DataError("non-binary treatment at row " + row());
      counts_.at(make_cell(z_[i], d_[i])) += 1;
    }
    order_.resize(y_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [this](std::size_t a, std::size_t b) { return y_[a] < y_[b]; });
  }

  std::size_t size() const { return y_.size(); }
  const std::vector<double>& y() const { return y_; }
  const std::vector<int>& z() const { return z_; }
  const std::vector<int>& d() const { return d_; }
  Cell cell(std::size_t row) const { return make_cell(z_[row], d_[row]); }
  const CellCounts& counts() const { return counts_; }

  /// Row indices sorted by outcome; equal outcomes keep their row order.
  const std::vector<std::size_t>& order() const { return order_; }

  /// The b-th order statistic, 1-based.
  double order_statistic(std::size_t b) const { return y_[order_.at(b - 1)]; }

  std::vector<double> sorted_outcomes() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = y_[order_[i]];
    return out;
  }

  /// Throws EstimationError naming the first empty (z,d) cell.
  void require_nonempty_cells() const {
    for (Cell c : kAllCells) {
      if (counts_[c] == 0) throw EstimationError("empty cell " + cell_name(c));
    }
  }

  bool operator==(const IVDataset& o) const {
    return y_ == o.y_ && z_ == o.z_ && d_ == o.d_;
  }

 private:
  std::vector<double> y_;
  std::vector<int> z_;
  std::vector<int> d_;
  CellCounts counts_;
  std::vector<std::size_t> order_;
};

inline CellCounts cell_counts(const IVDataset& ds) { return ds.counts(); }

/// Central order-statistic window [ceil(n*kappa), ceil(n*(1-kappa))], 1-based.
struct TruncationSet {
  std::size_t lo = 1;
  std::size_t hi = 1;
  double kappa = 0.05;

  std::size_t size() const { return hi - lo + 1; }
};

inline constexpr double kDefaultKappa = 0.05;

inline TruncationSet truncation_indices(std::size_t n, double kappa) {
  if (!(kappa > 0.0 && kappa < 0.5)) {
    throw ParameterError("kappa must lie in (0, 1/2), got " + std::to_string(kappa));
  }
  if (n < 2) throw ParameterError("truncation needs at least 2 observations");
  // Products such as 100 * 0.95 land a few ulps off an integer.
  auto ceil_tol = [](double x) {
    return static_cast<std::size_t>(std::ceil(x - 1e-9 * std::max(1.0, std::abs(x))));
  };
  const double nd = static_cast<double>(n);
  TruncationSet t;
  t.kappa = kappa;
  t.lo = std::max<std::size_t>(1, ceil_tol(nd * kappa));
  t.hi = std::min(n, ceil_tol(nd * (1.0 - kappa)));
  return t;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

/// Parses a comma-separated table with header columns y, z, d in any order.
inline IVDataset parse_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::array<std::size_t, 3> col{};  // y, z, d
  std::size_t ncols = 0;
  std::vector<double> y;
  std::vector<int> z;
  std::vector<int> d;

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    if (detail::trim(view).empty()) continue;
    const auto fields = detail::split_commas(view);
    if (!have_header) {
      std::array<bool, 3> found{};
      for (std::size_t i = 0; i < fields.size(); ++i) {
        const std::array<std::string_view, 3> names = {"y", "z", "d"};
        for (std::size_t k = 0; k < 3; ++k) {
          if (fields[i] == names[k]) {
            col[k] = i;
            found[k] = true;
          }
        }
      }
      for (std::size_t k = 0; k < 3; ++k) {
        if (!found[k]) {
          throw DataError(std::string("missing column '") + "yzd"[k] + "' in header");
        }
      }
      ncols = fields.size();
      have_header = true;
      continue;
    }
    const std::size_t row = y.size() + 1;
    const auto row_str = std::to_string(row);
    if (fields.size() != ncols) {
      throw DataError("wrong number of fields at row " + row_str);
    }
    auto field = fields[col[0]];
    double yv = 0.0;
    {
      const char* first = field.data();
      const char* last = field.data() + field.size();
      if (!field.empty() && *first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, yv);
      if (ec != std::errc{} || ptr != last) {
        throw DataError("unparseable outcome at row " + row_str);
      }
      if (!std::isfinite(yv)) throw DataError("non-finite outcome at row " + row_str);
    }
    auto parse_flag = [&](std::string_view f, const char* what) {
      int v = -1;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc{} || ptr != f.data() + f.size() || (v != 0 && v != 1)) {
        throw DataError(std::string("non-binary ") + what + " at row " + row_str);
      }
      return v;
    };
    z.push_back(parse_flag(fields[col[1]], "instrument"));
    d.push_back(parse_flag(fields[col[2]], "treatment"));
    y.push_back(yv);
  }
  if (!have_header) throw DataError("empty file");
  if (y.empty()) throw DataError("file has a header but no data rows");
  return IVDataset(std::move(y), std::move(z), std::move(d));
}

inline IVDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return parse_csv(in);
}

/// Writes `y,z,d` with round-trip precision.
inline void write_csv(const IVDataset& ds, std::ostream& out) {
  out << "y,z,d\n";
  char buf[64];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), ds.y()[i]);
    out << std::string_view(buf, static_cast<std::size_t>(ptr - buf)) << ','
        << ds.z()[i] << ',' << ds.d()[i] << '\n';
  }
}

inline void save_csv(const IVDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  write_csv(ds, out);
}

}  // namespace ivmbl

#endif  // IVMBL_DATASET_HPP_
