#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "ivmbl/dataset.hpp"
#include "test_support.hpp"

namespace ivmbl {
namespace {

IVDataset parse(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in);
}

std::string parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

TEST(ParseCsv, ThreeRowFile) {
  const auto ds = parse("y,z,d\n1.0,0,0\n2.0,1,1\n3.0,1,0\n");
  ASSERT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.y(), (std::vector<double>{1.0, 2.0, 3.0}));
  EXPECT_EQ(ds.z(), (std::vector<int>{0, 1, 1}));
  EXPECT_EQ(ds.d(), (std::vector<int>{0, 1, 0}));
}

TEST(ParseCsv, ColumnsInAnyOrderWithBomAndCrlf) {
  const auto ds = parse("\xEF\xBB\xBF" "d,y,z\r\n1,2.5,1\r\n0,-1e3,0\r\n");
  EXPECT_EQ(ds.y(), (std::vector<double>{2.5, -1000.0}));
  EXPECT_EQ(ds.z(), (std::vector<int>{1, 0}));
  EXPECT_EQ(ds.d(), (std::vector<int>{1, 0}));
}

TEST(ParseCsv, NonBinaryInstrumentNamesRow) {
  EXPECT_EQ(parse_error("y,z,d\n1,0,0\n2,0,1\n3,1,0\n4,1,1\n5,2,0\n"),
            "non-binary instrument at row 5");
}

TEST(ParseCsv, NonBinaryTreatmentNamesRow) {
  EXPECT_EQ(parse_error("y,z,d\n1,0,0\n2,0,7\n"), "non-binary treatment at row 2");
}

TEST(ParseCsv, NanOutcomeNamesRow) {
  EXPECT_EQ(parse_error("y,z,d\n1,0,0\nNaN,1,1\n"), "non-finite outcome at row 2");
}

TEST(ParseCsv, GarbageOutcomeNamesRow) {
  EXPECT_EQ(parse_error("y,z,d\n1,0,0\nabc,1,1\n"), "unparseable outcome at row 2");
}

TEST(ParseCsv, MissingColumn) {
  EXPECT_EQ(parse_error("y,d\n1,0\n"), "missing column 'z' in header");
}

TEST(ParseCsv, EmptyFile) { EXPECT_EQ(parse_error(""), "empty file"); }

TEST(ParseCsv, HeaderOnly) { EXPECT_EQ(parse_error("y,z,d\n"), "file has a header but no data rows"); }

TEST(ParseCsv, WrongFieldCount) {
  EXPECT_EQ(parse_error("y,z,d\n1,0\n"), "wrong number of fields at row 1");
}

TEST(Csv, RoundTripIsExact) {
  const auto ds = testing::random_dataset(3, 50);
  std::ostringstream out;
  write_csv(ds, out);
  EXPECT_EQ(parse(out.str()), ds);
}

TEST(Csv, LoadMissingFileIsIoError) {
  EXPECT_THROW(load_csv("/nonexistent/ivmbl/file.csv"), IoError);
}

TEST(Csv, SaveAndLoad) {
  const auto ds = testing::random_dataset(4, 20);
  const std::string path = ::testing::TempDir() + "ivmbl_dataset_roundtrip.csv";
  save_csv(ds, path);
  EXPECT_EQ(load_csv(path), ds);
  std::remove(path.c_str());
}

TEST(Dataset, RejectsMismatchedLengths) {
  EXPECT_THROW(IVDataset({1.0, 2.0}, {0}, {0, 1}), DataError);
}

TEST(Dataset, RejectsEmpty) { EXPECT_THROW(IVDataset({}, {}, {}), DataError); }

TEST(Dataset, OrderIsStableOnTies) {
  const IVDataset ds({2.0, 1.0, 2.0, 1.0}, {0, 0, 1, 1}, {0, 1, 0, 1});
  EXPECT_EQ(ds.order(), (std::vector<std::size_t>{1, 3, 0, 2}));
  EXPECT_EQ(ds.order_statistic(1), 1.0);
  EXPECT_EQ(ds.order_statistic(4), 2.0);
}

TEST(CellCounts, OnePerCell) {
  const IVDataset ds({1, 2, 3, 4}, {0, 0, 1, 1}, {0, 1, 0, 1});
  EXPECT_EQ(cell_counts(ds), (CellCounts{1, 1, 1, 1}));
}

TEST(CellCounts, AllInOneCell) {
  const IVDataset ds({1, 2, 3}, {0, 0, 0}, {0, 0, 0});
  EXPECT_EQ(cell_counts(ds), (CellCounts{3, 0, 0, 0}));
  EXPECT_THROW(ds.require_nonempty_cells(), EstimationError);
}

TEST(CellCounts, FortyTwentyTenThirty) {
  std::vector<double> c00(40, 0.0), c01(20, 1.0), c10(10, 2.0), c11(30, 3.0);
  const auto ds = testing::from_cells(c00, c01, c10, c11);
  const auto c = cell_counts(ds);
  EXPECT_EQ(c, (CellCounts{40, 20, 10, 30}));
  EXPECT_EQ(c.total(), 100u);
  EXPECT_EQ(c[Cell::k01], 20u);
}

TEST(CellCounts, EmptyCellMessageNamesCell) {
  const IVDataset ds({1, 2, 3}, {0, 0, 1}, {0, 1, 1});
  try {
    ds.require_nonempty_cells();
    FAIL();
  } catch (const EstimationError& e) {
    EXPECT_NE(std::string(e.what()).find("(z=1,d=0)"), std::string::npos);
  }
}

TEST(Truncation, HundredAtFivePercent) {
  const auto t = truncation_indices(100, 0.05);
  EXPECT_EQ(t.lo, 5u);
  EXPECT_EQ(t.hi, 95u);
  EXPECT_EQ(t.size(), 91u);
}

TEST(Truncation, TenAtQuarter) {
  const auto t = truncation_indices(10, 0.25);
  EXPECT_EQ(t.lo, 3u);
  EXPECT_EQ(t.hi, 8u);
}

TEST(Truncation, MatchesCeilingFormulaForManyN) {
  for (std::size_t n = 2; n < 2000; n += 7) {
    for (int kk = 1; kk < 50; kk += 3) {
      const double kappa = kk / 100.0;
      const auto t = truncation_indices(n, kappa);
      // integer oracle: ceil(n*kk/100) and ceil(n*(100-kk)/100)
      const std::size_t lo = (n * kk + 99) / 100;
      const std::size_t hi = (n * (100 - kk) + 99) / 100;
      EXPECT_EQ(t.lo, std::max<std::size_t>(1, lo)) << n << " " << kappa;
      EXPECT_EQ(t.hi, hi) << n << " " << kappa;
    }
  }
}

TEST(Truncation, KappaOutOfRange) {
  EXPECT_THROW(truncation_indices(100, 0.6), ParameterError);
  EXPECT_THROW(truncation_indices(100, 0.0), ParameterError);
  EXPECT_THROW(truncation_indices(100, 0.5), ParameterError);
  EXPECT_THROW(truncation_indices(1, 0.1), ParameterError);
}

}  // namespace
}  // namespace ivmbl
