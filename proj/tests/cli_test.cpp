#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ivmbl/scenario.hpp"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ivmbl_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliResult run(const std::string& args, const std::string& env = "") {
    const auto out = dir_ / "stdout.txt";
    const auto err = dir_ / "stderr.txt";
    const std::string cmd = env + (env.empty() ? "" : " ") + IVMBL_CLI_PATH + " " + args + " >" +
                            out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  fs::path write_data(std::size_t n, std::uint64_t seed, const std::string& name = "data.csv") {
    auto sc = ivmbl::power_scenario(ivmbl::IvStrength::kStrong, 0.5, n);
    auto rng = ivmbl::child_stream(seed, 0);
    const auto ds = ivmbl::generate_dataset(sc, rng);
    const auto p = dir_ / name;
    std::ofstream f(p);
    f.precision(17);
    f << "y,z,d\n";
    for (std::size_t i = 0; i < ds.size(); ++i) f << ds.y()[i] << ',' << ds.z()[i] << ',' << ds.d()[i] << '\n';
    return p;
  }

  fs::path dir_;
};

TEST_F(Cli, EstimateWritesJson) {
  const auto data = write_data(200, 1);
  const auto curves = dir_ / "curves.csv";
  const auto r = run("estimate --input " + data.string() + " --curves " + curves.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["meta"]["command"], "estimate");
  EXPECT_EQ(j["n"], 200);
  EXPECT_EQ(j["knots"].size(), j["f_co1"].size());
  const double s = j["chi"]["co"].get<double>() + j["chi"]["nt"].get<double>() +
                   j["chi"]["at"].get<double>();
  EXPECT_NEAR(s, 1.0, 1e-12);
  const auto c = slurp(curves);
  EXPECT_NE(c.find("knot,f_co0,f_nt,f_co1,f_at\n"), std::string::npos);
}

TEST_F(Cli, TestIsByteReproducible) {
  const auto data = write_data(150, 2);
  const std::string args = "test --input " + data.string() + " --B 30 --seed 9 --variant ks --variant blrt";
  const auto a = run(args + " --threads 1");
  const auto b = run(args + " --threads 2");
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const auto j = nlohmann::json::parse(a.out);
  ASSERT_EQ(j["results"].size(), 2u);
  EXPECT_EQ(j["results"][0]["variant"], "ks");
  const double p = j["results"][1]["p_value"];
  EXPECT_GT(p, 0.0);
  EXPECT_LE(p, 1.0);
}

TEST_F(Cli, EmptyCellIsEstimationError) {
  const auto p = dir_ / "empty.csv";
  std::ofstream(p) << "y,z,d\n1,0,0\n2,0,1\n3,1,1\n4,1,1\n5,0,0\n";
  const auto r = run("estimate --input " + p.string());
  EXPECT_EQ(r.code, 5);
  EXPECT_NE(r.err.find("(z=1,d=0)"), std::string::npos) << r.err;
}

TEST_F(Cli, BadInputs) {
  EXPECT_EQ(run("estimate --bogus").code, 2);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("estimate --input " + (dir_ / "missing.csv").string()).code, 6);
  const auto bad = dir_ / "bad.csv";
  std::ofstream(bad) << "y,z,d\n1,2,0\n";
  EXPECT_EQ(run("estimate --input " + bad.string()).code, 3);
  const auto data = write_data(100, 3);
  EXPECT_EQ(run("estimate --input " + data.string() + " --kappa 0.7").code, 4);
  EXPECT_EQ(run("test --input " + data.string() + " --variant nope").code, 2);
}

TEST_F(Cli, EnvironmentOverride) {
  const auto data = write_data(120, 4);
  const auto r = run("estimate", "IVMBL_INPUT=" + data.string() + " IVMBL_KAPPA=0.1");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_DOUBLE_EQ(nlohmann::json::parse(r.out)["kappa"].get<double>(), 0.1);
}

TEST_F(Cli, BandCsv) {
  const auto data = write_data(150, 5);
  const auto out = dir_ / "band.csv";
  const auto r = run("band --input " + data.string() + " --B 20 --alpha 0.1 --monotonize --output " +
                     out.string());
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(out);
  std::string meta, header, line;
  std::getline(in, meta);
  std::getline(in, header);
  EXPECT_EQ(meta.rfind("# ", 0), 0u);
  EXPECT_EQ(nlohmann::json::parse(meta.substr(2))["command"], "band");
  EXPECT_EQ(header, "knot,lower,estimate,upper");
  int rows = 0;
  while (std::getline(in, line)) {
    double k, lo, est, hi;
    char c;
    std::istringstream ss(line);
    ss >> k >> c >> lo >> c >> est >> c >> hi;
    EXPECT_LE(lo, hi);
    ++rows;
  }
  EXPECT_GT(rows, 0);
}

TEST_F(Cli, SimulateStudies) {
  const auto est = dir_ / "est.json";
  std::ofstream(est) << R"({"kind":"estimation","n":150,"reps":3,
    "scenarios":[{"family":"gamma","iv":"strong","effect":true}]})";
  auto r = run("simulate --seed 3 --config " + est.string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("scenario,method,arm,mean_l2"), std::string::npos);
  EXPECT_NE(r.out.find("gamma_strong_effect,mbl,1,"), std::string::npos);

  const auto pow = dir_ / "pow.json";
  std::ofstream(pow) << R"({"kind":"power","mus":[0.5],"n":80,"sims":2,"B":19,"variants":["ks"]})";
  r = run("simulate --config " + pow.string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find(",ks,"), std::string::npos);

  const auto bad = dir_ / "bad.json";
  std::ofstream(bad) << R"({"kind":"other"})";
  EXPECT_EQ(run("simulate --config " + bad.string()).code, 4);
}

}  // namespace
