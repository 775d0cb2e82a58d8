#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ivmbl/ivmbl.hpp"

using nlohmann::ordered_json;

namespace {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kData = 3,
  kParameter = 4,
  kEstimation = 5,
  kIo = 6,
};

struct Common {
  std::string input;
  std::string output;
  double kappa = ivmbl::kDefaultKappa;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

void add_common(CLI::App* app, Common& c, bool needs_input) {
  auto* in = app->add_option("--input", c.input, "CSV file with columns y,z,d")->envname("IVMBL_INPUT");
  if (needs_input) in->required();
  app->add_option("--output", c.output, "output path (stdout when omitted)")->envname("IVMBL_OUTPUT");
  app->add_option("--kappa", c.kappa, "truncation level in (0, 0.5)")
      ->envname("IVMBL_KAPPA")
      ->capture_default_str();
  app->add_option("--seed", c.seed, "random seed")->envname("IVMBL_SEED")->capture_default_str();
  app->add_option("--threads", c.threads, "worker threads")
      ->envname("IVMBL_THREADS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

ordered_json metadata(const std::string& command, const ordered_json& config) {
  ordered_json m;
  m["tool"] = "ivmbl";
  m["version"] = ivmbl::kVersion;
  m["command"] = command;
  m["config"] = config;
  return m;
}

ordered_json common_config(const Common& c) {
  ordered_json j;
  j["input"] = c.input;
  j["output"] = c.output;
  j["kappa"] = c.kappa;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  return j;
}

/// CSV outputs carry their metadata as leading '#' lines.
std::string csv_preamble(const ordered_json& meta) {
  return "# " + meta.dump() + "\n";
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ivmbl::IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw ivmbl::IoError("failed writing '" + path + "'");
}

ordered_json chi_json(const ivmbl::ComplianceProportions& p) {
  return {{"nt", p.phi_nt}, {"at", p.phi_at}, {"co", p.phi_co}};
}

// ---------------------------------------------------------------------------

struct EstimateArgs {
  Common common;
  std::string curves;
  bool report_violations = false;
  std::size_t max_iter = 500;
  double tol = 1e-8;
};

int run_estimate(const EstimateArgs& a) {
  const auto ds = ivmbl::load_csv(a.common.input);
  ds.require_nonempty_cells();
  const auto trunc = ivmbl::truncation_indices(ds.size(), a.common.kappa);
  const auto grid = ivmbl::make_knot_grid(ds, trunc);
  const auto plug = ivmbl::plugin_proportions(grid.counts);

  ivmbl::FitOptions opts;
  opts.max_iter = a.max_iter;
  opts.tol = a.tol;
  const auto fit = ivmbl::fit_mbl(grid, opts);

  auto cfg = common_config(a.common);
  cfg["curves"] = a.curves;
  cfg["report_violations"] = a.report_violations;
  cfg["max_iter"] = a.max_iter;
  cfg["tol"] = a.tol;
  const auto meta = metadata("estimate", cfg);

  ordered_json j;
  j["meta"] = meta;
  j["n"] = ds.size();
  j["counts"] = {{"n00", grid.counts.n00}, {"n01", grid.counts.n01}, {"n10", grid.counts.n10},
                 {"n11", grid.counts.n11}};
  j["kappa"] = a.common.kappa;
  j["window"] = {trunc.lo, trunc.hi};
  j["chi"] = chi_json(fit.chi);
  j["plugin_chi"] = chi_json(plug);
  j["knots"] = fit.knots;
  j["f_co0"] = fit.theta.co0;
  j["f_nt"] = fit.theta.nt;
  j["f_co1"] = fit.theta.co1;
  j["f_at"] = fit.theta.at;
  j["loglik"] = fit.loglik();
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["warnings"] = fit.warning.empty() ? ordered_json::array() : ordered_json::array({fit.warning});

  ordered_json plugin;
  if (plug.degenerate) {
    plugin["available"] = false;
    plugin["reason"] = "non-positive plug-in complier share";
  } else {
    const auto v = ivmbl::plugin_values(grid, plug);
    plugin["available"] = true;
    plugin["f_co0"] = v.co0;
    plugin["f_co1"] = v.co1;
    const auto v0 = ivmbl::find_violations({grid.knots, v.co0});
    const auto v1 = ivmbl::find_violations({grid.knots, v.co1});
    plugin["violations"] = {{"co0", v0.size()}, {"co1", v1.size()}};
    if (a.report_violations) {
      ordered_json list = ordered_json::array();
      auto add = [&](const char* curve, const std::vector<ivmbl::Violation>& vs) {
        for (const auto& x : vs) {
          list.push_back({{"curve", curve}, {"index", x.index}, {"knot", x.knot},
                          {"value", x.value}, {"kind", ivmbl::to_string(x.kind)}});
        }
      };
      add("co0", v0);
      add("co1", v1);
      plugin["violation_list"] = std::move(list);
    }
  }
  j["plugin"] = std::move(plugin);
  emit(a.common.output, j.dump(2) + "\n");

  if (!a.curves.empty()) {
    std::ostringstream csv;
    csv << csv_preamble(meta);
    ivmbl::write_fit_csv(fit, csv);
    emit(a.curves, csv.str());
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct TestArgs {
  Common common;
  std::vector<std::string> variants = {"blrt"};
  std::size_t B = 500;
  bool keep_replicates = false;
};

int run_test(const TestArgs& a) {
  const auto ds = ivmbl::load_csv(a.common.input);
  const auto trunc = ivmbl::truncation_indices(ds.size(), a.common.kappa);
  std::vector<ivmbl::TestVariant> variants;
  for (const auto& v : a.variants) variants.push_back(ivmbl::parse_variant(v));
  ivmbl::BootstrapOptions bo;
  bo.B = a.B;
  bo.seed = a.common.seed;
  bo.threads = a.common.threads;
  const auto results = ivmbl::bootstrap_pvalues(ds, trunc, variants, bo);

  auto cfg = common_config(a.common);
  cfg["variants"] = a.variants;
  cfg["B"] = a.B;
  cfg.erase("threads");  // results do not depend on it
  ordered_json j;
  j["meta"] = metadata("test", cfg);
  ordered_json list = ordered_json::array();
  for (const auto& r : results) {
    ordered_json t;
    t["variant"] = ivmbl::to_string(r.variant);
    t["statistic"] = r.statistic;
    t["p_value"] = r.p_value;
    t["B"] = r.B;
    t["seed"] = r.seed;
    t["warnings"] = r.warnings;
    if (a.keep_replicates) t["replicates"] = r.replicates;
    list.push_back(std::move(t));
  }
  j["results"] = std::move(list);
  emit(a.common.output, j.dump(2) + "\n");
  return kOk;
}

// ---------------------------------------------------------------------------

struct BandArgs {
  Common common;
  std::string curve = "co1";
  std::size_t B = 500;
  double alpha = 0.05;
  bool monotonize = false;
};

int run_band(const BandArgs& a) {
  const auto ds = ivmbl::load_csv(a.common.input);
  ds.require_nonempty_cells();
  const auto trunc = ivmbl::truncation_indices(ds.size(), a.common.kappa);
  ivmbl::BandOptions bo;
  bo.B = a.B;
  bo.seed = a.common.seed;
  bo.threads = a.common.threads;
  bo.curve = ivmbl::parse_curve(a.curve);
  const auto fit = ivmbl::fit_mbl(ds, trunc);
  const auto matrix = ivmbl::bootstrap_curves(ds, trunc, bo);
  auto band = ivmbl::confidence_band(matrix, a.alpha);
  if (a.monotonize) ivmbl::monotonize(band);

  auto cfg = common_config(a.common);
  cfg.erase("threads");
  cfg["curve"] = a.curve;
  cfg["B"] = a.B;
  cfg["alpha"] = a.alpha;
  cfg["monotonize"] = a.monotonize;
  auto meta = metadata("band", cfg);
  meta["depth"] = band.depth;
  meta["s_hat"] = band.s_hat;
  meta["rows_inside"] = band.rows_inside;

  std::ostringstream csv;
  csv << csv_preamble(meta);
  ivmbl::write_band_csv(band, ivmbl::select_curve(fit.theta, bo.curve), csv);
  emit(a.common.output, csv.str());
  return kOk;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  Common common;
  std::string config;
};

template <typename T>
T get_or(const ordered_json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

ivmbl::IvStrength parse_strength(const std::string& s) {
  if (s == "strong") return ivmbl::IvStrength::kStrong;
  if (s == "weak") return ivmbl::IvStrength::kWeak;
  throw ivmbl::ParameterError("unknown IV strength '" + s + "' (expected strong or weak)");
}

ivmbl::Scenario parse_scenario(const ordered_json& s, std::size_t n) {
  const auto family = get_or<std::string>(s, "family", "normal");
  const auto iv = parse_strength(get_or<std::string>(s, "iv", "strong"));
  const bool effect = get_or<bool>(s, "effect", false);
  ivmbl::Scenario sc;
  if (family == "normal") {
    sc = ivmbl::normal_estimation_scenario(iv, effect, n);
  } else if (family == "gamma") {
    sc = ivmbl::gamma_estimation_scenario(iv, effect, n);
  } else {
    throw ivmbl::ParameterError("unknown family '" + family + "' (expected normal or gamma)");
  }
  sc.p_z = get_or<double>(s, "p_z", sc.p_z);
  return sc;
}

int run_simulate(const SimulateArgs& a) {
  std::ifstream in(a.config);
  if (!in) throw ivmbl::IoError("cannot open study config '" + a.config + "'");
  ordered_json study;
  try {
    in >> study;
  } catch (const nlohmann::json::exception& e) {
    throw ivmbl::ParameterError(std::string("study config is not valid JSON: ") + e.what());
  }

  const auto kind = get_or<std::string>(study, "kind", "");
  std::ostringstream csv;
  ordered_json resolved = study;
  resolved["seed"] = a.common.seed;
  resolved["kappa"] = a.common.kappa;
  try {
    if (kind == "estimation") {
      ivmbl::EstimationConfig cfg;
      const auto n = get_or<std::size_t>(study, "n", 1000);
      for (const auto& s : study.at("scenarios")) cfg.scenarios.push_back(parse_scenario(s, n));
      if (study.contains("methods")) {
        cfg.methods.clear();
        for (const auto& m : study.at("methods")) cfg.methods.push_back(ivmbl::parse_method(m.get<std::string>()));
      }
      cfg.reps = get_or<std::size_t>(study, "reps", 500);
      cfg.kappa = a.common.kappa;
      cfg.seed = a.common.seed;
      cfg.threads = a.common.threads;
      resolved["n"] = n;
      resolved["reps"] = cfg.reps;
      resolved["p_z"] = cfg.scenarios.empty() ? 0.5 : cfg.scenarios.front().p_z;
      const auto report = ivmbl::run_estimation_study(cfg);
      csv << csv_preamble(metadata("simulate", resolved));
      ivmbl::write_estimation_csv(report, csv);
    } else if (kind == "power") {
      ivmbl::PowerConfig cfg;
      if (study.contains("strengths")) {
        cfg.strengths.clear();
        for (const auto& s : study.at("strengths")) cfg.strengths.push_back(parse_strength(s.get<std::string>()));
      }
      if (study.contains("mus")) cfg.mus = study.at("mus").get<std::vector<double>>();
      if (study.contains("variants")) {
        cfg.variants.clear();
        for (const auto& v : study.at("variants")) cfg.variants.push_back(ivmbl::parse_variant(v.get<std::string>()));
      }
      cfg.n = get_or<std::size_t>(study, "n", 300);
      cfg.sims = get_or<std::size_t>(study, "sims", 1000);
      cfg.B = get_or<std::size_t>(study, "B", 500);
      cfg.alpha = get_or<double>(study, "alpha", 0.05);
      cfg.kappa = a.common.kappa;
      cfg.seed = a.common.seed;
      cfg.threads = a.common.threads;
      resolved["n"] = cfg.n;
      resolved["sims"] = cfg.sims;
      resolved["B"] = cfg.B;
      resolved["alpha"] = cfg.alpha;
      resolved["p_z"] = 0.5;
      const auto report = ivmbl::run_power_study(cfg);
      csv << csv_preamble(metadata("simulate", resolved));
      ivmbl::write_power_csv(report, csv);
    } else {
      throw ivmbl::ParameterError("study config needs \"kind\": \"estimation\" or \"power\"");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ivmbl::ParameterError(std::string("bad study config: ") + e.what());
  }
  emit(a.common.output, csv.str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binomial-likelihood estimation and testing for complier outcome distributions"};
  app.set_version_flag("--version", std::string("ivmbl ") + ivmbl::kVersion);
  app.require_subcommand(1);

  EstimateArgs est;
  auto* c_est = app.add_subcommand("estimate", "fit plug-in and MBL complier curves");
  add_common(c_est, est.common, true);
  c_est->add_option("--curves", est.curves, "also write knot,f_co0,f_nt,f_co1,f_at CSV here")
      ->envname("IVMBL_CURVES");
  c_est->add_flag("--report-violations", est.report_violations, "list plug-in knots that break CDF shape");
  c_est->add_option("--max-iter", est.max_iter, "EM iteration cap")->capture_default_str();
  c_est->add_option("--tol", est.tol, "EM stopping tolerance on the objective")->capture_default_str();

  TestArgs tst;
  auto* c_test = app.add_subcommand("test", "bootstrap test of equal complier distributions");
  add_common(c_test, tst.common, true);
  c_test->add_option("--variant", tst.variants, "blrt, blrt-approx, ks, ad (repeatable)")
      ->envname("IVMBL_VARIANT")
      ->check(CLI::IsMember({"blrt", "blrt-approx", "blrt_approx", "ks", "ad"}))
      ->capture_default_str();
  c_test->add_option("--B", tst.B, "bootstrap replicates")
      ->envname("IVMBL_B")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c_test->add_flag("--replicates", tst.keep_replicates, "include replicate statistics in the JSON");

  BandArgs band;
  auto* c_band = app.add_subcommand("band", "bootstrap confidence band for one fitted curve");
  add_common(c_band, band.common, true);
  c_band->add_option("--curve", band.curve, "co0, co1, nt or at")
      ->envname("IVMBL_CURVE")
      ->check(CLI::IsMember({"co0", "co1", "nt", "at"}))
      ->capture_default_str();
  c_band->add_option("--B", band.B, "bootstrap replicates")->envname("IVMBL_B")->capture_default_str();
  c_band->add_option("--alpha", band.alpha, "1 - coverage")->envname("IVMBL_ALPHA")->capture_default_str();
  c_band->add_flag("--monotonize", band.monotonize, "apply isotonic projection to both envelopes");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Monte Carlo estimation or power study");
  add_common(c_sim, sim.common, false);
  c_sim->add_option("--config", sim.config, "study config JSON")->envname("IVMBL_CONFIG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*c_est) return run_estimate(est);
    if (*c_test) return run_test(tst);
    if (*c_band) return run_band(band);
    if (*c_sim) return run_simulate(sim);
  } catch (const ivmbl::DataError& e) {
    std::cerr << "ivmbl: data error: " << e.what() << "\n";
    return kData;
  } catch (const ivmbl::ParameterError& e) {
    std::cerr << "ivmbl: invalid parameter: " << e.what() << "\n";
    return kParameter;
  } catch (const ivmbl::EstimationError& e) {
    std::cerr << "ivmbl: estimation failed: " << e.what() << "\n";
    return kEstimation;
  } catch (const ivmbl::IoError& e) {
    std::cerr << "ivmbl: i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "ivmbl: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}
