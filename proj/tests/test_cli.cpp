#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "qembound/cli/config.hpp"
#include "qembound/cli/report.hpp"
#include "qembound/cli/runner.hpp"
#include "qembound/cli/verify.hpp"

using namespace qembound;
using namespace qembound::cli;

namespace {

const char* kVacuumExact = R"({
  "kind": "gaussian_exact",
  "ccr": [1.0],
  "state": {"mean": [0.0, 0.0], "cov": [[1.0, 0.0], [0.0, 1.0]]},
  "mu_grid": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
})";

const char* kThermalCrossing = R"({
  "kind": "gaussian_exact",
  "ccr": [1.0],
  "state": {"mean": [0.0, 0.0], "cov": [[3.0, 0.0], [0.0, 3.0]]},
  "mu_grid": [0.1, 0.2, 0.3, 0.34, 0.35, 0.4]
})";

const char* kMixtureMc = R"({
  "kind": "randomized_mc",
  "ccr": [1.0],
  "state": {
    "weights": [0.5, 0.5],
    "means": [[1.0, 0.0], [-1.0, 0.0]],
    "covs": [[[1.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, 1.0]]]
  },
  "mu_grid": [0.05, 0.1, 0.2],
  "samples": 20000,
  "seed": 9
})";

const char* kSqueezingSweep = R"({
  "kind": "oqho_sweep",
  "ccr": [1.0],
  "state": {"mean": [0.2, -0.1], "cov": [[1.0, 0.0], [0.0, 1.0]]},
  "model": {"R": [[0.8, 0.0], [0.0, -0.8]], "N": [[1.0, 0.0], [0.0, 1.0]]},
  "mu_grid": [0.05, 0.3],
  "t_grid": [0.0, 3.0],
  "samples": 5000
})";

ErrorKind kind_of(auto&& f, std::string* message = nullptr) {
  try {
    f();
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::invalid_argument;
}

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const char* value) : name_(name) {
    if (const char* old = std::getenv(name)) previous_ = old;
    setenv(name, value, 1);
  }
  ~ScopedEnv() {
    if (previous_) setenv(name_, previous_->c_str(), 1);
    else unsetenv(name_);
  }

 private:
  const char* name_;
  std::optional<std::string> previous_;
};

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("qembound_test_" + std::to_string(::getpid()) + "_" + name);
}

void write_file(const std::filesystem::path& path, const std::string& text) { std::ofstream(path) << text; }

int run_cli(const std::string& args) {
  const int status = std::system((std::string(QEMBOUND_EXE) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(ParseConfig, MinimalDocumentGetsDefaults) {
  const ScenarioConfig c = parse_config(kVacuumExact);
  EXPECT_EQ(c.kind, ScenarioKind::gaussian_exact);
  EXPECT_EQ(c.samples, 100000u);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_FALSE(c.output.has_value());
  ASSERT_TRUE(c.ccr.has_value());
  EXPECT_EQ(c.ccr->n(), 2);
  EXPECT_EQ(c.mu_grid.size(), 10u);
}

TEST(ParseConfig, UnknownKeyNamed) {
  std::string message;
  EXPECT_EQ(kind_of([&] {
              parse_config(R"({
  "kind": "gaussian_exact",
  "gamma_matrix": [[1]],
  "ccr": [1.0],
  "state": {"mean": [0, 0], "cov": [[1, 0], [0, 1]]},
  "mu_grid": [0.1]
})");
            }, &message),
            ErrorKind::config_parse);
  EXPECT_NE(message.find("gamma_matrix"), std::string::npos) << message;
  EXPECT_NE(message.find("line 3"), std::string::npos) << message;
}

TEST(ParseConfig, NestedUnknownKey) {
  std::string message;
  EXPECT_EQ(kind_of([&] {
              parse_config(R"({"kind": "gaussian_exact", "ccr": [1.0],
                "state": {"mean": [0, 0], "cov": [[1, 0], [0, 1]], "skew": 1}, "mu_grid": [0.1]})");
            }, &message),
            ErrorKind::config_parse);
  EXPECT_NE(message.find("state.skew"), std::string::npos) << message;
}

TEST(ParseConfig, GridMustIncrease) {
  std::string message;
  EXPECT_EQ(kind_of([&] {
              parse_config(R"({"kind": "gaussian_exact", "ccr": [1.0],
                "state": {"mean": [0, 0], "cov": [[1, 0], [0, 1]]}, "mu_grid": [0.2, 0.1]})");
            }, &message),
            ErrorKind::config_parse);
  EXPECT_NE(message.find("mu_grid[1]"), std::string::npos) << message;
}

TEST(ParseConfig, GridRules) {
  EXPECT_EQ(kind_of([] {
              parse_config(R"({"kind": "gaussian_exact", "ccr": [1.0],
                "state": {"mean": [0, 0], "cov": [[1, 0], [0, 1]]}, "mu_grid": []})");
            }),
            ErrorKind::config_parse);
  EXPECT_EQ(kind_of([] {
              parse_config(R"({"kind": "gaussian_exact", "ccr": [1.0],
                "state": {"mean": [0, 0], "cov": [[1, 0], [0, 1]]}, "mu_grid": [0.0, 0.1]})");
            }),
            ErrorKind::config_parse);
  EXPECT_EQ(kind_of([] {
              parse_config(R"({"kind": "oqho_sweep", "ccr": [1.0],
                "state": {"mean": [0, 0], "cov": [[1, 0], [0, 1]]},
                "model": {"R": [[0, 0], [0, 0]], "N": [[1, 0], [0, 1]]},
                "mu_grid": [0.1], "t_grid": [1.0, 1.0]})");
            }),
            ErrorKind::config_parse);
}

TEST(ParseConfig, SyntaxErrorReportsLine) {
  std::string message;
  EXPECT_EQ(kind_of([&] { parse_config("{\n  \"kind\": \"gaussian_exact\",\n  \"ccr\": [1.0,,]\n}"); }, &message),
            ErrorKind::config_parse);
  EXPECT_NE(message.find("line 3"), std::string::npos) << message;
}

TEST(ParseConfig, KindSpecificKeys) {
  std::string message;
  EXPECT_EQ(kind_of([&] {
              parse_config(R"({"kind": "gaussian_exact", "ccr": [1.0], "t_grid": [1.0],
                "state": {"mean": [0, 0], "cov": [[1, 0], [0, 1]]}, "mu_grid": [0.1]})");
            }, &message),
            ErrorKind::config_parse);
  EXPECT_NE(message.find("t_grid"), std::string::npos);
  EXPECT_EQ(kind_of([&] { parse_config(R"({"kind": "upper_bound", "ccr": [1.0], "mu_grid": [0.1]})"); }, &message),
            ErrorKind::config_parse);
  EXPECT_NE(message.find("state"), std::string::npos);
  EXPECT_EQ(kind_of([] { parse_config(R"({"kind": "bogus"})"); }), ErrorKind::config_parse);
  EXPECT_EQ(kind_of([] { parse_config(R"([1, 2])"); }), ErrorKind::config_parse);
}

TEST(ParseConfig, DimensionsMustAgree) {
  EXPECT_EQ(kind_of([] {
              parse_config(R"({"kind": "gaussian_exact", "ccr": [1.0, 2.0],
                "state": {"mean": [0, 0], "cov": [[1, 0], [0, 1]]}, "mu_grid": [0.1]})");
            }),
            ErrorKind::dimension_mismatch);
  EXPECT_EQ(kind_of([] {
              parse_config(R"({"kind": "oqho_sweep", "ccr": [1.0],
                "state": {"mean": [0, 0], "cov": [[1, 0], [0, 1]]},
                "model": {"R": [[0, 0, 0], [0, 0, 0], [0, 0, 0]], "N": [[1, 0], [0, 1]]},
                "mu_grid": [0.1], "t_grid": [1.0]})");
            }),
            ErrorKind::dimension_mismatch);
}

TEST(ParseConfig, RaggedMatrix) {
  EXPECT_EQ(kind_of([] {
              parse_config(R"({"kind": "gaussian_exact", "ccr": [1.0],
                "state": {"mean": [0, 0], "cov": [[1, 0], [0]]}, "mu_grid": [0.1]})");
            }),
            ErrorKind::config_parse);
}

TEST(ParseConfig, FullCcrMatrixAndMixture) {
  const ScenarioConfig c = parse_config(R"({
    "kind": "tail", "cgf": "upper_bound",
    "ccr": [[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 3], [0, 0, -3, 0]],
    "state": {"weights": [0.25, 0.75],
              "means": [[0, 0, 0, 0], [1, 0, 0, 0]],
              "covs": [[[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 3, 0], [0, 0, 0, 3]],
                       [[2, 0, 0, 0], [0, 2, 0, 0], [0, 0, 3, 0], [0, 0, 0, 3]]]},
    "eps_grid": [1, 2], "samples": 10, "seed": 18446744073709551615, "output": "x.csv"})");
  EXPECT_EQ(c.kind, ScenarioKind::tail);
  EXPECT_EQ(c.cgf, CgfSource::upper_bound);
  EXPECT_EQ(c.ccr->nu(), 2);
  EXPECT_EQ(c.state->size(), 2u);
  EXPECT_EQ(c.seed, 18446744073709551615ull);
  EXPECT_EQ(*c.output, "x.csv");
}

TEST(ParseConfig, InadmissibleStateRejected) {
  EXPECT_EQ(kind_of([] {
              parse_config(R"({"kind": "gaussian_exact", "ccr": [1.0],
                "state": {"mean": [0, 0], "cov": [[1, 0], [0, 0.5]]}, "mu_grid": [0.1]})");
            }),
            ErrorKind::not_admissible);
}

TEST(ParseConfig, BadScalars) {
  EXPECT_EQ(kind_of([] { parse_config(R"({"kind": "verify", "samples": -5})"); }), ErrorKind::config_parse);
  EXPECT_EQ(kind_of([] { parse_config(R"({"kind": "verify", "samples": 1.5})"); }), ErrorKind::config_parse);
  EXPECT_EQ(kind_of([] { parse_config(R"({"kind": "verify", "quick": 1})"); }), ErrorKind::config_parse);
  EXPECT_EQ(parse_config(R"({"kind": "verify", "quick": true})").quick, true);
}

TEST(BoundReport, CsvLayout) {
  BoundReport r;
  ReportRow row;
  row.mu = 0.1;
  row.upsilon_exact = 1.0 / 3.0;
  r.rows.push_back(row);
  row = ReportRow{};
  row.t = 2.0;
  row.mu = 0.5;
  row.status = RowStatus::empty_interval;
  r.rows.push_back(row);
  EXPECT_EQ(to_csv(r),
            "t,mu,upsilon_exact,upsilon_mc,mc_se,upsilon_bound,lambda_opt,tail_eps,tail_log_bound,status\n"
            ",0.10000000000000001,0.33333333333333331,,,,,,,ok\n"
            "2,0.5,,,,,,,,empty_interval\n");
}

TEST(BoundReport, RoundTripIsFieldIdentical) {
  const BoundReport report = run_scenario(parse_config(kSqueezingSweep));
  const BoundReport copy = read_csv(to_csv(report));
  EXPECT_EQ(copy, report);
  EXPECT_EQ(to_csv(copy), to_csv(report));

  BoundReport odd;
  ReportRow row;
  row.mu = 5e-324;
  row.upsilon_bound = -1.2345678901234567e300;
  row.tail_log_bound = -0.0;
  row.status = RowStatus::divergent_norm;
  odd.rows.push_back(row);
  EXPECT_EQ(read_csv(to_csv(odd)), odd);
}

TEST(BoundReport, MalformedCsvRejected) {
  EXPECT_EQ(kind_of([] { read_csv(std::string("a,b\n")); }), ErrorKind::io_error);
  EXPECT_EQ(kind_of([] { read_csv(std::string(kCsvHeader) + "\n1,2,3\n"); }), ErrorKind::io_error);
  EXPECT_EQ(kind_of([] { read_csv(std::string(kCsvHeader) + "\n,,,,,,,,,maybe\n"); }), ErrorKind::io_error);
  EXPECT_EQ(kind_of([] { read_csv(std::string(kCsvHeader) + "\n,x,,,,,,,,ok\n"); }), ErrorKind::io_error);
}

TEST(RunScenario, VacuumExactSweep) {
  const BoundReport report = run_scenario(parse_config(kVacuumExact));
  ASSERT_EQ(report.rows.size(), 10u);
  for (const auto& row : report.rows) {
    ASSERT_TRUE(row.upsilon_exact.has_value());
    EXPECT_NEAR(*row.upsilon_exact, *row.mu, 1e-12);
    EXPECT_EQ(row.status, RowStatus::ok);
    EXPECT_FALSE(row.t.has_value());
    EXPECT_FALSE(row.upsilon_mc.has_value());
  }
  EXPECT_EQ(exit_code(report), 0);
}

TEST(RunScenario, ThermalCrossingFlagsInfeasible) {
  const BoundReport report = run_scenario(parse_config(kThermalCrossing));
  const double mu_star = 0.34657359027997265;
  for (const auto& row : report.rows) {
    if (*row.mu < mu_star) {
      EXPECT_EQ(row.status, RowStatus::ok);
    } else {
      EXPECT_EQ(row.status, RowStatus::infeasible_mu);
      EXPECT_FALSE(row.upsilon_exact.has_value());
    }
  }
  EXPECT_EQ(exit_code(report), 2);
}

TEST(RunScenario, MonteCarloRowsIndependentOfThreads) {
  const ScenarioConfig config = parse_config(kMixtureMc);
  std::string one;
  std::string three;
  {
    ScopedEnv env("QEMBOUND_THREADS", "1");
    one = to_csv(run_scenario(config));
  }
  {
    ScopedEnv env("QEMBOUND_THREADS", "3");
    three = to_csv(run_scenario(config));
  }
  EXPECT_EQ(one, three);
  const BoundReport report = read_csv(one);
  for (const auto& row : report.rows) {
    ASSERT_TRUE(row.upsilon_mc && row.mc_se && row.upsilon_exact);
    EXPECT_LE(std::abs(*row.upsilon_mc - *row.upsilon_exact), 3.0 * *row.mc_se);
  }
}

TEST(RunScenario, RowsUseDistinctSubstreams) {
  ScenarioConfig config = parse_config(kMixtureMc);
  config.mu_grid = {0.1, 0.2};
  const BoundReport a = run_scenario(config);
  config.seed += 1;
  const BoundReport b = run_scenario(config);
  EXPECT_NE(a.rows[0].upsilon_mc, b.rows[0].upsilon_mc);
}

TEST(RunScenario, UpperBoundRows) {
  const BoundReport report = run_scenario(parse_config(R"({"kind": "upper_bound", "ccr": [1.0],
    "state": {"mean": [0.3, 0.0], "cov": [[1.5, 0.0], [0.0, 1.5]]}, "mu_grid": [0.1, 0.3, 0.9]})"));
  ASSERT_EQ(report.rows.size(), 3u);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& row = report.rows[i];
    EXPECT_EQ(row.status, RowStatus::ok);
    EXPECT_GE(*row.upsilon_bound, *row.upsilon_exact - 1e-12);
    EXPECT_TRUE(row.lambda_opt.has_value());
  }
  // μ = 0.9 is beyond μ* = artanh(1/1.5).
  EXPECT_EQ(report.rows[2].status, RowStatus::infeasible_mu);
}

TEST(RunScenario, UpperBoundDivergentNorm) {
  const BoundReport report = run_scenario(parse_config(R"({"kind": "upper_bound", "ccr": [1.0, 0.5],
    "state": {"mean": [0, 0, 0, 0], "cov": [[1.4, 0.1, 0, 0], [0.1, 1.2, 0, 0], [0, 0, 0.8, 0.1], [0, 0, 0.1, 0.7]]},
    "mu_grid": [0.8]})"));
  ASSERT_EQ(report.rows.size(), 1u);
  EXPECT_TRUE(report.rows[0].upsilon_exact.has_value());
  EXPECT_EQ(report.rows[0].status, RowStatus::divergent_norm);
}

TEST(RunScenario, TailRows) {
  const BoundReport report = run_scenario(parse_config(R"({"kind": "tail", "ccr": [1.0],
    "state": {"mean": [0.0, 0.0], "cov": [[1.0, 0.0], [0.0, 1.0]]}, "eps_grid": [0.5, 2.0]})"));
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_EQ(*report.rows[0].tail_log_bound, 0.0);
  EXPECT_FALSE(report.rows[0].mu.has_value());
  EXPECT_LE(*report.rows[1].tail_log_bound, -50.0 + 1e-9);
  EXPECT_DOUBLE_EQ(*report.rows[1].mu, 50.0);
  EXPECT_EQ(exit_code(report), 0);
}

TEST(RunScenario, TailFromUpperBoundCgf) {
  const BoundReport report = run_scenario(parse_config(R"({"kind": "tail", "cgf": "upper_bound", "ccr": [1.0],
    "state": {"mean": [0.5, 0.0], "cov": [[1.5, 0.0], [0.0, 1.5]]}, "eps_grid": [2.0, 4.0]})"));
  for (const auto& row : report.rows) {
    EXPECT_LE(*row.tail_log_bound, 0.0);
    EXPECT_TRUE(row.upsilon_bound.has_value());
    EXPECT_FALSE(row.upsilon_exact.has_value());
  }
}

TEST(RunScenario, SqueezingSweepStatuses) {
  const BoundReport report = run_scenario(parse_config(kSqueezingSweep));
  ASSERT_EQ(report.rows.size(), 4u);
  // Rows ordered by (t, μ).
  EXPECT_EQ(*report.rows[0].t, 0.0);
  EXPECT_EQ(*report.rows[1].mu, 0.3);
  EXPECT_EQ(*report.rows[2].t, 3.0);
  EXPECT_EQ(report.rows[0].status, RowStatus::ok);
  EXPECT_EQ(report.rows[1].status, RowStatus::ok);
  EXPECT_EQ(report.rows[2].status, RowStatus::ok);
  // λ*(0.3) ≈ 3.4 is below λ_max(Σ_3) ≈ 5.
  EXPECT_EQ(report.rows[3].status, RowStatus::empty_interval);
  EXPECT_FALSE(report.rows[3].upsilon_bound.has_value());
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_GE(*report.rows[i].upsilon_bound, *report.rows[i].upsilon_exact - 1e-12);
    EXPECT_TRUE(report.rows[i].upsilon_mc.has_value());
  }
  EXPECT_EQ(exit_code(report), 2);
}

TEST(VerifySuite, QuickPasses) {
  const auto checks = verify_suite({true, 42, 100000});
  EXPECT_TRUE(all_passed(checks));
  EXPECT_GE(checks.size(), 10u);
  std::ostringstream out;
  print_checks(out, checks);
  EXPECT_NE(out.str().find("checks passed"), std::string::npos);
}

TEST(Executable, ExitCodes) {
  const auto ok = temp_path("ok.json");
  const auto infeasible = temp_path("infeasible.json");
  const auto broken = temp_path("broken.json");
  const auto csv = temp_path("out.csv");
  write_file(ok, kVacuumExact);
  write_file(infeasible, kThermalCrossing);
  write_file(broken, R"({"kind": "gaussian_exact", "gamma_matrix": 1})");
  EXPECT_EQ(run_cli("run " + ok.string() + " --output " + csv.string()), 0);
  EXPECT_EQ(read_csv(read_text_file(csv.string())), run_scenario(parse_config(kVacuumExact)));
  EXPECT_EQ(run_cli("run " + infeasible.string()), 2);
  EXPECT_EQ(run_cli("run " + broken.string()), 1);
  EXPECT_EQ(run_cli("run " + temp_path("missing.json").string()), 1);
  EXPECT_EQ(run_cli("verify --quick"), 0);
  for (const auto& p : {ok, infeasible, broken, csv}) std::filesystem::remove(p);
}

TEST(Executable, FlagsOverrideConfig) {
  const auto config = temp_path("mc.json");
  const auto a = temp_path("a.csv");
  const auto b = temp_path("b.csv");
  write_file(config, kMixtureMc);
  EXPECT_EQ(run_cli("run " + config.string() + " --output " + a.string() + " --seed 5 --samples 3000"), 0);
  ScenarioConfig parsed = parse_config(kMixtureMc);
  parsed.seed = 5;
  parsed.samples = 3000;
  EXPECT_EQ(read_text_file(a.string()), to_csv(run_scenario(parsed)));
  EXPECT_EQ(run_cli("run " + config.string() + " --output " + b.string() + " --samples 1"), 1);
  for (const auto& p : {config, a, b}) std::filesystem::remove(p);
}
