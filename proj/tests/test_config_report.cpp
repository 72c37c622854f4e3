#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "coldbound/config.hpp"
#include "coldbound/errors.hpp"
#include "coldbound/experiment.hpp"
#include "coldbound/report.hpp"

using namespace coldbound;
namespace fs = std::filesystem;

TEST(Ini, SectionsCommentsAndTypes) {
  const IniFile ini = IniFile::parse(
      "# leading comment\n"
      "[a]\n"
      "x = 1.5   \n"
      "; another comment\n"
      "n=3\n"
      "flag = true\n"
      "[b]\n"
      "name = hello world\n");
  EXPECT_EQ(ini.get_double("a", "x", 0), 1.5);
  EXPECT_EQ(ini.get_int("a", "n", 0), 3);
  EXPECT_TRUE(ini.get_bool("a", "flag", false));
  EXPECT_EQ(ini.get_string("b", "name", ""), "hello world");
  EXPECT_EQ(ini.get_double("b", "missing", 7.0), 7.0);
  EXPECT_FALSE(ini.has("a", "name"));
}

TEST(Ini, MalformedLinesReportLineNumber) {
  try {
    IniFile::parse("[a]\nx = 1\nnonsense\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  EXPECT_THROW(IniFile::parse("[a\n"), ConfigError);
  EXPECT_THROW(IniFile::parse("[a]\nx = abc\n").get_double("a", "x", 0), ConfigError);
  EXPECT_THROW(IniFile::parse("[a]\nx = 1.5\n").get_int("a", "x", 0), ConfigError);
  EXPECT_THROW(IniFile::load("/nonexistent/config.ini"), ConfigError);
}

TEST(Ini, UnusedKeysTracked) {
  const IniFile ini = IniFile::parse("[a]\nx = 1\ny = 2\n");
  ini.get_double("a", "x", 0);
  EXPECT_EQ(ini.unused_keys(), (std::vector<std::string>{"a.y"}));
}

TEST(Grid, Forms) {
  const auto lg = parse_grid("log:1e-2:1e2:5");
  ASSERT_EQ(lg.size(), 5u);
  EXPECT_DOUBLE_EQ(lg[0], 1e-2);
  EXPECT_NEAR(lg[2], 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(lg[4], 1e2);
  const auto ln = parse_grid("lin:0:1:3");
  EXPECT_EQ(ln, (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(parse_grid("0.1, 0.2,0.3"), (std::vector<double>{0.1, 0.2, 0.3}));
  EXPECT_EQ(parse_grid("log:2:2:1"), (std::vector<double>{2.0}));
  EXPECT_THROW(parse_grid("0.3,0.2"), ConfigError);
  EXPECT_THROW(parse_grid("log:0:1:3"), ConfigError);
  EXPECT_THROW(parse_grid("lin:0:1"), ConfigError);
  EXPECT_EQ(parse_int_list("6, 6"), (std::vector<int>{6, 6}));
}

TEST(SweepConfig, DefaultsFromShippedFile) {
  const SweepConfig cfg = sweep_config_from(IniFile::load(fs::path(COLDBOUND_CONFIG_DIR) / "sweep_friedman.ini"));
  EXPECT_EQ(cfg.counts.total(), 3080u);
  EXPECT_EQ(cfg.lambda_grid.size(), 15u);
  EXPECT_EQ(cfg.prior_var_grid.size(), 20u);
  EXPECT_EQ(cfg.n_seeds, 10);
  EXPECT_EQ(cfg.hidden, (std::vector<int>{6, 6}));
  EXPECT_EQ(cfg.kinds.size(), 3u);
  // The resolved dump parses back to the same configuration.
  const SweepConfig again = sweep_config_from(IniFile::parse(cfg.resolved()));
  EXPECT_EQ(again.resolved(), cfg.resolved());
  EXPECT_EQ(again.lambda_grid, cfg.lambda_grid);
}

TEST(SweepConfig, UnknownKeyAndBadValuesRejected) {
  EXPECT_THROW(sweep_config_from(IniFile::parse("[sweep]\nlambda_grd = 1,2\n")), ConfigError);
  EXPECT_THROW(sweep_config_from(IniFile::parse("[sweep]\ndelta = 0\n")), ConfigError);
  EXPECT_THROW(sweep_config_from(IniFile::parse("[sweep]\nbounds = exact\n")), ConfigError);
  EXPECT_THROW(sweep_config_from(IniFile::parse("[split]\ncounts = 1,2,3\n")), ConfigError);
  EXPECT_THROW(sweep_config_from(IniFile::parse("[data]\nsource = csv\n")), ConfigError);
  EXPECT_THROW(sweep_config_from(IniFile::parse("[data]\nsource = blobs\ntask = regression\n")), ConfigError);
}

TEST(ValidityConfig, ShippedFile) {
  const ValidityConfig cfg = validity_config_from(IniFile::load(fs::path(COLDBOUND_CONFIG_DIR) / "validity.ini"));
  EXPECT_EQ(cfg.oracle.d, 20);
  EXPECT_EQ(cfg.oracle.n_per_draw, 50);
  EXPECT_EQ(cfg.trials, 200);
  EXPECT_EQ(cfg.oracle.w_star.size(), 20);
  EXPECT_THROW(validity_config_from(IniFile::parse("[validity]\ntrials = 0\n")), ConfigError);
}

TEST(Materialize, GeneratorErrorsBecomeConfigErrors) {
  DataSourceConfig d;
  d.kind = DataSourceKind::friedman;
  d.dim = 3;
  EXPECT_THROW(materialize(d), ConfigError);
  d.dim = 5;
  d.n = 10;
  std::vector<std::string> names;
  EXPECT_EQ(materialize(d, &names).size(), 10u);
  EXPECT_EQ(names.size(), 5u);
}

TEST(CsvNumber, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.446287102628419, 1e300, 0.0}) {
    EXPECT_EQ(parse_csv_number(csv_number(v)), v);
  }
  EXPECT_EQ(csv_number(kNaN), "");
  EXPECT_TRUE(std::isnan(parse_csv_number("")));
  EXPECT_EQ(csv_number(0.5), "0.5");
}

TEST(SweepCsv, RoundTripIsExact) {
  std::vector<SweepRow> rows(3);
  for (int i = 0; i < 3; ++i) {
    SweepRow& r = rows[i];
    r.seed = i;
    r.lambda_index = i + 1;
    r.prior_var_index = 2 * i;
    r.lambda = std::pow(10.0, i) / 3.0;
    r.prior_var = 1e-3 * (i + 1);
    r.posterior_var = r.prior_var / 7.0;
    r.h = 123.456 * i;
    r.sigma_x2 = 0.1;
    r.constraint_c = 2.0 * 80.0 * 0.1 * r.prior_var;
    r.bound(BoundKind::original) = BoundCell{CellStatus::ok, 1.1, 2.2, 3.3, 6.6, 0.01, 0.02};
    r.bound(BoundKind::approximate).status = i == 1 ? CellStatus::excluded : CellStatus::ok;
    r.metrics_status = CellStatus::ok;
    r.test_nll = 1.0 / (i + 3.0);
  }
  rows[2].message = "first line, with comma\nsecond";
  rows[2].bound(BoundKind::mixed).status = CellStatus::failed;
  const fs::path p = fs::temp_directory_path() / "coldbound_tests" / "sweep.csv";
  fs::create_directories(p.parent_path());
  write_sweep_csv(p, rows, "[sweep]\ndelta = 0.05\n");
  const SweepCsv back = read_sweep_csv(p);
  ASSERT_EQ(back.rows.size(), 3u);
  EXPECT_EQ(back.rows[0], rows[0]);
  EXPECT_EQ(back.rows[1], rows[1]);
  EXPECT_EQ(back.rows[2].message, "first line; with comma;second");
  EXPECT_EQ(back.rows[2].bound(BoundKind::mixed).status, CellStatus::failed);
  EXPECT_NE(std::find(back.header_lines.begin(), back.header_lines.end(), "delta = 0.05"), back.header_lines.end());
}

TEST(CellStatus, NamesRoundTrip) {
  for (CellStatus s : {CellStatus::ok, CellStatus::excluded, CellStatus::unsupported, CellStatus::failed,
                       CellStatus::skipped}) {
    EXPECT_EQ(parse_cell_status(to_string(s)), s);
  }
  EXPECT_THROW(parse_cell_status("maybe"), DataError);
}

TEST(Spearman, Examples) {
  const std::vector<double> a{1, 2, 3, 4, 5};
  const std::vector<double> up{10, 20, 30, 40, 50};
  const std::vector<double> down{5, 4, 3, 2, 1};
  const std::vector<double> flat{1, 1, 1, 1, 1};
  EXPECT_DOUBLE_EQ(spearman(a, up), 1.0);
  EXPECT_DOUBLE_EQ(spearman(a, down), -1.0);
  EXPECT_TRUE(std::isnan(spearman(a, flat)));
  // Monotone transforms leave the rank correlation unchanged.
  const std::vector<double> b{0.3, 0.1, 0.9, 0.4, 0.2};
  std::vector<double> eb;
  for (double v : b) eb.push_back(std::exp(5 * v));
  EXPECT_DOUBLE_EQ(spearman(a, b), spearman(a, eb));
  // Ties take average ranks: ranks (1, 2.5, 2.5, 4) against (1, 2, 3, 4).
  EXPECT_NEAR(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 2, 2, 3}), 0.9486832980505138, 1e-12);
}

TEST(Wilson, Examples) {
  EXPECT_NEAR(wilson_lower_bound(200, 200), 1.0 / (1.0 + 1.6448536269514722 * 1.6448536269514722 / 200), 1e-12);
  EXPECT_EQ(wilson_lower_bound(0, 10), 0.0);
  EXPECT_LT(wilson_lower_bound(190, 200), 0.95);
  EXPECT_GT(wilson_lower_bound(190, 200), 0.9);
}
