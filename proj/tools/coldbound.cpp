// coldbound: PAC-Bayes bounds for tempered Laplace posteriors.
//
//   coldbound sweep <config>
//   coldbound corollary --delta <v> --grid <spec> --out <path>
//   coldbound validity <config>
//   coldbound synth-gen <config>
//
// Exit codes: 0 success, 1 config error, 2 data error, 3 every cell failed.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "coldbound/config.hpp"
#include "coldbound/errors.hpp"
#include "coldbound/experiment.hpp"

namespace cb = coldbound;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitAllFailed = 3;

int cmd_sweep(const std::string& path) {
  const cb::SweepConfig cfg = cb::sweep_config_from(cb::IniFile::load(path));
  const cb::SweepReport report = cb::run_sweep(cfg);
  cb::write_sweep_report(cfg, report);
  std::cout << "sweep: " << report.rows.size() << " rows, " << report.failed_cells << " failed cells -> "
            << (cfg.out_dir / "sweep.csv").string() << "\n";
  if (report.cells > 0 && report.failed_cells == report.cells) {
    std::cerr << "error: every cell failed\n";
    return kExitAllFailed;
  }
  return 0;
}

int cmd_corollary(double delta, const std::string& grid, const std::string& out) {
  const std::vector<double> lambdas = cb::parse_grid(grid);
  const cb::CorollaryReport report = cb::run_corollary_demo(lambdas, delta);
  cb::write_corollary_report(report, delta, grid, out);
  const auto& s = report.summary;
  std::cout << "corollary: " << report.rows.size() << " points, " << s["excluded"].get<int>() << " excluded";
  if (!s["argmin_lambda"].is_null()) std::cout << ", argmin lambda = " << s["argmin_lambda"].get<double>();
  std::cout << " -> " << out << "\n";
  if (s["argmin_lambda"].is_null()) {
    std::cerr << "error: no grid point lies inside (0, 0.5)\n";
    return kExitAllFailed;
  }
  return 0;
}

int cmd_validity(const std::string& path) {
  const cb::ValidityConfig cfg = cb::validity_config_from(cb::IniFile::load(path));
  const cb::ValidityReport report = cb::run_validity_study(cfg);
  cb::write_validity_report(cfg, report);
  std::cout << "validity: bound held in " << report.holding_fraction * 100.0 << "% of " << cfg.trials
            << " trials (95% lower bound " << report.wilson_lower << ") -> "
            << (cfg.out_dir / "validity.csv").string() << "\n";
  return 0;
}

int cmd_synth_gen(const std::string& path) {
  const cb::SynthGenConfig cfg = cb::synth_gen_config_from(cb::IniFile::load(path));
  std::vector<std::string> names;
  const cb::SampleList samples = cb::materialize(cfg.data, &names);
  if (cfg.out.has_parent_path()) std::filesystem::create_directories(cfg.out.parent_path());
  cb::write_csv(cfg.out, samples, names, cfg.data.target);
  std::cout << "synth-gen: " << samples.size() << " samples -> " << cfg.out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PAC-Bayes bounds for tempered isotropic-Gaussian posteriors"};
  app.require_subcommand(1);

  std::string sweep_cfg, validity_cfg, synth_cfg, grid = "lin:0.005:0.495:99", out = "corollary.csv";
  double delta = 0.05;

  auto* sweep = app.add_subcommand("sweep", "lambda x prior-variance bound sweep");
  sweep->add_option("config", sweep_cfg, "config file")->required();
  auto* corollary = app.add_subcommand("corollary", "simplified closed-form bound curve");
  corollary->add_option("--delta", delta, "confidence parameter in (0, 1]");
  corollary->add_option("--grid", grid, "lambda grid: log:lo:hi:n, lin:lo:hi:n or a comma list");
  corollary->add_option("--out", out, "output CSV path");
  auto* validity = app.add_subcommand("validity", "coverage of the bound on the synthetic oracle");
  validity->add_option("config", validity_cfg, "config file")->required();
  auto* synth = app.add_subcommand("synth-gen", "write a synthetic dataset as CSV");
  synth->add_option("config", synth_cfg, "config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*sweep) return cmd_sweep(sweep_cfg);
    if (*corollary) return cmd_corollary(delta, grid, out);
    if (*validity) return cmd_validity(validity_cfg);
    if (*synth) return cmd_synth_gen(synth_cfg);
  } catch (const cb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const cb::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
