#pragma once

// End-to-end drivers behind the CLI subcommands.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coldbound/config.hpp"
#include "coldbound/report.hpp"

namespace coldbound {

struct SweepReport {
  std::vector<SweepRow> rows;  // lattice order: seed, then prior variance, then lambda
  nlohmann::json summary;
  int cells = 0;
  int failed_cells = 0;
};

/// Trains one MAP network per seed, sets the posterior mean to it and
/// evaluates every requested bound and the test metrics on the
/// (lambda, prior variance) lattice. Errors are confined to their cell.
SweepReport run_sweep(const SweepConfig& cfg);

/// Writes sweep.csv, summary.json and one split manifest per seed.
void write_sweep_report(const SweepConfig& cfg, const SweepReport& report);

/// Spearman rank correlation with average ranks for ties. NaN when either
/// input is constant.
double spearman(std::span<const double> a, std::span<const double> b);

struct CorollaryRow {
  double lambda;
  bool in_domain;
  CorollaryPoint point;  // unset terms are NaN outside the domain
};

struct CorollaryReport {
  std::vector<CorollaryRow> rows;
  nlohmann::json summary;
};

CorollaryReport run_corollary_demo(std::span<const double> lambda_grid, double delta);

/// Writes the CSV at `out` and the summary next to it as <stem>.summary.json.
void write_corollary_report(const CorollaryReport& report, double delta, const std::string& grid_spec,
                            const std::filesystem::path& out);

struct ValidityTrial {
  int trial;
  BoundBreakdown bound;
  double posterior_var;
  double true_risk;
  bool holds;
};

struct ValidityReport {
  std::vector<ValidityTrial> trials;
  double holding_fraction = 0.0;
  double wilson_lower = 0.0;  // one-sided 95% lower confidence bound on the holding probability
  nlohmann::json summary;
};

/// One fresh oracle dataset per trial, the tempered posterior of the linear
/// model on it, and bound_original against the exact Gibbs risk.
ValidityReport run_validity_study(const ValidityConfig& cfg);

void write_validity_report(const ValidityConfig& cfg, const ValidityReport& report);

/// One-sided Wilson score lower bound for `successes` out of `trials`.
double wilson_lower_bound(int successes, int trials, double z = 1.6448536269514722);

}  // namespace coldbound
