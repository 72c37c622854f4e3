#pragma once

// Sweep rows and their CSV form. Numbers are written in shortest round-trip
// form, so parsing a report reproduces every field bit for bit. Fields that
// do not apply to a row are left empty and explained by a status column.

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coldbound/bounds.hpp"

namespace coldbound {

enum class CellStatus {
  ok,
  excluded,     // outside the closed-form moment domain, lambda >= 1/c
  unsupported,  // bound not defined for this task
  failed,       // the cell raised an error, see the row message
  skipped,      // not requested
};

const char* to_string(CellStatus s);
CellStatus parse_cell_status(const std::string& text);

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct BoundCell {
  CellStatus status = CellStatus::skipped;
  double empirical_risk = kNaN;
  double kl_term = kNaN;
  double moment_term = kNaN;
  double total = kNaN;
  double empirical_risk_se = kNaN;
  double moment_se = kNaN;

  static BoundCell from(const BoundBreakdown& b);
  bool operator==(const BoundCell&) const;
};

inline constexpr std::array<BoundKind, 3> kAllBoundKinds{BoundKind::approximate, BoundKind::mixed,
                                                         BoundKind::original};

struct SweepRow {
  int seed = 0;
  int lambda_index = 0;
  int prior_var_index = 0;
  double lambda = kNaN;
  double prior_var = kNaN;
  double posterior_var = kNaN;
  double h = kNaN;
  double sigma_x2 = kNaN;
  double constraint_c = kNaN;  // c = 2 n sigma_x^2 sigma_prior^2
  std::array<BoundCell, 3> bounds;  // indexed by BoundKind
  CellStatus metrics_status = CellStatus::skipped;
  double test_nll = kNaN;
  double test_ece = kNaN;
  double test_zero_one = kNaN;
  std::string message;

  BoundCell& bound(BoundKind k) { return bounds[static_cast<std::size_t>(k)]; }
  const BoundCell& bound(BoundKind k) const { return bounds[static_cast<std::size_t>(k)]; }
  bool operator==(const SweepRow&) const;
};

/// Header lines start with "# "; the resolved config is embedded there.
void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows,
                     const std::string& resolved_config);

struct SweepCsv {
  std::vector<std::string> header_lines;  // without the leading "# "
  std::vector<SweepRow> rows;
};

SweepCsv read_sweep_csv(const std::filesystem::path& path);

/// Prefixes every line of `text` with "# ".
std::string comment_block(const std::string& text);

/// Shortest round-trip decimal, or an empty string for NaN.
std::string csv_number(double v);
double parse_csv_number(const std::string& text);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace coldbound
