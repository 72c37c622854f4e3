#include "coldbound/report.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "coldbound/errors.hpp"

namespace coldbound {

namespace {

constexpr const char* kBoundFields[] = {"status", "empirical_risk", "kl", "moment", "total",
                                        "empirical_risk_se", "moment_se"};

bool same(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || a == b;
}

std::vector<std::string> column_names() {
  std::vector<std::string> cols{"seed", "lambda_index", "prior_var_index", "lambda", "prior_var",
                                "posterior_var", "h", "sigma_x2", "c"};
  for (BoundKind k : kAllBoundKinds) {
    for (const char* f : kBoundFields) cols.push_back(std::string(to_string(k)) + "_" + f);
  }
  for (const char* c : {"metrics_status", "test_nll", "test_ece", "test_zero_one", "message"}) cols.push_back(c);
  return cols;
}

std::string clean_message(std::string m) {
  for (char& ch : m) {
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
  }
  return m;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

const char* to_string(CellStatus s) {
  switch (s) {
    case CellStatus::ok: return "ok";
    case CellStatus::excluded: return "excluded";
    case CellStatus::unsupported: return "unsupported";
    case CellStatus::failed: return "failed";
    case CellStatus::skipped: return "skipped";
  }
  return "?";
}

CellStatus parse_cell_status(const std::string& text) {
  for (CellStatus s : {CellStatus::ok, CellStatus::excluded, CellStatus::unsupported, CellStatus::failed,
                       CellStatus::skipped}) {
    if (text == to_string(s)) return s;
  }
  throw DataError("unknown cell status '" + text + "'");
}

BoundCell BoundCell::from(const BoundBreakdown& b) {
  BoundCell c;
  c.status = CellStatus::ok;
  c.empirical_risk = b.empirical_risk;
  c.kl_term = b.kl_term;
  c.moment_term = b.moment_term;
  c.total = b.total;
  c.empirical_risk_se = b.empirical_risk_se;
  c.moment_se = b.moment_se;
  return c;
}

bool BoundCell::operator==(const BoundCell& o) const {
  return status == o.status && same(empirical_risk, o.empirical_risk) && same(kl_term, o.kl_term) &&
         same(moment_term, o.moment_term) && same(total, o.total) &&
         same(empirical_risk_se, o.empirical_risk_se) && same(moment_se, o.moment_se);
}

bool SweepRow::operator==(const SweepRow& o) const {
  return seed == o.seed && lambda_index == o.lambda_index && prior_var_index == o.prior_var_index &&
         same(lambda, o.lambda) && same(prior_var, o.prior_var) && same(posterior_var, o.posterior_var) &&
         same(h, o.h) && same(sigma_x2, o.sigma_x2) && same(constraint_c, o.constraint_c) &&
         bounds == o.bounds && metrics_status == o.metrics_status && same(test_nll, o.test_nll) &&
         same(test_ece, o.test_ece) && same(test_zero_one, o.test_zero_one) && message == o.message;
}

std::string csv_number(double v) {
  if (std::isnan(v)) return {};
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double parse_csv_number(const std::string& text) {
  if (text.empty()) return kNaN;
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw DataError("'" + text + "' is not a number");
  return v;
}

std::string comment_block(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::string out;
  while (std::getline(in, line)) out += "# " + line + "\n";
  return out;
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows,
                     const std::string& resolved_config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << comment_block(resolved_config);
  out << "# test_nll: mean per-sample posterior-predictive NLL on Z_test, standardized target units\n";
  out << "# bound terms: per-sample NLL scale; *_se columns are Monte Carlo standard errors\n";
  const auto cols = column_names();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  for (const SweepRow& r : rows) {
    out << r.seed << "," << r.lambda_index << "," << r.prior_var_index << "," << csv_number(r.lambda) << ","
        << csv_number(r.prior_var) << "," << csv_number(r.posterior_var) << "," << csv_number(r.h) << ","
        << csv_number(r.sigma_x2) << "," << csv_number(r.constraint_c);
    for (const BoundCell& b : r.bounds) {
      out << "," << to_string(b.status) << "," << csv_number(b.empirical_risk) << "," << csv_number(b.kl_term)
          << "," << csv_number(b.moment_term) << "," << csv_number(b.total) << ","
          << csv_number(b.empirical_risk_se) << "," << csv_number(b.moment_se);
    }
    out << "," << to_string(r.metrics_status) << "," << csv_number(r.test_nll) << "," << csv_number(r.test_ece)
        << "," << csv_number(r.test_zero_one) << "," << clean_message(r.message) << "\n";
  }
}

SweepCsv read_sweep_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  SweepCsv csv;
  const auto cols = column_names();
  std::string line;
  bool header_seen = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("# ", 0) == 0) {
      csv.header_lines.push_back(line.substr(2));
      continue;
    }
    const auto f = split_fields(line);
    if (!header_seen) {
      if (f != cols) throw DataError("unexpected sweep report columns in '" + path.string() + "'");
      header_seen = true;
      continue;
    }
    if (f.size() != cols.size()) {
      throw DataError("line " + std::to_string(lineno) + " has " + std::to_string(f.size()) + " fields");
    }
    SweepRow r;
    std::size_t i = 0;
    r.seed = std::stoi(f[i++]);
    r.lambda_index = std::stoi(f[i++]);
    r.prior_var_index = std::stoi(f[i++]);
    r.lambda = parse_csv_number(f[i++]);
    r.prior_var = parse_csv_number(f[i++]);
    r.posterior_var = parse_csv_number(f[i++]);
    r.h = parse_csv_number(f[i++]);
    r.sigma_x2 = parse_csv_number(f[i++]);
    r.constraint_c = parse_csv_number(f[i++]);
    for (BoundCell& b : r.bounds) {
      b.status = parse_cell_status(f[i++]);
      b.empirical_risk = parse_csv_number(f[i++]);
      b.kl_term = parse_csv_number(f[i++]);
      b.moment_term = parse_csv_number(f[i++]);
      b.total = parse_csv_number(f[i++]);
      b.empirical_risk_se = parse_csv_number(f[i++]);
      b.moment_se = parse_csv_number(f[i++]);
    }
    r.metrics_status = parse_cell_status(f[i++]);
    r.test_nll = parse_csv_number(f[i++]);
    r.test_ece = parse_csv_number(f[i++]);
    r.test_zero_one = parse_csv_number(f[i++]);
    r.message = f[i++];
    csv.rows.push_back(std::move(r));
  }
  if (!header_seen) throw DataError("'" + path.string() + "' has no column header");
  return csv;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << j.dump(2) << "\n";
}

}  // namespace coldbound
