#include "coldbound/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>

#include <Eigen/Cholesky>

#include "coldbound/errors.hpp"
#include "coldbound/random.hpp"

namespace coldbound {

namespace {

struct SeedContext {
  FlatParams map;
  CurvatureSummary curv;
  double sigma_x2;
  Batch trainsuffix;
  Batch test;
  Batch z_true;
  double map_mse_sum;  // regression only
  Eigen::MatrixXd posterior_noise;
  Eigen::MatrixXd predictive_noise;
};

int count_classes(std::span<const Sample> data) {
  int k = 0;
  for (const Sample& s : data) k = std::max(k, s.label() + 1);
  return k;
}

std::vector<std::size_t> draw_without_replacement(std::size_t population, std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(population);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, population - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(n);
  return idx;
}

void fail_row(SweepRow& row, const std::vector<BoundKind>& kinds, const std::string& what) {
  for (BoundKind k : kinds) row.bound(k).status = CellStatus::failed;
  row.metrics_status = CellStatus::failed;
  row.message = what;
}

void append_message(SweepRow& row, const std::string& what) {
  row.message += (row.message.empty() ? "" : " | ") + what;
}

struct Stats {
  double mean = kNaN;
  double std = kNaN;
  int count = 0;
};

Stats stats_of(const std::vector<double>& v) {
  Stats s;
  s.count = static_cast<int>(v.size());
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = v.size() > 1 ? std::sqrt(ss / double(v.size() - 1)) : 0.0;
  return s;
}

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

// Min-max normalisation of `v` over its finite entries.
std::vector<double> min_max(const std::vector<double>& v) {
  double lo = INFINITY, hi = -INFINITY;
  for (double x : v) {
    if (std::isfinite(x)) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  std::vector<double> out(v.size(), kNaN);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) continue;
    out[i] = hi > lo ? (v[i] - lo) / (hi - lo) : 0.0;
  }
  return out;
}

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * double(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

nlohmann::json build_sweep_summary(const SweepConfig& cfg, const SweepReport& report) {
  const std::size_t L = cfg.lambda_grid.size();
  const std::size_t P = cfg.prior_var_grid.size();
  const auto at = [&](int seed, std::size_t p, std::size_t l) -> const SweepRow& {
    return report.rows[(static_cast<std::size_t>(seed) * P + p) * L + l];
  };

  nlohmann::json j;
  j["rows"] = report.rows.size();
  j["cells"] = report.cells;
  j["failed_cells"] = report.failed_cells;
  j["seeds"] = cfg.n_seeds;
  j["lambda_grid"] = cfg.lambda_grid;
  j["prior_var_grid"] = cfg.prior_var_grid;
  j["delta"] = cfg.delta;
  j["moment_form"] = to_string(cfg.moment_form);
  j["nll_units"] = "mean per-sample predictive NLL on Z_test in standardized target units";
  j["normalization"] =
      "*_normalized columns: min-max of the seed mean over the lambda grid at fixed prior variance "
      "(our convention)";

  nlohmann::json cells = nlohmann::json::array();
  for (std::size_t p = 0; p < P; ++p) {
    // Seed means per lambda, used for the normalised columns.
    std::map<BoundKind, std::vector<double>> kind_means;
    std::vector<double> nll_means(L);
    std::vector<nlohmann::json> per_lambda(L);
    for (std::size_t l = 0; l < L; ++l) {
      nlohmann::json c;
      c["lambda"] = cfg.lambda_grid[l];
      c["prior_var"] = cfg.prior_var_grid[p];
      c["lambda_index"] = l;
      c["prior_var_index"] = p;
      std::vector<double> nll, cs, pv;
      for (int s = 0; s < cfg.n_seeds; ++s) {
        const SweepRow& r = at(s, p, l);
        if (r.metrics_status == CellStatus::ok) nll.push_back(r.test_nll);
        if (std::isfinite(r.constraint_c)) cs.push_back(r.constraint_c);
        if (std::isfinite(r.posterior_var)) pv.push_back(r.posterior_var);
      }
      const Stats nll_s = stats_of(nll);
      nll_means[l] = nll_s.mean;
      c["test_nll_mean"] = number_or_null(nll_s.mean);
      c["test_nll_std"] = number_or_null(nll_s.std);
      c["posterior_var_mean"] = number_or_null(stats_of(pv).mean);
      const double c_mean = stats_of(cs).mean;
      c["constraint_c_mean"] = number_or_null(c_mean);
      c["admissible_lambda_max"] = number_or_null(1.0 / c_mean);
      if (cfg.data.task == Task::classification) {
        std::vector<double> ece, zo;
        for (int s = 0; s < cfg.n_seeds; ++s) {
          const SweepRow& r = at(s, p, l);
          if (r.metrics_status == CellStatus::ok) {
            ece.push_back(r.test_ece);
            zo.push_back(r.test_zero_one);
          }
        }
        c["test_ece_mean"] = number_or_null(stats_of(ece).mean);
        c["test_ece_std"] = number_or_null(stats_of(ece).std);
        c["test_zero_one_mean"] = number_or_null(stats_of(zo).mean);
        c["test_zero_one_std"] = number_or_null(stats_of(zo).std);
      }
      for (BoundKind k : cfg.kinds) {
        std::vector<double> tot, er, kl, mom;
        int excluded = 0;
        for (int s = 0; s < cfg.n_seeds; ++s) {
          const BoundCell& b = at(s, p, l).bound(k);
          if (b.status == CellStatus::excluded) ++excluded;
          if (b.status != CellStatus::ok) continue;
          tot.push_back(b.total);
          er.push_back(b.empirical_risk);
          kl.push_back(b.kl_term);
          mom.push_back(b.moment_term);
        }
        nlohmann::json bj;
        const Stats ts = stats_of(tot);
        bj["seeds_ok"] = ts.count;
        bj["seeds_excluded"] = excluded;
        bj["total_mean"] = number_or_null(ts.mean);
        bj["total_std"] = number_or_null(ts.std);
        bj["empirical_risk_mean"] = number_or_null(stats_of(er).mean);
        bj["kl_term_mean"] = number_or_null(stats_of(kl).mean);
        bj["moment_term_mean"] = number_or_null(stats_of(mom).mean);
        c[to_string(k)] = bj;
        kind_means[k].push_back(ts.mean);
      }
      per_lambda[l] = std::move(c);
    }
    const auto nll_norm = min_max(nll_means);
    for (BoundKind k : cfg.kinds) {
      const auto norm = min_max(kind_means[k]);
      for (std::size_t l = 0; l < L; ++l) per_lambda[l][to_string(k)]["total_normalized"] = number_or_null(norm[l]);
    }
    for (std::size_t l = 0; l < L; ++l) {
      per_lambda[l]["test_nll_normalized"] = number_or_null(nll_norm[l]);
      cells.push_back(std::move(per_lambda[l]));
    }
  }
  j["cells"] = std::move(cells);

  if (std::find(cfg.kinds.begin(), cfg.kinds.end(), BoundKind::original) != cfg.kinds.end()) {
    nlohmann::json per_prior = nlohmann::json::array();
    std::vector<double> all;
    for (std::size_t p = 0; p < P; ++p) {
      std::vector<double> per_seed;
      for (int s = 0; s < cfg.n_seeds; ++s) {
        std::vector<double> tot, nll;
        for (std::size_t l = 0; l < L; ++l) {
          const SweepRow& r = at(s, p, l);
          if (r.bound(BoundKind::original).status == CellStatus::ok && r.metrics_status == CellStatus::ok) {
            tot.push_back(r.bound(BoundKind::original).total);
            nll.push_back(r.test_nll);
          }
        }
        if (tot.size() < 2) continue;
        const double rho = spearman(tot, nll);
        if (std::isfinite(rho)) per_seed.push_back(rho);
      }
      all.insert(all.end(), per_seed.begin(), per_seed.end());
      nlohmann::json e;
      e["prior_var"] = cfg.prior_var_grid[p];
      e["mean_over_seeds"] = number_or_null(stats_of(per_seed).mean);
      e["seeds"] = per_seed.size();
      per_prior.push_back(std::move(e));
    }
    nlohmann::json sp;
    sp["description"] = "Spearman correlation of B_original totals and test NLL across the lambda grid";
    sp["per_prior_var"] = std::move(per_prior);
    sp["mean"] = number_or_null(stats_of(all).mean);
    j["spearman_original_vs_test_nll"] = std::move(sp);
  }
  return j;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("spearman needs equal-length inputs");
  if (a.size() < 2) return kNaN;
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = double(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return kNaN;
  return sab / std::sqrt(saa * sbb);
}

SweepReport run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  const SampleList source = materialize(cfg.data);
  if (source.empty()) throw DataError("data source is empty");
  const int input_dim = static_cast<int>(source.front().x.size());
  const int output_dim = cfg.data.task == Task::classification ? count_classes(source) : 1;
  if (cfg.data.task == Task::classification && output_dim < 2) throw DataError("classification needs two classes");
  const ArchSpec arch = cfg.arch(input_dim, output_dim);

  const std::size_t L = cfg.lambda_grid.size();
  const std::size_t P = cfg.prior_var_grid.size();
  SweepReport report;
  report.rows.reserve(static_cast<std::size_t>(cfg.n_seeds) * L * P);

  for (int s = 0; s < cfg.n_seeds; ++s) {
    const std::uint64_t seed_base = derive_seed(cfg.base_seed, {std::uint64_t(s)});
    std::vector<SweepRow> rows(P * L);
    for (std::size_t p = 0; p < P; ++p) {
      for (std::size_t l = 0; l < L; ++l) {
        SweepRow& r = rows[p * L + l];
        r.seed = s;
        r.prior_var_index = static_cast<int>(p);
        r.lambda_index = static_cast<int>(l);
        r.prior_var = cfg.prior_var_grid[p];
        r.lambda = cfg.lambda_grid[l];
      }
    }

    std::optional<SeedContext> ctx;
    try {
      DatasetSplits sp = split(source, cfg.counts, derive_seed(cfg.split_seed, {std::uint64_t(s)}), "config");
      standardize(sp, Standardizer::fit(sp.train, cfg.data.task));
      TrainConfig tc = cfg.train;
      tc.seed = derive_seed(seed_base, {1});
      FlatParams map = train_map(arch, sp.train, tc);
      CurvatureSummary curv = curvature(map, sp.trainsuffix);
      const double sx2 = gradient_variance(map, sp.z_true);
      Batch ts = pack(sp.trainsuffix);
      double mse = 0.0;
      if (arch.head == OutputHead::identity) mse = (ts.y.transpose() - forward_raw_batch(map, ts.x).row(0)).squaredNorm();
      const Eigen::Index d = map.size();
      ctx.emplace(SeedContext{map, curv, sx2, std::move(ts), pack(sp.test), pack(sp.z_true), mse,
                              posterior_noise(d, cfg.m_posterior, derive_seed(seed_base, {2})),
                              posterior_noise(d, cfg.m_predictive, derive_seed(seed_base, {3}))});
    } catch (const DataError&) {
      throw;
    } catch (const std::exception& e) {
      for (SweepRow& r : rows) fail_row(r, cfg.kinds, std::string("seed setup failed: ") + e.what());
    }

    if (ctx) {
      const Eigen::Index n = ctx->trainsuffix.size();
      const double d = static_cast<double>(ctx->map.size());
      const double w_star = cfg.w_star_gap.value_or(ctx->map.values().squaredNorm());
      const Batch& z_true = ctx->z_true;
      const TrueRiskFn true_risk = [&z_true](const FlatParams& w) { return mean_nll(w, z_true); };
      const DataSampler sampler = [&z_true, n](std::uint64_t seed) {
        SampleList out;
        out.reserve(static_cast<std::size_t>(n));
        for (std::size_t i : draw_without_replacement(static_cast<std::size_t>(z_true.size()),
                                                      static_cast<std::size_t>(n), seed)) {
          out.push_back(Sample{z_true.x.col(static_cast<Eigen::Index>(i)), z_true.y[static_cast<Eigen::Index>(i)]});
        }
        return out;
      };

      for (std::size_t p = 0; p < P; ++p) {
        const double prior_var = cfg.prior_var_grid[p];
        const IsotropicGaussian prior(ctx->map, prior_var);
        const double c = moment_constraint(double(n), ctx->sigma_x2, prior_var);
        std::optional<PriorLossTable> table;
        std::string table_error;
        try {
          // Same seed for every prior variance: prior draws share their noise.
          table = build_prior_loss_table(prior, n, true_risk, sampler, cfg.m_prior, cfg.m_data,
                                         derive_seed(seed_base, {4}), z_true.size());
        } catch (const std::exception& e) {
          table_error = std::string("moment estimation failed: ") + e.what();
        }

        for (std::size_t l = 0; l < L; ++l) {
          SweepRow& r = rows[p * L + l];
          const double lambda = cfg.lambda_grid[l];
          r.h = ctx->curv.h;
          r.sigma_x2 = ctx->sigma_x2;
          r.constraint_c = c;
          std::optional<IsotropicGaussian> post;
          try {
            r.posterior_var = posterior_variance(lambda, ctx->curv, prior_var);
            post.emplace(ctx->map, r.posterior_var);
          } catch (const std::exception& e) {
            fail_row(r, cfg.kinds, std::string("posterior construction failed: ") + e.what());
            continue;
          }

          for (BoundKind k : cfg.kinds) {
            BoundCell& cell = r.bound(k);
            try {
              if (k == BoundKind::approximate) {
                if (arch.head != OutputHead::identity) {
                  cell.status = CellStatus::unsupported;
                  continue;
                }
                ApproximateBoundInputs in;
                in.lambda = lambda;
                in.n = double(n);
                in.d = d;
                in.h = ctx->curv.h;
                in.prior_var = prior_var;
                in.map_mse_sum = ctx->map_mse_sum;
                in.sigma_x2 = ctx->sigma_x2;
                in.sigma_eps2 = cfg.sigma_eps2;
                in.w_star_norm2 = w_star;
                in.w_gap_norm2 = 0.0;
                in.delta = cfg.delta;
                in.form = cfg.moment_form;
                cell = BoundCell::from(bound_approximate(in));
                cell.empirical_risk_se = 0.0;
                cell.moment_se = 0.0;
              } else {
                if (!table) throw std::runtime_error(table_error);
                const BoundBreakdown b =
                    k == BoundKind::original
                        ? bound_original(*post, prior, lambda, cfg.delta, ctx->trainsuffix, ctx->posterior_noise, *table)
                        : bound_mixed(*post, prior, lambda, cfg.delta, ctx->trainsuffix, ctx->curv, *table);
                cell = BoundCell::from(b);
              }
              if (!std::isfinite(cell.total)) {
                cell.status = CellStatus::failed;
                append_message(r, std::string(to_string(k)) + ": non-finite total");
              }
            } catch (const DomainError&) {
              cell = BoundCell{};
              cell.status = CellStatus::excluded;
            } catch (const std::exception& e) {
              cell = BoundCell{};
              cell.status = CellStatus::failed;
              append_message(r, std::string(to_string(k)) + ": " + e.what());
            }
          }

          try {
            const MetricReport m = evaluate_metrics(*post, ctx->test, ctx->predictive_noise, cfg.ece_bins);
            r.test_nll = m.nll;
            r.test_ece = m.ece.value_or(kNaN);
            r.test_zero_one = m.zero_one.value_or(kNaN);
            r.metrics_status = std::isfinite(m.nll) ? CellStatus::ok : CellStatus::failed;
          } catch (const std::exception& e) {
            r.metrics_status = CellStatus::failed;
            append_message(r, std::string("metrics: ") + e.what());
          }
        }
      }
    }

    for (SweepRow& r : rows) {
      ++report.cells;
      bool any_ok = r.metrics_status == CellStatus::ok;
      for (BoundKind k : cfg.kinds) {
        const CellStatus st = r.bound(k).status;
        any_ok = any_ok || st == CellStatus::ok || st == CellStatus::excluded || st == CellStatus::unsupported;
      }
      if (!any_ok) ++report.failed_cells;
      report.rows.push_back(std::move(r));
    }
  }
  report.summary = build_sweep_summary(cfg, report);
  return report;
}

void write_sweep_report(const SweepConfig& cfg, const SweepReport& report) {
  std::filesystem::create_directories(cfg.out_dir);
  write_sweep_csv(cfg.out_dir / "sweep.csv", report.rows, cfg.resolved());
  write_json(cfg.out_dir / "summary.json", report.summary);
  const SampleList source = materialize(cfg.data);
  for (int s = 0; s < cfg.n_seeds; ++s) {
    const DatasetSplits sp = split(source, cfg.counts, derive_seed(cfg.split_seed, {std::uint64_t(s)}), "config");
    write_json(cfg.out_dir / ("split_seed" + std::to_string(s) + ".json"), split_manifest(sp));
  }
}

CorollaryReport run_corollary_demo(std::span<const double> lambda_grid, double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("delta must lie in (0, 1]");
  if (lambda_grid.empty()) throw ConfigError("lambda grid is empty");
  CorollaryReport report;
  std::optional<std::size_t> best;
  std::size_t first_in = lambda_grid.size(), last_in = 0, excluded = 0;
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    CorollaryRow row{lambda_grid[i], true, CorollaryPoint{lambda_grid[i], kNaN, kNaN, kNaN, kNaN}};
    try {
      row.point = corollary1_point(lambda_grid[i], delta);
      first_in = std::min(first_in, i);
      last_in = i;
      if (!best || row.point.total < report.rows[*best].point.total) best = i;
    } catch (const DomainError&) {
      row.in_domain = false;
      ++excluded;
    }
    report.rows.push_back(row);
  }
  nlohmann::json j;
  j["delta"] = delta;
  j["points"] = lambda_grid.size();
  j["excluded"] = excluded;
  j["constraint_c"] = 2.0;
  j["admissible_lambda_max"] = 0.5;
  if (best) {
    j["argmin_lambda"] = report.rows[*best].lambda;
    j["argmin_total"] = report.rows[*best].point.total;
    j["argmin_index"] = *best;
    j["argmin_is_interior"] = *best > first_in && *best < last_in;
  } else {
    j["argmin_lambda"] = nullptr;
  }
  report.summary = std::move(j);
  return report;
}

void write_corollary_report(const CorollaryReport& report, double delta, const std::string& grid_spec,
                            const std::filesystem::path& out) {
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  std::ofstream f(out, std::ios::binary);
  if (!f) throw DataError("cannot write '" + out.string() + "'");
  f << "# delta = " << csv_number(delta) << "\n";
  f << "# grid = " << grid_spec << "\n";
  f << "# excluded rows lie outside (0, 0.5), where the moment term has its pole (c = 2)\n";
  f << "lambda,status,empirical_risk,moment,kl,total,c\n";
  for (const CorollaryRow& r : report.rows) {
    f << csv_number(r.lambda) << "," << (r.in_domain ? "ok" : "excluded") << "," << csv_number(r.point.empirical_risk)
      << "," << csv_number(r.point.moment) << "," << csv_number(r.point.kl) << "," << csv_number(r.point.total)
      << "," << (r.in_domain ? "" : "2") << "\n";
  }
  std::filesystem::path summary = out;
  summary.replace_extension(".summary.json");
  write_json(summary, report.summary);
}

double wilson_lower_bound(int successes, int trials, double z) {
  if (trials <= 0) return 0.0;
  const double n = trials;
  const double p = successes / n;
  const double z2 = z * z;
  const double centre = p + z2 / (2.0 * n);
  const double spread = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return std::max(0.0, (centre - spread) / (1.0 + z2 / n));
}

ValidityReport run_validity_study(const ValidityConfig& cfg) {
  cfg.validate();
  SyntheticOracleSpec spec = cfg.oracle;
  spec.seed = derive_seed(cfg.oracle.seed, {cfg.base_seed});
  const ArchSpec arch = spec.arch();
  const Eigen::Index d = spec.d;
  const Eigen::Index n = spec.n_per_draw;
  const IsotropicGaussian prior(FlatParams::zeros(arch), cfg.prior_var);
  const TrueRiskFn true_risk = [&spec](const FlatParams& w) { return synthetic_true_risk(spec, w); };
  const DataSampler sampler = [&spec, n](std::uint64_t seed) { return synthetic_sample(spec, n, seed); };

  ValidityReport report;
  int holds = 0;
  for (int t = 0; t < cfg.trials; ++t) {
    const SampleList data = synthetic_draw(spec, static_cast<std::uint64_t>(t));
    const Batch b = pack(data);

    Eigen::VectorXd mean;
    if (cfg.oracle_posterior_mean) {
      mean = spec.w_star;
    } else {
      // Tempered posterior of the linear-Gaussian model: precision lambda X^T X + I / prior_var.
      Eigen::MatrixXd precision = cfg.lambda * (b.x * b.x.transpose());
      precision.diagonal().array() += 1.0 / cfg.prior_var;
      mean = precision.ldlt().solve(cfg.lambda * (b.x * b.y) + prior.mean().values() / cfg.prior_var);
    }
    const FlatParams mean_params(arch, mean);
    const CurvatureSummary curv = curvature_regression(mean_params, data);
    const double post_var = cfg.degenerate_posterior ? 1e-30 : posterior_variance(cfg.lambda, curv, cfg.prior_var);
    const IsotropicGaussian post(mean_params, post_var);

    const std::uint64_t trial_seed = derive_seed(cfg.base_seed, {std::uint64_t(t)});
    const PriorLossTable table =
        build_prior_loss_table(prior, n, true_risk, sampler, cfg.m_prior, cfg.m_data, derive_seed(trial_seed, {1}));
    const BoundBreakdown bound = bound_original(post, prior, cfg.lambda, cfg.delta, b,
                                                posterior_noise(d, cfg.m_posterior, derive_seed(trial_seed, {2})), table);
    const double risk = synthetic_true_risk(spec, post);
    const bool ok = bound.total >= risk;
    holds += ok ? 1 : 0;
    report.trials.push_back(ValidityTrial{t, bound, post_var, risk, ok});
  }
  report.holding_fraction = double(holds) / double(cfg.trials);
  report.wilson_lower = wilson_lower_bound(holds, cfg.trials);

  nlohmann::json j;
  j["trials"] = cfg.trials;
  j["holds"] = holds;
  j["holding_fraction"] = report.holding_fraction;
  j["nominal_coverage"] = 1.0 - cfg.delta;
  j["wilson_lower_95"] = report.wilson_lower;
  j["confidence_note"] =
      "one-sided 95% Wilson score lower bound on the probability that the bound holds; "
      "Monte Carlo error in the bound terms is not accounted for";
  j["lambda"] = cfg.lambda;
  j["prior_var"] = cfg.prior_var;
  j["delta"] = cfg.delta;
  j["d"] = d;
  j["n"] = n;
  report.summary = std::move(j);
  return report;
}

void write_validity_report(const ValidityConfig& cfg, const ValidityReport& report) {
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream f(cfg.out_dir / "validity.csv", std::ios::binary);
  if (!f) throw DataError("cannot write '" + (cfg.out_dir / "validity.csv").string() + "'");
  f << comment_block(cfg.resolved());
  f << "trial,empirical_risk,kl,moment,total,empirical_risk_se,moment_se,posterior_var,true_gibbs_risk,holds\n";
  for (const ValidityTrial& t : report.trials) {
    const BoundBreakdown& b = t.bound;
    f << t.trial << "," << csv_number(b.empirical_risk) << "," << csv_number(b.kl_term) << ","
      << csv_number(b.moment_term) << "," << csv_number(b.total) << "," << csv_number(b.empirical_risk_se) << ","
      << csv_number(b.moment_se) << "," << csv_number(t.posterior_var) << "," << csv_number(t.true_risk) << "," << (t.holds ? 1 : 0) << "\n";
  }
  write_json(cfg.out_dir / "summary.json", report.summary);
}

}  // namespace coldbound
