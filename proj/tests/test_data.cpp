#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "coldbound/data.hpp"
#include "coldbound/errors.hpp"
#include "test_util.hpp"

using namespace coldbound;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& content) {
  const fs::path dir = fs::temp_directory_path() / "coldbound_tests";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream(p) << content;
  return p;
}

SampleList numbered(std::size_t n) {
  SampleList out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(Sample{Eigen::VectorXd::Constant(1, double(i)), double(i)});
  return out;
}

std::set<double> ids(const SampleList& s) {
  std::set<double> out;
  for (const Sample& x : s) out.insert(x.y);
  return out;
}

}  // namespace

TEST(LoadCsv, ThreeRowsTwoFeatures) {
  const auto p = temp_file("three.csv", "a,b,y\n1,2,3\n4,5,6\n7,8.5,9\n");
  const LoadedData d = load_csv(p, "y", {"a", "b"}, Task::regression);
  ASSERT_EQ(d.samples.size(), 3u);
  EXPECT_EQ(d.samples[2].x, Eigen::Vector2d(7, 8.5));
  EXPECT_EQ(d.samples[1].y, 6.0);
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"a", "b"}));
}

TEST(LoadCsv, EmptyFeatureListTakesAllOtherColumns) {
  const auto p = temp_file("all.csv", "a,y,b\n1,2,3\n");
  const LoadedData d = load_csv(p, "y", {}, Task::regression);
  EXPECT_EQ(d.samples[0].x, Eigen::Vector2d(1, 3));
}

TEST(LoadCsv, Errors) {
  EXPECT_THROW(load_csv(temp_file("header.csv", "a,b,y\n"), "y", {}, Task::regression), DataError);
  EXPECT_THROW(load_csv("/nonexistent/file.csv", "y", {}, Task::regression), DataError);
  EXPECT_THROW(load_csv(temp_file("col.csv", "a,y\n1,2\n"), "z", {}, Task::regression), DataError);
  try {
    load_csv(temp_file("bad.csv", "a,y\n1,2\n3,x\n"), "y", {}, Task::regression);
    FAIL() << "expected a parse error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
  }
}

TEST(LoadCsv, ClassLabelsMappedInValueOrder) {
  const auto p = temp_file("cls.csv", "x,label\n0,7\n1,-2\n2,7\n3,4\n");
  const LoadedData d = load_csv(p, "label", {}, Task::classification);
  EXPECT_EQ(d.class_values, (std::vector<double>{-2, 4, 7}));
  EXPECT_EQ(d.samples[0].label(), 2);
  EXPECT_EQ(d.samples[1].label(), 0);
  EXPECT_EQ(d.samples[3].label(), 1);
}

TEST(WriteCsv, RoundTripIsExact) {
  Rng rng(1);
  SampleList s;
  for (int i = 0; i < 50; ++i) s.push_back(Sample{standard_normal_vector(3, rng) * 1e3, standard_normal_vector(1, rng)[0] / 7.0});
  const fs::path p = fs::temp_directory_path() / "coldbound_tests" / "round.csv";
  write_csv(p, s, {"f1", "f2", "f3"}, "t");
  const LoadedData back = load_csv(p, "t", {}, Task::regression);
  ASSERT_EQ(back.samples.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(back.samples[i].x, s[i].x);
    EXPECT_EQ(back.samples[i].y, s[i].y);
  }
}

TEST(Split, PaperCountsAndDisjointness) {
  const SampleList data = numbered(4100);
  const SplitCounts c{751, 835, 418, 84, 2000};
  const DatasetSplits s = split(data, c, 3);
  EXPECT_EQ(s.train.size(), 751u);
  EXPECT_EQ(s.test.size(), 835u);
  EXPECT_EQ(s.validation.size(), 418u);
  EXPECT_EQ(s.trainsuffix.size(), 84u);
  EXPECT_EQ(s.z_true.size(), 2000u);
  std::set<double> all;
  for (const SampleList* set : {&s.train, &s.test, &s.validation, &s.trainsuffix, &s.z_true}) {
    const auto i = ids(*set);
    all.insert(i.begin(), i.end());
  }
  EXPECT_EQ(all.size(), c.total());
}

TEST(Split, DeterministicAndSeedDependent) {
  const SampleList data = numbered(100);
  const SplitCounts c{20, 20, 20, 20, 20};
  EXPECT_EQ(split(data, c, 5).permutation, split(data, c, 5).permutation);
  EXPECT_NE(split(data, c, 5).permutation, split(data, c, 6).permutation);
  const DatasetSplits s = split(data, c, 5);
  std::set<double> all;
  for (const SampleList* set : {&s.train, &s.test, &s.validation, &s.trainsuffix, &s.z_true}) {
    const auto i = ids(*set);
    all.insert(i.begin(), i.end());
  }
  EXPECT_EQ(all.size(), 100u);  // nothing unassigned
}

TEST(Split, InsufficientDataMessage) {
  try {
    split(numbered(10), SplitCounts{5, 5, 1, 1, 1}, 1);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("13"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("10"), std::string::npos);
  }
}

TEST(Split, ManifestReproducesSplit) {
  const SampleList data = numbered(60);
  const DatasetSplits s = split(data, SplitCounts{10, 10, 10, 10, 10}, 9, "numbers");
  const nlohmann::json m = nlohmann::json::parse(split_manifest(s).dump());
  const DatasetSplits r = split_from_manifest(data, m);
  EXPECT_EQ(ids(r.train), ids(s.train));
  EXPECT_EQ(ids(r.z_true), ids(s.z_true));
  EXPECT_EQ(r.seed, 9u);
  EXPECT_EQ(r.source, "numbers");
}

TEST(Standardizer, FittingSetBecomesStandard) {
  Rng rng(2);
  SampleList s;
  for (int i = 0; i < 200; ++i) {
    Eigen::Vector3d x = standard_normal_vector(3, rng);
    x[0] = 5.0 + 3.0 * x[0];
    x[2] = 4.0;  // constant feature
    s.push_back(Sample{x, 10.0 + 2.0 * x[1]});
  }
  const Standardizer t = Standardizer::fit(s, Task::regression);
  const Batch b = pack(t.apply(s));
  const Eigen::VectorXd mean = b.x.rowwise().mean();
  EXPECT_NEAR(mean[0], 0.0, 1e-10);
  EXPECT_NEAR(mean[1], 0.0, 1e-10);
  EXPECT_NEAR(std::sqrt((b.x.row(0).array() - mean[0]).square().mean()), 1.0, 1e-10);
  EXPECT_TRUE((b.x.row(2).array() == 4.0).all());
  EXPECT_NEAR(b.y.mean(), 0.0, 1e-10);
  EXPECT_NEAR(std::sqrt(b.y.array().square().mean()), 1.0, 1e-10);
  EXPECT_NEAR(t.nll_offset(), std::log(t.target_std()), 0.0);
}

TEST(Standardizer, AffineInInput) {
  Rng rng(3);
  SampleList s;
  for (int i = 0; i < 50; ++i) s.push_back(Sample{standard_normal_vector(2, rng), 0.0});
  SampleList scaled = s;
  for (Sample& x : scaled) x.x = 3.0 * x.x + Eigen::Vector2d(1, -2);
  const Standardizer a = Standardizer::fit(s, Task::regression);
  const Standardizer b = Standardizer::fit(scaled, Task::regression);
  EXPECT_LT((b.feature_mean() - (3.0 * a.feature_mean() + Eigen::Vector2d(1, -2))).norm(), 1e-12);
  EXPECT_LT((b.feature_std() - 3.0 * a.feature_std()).norm(), 1e-12);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_LT((a.apply(s[i]).x - b.apply(scaled[i]).x).norm(), 1e-12);
  }
}

TEST(Standardizer, NoLeakageFromHeldOutSets) {
  Rng rng(4);
  SampleList data;
  for (int i = 0; i < 300; ++i) data.push_back(Sample{standard_normal_vector(2, rng), standard_normal_vector(1, rng)[0]});
  DatasetSplits s = split(data, SplitCounts{100, 50, 50, 50, 50}, 1);
  const Standardizer full = Standardizer::fit(s.train, Task::regression);
  s.test.clear();
  s.trainsuffix.clear();
  const Standardizer again = Standardizer::fit(s.train, Task::regression);
  EXPECT_EQ(full.feature_mean(), again.feature_mean());
  EXPECT_EQ(full.feature_std(), again.feature_std());
  EXPECT_EQ(full.target_mean(), again.target_mean());
}

namespace {

SyntheticOracleSpec spec(double eps2 = 0.25) {
  SyntheticOracleSpec s;
  s.d = 3;
  s.sigma_x2 = 2.0;
  s.sigma_eps2 = eps2;
  s.w_star = Eigen::Vector3d(0.5, -1.0, 2.0);
  s.n_per_draw = 20;
  s.seed = 8;
  return s;
}

}  // namespace

TEST(Synthetic, ZeroWeightsNoNoiseGivesZeroTargets) {
  SyntheticOracleSpec s = spec(0.0);
  s.w_star.setZero();
  for (const Sample& x : synthetic_draw(s, 0)) EXPECT_EQ(x.y, 0.0);
}

TEST(Synthetic, DrawsReproducibleAndIndependent) {
  const SyntheticOracleSpec s = spec();
  const SampleList a = synthetic_draw(s, 4), b = synthetic_draw(s, 4), c = synthetic_draw(s, 5);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].x, b[i].x);
    EXPECT_EQ(a[i].y, b[i].y);
  }
  EXPECT_NE(a[0].x, c[0].x);
}

TEST(Synthetic, FeatureSecondMoment) {
  SyntheticOracleSpec s = spec();
  const SampleList big = synthetic_sample(s, 100000, 3);
  Eigen::ArrayXd sq(big.size() * 3);
  for (std::size_t i = 0; i < big.size(); ++i) sq.segment(Eigen::Index(i) * 3, 3) = big[i].x.array().square();
  const double m = sq.mean();
  const double se = std::sqrt((sq - m).square().sum() / double(sq.size() - 1) / double(sq.size()));
  EXPECT_LT(std::abs(m - s.sigma_x2), 3.0 * se);
}

TEST(Synthetic, TrueRiskExamples) {
  SyntheticOracleSpec s;
  s.d = 1;
  s.sigma_x2 = 1.0;
  s.sigma_eps2 = 0.0;
  s.w_star = Eigen::VectorXd::Constant(1, 2.0);
  s.n_per_draw = 1;
  const IsotropicGaussian perfect(s.w_star_params(), 1e-300);
  EXPECT_NEAR(synthetic_true_risk(s, perfect), kHalfLog2Pi, 1e-15);
  const IsotropicGaussian off(FlatParams(s.arch(), Eigen::VectorXd::Constant(1, 1.0)), 1.0);
  EXPECT_NEAR(synthetic_true_risk(s, off), kHalfLog2Pi + 1.0, 1e-15);
}

TEST(Synthetic, TrueRiskMatchesMonteCarlo) {
  const SyntheticOracleSpec s = spec();
  const IsotropicGaussian post(FlatParams(s.arch(), Eigen::Vector3d(0.3, -0.8, 1.5)), 0.05);
  const SampleList fresh = synthetic_sample(s, 100000, 21);
  Rng rng(22);
  Eigen::ArrayXd losses(fresh.size());
  for (std::size_t i = 0; i < fresh.size(); ++i) losses[Eigen::Index(i)] = nll_loss(post.sample(rng), fresh[i]);
  const double m = losses.mean();
  const double se = std::sqrt((losses - m).square().sum() / double(losses.size() - 1) / double(losses.size()));
  EXPECT_LT(std::abs(m - synthetic_true_risk(s, post)), 3.0 * se);
}

TEST(Fixtures, FriedmanAndBlobs) {
  const SampleList f = friedman_regression(100, 6, 0.0, 1);
  ASSERT_EQ(f.size(), 100u);
  const Eigen::VectorXd& x = f[0].x;
  const double y = 10 * std::sin(M_PI * x[0] * x[1]) + 20 * (x[2] - 0.5) * (x[2] - 0.5) + 10 * x[3] + 5 * x[4];
  EXPECT_NEAR(f[0].y, y, 1e-12);
  EXPECT_THROW(friedman_regression(10, 4, 0.0, 1), std::invalid_argument);
  const SampleList b = gaussian_blobs(90, 2, 3, 3.0, 2);
  std::set<int> labels;
  for (const Sample& s : b) labels.insert(s.label());
  EXPECT_EQ(labels, (std::set<int>{0, 1, 2}));
}
