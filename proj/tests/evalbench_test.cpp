#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <thread>

#include "cloud3d/error.hpp"
#include "cloud3d/evalbench.hpp"
#include "test_support.hpp"

using namespace cloud3d;

namespace {

// Naive quantile: sort a copy, interpolate at (n - 1) q.
double naive_quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = (static_cast<double>(v.size()) - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

TEST(Percentage, HandValuesAndZeroDenominator) {
  EXPECT_NEAR(*percentage(0.00048, 0.55), 0.08727272727272727, 1e-15);
  EXPECT_FALSE(percentage(1.0, 0.0).has_value());
  EXPECT_DOUBLE_EQ(*percentage(-0.5, 2.0), -25.0);
}

TEST(BulkStats, TwoElementExample) {
  Matrix s(1, 2), p(1, 2);
  s << 1, -1;
  p << 2, 0;
  const BulkStats b = bulk_stats(s, p);
  EXPECT_EQ(b.mean_signal, 0.0);
  EXPECT_EQ(b.mean_error, 1.0);
  EXPECT_FALSE(b.pct_error.has_value());
  EXPECT_EQ(b.mabs_signal, 1.0);
  EXPECT_EQ(b.mabs_error, 1.0);
  EXPECT_DOUBLE_EQ(*b.mabs_pct_error, 100.0);
  EXPECT_EQ(b.count, 2u);
}

TEST(BulkStats, PerfectPredictionAndScaleInvariance) {
  std::mt19937_64 rng(1);
  Matrix s(20, 7), p(20, 7);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    s.data()[i] = cloud3d::testing::uniform(rng, -3, 5);
    p.data()[i] = s.data()[i] + cloud3d::testing::uniform(rng, -1, 1);
  }
  const BulkStats zero = bulk_stats(s, s);
  EXPECT_EQ(zero.mean_error, 0.0);
  EXPECT_EQ(zero.mabs_error, 0.0);

  const BulkStats a = bulk_stats(s, p);
  const BulkStats b = bulk_stats(s * 7.5, p * 7.5);
  EXPECT_NEAR(*a.pct_error, *b.pct_error, 1e-10);
  EXPECT_NEAR(*a.mabs_pct_error, *b.mabs_pct_error, 1e-10);
  EXPECT_THROW(bulk_stats(s, Matrix(20, 6)), InvalidInput);
}

TEST(Quantile, OneToHundredBands) {
  std::vector<double> v(100);
  for (int i = 0; i < 100; ++i) v[static_cast<std::size_t>(i)] = i + 1;
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.25), 25.75);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.75), 75.25);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.05), 5.95);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.95), 95.05);
  EXPECT_EQ(quantile_sorted(v, 0.0), 1.0);
  EXPECT_EQ(quantile_sorted(v, 1.0), 100.0);
  EXPECT_EQ(quantile_sorted({3.0}, 0.3), 3.0);
  EXPECT_THROW(quantile_sorted({}, 0.5), InvalidInput);
}

TEST(PerLevelStats, BandsOfOneToHundredErrors) {
  Matrix s = Matrix::Zero(100, 1), p(100, 1);
  for (int i = 0; i < 100; ++i) p(i, 0) = 100 - i;  // unsorted on purpose
  const LevelStats l = per_level_stats(s, p);
  EXPECT_DOUBLE_EQ(l.band50[0].lo, 25.75);
  EXPECT_DOUBLE_EQ(l.band50[0].hi, 75.25);
  EXPECT_DOUBLE_EQ(l.band90[0].lo, 5.95);
  EXPECT_DOUBLE_EQ(l.band90[0].hi, 95.05);
  EXPECT_DOUBLE_EQ(l.mean_error[0], 50.5);
}

TEST(PerLevelStats, MatchesNaiveReference) {
  std::mt19937_64 rng(2);
  Matrix s(37, 5), p(37, 5);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    s.data()[i] = cloud3d::testing::uniform(rng, -10, 10);
    p.data()[i] = cloud3d::testing::uniform(rng, -10, 10);
  }
  const LevelStats l = per_level_stats(s, p);
  ASSERT_EQ(l.mean_error.size(), 5u);
  for (Eigen::Index c = 0; c < 5; ++c) {
    std::vector<double> err;
    double ms = 0, me = 0, ma = 0;
    for (Eigen::Index r = 0; r < 37; ++r) {
      const double e = p(r, c) - s(r, c);
      err.push_back(e);
      ms += s(r, c);
      me += e;
      ma += std::abs(e);
    }
    const auto k = static_cast<std::size_t>(c);
    EXPECT_NEAR(l.mean_signal[k], ms / 37, 1e-12);
    EXPECT_NEAR(l.mean_error[k], me / 37, 1e-12);
    EXPECT_NEAR(l.mabs_error[k], ma / 37, 1e-12);
    EXPECT_NEAR(l.band50[k].lo, naive_quantile(err, 0.25), 1e-12);
    EXPECT_NEAR(l.band90[k].hi, naive_quantile(err, 0.95), 1e-12);
    // Nested bands.
    EXPECT_LE(l.band90[k].lo, l.band50[k].lo);
    EXPECT_GE(l.band90[k].hi, l.band50[k].hi);
  }
}

TEST(Bench, TimesStagesAndNormalizes) {
  int calls = 0;
  const BenchReport r = bench({{"a", [&] { ++calls; }},
                               {"sleep", [] { std::this_thread::sleep_for(std::chrono::milliseconds(2)); }}},
                              4, 3);
  EXPECT_EQ(calls, 4);  // one warm-up pass
  EXPECT_EQ(r.repeats, 3);
  EXPECT_EQ(r.warmup, 1);
  EXPECT_EQ(r.profiles, 4u);
  ASSERT_EQ(r.repeat_ms_per_profile.size(), 3u);
  ASSERT_EQ(r.stages.size(), 2u);
  EXPECT_EQ(r.stages[1].name, "sleep");
  EXPECT_GT(r.mean_ms_per_profile, 0.0);
  EXPECT_GE(r.stages[1].mean_ms_per_profile, 0.5);  // >= 2 ms / 4 profiles
  EXPECT_GE(r.std_ms_per_profile, 0.0);
  EXPECT_NE(r.summary().find("ms per profile"), std::string::npos);
}

TEST(Bench, RejectsBadArgumentsAndLabelsFailures) {
  EXPECT_THROW(bench({{"a", [] {}}}, 0, 3), InvalidInput);
  EXPECT_THROW(bench({{"a", [] {}}}, 1, 0), InvalidInput);
  try {
    bench({{"postprocess", [] { throw std::runtime_error("boom"); }}}, 1, 1);
    FAIL() << "expected throw";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("postprocess"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("boom"), std::string::npos);
  }
}
