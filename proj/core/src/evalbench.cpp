#include "cloud3d/evalbench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "cloud3d/error.hpp"

namespace cloud3d {
namespace {

void require_same_shape(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidInput("stats: shape " + std::to_string(a.rows()) + "x" +
                       std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                       std::to_string(b.cols()));
  }
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

std::optional<double> percentage(double error_stat, double signal_stat) {
  if (signal_stat == 0.0) return std::nullopt;
  return 100.0 * error_stat / signal_stat;
}

BulkStats bulk_stats(const Matrix& signal, const Matrix& prediction) {
  require_same_shape(signal, prediction);
  if (signal.size() == 0) throw InvalidInput("stats: empty input");
  const double n = static_cast<double>(signal.size());
  const auto error = (prediction - signal).array();
  BulkStats s;
  s.count = static_cast<std::size_t>(signal.size());
  s.mean_signal = signal.sum() / n;
  s.mean_error = error.sum() / n;
  s.mabs_signal = signal.cwiseAbs().sum() / n;
  s.mabs_error = error.abs().sum() / n;
  s.pct_error = percentage(s.mean_error, s.mean_signal);
  s.mabs_pct_error = percentage(s.mabs_error, s.mabs_signal);
  return s;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw InvalidInput("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidInput("quantile: q outside [0,1]");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

LevelStats per_level_stats(const Matrix& signal, const Matrix& prediction) {
  require_same_shape(signal, prediction);
  if (signal.rows() == 0) throw InvalidInput("stats: no profiles");
  const Matrix error = prediction - signal;
  LevelStats s;
  const auto levels = static_cast<std::size_t>(signal.cols());
  s.mean_signal.resize(levels);
  s.mean_error.resize(levels);
  s.mabs_error.resize(levels);
  s.band50.resize(levels);
  s.band90.resize(levels);
  std::vector<double> column(static_cast<std::size_t>(signal.rows()));
  for (std::size_t l = 0; l < levels; ++l) {
    const auto c = static_cast<Eigen::Index>(l);
    s.mean_signal[l] = signal.col(c).mean();
    s.mean_error[l] = error.col(c).mean();
    s.mabs_error[l] = error.col(c).cwiseAbs().mean();
    for (Eigen::Index r = 0; r < error.rows(); ++r) column[static_cast<std::size_t>(r)] = error(r, c);
    std::sort(column.begin(), column.end());
    s.band50[l] = {quantile_sorted(column, 0.25), quantile_sorted(column, 0.75)};
    s.band90[l] = {quantile_sorted(column, 0.05), quantile_sorted(column, 0.95)};
  }
  return s;
}

std::string BenchReport::summary() const {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.3g \xC2\xB1 %.3g ms per profile", mean_ms_per_profile,
                std_ms_per_profile);
  return buf;
}

BenchReport bench(const std::vector<BenchStage>& stages, std::size_t profiles, int repeats,
                  std::size_t replication, int warmup) {
  if (profiles == 0) throw InvalidInput("bench: need at least one profile");
  if (repeats < 1) throw InvalidInput("bench: repeats must be >= 1");
  if (warmup < 0) throw InvalidInput("bench: warmup must be >= 0");
  using clock = std::chrono::steady_clock;

  BenchReport report;
  report.profiles = profiles;
  report.replication = replication;
  report.repeats = repeats;
  report.warmup = warmup;
  std::vector<std::vector<double>> stage_ms(stages.size());
  const double per = 1.0 / static_cast<double>(profiles);

  const auto run_stage = [&](std::size_t s) {
    try {
      stages[s].run();
    } catch (const std::exception& e) {
      throw Error("bench stage '" + stages[s].name + "': " + e.what());
    }
  };
  for (int w = 0; w < warmup; ++w) {
    for (std::size_t s = 0; s < stages.size(); ++s) run_stage(s);
  }

  for (int r = 0; r < repeats; ++r) {
    double total = 0.0;
    for (std::size_t s = 0; s < stages.size(); ++s) {
      const auto t0 = clock::now();
      run_stage(s);
      const auto t1 = clock::now();
      const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count() * per;
      stage_ms[s].push_back(ms);
      total += ms;
    }
    if (stages.empty()) {
      // Timer overhead only.
      const auto t0 = clock::now();
      const auto t1 = clock::now();
      total = std::chrono::duration<double, std::milli>(t1 - t0).count() * per;
    }
    report.repeat_ms_per_profile.push_back(total);
  }

  report.mean_ms_per_profile = mean_of(report.repeat_ms_per_profile);
  report.std_ms_per_profile = std_of(report.repeat_ms_per_profile, report.mean_ms_per_profile);
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const double m = mean_of(stage_ms[s]);
    report.stages.push_back({stages[s].name, m, std_of(stage_ms[s], m)});
  }
  return report;
}

}  // namespace cloud3d
