#pragma once

// Error statistics for emulated 3D effects and the normalized runtime
// benchmark (total runtime divided by number of profiles).

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cloud3d/matrix.hpp"

namespace cloud3d {

struct BulkStats {
  double mean_signal = 0.0;
  double mean_error = 0.0;
  std::optional<double> pct_error;  // nullopt when mean_signal == 0
  double mabs_signal = 0.0;
  double mabs_error = 0.0;
  std::optional<double> mabs_pct_error;  // nullopt when mabs_signal == 0
  std::size_t count = 0;
};

/// Pools every element of the two matrices; error = prediction - signal.
BulkStats bulk_stats(const Matrix& signal, const Matrix& prediction);

/// 100 * error_stat / signal_stat, or nullopt for a zero denominator.
std::optional<double> percentage(double error_stat, double signal_stat);

struct QuantileBand {
  double lo = 0.0;
  double hi = 0.0;
};

struct LevelStats {
  std::vector<double> mean_signal;
  std::vector<double> mean_error;
  std::vector<double> mabs_error;
  std::vector<QuantileBand> band50;  // of the error
  std::vector<QuantileBand> band90;
};

/// Empirical quantile with linear interpolation between order statistics
/// (position (n - 1) q). `sorted` must be ascending and non-empty.
double quantile_sorted(const std::vector<double>& sorted, double q);

/// Per-column statistics of prediction - signal. Columns are levels.
LevelStats per_level_stats(const Matrix& signal, const Matrix& prediction);

struct BenchStage {
  std::string name;
  std::function<void()> run;
};

struct StageTiming {
  std::string name;
  double mean_ms_per_profile = 0.0;
  double std_ms_per_profile = 0.0;
};

struct BenchReport {
  std::size_t profiles = 0;      // profiles processed per repeat
  std::size_t replication = 1;
  int repeats = 0;
  int warmup = 0;
  double mean_ms_per_profile = 0.0;
  double std_ms_per_profile = 0.0;  // population std over repeats
  std::vector<double> repeat_ms_per_profile;
  std::vector<StageTiming> stages;

  /// "<mean> ± <std> ms per profile"
  std::string summary() const;
};

/// Runs the stages in order `repeats` times. `profiles` is the number of
/// profiles one pass over the stages processes (already including any
/// replication). `warmup` untimed passes run first so one-off costs (page
/// faults, allocator growth) stay out of the statistics. Exceptions are
/// rethrown as Error prefixed with the stage name.
BenchReport bench(const std::vector<BenchStage>& stages, std::size_t profiles, int repeats,
                  std::size_t replication = 1, int warmup = 1);

}  // namespace cloud3d
