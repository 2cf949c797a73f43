#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ews/core.hpp"
#include "ews/entropy.hpp"

namespace ews::detector {

/// Shift set M_Delta: i*(max-min)/m for i = 1..m over the supplied
/// standardized burn-in history. Zero range floors every shift at 0.1.
std::vector<double> build_shifts(std::span<const double> history, int m);

/// Weighted Shiryaev-Roberts recursion over a scalar stream, with
/// exponential-smoothing standardization. Strictly sequential per stream.
class SRDetector {
 public:
  SRDetector(std::vector<double> shifts, double alpha, double beta,
             double threshold, bool restart_after_alarm);

  /// Feeds one observation. The first observation initializes the smoothed
  /// mean (variance starts at 1) and produces no statistic. Returns the
  /// 0-based stream index when the weighted statistic crosses the threshold.
  std::optional<int> step(double value);

  /// Disables alarming for the next `count` observations (smoothing still
  /// runs); used while the shift set is being formed.
  void set_burn_in(int count) { burn_in_ = count; }
  void set_shifts(std::vector<double> shifts);

  const std::vector<double>& trajectory() const { return trajectory_; }
  const std::vector<double>& standardized() const { return standardized_; }
  const std::vector<int>& alarms() const { return alarms_; }
  double mu() const { return mu_; }
  double sigma2() const { return sigma2_; }
  bool halted() const { return halted_; }

 private:
  std::vector<double> shifts_;
  std::vector<double> sr_;
  double alpha_, beta_, threshold_;
  bool restart_;
  int t_ = 0;
  int burn_in_ = 0;
  double mu_ = 0, sigma2_ = 1;
  bool halted_ = false;
  std::vector<double> trajectory_;
  std::vector<double> standardized_;
  std::vector<int> alarms_;
};

struct DetectionReport {
  std::vector<int> alarm_indices;           // entropy stream indices
  std::vector<int> alarm_times;             // mapped source time indices
  std::vector<std::string> alarm_timestamps;
  std::vector<double> sr_trajectory;        // length = entropy length - 1
  std::vector<double> shifts;
  double threshold = 0;
  entropy::EntropySeries entropy;
  DetectorConfig config;
};

/// Algorithm front end: builds the shift set from the first `burn_in`
/// standardized entropy values (alarms disabled there), then runs the
/// weighted SR recursion to the end of the stream.
DetectionReport run_detector(const entropy::EntropySeries& series,
                             const DetectorConfig& config, int burn_in);

/// True iff the direct double-sum/product SR form and the recursive form
/// agree within relative 1e-10 at every step.
bool sr_recursion_equivalence_check(std::span<const double> likelihood_ratios);

struct CalibrationResult {
  double threshold = 0;
  bool attained = true;
  double target_pfa = 0;
  int horizon = 0;
  int n_mc = 0;
};

/// Smallest A on a logarithmic grid whose Monte Carlo null false-alarm
/// fraction before `horizon` is <= target_pfa. The generator returns a null
/// (no change injected) stream for a derived seed.
CalibrationResult calibrate_threshold(
    const std::function<std::vector<double>(std::uint64_t)>& null_stream,
    const DetectorConfig& config, int burn_in, double target_pfa, int horizon,
    int n_mc, std::uint64_t seed);

struct Score {
  bool pfa = false;                 // first alarm precedes theta
  std::optional<int> delay;         // tau - theta for first alarm >= theta
  bool nd = false;                  // no alarm at or after theta
};

Score score_detection(std::span<const int> alarm_times, int theta);

void write_sr_csv(const DetectionReport& report, const std::string& path);

}  // namespace ews::detector
