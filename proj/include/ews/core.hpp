#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ews {

/// Raised when a CSV row cannot be parsed; carries the 1-based row number.
struct ParseError : std::runtime_error {
  ParseError(std::string msg, std::size_t row_)
      : std::runtime_error(std::move(msg)), row(row_) {}
  std::size_t row;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Timestamped target series plus covariate columns. Timestamps are carried
/// for reporting only; all computation is positional.
struct SeriesFrame {
  std::vector<std::string> timestamps;
  std::vector<double> target;
  std::vector<std::vector<double>> covariates;  // column-major: covariates[j][t]
  std::vector<std::string> covariate_names;

  std::size_t length() const { return target.size(); }
  std::size_t n_covariates() const { return covariates.size(); }
  void validate() const;
};

struct WindowPlan {
  int delta = 50;        // window length in periods
  int step = 1;          // gap between consecutive window starts
  int max_ar_order = 10; // upper bound for AR order search
  int max_cov_lag = 10;  // upper bound for covariate lag search

  void validate() const;
};

struct DetectorConfig {
  int m = 6;              // number of candidate mean shifts
  double alpha = 0.5;     // smoothing weight for the mean update
  double beta = 0.9;      // smoothing weight for the variance update
  double threshold = 0;   // alarm level A; ignored when calibrate is set
  bool calibrate = false; // pick A by Monte Carlo instead of a fixed value
  bool restart_after_alarm = true;

  void validate() const;
};

struct RngSeed {
  std::uint64_t value = 0;
};

/// All intervals [t0, t0+delta] with t0 = 0, step, 2*step, ... and
/// t0+delta <= T-1, ordered by t0. Bounds are inclusive indices.
std::vector<std::pair<int, int>> make_windows(const WindowPlan& plan, int T);

/// Element i = ln(p[i+1]/p[i]). Requires strictly positive prices.
std::vector<double> log_returns(std::span<const double> prices);

/// CSV: first column timestamp, second target, rest covariates; header
/// required. Rows with any missing value are dropped.
SeriesFrame read_series_csv(const std::string& path);
void write_series_csv(const SeriesFrame& frame, const std::string& path);

}  // namespace ews
