#include "ews/detector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "ews/parallel.hpp"
#include "ews/rng.hpp"

namespace ews::detector {

namespace {
constexpr double kVarianceFloor = 1e-12;
constexpr double kZeroRangeShift = 0.1;
}  // namespace

std::vector<double> build_shifts(std::span<const double> history, int m) {
  if (history.size() < 2) throw ConfigError("shift history too short");
  if (m < 1) throw ConfigError("number of shifts m must be >= 1");
  auto [mn, mx] = std::minmax_element(history.begin(), history.end());
  const double range = *mx - *mn;
  std::vector<double> shifts(m);
  if (range <= 0.0) {
    std::fill(shifts.begin(), shifts.end(), kZeroRangeShift);
    return shifts;
  }
  for (int i = 1; i <= m; ++i) shifts[i - 1] = i * range / m;
  return shifts;
}

SRDetector::SRDetector(std::vector<double> shifts, double alpha, double beta,
                       double threshold, bool restart_after_alarm)
    : shifts_(std::move(shifts)),
      sr_(shifts_.size(), 0.0),
      alpha_(alpha),
      beta_(beta),
      threshold_(threshold),
      restart_(restart_after_alarm) {
  if (shifts_.empty()) throw ConfigError("shift set is empty");
}

void SRDetector::set_shifts(std::vector<double> shifts) {
  if (shifts.empty()) throw ConfigError("shift set is empty");
  shifts_ = std::move(shifts);
  sr_.assign(shifts_.size(), 0.0);
}

std::optional<int> SRDetector::step(double value) {
  if (!std::isfinite(value)) throw ConfigError("entropy stream corrupted");
  const int index = t_++;
  if (index == 0) {
    mu_ = value;  // mu_1 = H_1, sigma_1^2 = 1
    return std::nullopt;
  }
  if (halted_) return std::nullopt;

  const double sigma = std::sqrt(std::max(sigma2_, kVarianceFloor));
  const double xi = (value - mu_) / sigma;
  standardized_.push_back(xi);

  double sum = 0;
  for (std::size_t i = 0; i < shifts_.size(); ++i) {
    const double dmu = shifts_[i];
    sr_[i] = (1.0 + sr_[i]) * std::exp(dmu * (xi - dmu / 2.0));
    sum += sr_[i];
  }
  const double srw = sum / static_cast<double>(shifts_.size());
  trajectory_.push_back(srw);

  const bool armed = burn_in_ <= 0;
  if (burn_in_ > 0) --burn_in_;

  if (armed && srw > threshold_) {
    // break-before-update: no smoothing update on an alarm step
    alarms_.push_back(index);
    if (restart_)
      std::fill(sr_.begin(), sr_.end(), 0.0);
    else
      halted_ = true;
    return index;
  }

  mu_ = alpha_ * mu_ + (1.0 - alpha_) * value;
  const double dev = value - mu_;
  sigma2_ = beta_ * sigma2_ + (1.0 - beta_) * dev * dev;
  return std::nullopt;
}

DetectionReport run_detector(const entropy::EntropySeries& series,
                             const DetectorConfig& config, int burn_in) {
  config.validate();
  const auto& h = series.values;
  if (h.size() < 2) throw ConfigError("entropy stream too short for detection");

  // Pass 1 over the burn-in: collect standardized values to form M_Delta.
  burn_in = std::min<int>(burn_in, static_cast<int>(h.size()) - 1);
  SRDetector probe({1.0}, config.alpha, config.beta,
                   std::numeric_limits<double>::infinity(), true);
  for (int t = 0; t <= burn_in; ++t) probe.step(h[t]);
  std::vector<double> hist = probe.standardized();
  if (hist.size() < 2) hist = {0.0, 1.0};
  auto shifts = build_shifts(hist, config.m);

  SRDetector det(shifts, config.alpha, config.beta, config.threshold,
                 config.restart_after_alarm);
  det.set_burn_in(burn_in);
  for (double v : h) det.step(v);

  DetectionReport report;
  report.sr_trajectory = det.trajectory();
  report.shifts = std::move(shifts);
  report.threshold = config.threshold;
  report.entropy = series;
  report.config = config;
  for (int idx : det.alarms()) {
    report.alarm_indices.push_back(idx);
    report.alarm_times.push_back(series.window_end_time(idx));
  }
  return report;
}

bool sr_recursion_equivalence_check(
    std::span<const double> likelihood_ratios) {
  double recursive = 0;
  for (std::size_t t = 0; t < likelihood_ratios.size(); ++t) {
    if (!(likelihood_ratios[t] > 0)) throw ConfigError("ratios must be positive");
    recursive = (1.0 + recursive) * likelihood_ratios[t];

    // direct form: sum over k of the product of ratios from k to t
    double direct = 0;
    for (std::size_t k = 0; k <= t; ++k) {
      double prod = 1;
      for (std::size_t i = k; i <= t; ++i) prod *= likelihood_ratios[i];
      direct += prod;
    }
    const double scale = std::max({std::abs(direct), std::abs(recursive), 1.0});
    if (std::abs(direct - recursive) > 1e-10 * scale) return false;
  }
  return true;
}

CalibrationResult calibrate_threshold(
    const std::function<std::vector<double>(std::uint64_t)>& null_stream,
    const DetectorConfig& config, int burn_in, double target_pfa, int horizon,
    int n_mc, std::uint64_t seed) {
  if (!(target_pfa > 0 && target_pfa <= 1))
    throw ConfigError("target PFA must be in (0, 1]");
  if (n_mc < 1) throw ConfigError("n_mc must be >= 1");

  // One thresholdless pass per null run; the alarm-free maximum of SR^w
  // before the horizon determines which grid thresholds that run would trip.
  std::vector<double> max_stat(n_mc, 0.0);
  parallel_for(n_mc, [&](int r) {
    auto h = null_stream(derive_seed(seed, 0xca11b000ULL + r));
    DetectorConfig probe = config;
    probe.calibrate = false;
    probe.threshold = std::numeric_limits<double>::max();
    auto report = run_detector(
        entropy::EntropySeries{h, std::vector<std::pair<int, int>>(
                                      h.size(), {0, 0}),
                               entropy::Variant::baseline, 0},
        probe, burn_in);
    double mx = 0;
    const int limit =
        std::min<int>(horizon, static_cast<int>(report.sr_trajectory.size()));
    for (int t = 0; t < limit; ++t) mx = std::max(mx, report.sr_trajectory[t]);
    max_stat[r] = mx;
  });

  CalibrationResult result;
  result.target_pfa = target_pfa;
  result.horizon = horizon;
  result.n_mc = n_mc;

  constexpr double kGridLo = 1e-2, kGridHi = 1e40;
  constexpr int kGridSteps = 841;  // 20 per decade
  for (int g = 0; g < kGridSteps; ++g) {
    const double a =
        kGridLo * std::pow(kGridHi / kGridLo, double(g) / (kGridSteps - 1));
    int false_alarms = 0;
    for (double mx : max_stat)
      if (mx > a) ++false_alarms;
    if (static_cast<double>(false_alarms) / n_mc <= target_pfa) {
      result.threshold = a;
      result.attained = true;
      return result;
    }
  }
  result.threshold = kGridHi;
  result.attained = false;
  return result;
}

Score score_detection(std::span<const int> alarm_times, int theta) {
  Score score;
  score.nd = true;
  for (int tau : alarm_times) {
    if (tau < theta && !score.pfa) score.pfa = true;
    if (tau >= theta) {
      score.delay = tau - theta;
      score.nd = false;
      break;
    }
  }
  return score;
}

void write_sr_csv(const DetectionReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file: " + path);
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "window_start,window_end,sr\n";
  // trajectory entry t corresponds to entropy observation t+1
  for (std::size_t t = 0; t < report.sr_trajectory.size(); ++t) {
    const auto& win = report.entropy.windows[t + 1];
    out << win.first + report.entropy.stream_offset << ','
        << win.second + report.entropy.stream_offset << ','
        << report.sr_trajectory[t] << '\n';
  }
}

}  // namespace ews::detector
