#include "ews/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "ews/parallel.hpp"
#include "ews/rng.hpp"

namespace ews::simlab {

namespace {

// per-variable rng streams so draws stay aligned across regimes
enum Stream : std::uint64_t { kX = 1, kZ = 2, kNoise = 3, kPost = 4 };

std::vector<std::string> integer_timestamps(int T) {
  std::vector<std::string> out(T);
  for (int t = 0; t < T; ++t) out[t] = std::to_string(t);
  return out;
}

double weibull_min_draw(std::mt19937_64& rng, double shape) {
  std::uniform_real_distribution<double> unif(
      std::numeric_limits<double>::min(), 1.0);
  return std::pow(-std::log(unif(rng)), 1.0 / shape);
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> ordinal_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * (i + j) + 1.0;  // average rank for ties
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0 || sbb <= 0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

std::string dgp_name(DgpKind kind) {
  switch (kind) {
    case DgpKind::termination: return "termination";
    case DgpKind::inversion: return "inversion";
    case DgpKind::tail_dependent: return "tail";
  }
  return "termination";
}

DgpKind parse_dgp(const std::string& name) {
  if (name == "termination") return DgpKind::termination;
  if (name == "inversion") return DgpKind::inversion;
  if (name == "tail" || name == "tail_dependent") return DgpKind::tail_dependent;
  throw ConfigError("unknown DGP: " + name);
}

void DGPSpec::validate() const {
  if (T < 2) throw ConfigError("DGP length too short");
  if (theta <= 0) throw ConfigError("change index theta must be positive");
}

SeriesFrame generate(const DGPSpec& spec) {
  switch (spec.kind) {
    case DgpKind::termination: return gen_termination(spec);
    case DgpKind::inversion: return gen_inversion(spec);
    case DgpKind::tail_dependent: return gen_tail_dependent(spec);
  }
  throw ConfigError("unknown DGP kind");
}

SeriesFrame gen_termination(const DGPSpec& spec) {
  spec.validate();
  auto rng_x = make_rng(derive_seed(spec.seed, kX));
  auto rng_z = make_rng(derive_seed(spec.seed, kZ));
  auto rng_n = make_rng(derive_seed(spec.seed, kNoise));
  auto rng_p = make_rng(derive_seed(spec.seed, kPost));
  std::exponential_distribution<double> exp3(1.0 / 3.0);  // mean 3
  std::gamma_distribution<double> gamma31(3.0, 1.0);
  std::normal_distribution<double> nu(0.0, 1.0);
  std::normal_distribution<double> xi(5.0, 6.0);  // N(5, 36), std 6

  const int T = spec.T;
  std::vector<double> x(T + 1), z(T + 1);  // x[0], z[0] are presample draws
  for (int t = 0; t <= T; ++t) {
    x[t] = exp3(rng_x);
    z[t] = gamma31(rng_z);
  }

  SeriesFrame frame;
  frame.timestamps = integer_timestamps(T);
  frame.covariate_names = {"X", "Z"};
  frame.covariates.resize(2);
  frame.target.resize(T);
  for (int t = 0; t < T; ++t) {
    frame.covariates[0].push_back(x[t + 1]);
    frame.covariates[1].push_back(z[t + 1]);
    if (t < spec.theta) {
      const double noise = spec.noise_off ? 0.0 : nu(rng_n);
      frame.target[t] = 0.5 * std::log(x[t]) + 0.2 * z[t] * z[t] + 0.3 * noise;
    } else {
      frame.target[t] = xi(rng_p);
    }
  }
  return frame;
}

SeriesFrame gen_inversion(const DGPSpec& spec) {
  spec.validate();
  auto rng_x = make_rng(derive_seed(spec.seed, kX));
  auto rng_z = make_rng(derive_seed(spec.seed, kZ));
  auto rng_n = make_rng(derive_seed(spec.seed, kNoise));
  auto rng_p = make_rng(derive_seed(spec.seed, kPost));
  std::exponential_distribution<double> exp3(1.0 / 3.0);
  std::gamma_distribution<double> gamma31(3.0, 1.0);
  std::normal_distribution<double> std_norm(0.0, 1.0);
  std::normal_distribution<double> xi(5.0, 3.0);  // N(5, 9), std 3

  const int T = spec.T;
  SeriesFrame frame;
  frame.timestamps = integer_timestamps(T);
  frame.covariate_names = {"X", "Z"};
  frame.covariates.assign(2, std::vector<double>(T));
  frame.target.resize(T);

  double x_pre = exp3(rng_x), z_pre = gamma31(rng_z);  // presample draws
  for (int t = 0; t < T; ++t) {
    const double x_lag = t == 0 ? x_pre : frame.covariates[0][t - 1];
    const double z_lag = t == 0 ? z_pre : frame.covariates[1][t - 1];
    if (t < spec.theta) {
      const double noise = spec.noise_off ? 0.0 : std_norm(rng_n);
      frame.target[t] =
          0.5 * std::log(x_lag) + 0.2 * z_lag * z_lag + 0.3 * noise;
      frame.covariates[0][t] = exp3(rng_x);
      frame.covariates[1][t] = gamma31(rng_z);
    } else {
      // feedback recursion honored in time order: Y drives X and Z
      frame.target[t] = xi(rng_p);
      const double y_lag = frame.target[t - 1];
      const double psi = spec.noise_off ? 0.0 : std_norm(rng_n);
      const double zeta = spec.noise_off ? 0.0 : std_norm(rng_n);
      frame.covariates[0][t] = 0.3 * y_lag + 0.1 * psi;
      frame.covariates[1][t] = 0.6 * y_lag * y_lag + 0.1 * zeta;
    }
  }
  return frame;
}

SeriesFrame gen_tail_dependent(const DGPSpec& spec) {
  spec.validate();
  auto rng_x = make_rng(derive_seed(spec.seed, kX));
  auto rng_n = make_rng(derive_seed(spec.seed, kNoise));
  std::normal_distribution<double> xi(0.0, std::sqrt(0.5));  // N(0, 0.5)

  const int T = spec.T;
  const int n_pre = std::min(spec.theta, T);
  std::vector<double> x(T + 1);  // x[0] presample
  for (int t = 0; t <= T; ++t) x[t] = weibull_min_draw(rng_x, 1.5);

  // lambda statistics over the pre-change X sample only
  std::vector<double> pre(x.begin() + 1, x.begin() + 1 + n_pre);
  const double med = median_of(pre);
  double dmin = std::numeric_limits<double>::infinity(), dmax = -dmin;
  for (double v : pre) {
    dmin = std::min(dmin, v - med);
    dmax = std::max(dmax, v - med);
  }
  const double span = dmax - dmin;
  auto lambda = [&](double xv) {
    if (span <= 0) return 0.0;
    return std::clamp((xv - med - dmin) / span, 0.0, 1.0);
  };

  SeriesFrame frame;
  frame.timestamps = integer_timestamps(T);
  frame.covariate_names = {"X"};
  frame.covariates.resize(1);
  frame.target.resize(T);
  for (int t = 0; t < T; ++t) {
    frame.covariates[0].push_back(x[t + 1]);
    const double noise = spec.noise_off ? 0.0 : xi(rng_n);
    if (t < spec.theta)
      frame.target[t] = x[t] + (1.0 - std::sqrt(lambda(x[t]))) * noise;
    else
      frame.target[t] = 0.9 + noise;
  }
  return frame;
}

SummaryStats summary_stats(std::span<const double> y) {
  const std::size_t n = y.size();
  if (n < 3) throw ConfigError("summary_stats needs at least 3 observations");
  SummaryStats stats;
  double mean = 0;
  for (double v : y) mean += v;
  mean /= n;
  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : y) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  stats.mean = mean;
  stats.stddev = std::sqrt(m2);
  if (m2 > 0) {
    stats.skewness = m3 / std::pow(m2, 1.5);
    stats.kurtosis = m4 / (m2 * m2) - 3.0;  // excess
    std::span<const double> lead(y.data() + 1, n - 1);
    std::span<const double> lag(y.data(), n - 1);
    stats.lag1_corr = pearson(lead, lag);
    auto ranks = ordinal_ranks(y);
    std::span<const double> rlead(ranks.data() + 1, n - 1);
    std::span<const double> rlag(ranks.data(), n - 1);
    stats.lag1_rank_corr = pearson(rlead, rlag);
  }
  return stats;
}

ReplicationResult run_replications(const DGPSpec& dgp,
                                   const ReplicationConfig& config,
                                   int n_reps) {
  if (n_reps < 1) throw ConfigError("n_reps must be >= 1");
  config.plan.validate();

  // One probe run pins the stream geometry (entropy offsets, horizon).
  DGPSpec probe_spec = dgp;
  probe_spec.theta = dgp.T;  // null: no change injected
  probe_spec.seed = derive_seed(dgp.seed, 0x9f0be000ULL);
  auto probe = pipeline::run_entropy_pipeline(
      generate(probe_spec), config.plan, config.variant, config.forest,
      config.quad_points, probe_spec.seed);
  int horizon = 0;  // trajectory steps strictly before the change time
  for (std::size_t w = 1; w < probe.entropy.values.size(); ++w)
    if (probe.entropy.window_end_time(w) < dgp.theta) ++horizon;

  DetectorConfig det = config.detector;
  if (det.calibrate) {
    auto null_stream = [&](std::uint64_t s) {
      DGPSpec null_spec = dgp;
      null_spec.theta = dgp.T;
      null_spec.seed = s;
      auto res = pipeline::run_entropy_pipeline(generate(null_spec),
                                                config.plan, config.variant,
                                                config.forest,
                                                config.quad_points, s);
      return res.entropy.values;
    };
    auto cal = detector::calibrate_threshold(
        null_stream, det, config.plan.delta, config.target_pfa, horizon,
        config.calibration_runs, derive_seed(dgp.seed, 0xca1u));
    det.threshold = cal.threshold;
    det.calibrate = false;
  }

  ReplicationResult result;
  result.n_reps = n_reps;
  result.threshold = det.threshold;
  result.records.assign(n_reps, {});

  parallel_for(n_reps, [&](int r) {
    RepRecord rec;
    rec.seed = derive_seed(dgp.seed, 0x4e9u + r);
    try {
      DGPSpec rep_spec = dgp;
      rep_spec.seed = rec.seed;
      auto res = pipeline::run_entropy_pipeline(generate(rep_spec),
                                                config.plan, config.variant,
                                                config.forest,
                                                config.quad_points, rec.seed);
      auto report = detector::run_detector(res.entropy, det, config.plan.delta);
      auto score = detector::score_detection(report.alarm_times, dgp.theta);
      rec.pfa = score.pfa;
      rec.delay = score.delay;
      rec.nd = score.nd;
    } catch (const std::exception& ex) {
      rec.nd = true;
      rec.diagnostic = ex.what();
    }
    result.records[r] = std::move(rec);
  });

  int n_pfa = 0, n_nd = 0, n_delay = 0;
  double delay_sum = 0;
  for (const auto& rec : result.records) {
    if (rec.pfa) ++n_pfa;
    if (rec.nd) ++n_nd;
    if (rec.delay) {
      ++n_delay;
      delay_sum += *rec.delay;
    }
  }
  result.pfa = double(n_pfa) / n_reps;
  result.nd = double(n_nd) / n_reps;
  result.add = n_delay > 0 ? delay_sum / n_delay : 0.0;
  return result;
}

void write_reps_csv(const ReplicationResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file: " + path);
  out << "rep,seed,pfa,delay,nd,diagnostic\n";
  for (std::size_t r = 0; r < result.records.size(); ++r) {
    const auto& rec = result.records[r];
    out << r << ',' << rec.seed << ',' << (rec.pfa ? 1 : 0) << ',';
    if (rec.delay) out << *rec.delay;
    out << ',' << (rec.nd ? 1 : 0) << ',' << rec.diagnostic << '\n';
  }
}

}  // namespace ews::simlab
