#include "ews/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "ews/parallel.hpp"
#include "ews/rng.hpp"

namespace ews::entropy {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

double gauss_kernel(double u, double h) {
  const double z = u / h;
  return kInvSqrt2Pi / h * std::exp(-0.5 * z * z);
}

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

double weighted_quantile(std::vector<std::pair<double, double>>& sorted_vw,
                         double q) {
  // sorted_vw: (value, weight) sorted by value, weights summing to 1
  double acc = 0;
  for (const auto& [v, w] : sorted_vw) {
    acc += w;
    if (acc >= q) return v;
  }
  return sorted_vw.back().first;
}

}  // namespace

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::baseline: return "baseline";
    case Variant::llf: return "llf";
    case Variant::rank: return "rank";
    case Variant::llf_rank: return "llf-rank";
  }
  return "baseline";
}

Variant parse_variant(const std::string& name) {
  if (name == "baseline") return Variant::baseline;
  if (name == "llf") return Variant::llf;
  if (name == "rank") return Variant::rank;
  if (name == "llf-rank" || name == "llf_rank") return Variant::llf_rank;
  throw ConfigError("unknown variant: " + name);
}

std::vector<double> pseudo_observations(std::span<const double> series,
                                        int delta) {
  const int n = static_cast<int>(series.size());
  if (n <= delta) throw ConfigError("series shorter than rank window");
  std::vector<double> u(n - delta);
  for (int t = delta; t < n; ++t) {
    int count = 0;
    for (int s = 1; s <= delta; ++s)
      if (series[t - s] <= series[t]) ++count;
    u[t - delta] = static_cast<double>(count) / delta;
  }
  return u;
}

double ConditionalDensity::operator()(double eps) const {
  double f = 0;
  for (std::size_t i = 0; i < centers.size(); ++i)
    if (weights[i] > 0.0) f += weights[i] * gauss_kernel(eps - centers[i], bandwidth);
  return f;
}

double silverman_bandwidth(std::span<const double> values,
                           std::span<const double> weights) {
  double mean = 0, w2 = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    mean += weights[i] * values[i];
    w2 += weights[i] * weights[i];
  }
  double var = 0;
  for (std::size_t i = 0; i < values.size(); ++i)
    var += weights[i] * (values[i] - mean) * (values[i] - mean);
  const double ess = w2 > 0 ? 1.0 / w2 : 1.0;
  const double sd = std::sqrt(std::max(var, 0.0));

  std::vector<std::pair<double, double>> vw;
  vw.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    vw.emplace_back(values[i], weights[i]);
  std::sort(vw.begin(), vw.end());
  const double iqr =
      weighted_quantile(vw, 0.75) - weighted_quantile(vw, 0.25);

  double spread = sd;
  if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
  double h = 0.9 * spread * std::pow(ess, -0.2);
  if (!(h > 0.0)) h = 1e-6 * (1.0 + std::abs(mean));
  return h;
}

ConditionalDensity conditional_density(
    std::span<const double> train_e, std::span<const double> train_cond,
    double query_cond, const forest::ForestModel& model,
    std::optional<std::pair<double, double>> support) {
  if (train_e.size() != train_cond.size())
    throw ConfigError("train vectors misaligned");
  Eigen::RowVectorXd x(1);
  x(0) = query_cond;
  ConditionalDensity density;
  density.centers.assign(train_e.begin(), train_e.end());
  density.weights = forest::query_weights(model, x);
  density.bandwidth = silverman_bandwidth(density.centers, density.weights);
  if (support) {
    density.lo = support->first;
    density.hi = support->second;
  } else {
    auto [mn, mx] = std::minmax_element(train_e.begin(), train_e.end());
    density.lo = *mn - 3.0 * density.bandwidth;
    density.hi = *mx + 3.0 * density.bandwidth;
  }
  return density;
}

double simpson(const std::function<double(double)>& f, double lo, double hi,
               int points) {
  if (points < 3 || points % 2 == 0)
    throw ConfigError("Simpson rule needs an odd node count >= 3");
  const double h = (hi - lo) / (points - 1);
  double acc = f(lo) + f(hi);
  for (int i = 1; i < points - 1; ++i)
    acc += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

double simpson_tabulated(std::span<const double> values, double lo, double hi) {
  const int points = static_cast<int>(values.size());
  if (points < 3 || points % 2 == 0)
    throw ConfigError("Simpson rule needs an odd node count >= 3");
  const double h = (hi - lo) / (points - 1);
  double acc = values.front() + values.back();
  for (int i = 1; i < points - 1; ++i)
    acc += values[i] * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

double density_entropy(const ConditionalDensity& density, int quad_points) {
  return -simpson([&](double eps) { return xlogx(density(eps)); }, density.lo,
                  density.hi, quad_points);
}

EntropySeries window_entropy(const WindowPlan& plan, std::span<const double> e,
                             std::span<const double> cond, Variant variant,
                             const forest::ForestParams& params,
                             int quad_points, std::uint64_t seed,
                             int base_offset) {
  if (e.size() != cond.size()) throw ConfigError("e/cond stream misaligned");
  if (quad_points < 51 || quad_points % 2 == 0)
    throw ConfigError("quad_points must be odd and >= 51");

  std::vector<double> e_ranked, cond_ranked;
  int offset = base_offset;
  if (uses_ranks(variant)) {
    e_ranked = pseudo_observations(e, plan.delta);
    cond_ranked = pseudo_observations(cond, plan.delta);
    e = e_ranked;
    cond = cond_ranked;
    offset += plan.delta;
  }

  EntropySeries series;
  series.variant = variant;
  series.stream_offset = offset;
  series.windows = make_windows(plan, static_cast<int>(e.size()));
  series.values.assign(series.windows.size(), 0.0);

  const bool rank = uses_ranks(variant);
  parallel_for(static_cast<int>(series.windows.size()), [&](int w) {
    const auto [t0, t1] = series.windows[w];
    const int n = t1 - t0 + 1;
    std::span<const double> we = e.subspan(t0, n);
    std::span<const double> wc = cond.subspan(t0, n);

    Eigen::MatrixXd feats(n, 1);
    for (int i = 0; i < n; ++i) feats(i, 0) = wc[i];
    auto model = forest::fit_forest(feats, we, params.n_trees, params.min_leaf,
                                    params.mtry, params.honest,
                                    derive_seed(seed, 0x77000000ULL + w));

    const auto [mn_it, mx_it] = std::minmax_element(we.begin(), we.end());
    const double e_min = *mn_it, e_max = *mx_it;

    double total = 0;
    std::vector<double> integrand(quad_points);
    Eigen::RowVectorXd q(1);
    ConditionalDensity density;
    density.centers.assign(we.begin(), we.end());
    for (int i = 0; i < n; ++i) {
      q(0) = wc[i];
      density.weights = forest::query_weights(model, q);
      density.bandwidth = silverman_bandwidth(density.centers, density.weights);
      density.lo = rank ? 0.0 : e_min - 3.0 * density.bandwidth;
      density.hi = rank ? 1.0 : e_max + 3.0 * density.bandwidth;
      const double step = (density.hi - density.lo) / (quad_points - 1);
      for (int g = 0; g < quad_points; ++g)
        integrand[g] = xlogx(density(density.lo + g * step));
      total -= simpson_tabulated(integrand, density.lo, density.hi);
    }
    series.values[w] = total;
  });
  return series;
}

void write_entropy_csv(const EntropySeries& series, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file: " + path);
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "window_start,window_end,H,variant\n";
  for (std::size_t w = 0; w < series.values.size(); ++w)
    out << series.windows[w].first + series.stream_offset << ','
        << series.windows[w].second + series.stream_offset << ','
        << series.values[w] << ',' << variant_name(series.variant) << '\n';
}

}  // namespace ews::entropy
