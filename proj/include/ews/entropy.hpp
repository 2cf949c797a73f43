#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ews/core.hpp"
#include "ews/forest.hpp"

namespace ews::entropy {

enum class Variant { baseline, llf, rank, llf_rank };

constexpr bool uses_ranks(Variant v) {
  return v == Variant::rank || v == Variant::llf_rank;
}
constexpr bool uses_llf(Variant v) {
  return v == Variant::llf || v == Variant::llf_rank;
}
std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);

/// u_t = (1/delta) * sum_{s=1..delta} 1{series[t-s] <= series[t]}, defined for
/// t >= delta; result[i] corresponds to t = delta + i.
std::vector<double> pseudo_observations(std::span<const double> series,
                                        int delta);

/// Weighted Gaussian-kernel conditional density f̂(eps | c) over [lo, hi].
struct ConditionalDensity {
  std::vector<double> centers;
  std::vector<double> weights;
  double bandwidth = 0;
  double lo = 0, hi = 0;

  double operator()(double eps) const;
};

/// Silverman bandwidth on the weight-effective sample size; falls back to
/// 1e-6*(1+|mean|) when the weighted spread degenerates.
double silverman_bandwidth(std::span<const double> values,
                           std::span<const double> weights);

/// f̂(eps | c) = sum_i w_i(c) K_h(eps - e_i) with forest neighbor weights at
/// the conditioning value. Default support is the data range +/- 3 bandwidths.
ConditionalDensity conditional_density(
    std::span<const double> train_e, std::span<const double> train_cond,
    double query_cond, const forest::ForestModel& model,
    std::optional<std::pair<double, double>> support = std::nullopt);

/// Composite Simpson over [lo, hi] on `points` nodes (odd, >= 3).
double simpson(const std::function<double(double)>& f, double lo, double hi,
               int points);
/// Same rule applied to pre-tabulated equispaced values.
double simpson_tabulated(std::span<const double> values, double lo, double hi);

/// -∫ f ln f over the density support by composite Simpson; f = 0 nodes
/// contribute 0 (x ln x -> 0 limit).
double density_entropy(const ConditionalDensity& density, int quad_points);

struct EntropySeries {
  std::vector<double> values;
  std::vector<std::pair<int, int>> windows;  // indices into the entropy input stream
  Variant variant = Variant::baseline;
  // entropy input stream index -> original series time index shift (the rank
  // transform consumes an extra delta of history)
  int stream_offset = 0;

  /// Time index of a window's newest observation.
  int window_end_time(std::size_t w) const {
    return windows[w].second + stream_offset;
  }
};

/// Windowed conditional entropy: for each window, a forest is fit on the
/// in-window (cond, e) pairs and Ĥ = -Σ_c ∫ f̂(eps|c) ln f̂(eps|c) deps with
/// the integral by composite Simpson. Rank variants first map both streams
/// through pseudo_observations and integrate over [0, 1].
EntropySeries window_entropy(const WindowPlan& plan, std::span<const double> e,
                             std::span<const double> cond, Variant variant,
                             const forest::ForestParams& params,
                             int quad_points, std::uint64_t seed,
                             int base_offset = 0);

void write_entropy_csv(const EntropySeries& series, const std::string& path);

}  // namespace ews::entropy
