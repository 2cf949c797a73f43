#pragma once

#include <cstdint>
#include <vector>

#include "ews/core.hpp"
#include "ews/detector.hpp"
#include "ews/entropy.hpp"
#include "ews/forest.hpp"

namespace ews::pipeline {

struct StreamResult {
  std::vector<double> residuals;   // e_t, newest-point residual per trailing fit
  std::vector<double> conditioner; // ê_t (linear) or ẽ_t (local linear forest)
  std::vector<int> ar_orders;      // selected k per fit window
  std::vector<int> cov_lags;       // selected l per fit window
  int offset = 0;                  // stream index i corresponds to time offset + i
};

/// Stage 1: for each t, fit AR(k) and the covariate projection (or the local
/// linear forest) on the trailing window [t - delta, t] and record the
/// newest-point residual and conditioning value.
StreamResult projection_streams(const SeriesFrame& frame,
                                const WindowPlan& plan, bool use_llf,
                                const forest::ForestParams& params,
                                std::uint64_t seed);

struct PipelineResult {
  StreamResult streams;
  entropy::EntropySeries entropy;
};

/// Full entropy pipeline: projection streams, then windowed conditional
/// entropy in the requested variant.
PipelineResult run_entropy_pipeline(const SeriesFrame& frame,
                                    const WindowPlan& plan,
                                    entropy::Variant variant,
                                    const forest::ForestParams& params,
                                    int quad_points, std::uint64_t seed);

}  // namespace ews::pipeline
