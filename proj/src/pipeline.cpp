#include "ews/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "ews/linproj.hpp"
#include "ews/parallel.hpp"
#include "ews/rng.hpp"

namespace ews::pipeline {

StreamResult projection_streams(const SeriesFrame& frame,
                                const WindowPlan& plan, bool use_llf,
                                const forest::ForestParams& params,
                                std::uint64_t seed) {
  frame.validate();
  plan.validate();
  const int T = static_cast<int>(frame.length());
  const int d = static_cast<int>(frame.n_covariates());
  if (d == 0) throw ConfigError("pipeline requires at least one covariate");

  // first t with a full trailing fit window and full covariate lag history
  const int start = plan.delta + std::max(0, plan.max_cov_lag - plan.max_ar_order);
  if (start >= T) throw ConfigError("series shorter than window");

  StreamResult out;
  out.offset = start;
  const int n_stream = T - start;
  out.residuals.assign(n_stream, 0.0);
  out.conditioner.assign(n_stream, 0.0);
  out.ar_orders.assign(n_stream, 0);
  out.cov_lags.assign(n_stream, 0);

  parallel_for(n_stream, [&](int i) {
    const int t = start + i;
    const int w0 = t - plan.delta;
    std::span<const double> y(frame.target.data() + w0, plan.delta + 1);

    auto ar = linproj::fit_ar(y, plan.max_ar_order);
    // residual rows cover times w0 + max_ar_order .. t
    const int r0 = w0 + plan.max_ar_order;
    const int nr = static_cast<int>(ar.residuals.size());

    std::vector<std::vector<double>> x_hist(d);
    for (int j = 0; j < d; ++j)
      x_hist[j].assign(frame.covariates[j].begin() + (r0 - plan.max_cov_lag),
                       frame.covariates[j].begin() + (r0 + nr));

    auto proj =
        linproj::project_on_covariates(ar.residuals, x_hist, plan.max_cov_lag);
    out.ar_orders[i] = ar.order;
    out.cov_lags[i] = proj.lag;
    out.residuals[i] = ar.residuals.back();

    if (!use_llf) {
      out.conditioner[i] = proj.fitted.back();
      return;
    }

    // Local linear forest over the lagged covariates at the BIC-selected lag.
    const int l = proj.lag;
    Eigen::MatrixXd feats(nr, d * l);
    for (int r = 0; r < nr; ++r)
      for (int j = 0; j < d; ++j)
        for (int s = 1; s <= l; ++s)
          feats(r, j * l + (s - 1)) = frame.covariates[j][r0 + r - s];
    auto model = forest::fit_forest(
        feats, ar.residuals, params.n_trees, params.min_leaf, params.mtry,
        params.honest, derive_seed(seed, 0x11f00000ULL + t));
    out.conditioner[i] = forest::llf_predict(model, feats, ar.residuals,
                                             feats.row(nr - 1), params.ridge);
  });
  return out;
}

PipelineResult run_entropy_pipeline(const SeriesFrame& frame,
                                    const WindowPlan& plan,
                                    entropy::Variant variant,
                                    const forest::ForestParams& params,
                                    int quad_points, std::uint64_t seed) {
  PipelineResult result;
  result.streams = projection_streams(frame, plan, entropy::uses_llf(variant),
                                      params, derive_seed(seed, 1));
  result.entropy = entropy::window_entropy(
      plan, result.streams.residuals, result.streams.conditioner, variant,
      params, quad_points, derive_seed(seed, 2), result.streams.offset);
  return result;
}

}  // namespace ews::pipeline
