#include "ews/linproj.hpp"

#include <cmath>
#include <stdexcept>

#include "ews/core.hpp"

namespace ews::linproj {

namespace {

constexpr double kRssFloor = 1e-300;

double bic_value(double rss, int n, int p) {
  return n * std::log(std::max(rss, kRssFloor) / n) + p * std::log(double(n));
}

}  // namespace

Eigen::VectorXd ols_solve(const Eigen::MatrixXd& design,
                          const Eigen::VectorXd& response, int* rank) {
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
  if (rank) *rank = static_cast<int>(cod.rank());
  return cod.solve(response);
}

ARFit fit_ar(std::span<const double> y, int max_order) {
  const int n = static_cast<int>(y.size());
  if (n <= max_order + 2)
    throw ConfigError("window too short for AR order search");

  // Common effective sample: rows max_order..n-1 for every candidate order.
  const int n_eff = n - max_order;
  Eigen::VectorXd response(n_eff);
  for (int i = 0; i < n_eff; ++i) response(i) = y[max_order + i];

  ARFit best;
  bool have_best = false;
  for (int k = 0; k <= max_order; ++k) {
    Eigen::MatrixXd design(n_eff, k + 1);
    design.col(0).setOnes();
    for (int s = 1; s <= k; ++s)
      for (int i = 0; i < n_eff; ++i)
        design(i, s) = y[max_order + i - s];

    int rank = 0;
    Eigen::VectorXd coef = ols_solve(design, response, &rank);
    if (k > 0 && rank < k + 1) continue;  // keep the smallest full-rank order

    Eigen::VectorXd resid = response - design * coef;
    double bic = bic_value(resid.squaredNorm(), n_eff, k + 1);
    if (!have_best || bic < best.bic - 1e-12) {
      best.order = k;
      best.coefficients = coef;
      best.residuals.assign(resid.data(), resid.data() + n_eff);
      best.bic = bic;
      have_best = true;
    }
  }
  if (!have_best) throw ConfigError("AR fit failed: no admissible order");
  return best;
}

CovProjection project_on_covariates(
    std::span<const double> e,
    const std::vector<std::vector<double>>& x_history, int max_lag) {
  const int n = static_cast<int>(e.size());
  const int d = static_cast<int>(x_history.size());
  if (d == 0) throw ConfigError("projection requires at least one covariate");
  for (const auto& col : x_history)
    if (static_cast<int>(col.size()) != n + max_lag)
      throw ConfigError("covariate history misaligned with residual window");
  if (n <= 3) throw ConfigError("projection infeasible, shrink lags or grow window");

  Eigen::VectorXd response(n);
  for (int i = 0; i < n; ++i) response(i) = e[i];

  CovProjection best;
  bool have_best = false;
  for (int l = 1; l <= max_lag; ++l) {
    const int p = 1 + d * l;
    if (p >= n) continue;  // more regressors than observations

    Eigen::MatrixXd design(n, p);
    design.col(0).setOnes();
    for (int j = 0; j < d; ++j)
      for (int s = 1; s <= l; ++s)
        for (int i = 0; i < n; ++i)
          design(i, 1 + j * l + (s - 1)) = x_history[j][max_lag + i - s];

    int rank = 0;
    Eigen::VectorXd coef = ols_solve(design, response, &rank);
    Eigen::VectorXd fitted = design * coef;
    // rank, not nominal p, so degenerate columns do not distort selection
    double bic = bic_value((response - fitted).squaredNorm(), n, rank);
    if (!have_best || bic < best.bic - 1e-12) {
      best.lag = l;
      best.coefficients = coef;
      best.fitted.assign(fitted.data(), fitted.data() + n);
      best.bic = bic;
      have_best = true;
    }
  }
  if (!have_best)
    throw ConfigError("projection infeasible, shrink lags or grow window");
  return best;
}

}  // namespace ews::linproj
