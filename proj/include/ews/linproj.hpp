#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ews::linproj {

struct ARFit {
  int order = 0;
  Eigen::VectorXd coefficients;   // intercept first, then lag 1..order
  std::vector<double> residuals;  // over the common sample (rows max_order..n-1)
  double bic = 0;
};

struct CovProjection {
  int lag = 1;
  Eigen::VectorXd coefficients;  // intercept, then X^{(1)}_{t-1..t-l}, X^{(2)}_{t-1..t-l}, ...
  std::vector<double> fitted;    // aligned with the residual vector
  double bic = 0;
};

/// AR(k) fit with BIC order selection over k in {0..max_order}, compared on
/// the common sample obtained by dropping the first max_order rows. Ties and
/// rank-deficient candidate designs resolve toward the smallest order.
ARFit fit_ar(std::span<const double> y, int max_order);

/// OLS of e on an intercept plus covariate lags 1..l for every column, with l
/// BIC-selected in {1..max_lag}. x_history holds one vector per covariate of
/// length e.size() + max_lag; row (max_lag + i) of each column is contemporaneous
/// with e[i], so every lag is available for every residual row.
CovProjection project_on_covariates(
    std::span<const double> e,
    const std::vector<std::vector<double>>& x_history, int max_lag);

/// Least-squares solve via complete orthogonal decomposition (pseudo-inverse);
/// degenerate columns get coefficient 0. Returns the coefficient vector and
/// reports the numerical rank.
Eigen::VectorXd ols_solve(const Eigen::MatrixXd& design,
                          const Eigen::VectorXd& response, int* rank = nullptr);

}  // namespace ews::linproj
