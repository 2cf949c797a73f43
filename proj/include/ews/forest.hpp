#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ews::forest {

struct ForestParams {
  int n_trees = 200;
  int min_leaf = 5;
  int mtry = 0;  // 0 means ceil(sqrt(p))
  bool honest = true;
  double ridge = 0.01;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<int> leaf_samples;  // estimation sample indices (with multiplicity)
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct ForestModel {
  int n_trees = 0;
  int min_leaf = 0;
  int mtry = 0;
  bool honest = true;
  int n_samples = 0;
  int n_features = 0;
  std::vector<Tree> trees;
};

/// CART-style regression trees split on response variance reduction.
/// Honest trees structure-split on one half sample and populate leaves with
/// the other; otherwise a bootstrap sample serves both roles. Deterministic
/// given the seed.
ForestModel fit_forest(const Eigen::MatrixXd& features,
                       std::span<const double> response, int n_trees,
                       int min_leaf, int mtry, bool honest,
                       std::uint64_t seed);

int find_leaf(const Tree& tree, const Eigen::RowVectorXd& x);

/// Adaptive neighbor weights for one query point: average over trees of
/// 1{same leaf}/|leaf|. Nonnegative, sums to 1.
std::vector<double> query_weights(const ForestModel& model,
                                  const Eigen::RowVectorXd& x);

/// Plain forest prediction: neighbor-weighted response mean.
double weighted_mean_predict(const ForestModel& model,
                             std::span<const double> response,
                             const Eigen::RowVectorXd& x);

/// Local linear forest prediction: ridge-penalized weighted linear regression
/// centered at x; returns the intercept. The penalty applies to slopes only.
double llf_predict(const ForestModel& model, const Eigen::MatrixXd& features,
                   std::span<const double> response,
                   const Eigen::RowVectorXd& x, double ridge);

}  // namespace ews::forest
