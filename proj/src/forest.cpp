#include "ews/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "ews/core.hpp"
#include "ews/rng.hpp"

namespace ews::forest {

namespace {

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double score = 0.0;  // variance reduction, larger is better
};

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& features, std::span<const double> response,
              int min_leaf, int mtry, std::mt19937_64& rng)
      : features_(features),
        response_(response),
        min_leaf_(min_leaf),
        mtry_(mtry),
        rng_(rng) {}

  Tree build(std::vector<int> split_idx, std::vector<int> est_idx) {
    Tree tree;
    grow(tree, std::move(split_idx), std::move(est_idx));
    return tree;
  }

 private:
  int grow(Tree& tree, std::vector<int> split_idx, std::vector<int> est_idx) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    SplitChoice choice;
    if (static_cast<int>(split_idx.size()) >= 2 * min_leaf_ &&
        static_cast<int>(est_idx.size()) >= 2 * min_leaf_)
      choice = best_split(split_idx);

    if (choice.found) {
      auto [sl, sr] = partition(split_idx, choice);
      auto [el, er] = partition(est_idx, choice);
      if (static_cast<int>(el.size()) >= min_leaf_ &&
          static_cast<int>(er.size()) >= min_leaf_) {
        tree.nodes[node_id].feature = choice.feature;
        tree.nodes[node_id].threshold = choice.threshold;
        int left = grow(tree, std::move(sl), std::move(el));
        tree.nodes[node_id].left = left;
        int right = grow(tree, std::move(sr), std::move(er));
        tree.nodes[node_id].right = right;
        return node_id;
      }
    }
    tree.nodes[node_id].leaf_samples = std::move(est_idx);
    return node_id;
  }

  std::pair<std::vector<int>, std::vector<int>> partition(
      const std::vector<int>& idx, const SplitChoice& c) const {
    std::vector<int> left, right;
    for (int i : idx)
      (features_(i, c.feature) <= c.threshold ? left : right).push_back(i);
    return {std::move(left), std::move(right)};
  }

  SplitChoice best_split(const std::vector<int>& split_idx) {
    const int p = static_cast<int>(features_.cols());
    std::vector<int> feats(p);
    std::iota(feats.begin(), feats.end(), 0);
    std::shuffle(feats.begin(), feats.end(), rng_);
    feats.resize(std::min(mtry_, p));
    std::sort(feats.begin(), feats.end());

    SplitChoice best;
    std::vector<std::pair<double, double>> vals;  // (feature value, response)
    for (int f : feats) {
      vals.clear();
      for (int i : split_idx)
        vals.emplace_back(features_(i, f), response_[i]);
      std::sort(vals.begin(), vals.end());

      const int n = static_cast<int>(vals.size());
      double total = 0;
      for (const auto& v : vals) total += v.second;

      // scan candidate thresholds at midpoints between distinct values
      double left_sum = 0;
      for (int i = 0; i + 1 < n; ++i) {
        left_sum += vals[i].second;
        if (vals[i].first == vals[i + 1].first) continue;
        const int nl = i + 1, nr = n - nl;
        if (nl < min_leaf_ || nr < min_leaf_) continue;
        const double right_sum = total - left_sum;
        // variance reduction up to constants: sum of per-child mean^2 * size
        double score = left_sum * left_sum / nl + right_sum * right_sum / nr -
                       total * total / n;
        if (!best.found || score > best.score + 1e-12) {
          best.found = true;
          best.feature = f;
          best.threshold = 0.5 * (vals[i].first + vals[i + 1].first);
          best.score = score;
        }
      }
    }
    if (best.found && best.score <= 1e-12) best.found = false;  // pure node
    return best;
  }

  const Eigen::MatrixXd& features_;
  std::span<const double> response_;
  int min_leaf_;
  int mtry_;
  std::mt19937_64& rng_;
};

}  // namespace

ForestModel fit_forest(const Eigen::MatrixXd& features,
                       std::span<const double> response, int n_trees,
                       int min_leaf, int mtry, bool honest,
                       std::uint64_t seed) {
  const int n = static_cast<int>(features.rows());
  const int p = static_cast<int>(features.cols());
  if (n != static_cast<int>(response.size()))
    throw ConfigError("features/response length mismatch");
  if (n < 2) throw ConfigError("need at least two training samples");
  if (n_trees < 1) throw ConfigError("n_trees must be >= 1");
  if (mtry <= 0) mtry = static_cast<int>(std::ceil(std::sqrt(double(p))));

  ForestModel model;
  model.n_trees = n_trees;
  model.min_leaf = min_leaf;
  model.mtry = std::min(mtry, p);
  model.honest = honest;
  model.n_samples = n;
  model.n_features = p;
  model.trees.reserve(n_trees);

  if (n < 2 * min_leaf) {
    // no room to subsample or split: every tree is one leaf over all samples
    Tree stump;
    stump.nodes.emplace_back();
    stump.nodes[0].leaf_samples.resize(n);
    std::iota(stump.nodes[0].leaf_samples.begin(),
              stump.nodes[0].leaf_samples.end(), 0);
    model.trees.assign(n_trees, stump);
    return model;
  }

  for (int t = 0; t < n_trees; ++t) {
    auto rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<int> split_idx, est_idx;
    if (honest) {
      std::vector<int> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      const int half = n / 2;
      split_idx.assign(perm.begin(), perm.begin() + half);
      est_idx.assign(perm.begin() + half, perm.end());
    } else {
      std::uniform_int_distribution<int> pick(0, n - 1);
      split_idx.resize(n);
      for (int& i : split_idx) i = pick(rng);
      est_idx = split_idx;
    }
    TreeBuilder builder(features, response, min_leaf, model.mtry, rng);
    model.trees.push_back(builder.build(std::move(split_idx), std::move(est_idx)));
  }
  return model;
}

int find_leaf(const Tree& tree, const Eigen::RowVectorXd& x) {
  int node = 0;
  while (tree.nodes[node].feature >= 0) {
    const TreeNode& nd = tree.nodes[node];
    node = (x(nd.feature) <= nd.threshold) ? nd.left : nd.right;
  }
  return node;
}

std::vector<double> query_weights(const ForestModel& model,
                                  const Eigen::RowVectorXd& x) {
  if (x.size() != model.n_features)
    throw ConfigError("query dimension mismatch");
  std::vector<double> w(model.n_samples, 0.0);
  int contributing = 0;
  for (const Tree& tree : model.trees) {
    const auto& leaf = tree.nodes[find_leaf(tree, x)].leaf_samples;
    if (leaf.empty()) continue;
    const double inc = 1.0 / static_cast<double>(leaf.size());
    for (int i : leaf) w[i] += inc;
    ++contributing;
  }
  if (contributing == 0) {
    std::fill(w.begin(), w.end(), 1.0 / model.n_samples);
    return w;
  }
  const double scale = 1.0 / contributing;
  for (double& v : w) v *= scale;
  return w;
}

double weighted_mean_predict(const ForestModel& model,
                             std::span<const double> response,
                             const Eigen::RowVectorXd& x) {
  const auto w = query_weights(model, x);
  double acc = 0;
  for (int i = 0; i < model.n_samples; ++i) acc += w[i] * response[i];
  return acc;
}

double llf_predict(const ForestModel& model, const Eigen::MatrixXd& features,
                   std::span<const double> response,
                   const Eigen::RowVectorXd& x, double ridge) {
  if (ridge < 0) throw ConfigError("ridge penalty must be >= 0");
  const auto w = query_weights(model, x);
  const int p = model.n_features;

  auto assemble = [&](double penalty) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p + 1, p + 1);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(p + 1);
    Eigen::VectorXd z(p + 1);
    for (int i = 0; i < model.n_samples; ++i) {
      if (w[i] == 0.0) continue;
      z(0) = 1.0;
      z.tail(p) = (features.row(i) - x).transpose();
      m.noalias() += w[i] * z * z.transpose();
      b.noalias() += w[i] * response[i] * z;
    }
    for (int j = 1; j <= p; ++j) m(j, j) += penalty;
    return std::make_pair(m, b);
  };

  auto [m, b] = assemble(ridge);
  Eigen::VectorXd sol = m.ldlt().solve(b);
  double resid = (m * sol - b).norm();
  if (!sol.allFinite() || resid > 1e-8 * (b.norm() + 1.0)) {
    auto [m2, b2] = assemble(ridge + 1e-8);  // singular local system
    sol = m2.ldlt().solve(b2);
  }
  return sol(0);
}

}  // namespace ews::forest
