#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace cfcal::regress {

// Flat CART regression tree. Internal nodes send x[feature] <= threshold to
// `left`; leaves have feature == -1 and index their mean target via `leaf`.
struct TreeNode {
  int feature{-1};
  double threshold{0.0};
  int left{-1};
  int right{-1};
  int leaf{-1};
  int count{0};  // training rows that reached this node
};

struct RegressionTree {
  std::vector<TreeNode> nodes;
  std::vector<double> leaf_values;  // output_dim values per leaf

  const TreeNode& find_leaf(const double* x) const;
  int depth() const;
};

struct ForestOptions {
  int trees{100};
  std::optional<int> max_depth;  // unbounded by default
  int min_leaf{1};
  bool bootstrap{true};
  std::uint64_t seed{0};
  std::size_t threads{1};
};

struct ForestModel {
  int input_dim{0};
  int output_dim{0};
  std::optional<int> max_depth;
  int min_leaf{1};
  std::vector<std::uint64_t> tree_seeds;
  std::vector<RegressionTree> trees;

  // Mean of the tree predictions.
  Eigen::VectorXd predict(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd predict_rows(const Eigen::MatrixXd& X) const;
  bool empty() const { return trees.empty(); }
};

// Rows of X are samples (n x d), rows of Y their targets (n x m). Splits
// minimise the summed squared error over all outputs; ties keep the lowest
// feature index, then the lowest threshold.
ForestModel fit_forest(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const ForestOptions& opts);

// A single tree on the given rows, no resampling.
RegressionTree fit_tree(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, std::vector<int> rows,
                        std::optional<int> max_depth, int min_leaf);

}  // namespace cfcal::regress
