#include "cfcal/regress/forest.hpp"

#include "cfcal/errors.hpp"
#include "cfcal/parallel.hpp"
#include "cfcal/rng.hpp"

#include <algorithm>
#include <numeric>

namespace cfcal::regress {

const TreeNode& RegressionTree::find_leaf(const double* x) const {
  const TreeNode* n = &nodes.front();
  while (n->feature >= 0) n = &nodes[static_cast<std::size_t>(x[n->feature] <= n->threshold ? n->left : n->right)];
  return *n;
}

int RegressionTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  // Children always come after their parent.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, std::optional<int> max_depth, int min_leaf)
      : X_(X), Y_(Y), max_depth_(max_depth), min_leaf_(std::max(1, min_leaf)), m_(static_cast<int>(Y.cols())) {}

  RegressionTree build(std::vector<int> rows) {
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature{-1};
    double threshold{0.0};
    double score{0.0};
  };

  int make_leaf(const std::vector<int>& rows) {
    TreeNode node;
    node.leaf = static_cast<int>(tree_.leaf_values.size()) / m_;
    node.count = static_cast<int>(rows.size());
    for (int k = 0; k < m_; ++k) {
      double s = 0.0;
      for (int r : rows) s += Y_(r, k);
      tree_.leaf_values.push_back(s / static_cast<double>(rows.size()));
    }
    tree_.nodes.push_back(node);
    return static_cast<int>(tree_.nodes.size()) - 1;
  }

  bool pure(const std::vector<int>& rows) const {
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (Y_.row(rows[i]) != Y_.row(rows[0])) return false;
    return true;
  }

  // Best split by maximising sum_k (S_L,k^2 / n_L + S_R,k^2 / n_R), which is
  // the same as minimising the children's summed squared error.
  Split best_split(std::vector<int>& rows) {
    const auto n = static_cast<int>(rows.size());
    Eigen::VectorXd total = Eigen::VectorXd::Zero(m_);
    for (int r : rows) total += Y_.row(r).transpose();
    const double parent = total.squaredNorm() / n;
    Split best;
    best.score = parent;
    Eigen::VectorXd left(m_);
    for (int f = 0; f < X_.cols(); ++f) {
      std::sort(rows.begin(), rows.end(), [&](int a, int b) {
        const double xa = X_(a, f), xb = X_(b, f);
        return xa < xb || (xa == xb && a < b);
      });
      left.setZero();
      for (int i = 0; i + 1 < n; ++i) {
        left += Y_.row(rows[static_cast<std::size_t>(i)]).transpose();
        const int nl = i + 1, nr = n - nl;
        if (nl < min_leaf_) continue;
        if (nr < min_leaf_) break;
        const double lo = X_(rows[static_cast<std::size_t>(i)], f);
        const double hi = X_(rows[static_cast<std::size_t>(i + 1)], f);
        if (!(lo < hi)) continue;
        const double score = left.squaredNorm() / nl + (total - left).squaredNorm() / nr;
        if (score > best.score) {
          double t = 0.5 * (lo + hi);
          if (!(t < hi)) t = lo;
          best = {f, t, score};
        }
      }
    }
    return best;
  }

  int grow(std::vector<int>& rows, int depth) {
    const bool stop = (max_depth_ && depth >= *max_depth_) || static_cast<int>(rows.size()) < 2 * min_leaf_ ||
                      pure(rows);
    if (stop) return make_leaf(rows);
    const Split s = best_split(rows);
    if (s.feature < 0) return make_leaf(rows);

    std::vector<int> lrows, rrows;
    for (int r : rows) (X_(r, s.feature) <= s.threshold ? lrows : rrows).push_back(r);
    std::sort(lrows.begin(), lrows.end());
    std::sort(rrows.begin(), rrows.end());

    const int self = static_cast<int>(tree_.nodes.size());
    TreeNode node;
    node.feature = s.feature;
    node.threshold = s.threshold;
    node.count = static_cast<int>(rows.size());
    tree_.nodes.push_back(node);
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(lrows, depth + 1);
    const int r = grow(rrows, depth + 1);
    tree_.nodes[static_cast<std::size_t>(self)].left = l;
    tree_.nodes[static_cast<std::size_t>(self)].right = r;
    return self;
  }

  const Eigen::MatrixXd& X_;
  const Eigen::MatrixXd& Y_;
  std::optional<int> max_depth_;
  int min_leaf_;
  int m_;
  RegressionTree tree_;
};

}  // namespace

RegressionTree fit_tree(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, std::vector<int> rows,
                        std::optional<int> max_depth, int min_leaf) {
  if (rows.empty()) throw EmptyDataset("fit_tree: no rows");
  std::sort(rows.begin(), rows.end());
  return TreeBuilder(X, Y, max_depth, min_leaf).build(std::move(rows));
}

ForestModel fit_forest(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const ForestOptions& opts) {
  if (X.rows() == 0) throw EmptyDataset("fit_forest: no rows");
  if (X.rows() != Y.rows()) throw InvalidArgument("fit_forest: inputs and targets differ in row count");
  if (opts.trees < 1) throw InvalidArgument("fit_forest: need at least one tree");
  if (opts.max_depth && *opts.max_depth < 0) throw InvalidArgument("fit_forest: negative max_depth");

  ForestModel f;
  f.input_dim = static_cast<int>(X.cols());
  f.output_dim = static_cast<int>(Y.cols());
  f.max_depth = opts.max_depth;
  f.min_leaf = opts.min_leaf;
  f.tree_seeds.resize(static_cast<std::size_t>(opts.trees));
  f.trees.resize(static_cast<std::size_t>(opts.trees));
  const auto n = static_cast<int>(X.rows());

  parallel_for(f.trees.size(), opts.threads, [&](std::size_t t) {
    const std::uint64_t seed = derive_seed(opts.seed, Stream::Tree, t);
    f.tree_seeds[t] = seed;
    std::vector<int> rows(static_cast<std::size_t>(n));
    if (opts.bootstrap) {
      Rng rng = make_rng(seed);
      std::uniform_int_distribution<int> pick(0, n - 1);
      for (auto& r : rows) r = pick(rng);
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    f.trees[t] = fit_tree(X, Y, std::move(rows), opts.max_depth, opts.min_leaf);
  });
  return f;
}

Eigen::VectorXd ForestModel::predict(const Eigen::VectorXd& x) const {
  if (x.size() != input_dim) throw InvalidArgument("forest predict: wrong input dimension");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(output_dim);
  for (const auto& t : trees) {
    const auto& leaf = t.find_leaf(x.data());
    out += Eigen::Map<const Eigen::VectorXd>(&t.leaf_values[static_cast<std::size_t>(leaf.leaf * output_dim)],
                                             output_dim);
  }
  return out / static_cast<double>(trees.size());
}

Eigen::MatrixXd ForestModel::predict_rows(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd out(X.rows(), output_dim);
  for (Eigen::Index i = 0; i < X.rows(); ++i) out.row(i) = predict(X.row(i).transpose()).transpose();
  return out;
}

}  // namespace cfcal::regress
