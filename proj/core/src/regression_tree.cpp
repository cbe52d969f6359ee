#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tsxfidel/error.hpp"
#include "tsxfidel/models.hpp"

namespace tsxfidel::models {
namespace {

struct OpenNode {
  int id = 0;
  std::size_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
};

struct SplitCandidate {
  double score = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

// Running left-side statistics of one open node while scanning a column.
constexpr double kTieTolerance = 1e-12;

struct ScanState {
  std::size_t left_count = 0;
  double left_sum = 0.0;
  double last_value = 0.0;
};

double split_point(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid < hi ? mid : lo;
}

}  // namespace

RegressionTree::RegressionTree(std::vector<TreeNode> nodes, int max_depth)
    : nodes_(std::move(nodes)), max_depth_(max_depth) {
  if (nodes_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "tree needs at least one node");
  }
  const int n = static_cast<int>(nodes_.size());
  for (const auto& node : nodes_) {
    if (!node.is_leaf() && (node.left <= 0 || node.right <= 0 || node.left >= n || node.right >= n)) {
      throw Error(ErrorCode::kInvalidArgument, "tree child index out of range");
    }
  }
}

RegressionTree RegressionTree::leaf(double value) {
  TreeNode node;
  node.value = value;
  return RegressionTree({node}, 0);
}

double RegressionTree::predict(std::span<const double> input) const {
  int i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& n = nodes_[i];
    i = input[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes_[i].value;
}

int RegressionTree::depth() const {
  std::vector<int> d(nodes_.size(), 0);
  int best = 0;
  // Children are always appended after their parent.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes_[i].is_leaf()) {
      d[nodes_[i].left] = d[i] + 1;
      d[nodes_[i].right] = d[i] + 1;
    }
  }
  return best;
}

SortedColumns::SortedColumns(const Matrix& inputs) : order_(inputs.cols()) {
  const std::size_t n = inputs.rows();
  for (std::size_t c = 0; c < inputs.cols(); ++c) {
    auto& ord = order_[c];
    ord.resize(n);
    std::iota(ord.begin(), ord.end(), 0U);
    std::stable_sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) {
      return inputs(a, c) < inputs(b, c);
    });
  }
}

RegressionTree fit_tree(const Matrix& inputs, std::span<const double> residuals, int max_depth,
                        int min_samples_leaf) {
  return fit_tree(inputs, SortedColumns(inputs), residuals, max_depth, min_samples_leaf);
}

RegressionTree fit_tree(const Matrix& inputs, const SortedColumns& sorted,
                        std::span<const double> residuals, int max_depth, int min_samples_leaf) {
  const std::size_t n = inputs.rows();
  const std::size_t p = inputs.cols();
  if (residuals.size() != n) {
    throw Error(ErrorCode::kShapeMismatch, "residual count differs from sample count");
  }
  if (n == 0) {
    throw Error(ErrorCode::kEmptyTrainingSet, "cannot fit a tree on zero samples");
  }
  if (max_depth < 0 || min_samples_leaf < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_depth must be >= 0 and min_samples_leaf >= 1");
  }
  const auto msl = static_cast<std::size_t>(min_samples_leaf);

  std::vector<TreeNode> nodes(1);
  // Index into `open` of the node each sample currently sits in, -1 once in a leaf.
  std::vector<int> slot(n, 0);
  std::vector<OpenNode> open(1);
  open[0].id = 0;
  for (std::size_t i = 0; i < n; ++i) {
    open[0].count += 1;
    open[0].sum += residuals[i];
    open[0].sum_sq += residuals[i] * residuals[i];
  }

  for (int depth = 0; !open.empty(); ++depth) {
    std::vector<SplitCandidate> best(open.size());
    if (depth < max_depth) {
      std::vector<ScanState> scan(open.size());
      for (std::size_t f = 0; f < p; ++f) {
        std::fill(scan.begin(), scan.end(), ScanState{});
        for (std::uint32_t i : sorted.order(f)) {
          const int s = slot[i];
          if (s < 0) continue;
          const OpenNode& node = open[s];
          ScanState& st = scan[s];
          const double v = inputs(i, f);
          if (st.left_count >= msl && v > st.last_value && node.count - st.left_count >= msl) {
            const auto wl = static_cast<double>(st.left_count);
            const auto wr = static_cast<double>(node.count - st.left_count);
            const double diff = st.left_sum / wl - (node.sum - st.left_sum) / wr;
            const double score = wl * wr / (wl + wr) * diff * diff;
            // Scores within rounding of the incumbent count as ties, so the
            // lowest column and threshold keep winning.
            if (score > best[s].score * (1.0 + kTieTolerance)) {
              best[s] = {score, static_cast<int>(f), split_point(st.last_value, v)};
            }
          }
          st.left_count += 1;
          st.left_sum += residuals[i];
          st.last_value = v;
        }
      }
    }

    std::vector<OpenNode> next;
    std::vector<int> left_slot(open.size(), -1);
    for (std::size_t s = 0; s < open.size(); ++s) {
      const OpenNode& node = open[s];
      TreeNode& tn = nodes[node.id];
      // Rounding noise on near-constant residuals must not produce splits.
      const bool split = best[s].feature >= 0 && node.count >= 2 * msl &&
                         best[s].score > 1e-14 * node.sum_sq;
      if (!split) {
        tn.value = node.sum / static_cast<double>(node.count);
        continue;
      }
      tn.feature = best[s].feature;
      tn.threshold = best[s].threshold;
      tn.left = static_cast<int>(nodes.size());
      tn.right = tn.left + 1;
      const int left_id = tn.left;
      nodes.emplace_back();
      nodes.emplace_back();
      left_slot[s] = static_cast<int>(next.size());
      next.push_back({left_id, 0, 0.0, 0.0});
      next.push_back({left_id + 1, 0, 0.0, 0.0});
    }
    for (std::size_t i = 0; i < n; ++i) {
      const int s = slot[i];
      if (s < 0) continue;
      if (left_slot[s] < 0) {
        slot[i] = -1;
        continue;
      }
      const TreeNode& tn = nodes[open[s].id];
      const int child = inputs(i, tn.feature) <= tn.threshold ? left_slot[s] : left_slot[s] + 1;
      slot[i] = child;
      next[child].count += 1;
      next[child].sum += residuals[i];
      next[child].sum_sq += residuals[i] * residuals[i];
    }
    open = std::move(next);
  }
  return RegressionTree(std::move(nodes), max_depth);
}

}  // namespace tsxfidel::models
