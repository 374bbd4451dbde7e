#include "qerover/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace qerover {

nlohmann::json Tree::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& n : nodes)
    arr.push_back({n.feature, n.threshold, n.value, n.left, n.right});
  return arr;
}

Tree Tree::from_json(const nlohmann::json& j) {
  Tree t;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 5)
      throw ValidationError("malformed tree node");
    TreeNode n;
    n.feature = e[0].get<int>();
    n.threshold = e[1].get<double>();
    n.value = e[2].get<double>();
    n.left = e[3].get<int>();
    n.right = e[4].get<int>();
    t.nodes.push_back(n);
  }
  if (t.nodes.empty()) throw ValidationError("empty tree");
  return t;
}

namespace {

double mean_at(std::span<const double> y, const std::vector<int>& idx) {
  double s = 0.0;
  for (int i : idx) s += y[std::size_t(i)];
  return idx.empty() ? 0.0 : s / double(idx.size());
}

// Sum of squared errors around the mean, from raw sums.
double sse_of(double sum, double sum_sq, double n) {
  return n > 0.0 ? sum_sq - sum * sum / n : 0.0;
}

struct ExtraBuild {
  std::span<const FeatRow> x;
  std::span<const double> y;
  const std::vector<int>* dims;
  int k_features;
  int min_leaf;
  Rng* rng;
  Tree tree;

  int build(std::vector<int>& idx) {
    const int node_id = int(tree.nodes.size());
    tree.nodes.push_back(TreeNode{});
    tree.nodes[std::size_t(node_id)].value = mean_at(y, idx);

    bool constant = true;
    for (std::size_t i = 1; i < idx.size(); ++i)
      if (y[std::size_t(idx[i])] != y[std::size_t(idx[0])]) {
        constant = false;
        break;
      }
    if (int(idx.size()) < 2 * min_leaf || constant) return node_id;

    // Candidate dimensions: k random draws from the live set.
    double best_score = std::numeric_limits<double>::infinity();
    int best_dim = -1;
    double best_thr = 0.0;
    for (int c = 0; c < k_features; ++c) {
      const int dim =
          (*dims)[std::size_t(rng->next_below(std::uint64_t(dims->size())))];
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (int i : idx) {
        const double v = x[std::size_t(i)][std::size_t(dim)];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (!(hi > lo)) continue;
      const double thr = rng->next_uniform(lo, hi);
      if (!(thr > lo)) continue;

      double ls = 0, lss = 0, rs = 0, rss = 0;
      int ln = 0, rn = 0;
      for (int i : idx) {
        const double v = x[std::size_t(i)][std::size_t(dim)];
        const double t = y[std::size_t(i)];
        if (v < thr) {
          ls += t;
          lss += t * t;
          ++ln;
        } else {
          rs += t;
          rss += t * t;
          ++rn;
        }
      }
      if (ln < min_leaf || rn < min_leaf) continue;
      const double score =
          sse_of(ls, lss, double(ln)) + sse_of(rs, rss, double(rn));
      if (score < best_score) {
        best_score = score;
        best_dim = dim;
        best_thr = thr;
      }
    }
    if (best_dim < 0) return node_id;

    std::vector<int> left, right;
    for (int i : idx)
      (x[std::size_t(i)][std::size_t(best_dim)] < best_thr ? left : right)
          .push_back(i);
    idx.clear();
    idx.shrink_to_fit();

    tree.nodes[std::size_t(node_id)].feature = best_dim;
    tree.nodes[std::size_t(node_id)].threshold = best_thr;
    const int l = build(left);
    tree.nodes[std::size_t(node_id)].left = l;
    const int r = build(right);
    tree.nodes[std::size_t(node_id)].right = r;
    return node_id;
  }
};

struct SplitChoice {
  double gain = 0.0;
  int dim = -1;
  double threshold = 0.0;
};

SplitChoice best_exact_split(std::span<const FeatRow> x,
                             std::span<const double> y,
                             const std::vector<int>& idx,
                             const std::vector<int>& dims, int min_leaf) {
  SplitChoice best;
  double total = 0, total_sq = 0;
  for (int i : idx) {
    total += y[std::size_t(i)];
    total_sq += y[std::size_t(i)] * y[std::size_t(i)];
  }
  const double parent_sse = sse_of(total, total_sq, double(idx.size()));

  std::vector<int> order(idx);
  for (int dim : dims) {
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double va = x[std::size_t(a)][std::size_t(dim)];
      const double vb = x[std::size_t(b)][std::size_t(dim)];
      return va < vb || (va == vb && a < b);
    });
    double ls = 0, lss = 0;
    for (std::size_t p = 0; p + 1 < order.size(); ++p) {
      const double t = y[std::size_t(order[p])];
      ls += t;
      lss += t * t;
      const double v = x[std::size_t(order[p])][std::size_t(dim)];
      const double vn = x[std::size_t(order[p + 1])][std::size_t(dim)];
      if (v == vn) continue;
      const int ln = int(p) + 1;
      const int rn = int(order.size()) - ln;
      if (ln < min_leaf || rn < min_leaf) continue;
      const double gain = parent_sse - sse_of(ls, lss, double(ln)) -
                          sse_of(total - ls, total_sq - lss, double(rn));
      if (gain > best.gain) {
        best.gain = gain;
        best.dim = dim;
        // Midpoint keeps prediction stable under small input jitter.
        best.threshold = v + (vn - v) / 2.0;
      }
    }
  }
  return best;
}

}  // namespace

Tree fit_extra_tree(std::span<const FeatRow> x, std::span<const double> y,
                    const std::vector<int>& dims, int k_features,
                    int min_leaf, Rng& rng) {
  if (x.empty() || x.size() != y.size())
    throw ValidationError("tree training needs matching non-empty x/y");
  if (dims.empty()) throw ValidationError("no live feature dimensions");
  if (k_features < 1 || min_leaf < 1)
    throw ValidationError("bad tree hyperparameters");
  ExtraBuild b{x, y, &dims, k_features, min_leaf, &rng, {}};
  std::vector<int> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  b.build(idx);
  return std::move(b.tree);
}

Tree fit_greedy_tree(std::span<const FeatRow> x, std::span<const double> y,
                     const std::vector<int>& indices,
                     const std::vector<int>& dims, int max_leaves,
                     int min_leaf, int mtry, Rng& rng) {
  if (indices.empty()) throw ValidationError("tree training needs samples");
  if (dims.empty()) throw ValidationError("no live feature dimensions");
  if (max_leaves < 1 || min_leaf < 1)
    throw ValidationError("bad tree hyperparameters");

  Tree tree;
  tree.nodes.push_back(TreeNode{});
  tree.nodes[0].value = mean_at(y, indices);

  struct Open {
    int node;
    std::vector<int> idx;
    SplitChoice split;
  };
  auto choose_dims = [&]() {
    if (mtry <= 0 || mtry >= int(dims.size())) return dims;
    std::vector<int> pool(dims);
    rng.shuffle(pool);
    pool.resize(std::size_t(mtry));
    std::sort(pool.begin(), pool.end());
    return pool;
  };

  std::vector<Open> open;
  open.push_back({0, indices, best_exact_split(x, y, indices,
                                               choose_dims(), min_leaf)});
  int leaves = 1;
  while (leaves < max_leaves) {
    // Split the open leaf with the largest gain.
    std::size_t pick = open.size();
    double best_gain = 0.0;
    for (std::size_t i = 0; i < open.size(); ++i)
      if (open[i].split.dim >= 0 && open[i].split.gain > best_gain) {
        best_gain = open[i].split.gain;
        pick = i;
      }
    if (pick == open.size()) break;

    Open cur = std::move(open[pick]);
    open.erase(open.begin() + std::ptrdiff_t(pick));
    std::vector<int> left, right;
    for (int i : cur.idx)
      (x[std::size_t(i)][std::size_t(cur.split.dim)] < cur.split.threshold
           ? left
           : right)
          .push_back(i);

    const int lnode = int(tree.nodes.size());
    tree.nodes.push_back(TreeNode{});
    tree.nodes.back().value = mean_at(y, left);
    const int rnode = int(tree.nodes.size());
    tree.nodes.push_back(TreeNode{});
    tree.nodes.back().value = mean_at(y, right);
    tree.nodes[std::size_t(cur.node)].feature = cur.split.dim;
    tree.nodes[std::size_t(cur.node)].threshold = cur.split.threshold;
    tree.nodes[std::size_t(cur.node)].left = lnode;
    tree.nodes[std::size_t(cur.node)].right = rnode;

    open.push_back({lnode, left,
                    best_exact_split(x, y, left, choose_dims(), min_leaf)});
    open.push_back({rnode, std::move(right), {}});
    open.back().split =
        best_exact_split(x, y, open.back().idx, choose_dims(), min_leaf);
    ++leaves;
  }
  return tree;
}

}  // namespace qerover
