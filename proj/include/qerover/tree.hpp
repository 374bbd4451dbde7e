// tree.hpp -- regression trees shared by the ensemble learners.
#ifndef QEROVER_TREE_HPP
#define QEROVER_TREE_HPP

#include <array>
#include <span>
#include <vector>

#include <json.hpp>

#include "qerover/common.hpp"
#include "qerover/features.hpp"

namespace qerover {

using FeatRow = std::array<double, FeatureVector::kDim>;

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  double value = 0.0;  // leaf prediction
  int left = -1;
  int right = -1;
};

struct Tree {
  std::vector<TreeNode> nodes;

  double predict(const FeatRow& x) const {
    int i = 0;
    while (nodes[std::size_t(i)].feature >= 0) {
      const auto& n = nodes[std::size_t(i)];
      i = x[std::size_t(n.feature)] < n.threshold ? n.left : n.right;
    }
    return nodes[std::size_t(i)].value;
  }

  nlohmann::json to_json() const;
  static Tree from_json(const nlohmann::json& j);
};

// Extremely randomized tree over the whole sample: at each node,
// k_features random dimensions each get one uniformly random cut inside
// their observed range; the best by variance reduction wins. Children
// smaller than min_leaf are rejected.
Tree fit_extra_tree(std::span<const FeatRow> x, std::span<const double> y,
                    const std::vector<int>& dims, int k_features,
                    int min_leaf, Rng& rng);

// Greedy exact regression tree grown best-first to at most max_leaves
// leaves over the given sample indices (with repeats allowed, so bootstrap
// bags work). mtry > 0 samples that many candidate dimensions per node.
Tree fit_greedy_tree(std::span<const FeatRow> x, std::span<const double> y,
                     const std::vector<int>& indices,
                     const std::vector<int>& dims, int max_leaves,
                     int min_leaf, int mtry, Rng& rng);

}  // namespace qerover

#endif  // QEROVER_TREE_HPP
