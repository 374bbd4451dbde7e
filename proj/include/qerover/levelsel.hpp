// levelsel.hpp -- per-segment prediction of the best combination level
// from diversity/agreement features and a binary classifier.
#ifndef QEROVER_LEVELSEL_HPP
#define QEROVER_LEVELSEL_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qerover/tree.hpp"
#include "qerover/vocab.hpp"
#include "qerover/wtn.hpp"

namespace qerover {

inline constexpr int kMinCombinationLevel = 3;
inline constexpr int kNumLevelFeatures = 8;

using LevelFeatures = std::array<double, kNumLevelFeatures>;

struct LevelInstance {
  std::string segment_id;
  int level = 0;
  LevelFeatures features{};
  int label = 0;  // 1 = this level attains the segment's minimum WER
};

// Features of one candidate level: [0] WTN diversity, [1] lev(first,
// last), [2] mean lev(first, other), [3] mean lev(h_i, h_{i+1}),
// [4] mean lev(h_i, combined), [5..7] mean/min/max predicted WER.
// `hyps` holds the level's hypotheses in rank order.
LevelFeatures level_features(const std::vector<WordSeq>& hyps,
                             const WordSeq& combined,
                             const WordTransitionNetwork& wtn,
                             const std::vector<double>& pred_wer);

// 1 for every level attaining the minimum WER, 0 elsewhere.
std::vector<int> label_levels(const std::vector<double>& level_wers);

enum class LevelAlgo { kNaiveBayes = 0, kRandomForest = 1, kLinearSvm = 2 };

const char* level_algo_name(LevelAlgo algo);

struct LevelClassifier {
  static constexpr int kVersion = 1;
  LevelAlgo algo = LevelAlgo::kNaiveBayes;

  // Degenerate single-class fit: always answer that class.
  bool constant = false;
  int constant_class = 0;

  // Gaussian naive Bayes.
  std::array<double, 2> log_prior{};
  std::array<LevelFeatures, 2> mean{};
  std::array<LevelFeatures, 2> var{};

  // Random forest (probability = clamped mean of tree outputs).
  std::vector<Tree> forest;

  // Linear SVM on standardized features; confidence via the logistic of
  // the margin.
  LevelFeatures scale_mean{};
  LevelFeatures scale_std{};
  LevelFeatures weights{};
  double bias = 0.0;

  // Posterior of the positive class.
  double positive_confidence(const LevelFeatures& x) const;
};

LevelClassifier fit_level_classifier(
    const std::vector<LevelInstance>& instances, LevelAlgo algo,
    std::uint64_t seed, std::vector<std::string>* warnings = nullptr);

struct LevelSelectorOutcome {
  LevelClassifier classifier;
  LevelAlgo chosen = LevelAlgo::kNaiveBayes;
  std::array<double, 3> cv_balanced_accuracy{};
};

// Segment-grouped k-fold selection among the three algorithms by
// balanced accuracy, then a refit of the winner on all data.
LevelSelectorOutcome train_level_selector(
    const std::vector<LevelInstance>& instances, int k, std::uint64_t seed,
    std::vector<std::string>* warnings = nullptr);

struct LevelDecision {
  int level = 0;
  double confidence = 0.0;
};

// Among positively classified levels pick the most confident; if none,
// the most confident overall; ties break toward the smallest level.
LevelDecision predict_level(
    const LevelClassifier& clf,
    const std::vector<std::pair<int, LevelFeatures>>& candidates);

void save_level_classifier(const LevelClassifier& clf,
                           const std::string& path);
LevelClassifier load_level_classifier(const std::string& path);

struct LevelDecisionRow {
  std::string segment_id;
  int level = 0;
  double confidence = 0.0;
};

// CSV: segment_id,chosen_level,confidence.
void write_level_decisions(const std::string& path,
                           const std::vector<LevelDecisionRow>& rows);

}  // namespace qerover

#endif  // QEROVER_LEVELSEL_HPP
