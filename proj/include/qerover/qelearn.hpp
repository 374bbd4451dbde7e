// qelearn.hpp -- QE training sets, tie untying, XRT regressor, pairwise
// ranking forest, and cross-validation.
#ifndef QEROVER_QELEARN_HPP
#define QEROVER_QELEARN_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qerover/features.hpp"
#include "qerover/tree.hpp"
#include "qerover/types.hpp"

namespace qerover {

struct TrainingInstance {
  std::string segment_id;
  std::string system_id;
  FeatureVector features;
  // Capped true WER for regression; 1-based (possibly tied) rank for
  // pairwise ranking.
  double label = 0.0;
};

// One instance per (segment, system); label = capped true WER against the
// segment reference. Segments without a reference are skipped with a
// warning.
std::vector<TrainingInstance> build_rr1(const Dataset& dataset,
                                        const FeatureTable& features,
                                        double wer_cap,
                                        std::vector<std::string>* warnings);

// One instance per segment, its system drawn uniformly under the seed.
std::vector<TrainingInstance> build_rr2(const Dataset& dataset,
                                        const FeatureTable& features,
                                        double wer_cap, std::uint64_t seed,
                                        std::vector<std::string>* warnings);

// One instance per (segment, system); label = competition rank by true
// WER within the segment (ties share the smallest rank of their block).
std::vector<TrainingInstance> build_mlr(const Dataset& dataset,
                                        const FeatureTable& features,
                                        double wer_cap,
                                        std::vector<std::string>* warnings);

// Systems ordered best first by training-corpus WER; ties keep dataset
// order. This is the strict order used to break per-segment ties.
std::vector<std::string> global_prior(const Dataset& dataset, double wer_cap);

// Rewrites rank labels so every segment carries a strict 1..R order:
// sort by (true WER rank, prior position). Instances must be MLR-style.
void untie(std::vector<TrainingInstance>& instances,
           const std::vector<std::string>& prior);

struct XrtParams {
  int n_trees = 100;
  int k_features = 9;
  int min_leaf = 1;
  std::uint64_t seed = 1;
};

struct XrtModel {
  XrtParams params;
  std::vector<int> dims;
  std::vector<Tree> trees;

  double predict(const FeatRow& x) const;
};

XrtModel fit_xrt(std::span<const FeatRow> x, std::span<const double> y,
                 const std::vector<int>& dims, const XrtParams& params,
                 int jobs = 1);

struct RankerParams {
  int n_bags = 10;
  int trees_per_bag = 50;
  int leaves = 16;
  double learning_rate = 0.1;
  std::uint64_t seed = 1;
};

// One segment's worth of ranking data: instance indices plus their rank
// labels (smaller = better).
struct RankGroup {
  std::vector<int> instance_index;
  std::vector<double> rank;
};

struct RankerModel {
  RankerParams params;
  std::vector<int> dims;
  std::vector<std::vector<Tree>> bags;  // each bag is a boosted sequence

  double score(const FeatRow& x) const;
};

// Bagged pairwise-logistic gradient boosting: each bag bootstraps
// segments, then fits trees to the pairwise preference gradients; scoring
// is pointwise, higher = better.
RankerModel fit_ranker(std::span<const FeatRow> x,
                       const std::vector<RankGroup>& groups,
                       const std::vector<int>& dims,
                       const RankerParams& params, int jobs = 1);

// Versioned model envelope; exactly one engine is present.
struct QEModel {
  static constexpr int kVersion = 1;
  std::string kind;  // "xrt_regressor" or "ranking_forest"
  unsigned feature_mask = 0;
  std::optional<XrtModel> xrt;
  std::optional<RankerModel> ranker;

  // predWER for the regressor, preference score for the ranker.
  double predict(const FeatureVector& fv) const;
  void save(const std::string& path) const;
  static QEModel load(const std::string& path);
};

// Indices of hypotheses best first: regressors ascending by prediction,
// rankers descending by score; stable in the input order.
std::vector<int> rank_order(const QEModel& model,
                            const std::vector<FeatureVector>& features);

// Feature dimensions usable under a group mask (see FeatureVector bits).
std::vector<int> live_dims(unsigned mask);

// Speaker-disjoint folds: speakers greedily balanced by segment count.
// Returns fold id per segment (dataset order).
std::vector<int> speaker_folds(const Dataset& dataset, int k);

struct XrtCvOutcome {
  XrtParams best;
  double best_mae = 0.0;
  // Out-of-fold predictions keyed by (segment_id, system_id).
  std::map<std::pair<std::string, std::string>, double> oof;
};

XrtCvOutcome cv_xrt(const Dataset& dataset,
                    const std::vector<TrainingInstance>& instances,
                    const std::vector<XrtParams>& grid, int k, int jobs = 1,
                    unsigned mask = ~0u);

struct RankerCvOutcome {
  RankerParams best;
  double best_map = 0.0;
  std::map<std::pair<std::string, std::string>, double> oof_scores;
};

RankerCvOutcome cv_ranker(const Dataset& dataset,
                          const std::vector<TrainingInstance>& instances,
                          const std::vector<RankerParams>& grid, int k,
                          int map_depth, int jobs = 1, unsigned mask = ~0u);

// Stock tuning grids.
std::vector<XrtParams> default_xrt_grid(std::uint64_t seed);
std::vector<RankerParams> default_ranker_grid(std::uint64_t seed);

struct TrainQeOptions {
  std::string method = "mlr";  // rr1 | rr2 | mlr
  bool untie = false;          // mlr only
  unsigned mask = FeatureVector::kSignalBit | FeatureVector::kTextualBit |
                  FeatureVector::kHybridBit | FeatureVector::kWordBit;
  double wer_cap = 2.0;
  std::uint64_t seed = 1;
  // 0 trains once with default parameters; otherwise tunes over the stock
  // grid with this many speaker-disjoint folds.
  int cv_folds = 0;
  int map_depth = 0;  // 0 = system count
  int jobs = 1;
};

struct TrainQeResult {
  QEModel model;
  // Out-of-fold MAE (rr1/rr2) or MAP (mlr) when tuning ran, else 0.
  double cv_objective = 0.0;
  std::vector<std::string> warnings;
};

// Full training-set construction + optional tuning + final fit.
TrainQeResult train_qe(const Dataset& dataset, const FeatureTable& features,
                       const TrainQeOptions& options);

}  // namespace qerover

#endif  // QEROVER_QELEARN_HPP
