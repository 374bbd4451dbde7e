// pipeline.hpp -- ranking sources, corpus combination at fixed/auto
// levels, and the per-level evaluation report with significance marks.
#ifndef QEROVER_PIPELINE_HPP
#define QEROVER_PIPELINE_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qerover/features.hpp"
#include "qerover/levelsel.hpp"
#include "qerover/metrics.hpp"
#include "qerover/qelearn.hpp"
#include "qerover/types.hpp"
#include "qerover/wtn.hpp"

namespace qerover {

enum class RankSource {
  kRandom,
  kSysO,
  kSegO,
  kInSysO,
  kInSegO,
  kModel,
};

RankSource parse_rank_source(const std::string& name);
const char* rank_source_name(RankSource source);

// Per segment (dataset order), system indices best first.
using SegmentOrders = std::vector<std::vector<int>>;

// syso/sego and their inversions; both need references.
SegmentOrders oracle_orders(const Dataset& dataset, RankSource source,
                            double wer_cap);

// Independent per-segment shuffles; `iteration` selects the draw.
SegmentOrders random_orders(const Dataset& dataset, std::uint64_t seed,
                            std::uint64_t iteration);

SegmentOrders model_orders(const Dataset& dataset,
                           const FeatureTable& features,
                           const QEModel& model);

struct CombineResult {
  // Combined words for every segment, dataset order.
  std::vector<std::vector<std::string>> outputs;
  // Edit counts for referenced segments only, dataset order.
  std::vector<EditCounts> counts;
  std::optional<double> wer;
};

// ROVER over the top `level` hypotheses of each segment's order.
CombineResult combine_at_level(const Dataset& dataset,
                               const SegmentOrders& orders, int level,
                               const VoteOptions& vote = {}, int jobs = 1);

// Per-level outputs for the auto-level flow; levels below
// kMinCombinationLevel are not offered.
struct LevelScan {
  std::vector<int> levels;  // kMinCombinationLevel..R
  std::vector<CombineResult> results;  // parallel to levels
};

LevelScan scan_levels(const Dataset& dataset, const SegmentOrders& orders,
                      const VoteOptions& vote = {}, int jobs = 1);

// predWER per (segment_id, system_id) from a QE regressor; empty table
// zeroes the predicted-WER level features.
using PredWerTable = std::map<std::pair<std::string, std::string>, double>;

// Level-classifier training instances over referenced segments.
std::vector<LevelInstance> build_level_instances(
    const Dataset& dataset, const SegmentOrders& orders,
    const PredWerTable& pred_wer, const VoteOptions& vote = {}, int jobs = 1);

std::vector<LevelDecisionRow> choose_levels(const Dataset& dataset,
                                            const SegmentOrders& orders,
                                            const LevelClassifier& clf,
                                            const PredWerTable& pred_wer,
                                            const VoteOptions& vote = {},
                                            int jobs = 1);

// Combination at a per-segment level choice.
CombineResult combine_at_chosen_levels(
    const Dataset& dataset, const SegmentOrders& orders,
    const std::vector<LevelDecisionRow>& decisions,
    const VoteOptions& vote = {}, int jobs = 1);

struct EvaluateOptions {
  int random_iters = 20;
  std::uint64_t seed = 1;
  double wer_cap = 2.0;
  VoteOptions vote;
  MatchedPairsOptions significance;
  int jobs = 1;
};

struct EvalCell {
  double wer = 0.0;
  double stddev = 0.0;   // random rows only
  std::string marks;     // subset of "†•★"
};

struct EvalRow {
  std::string method;
  std::vector<EvalCell> cells;  // parallel to report levels
};

struct EvaluateReport {
  std::vector<int> levels;  // 1..R
  std::vector<EvalRow> rows;
};

// Random mean/std plus the four oracles and optionally a model row, with
// matched-pairs marks: † vs the median random run, • vs SysO, ★ vs SegO.
EvaluateReport evaluate_dataset(const Dataset& dataset,
                                const FeatureTable* features,
                                const QEModel* model,
                                const EvaluateOptions& options);

std::string render_report(const EvaluateReport& report);
nlohmann::json report_to_json(const EvaluateReport& report);

}  // namespace qerover

#endif  // QEROVER_PIPELINE_HPP
