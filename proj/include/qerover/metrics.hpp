// metrics.hpp -- WER, MAE, MAP@L, balanced accuracy, significance, diversity.
#ifndef QEROVER_METRICS_HPP
#define QEROVER_METRICS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "qerover/vocab.hpp"
#include "qerover/wtn.hpp"

namespace qerover {

struct EditCounts {
  std::int64_t substitutions = 0;
  std::int64_t insertions = 0;
  std::int64_t deletions = 0;
  std::int64_t reference_words = 0;

  std::int64_t errors() const { return substitutions + insertions + deletions; }
  EditCounts& operator+=(const EditCounts& o) {
    substitutions += o.substitutions;
    insertions += o.insertions;
    deletions += o.deletions;
    reference_words += o.reference_words;
    return *this;
  }
  bool operator==(const EditCounts&) const = default;
};

struct WerResult {
  EditCounts counts;
  double rate = 0.0;
};

// Uniform-cost Levenshtein with a deterministic edit script (backtrace
// preference match > substitution > deletion > insertion). The rate
// denominator is max(reference_words, 1) so empty references score
// finitely.
WerResult wer(const WordSeq& hyp, const WordSeq& ref);
WerResult wer(const std::vector<std::string>& hyp,
              const std::vector<std::string>& ref);

// Plain edit distance, no script. Faster than wer() when only the
// distance matters.
std::int64_t edit_distance(const WordSeq& a, const WordSeq& b);

// Pooled errors over pooled reference words.
double corpus_wer(const std::vector<EditCounts>& counts);

double mae(const std::vector<double>& pred, const std::vector<double>& truth);

// Average precision at depth L. Both orders list the same items best
// first. P(l) counts exact-position agreements by default; set_overlap
// switches to |top-l ∩ top-l| counting.
double ap_at_l(const std::vector<int>& predicted_order,
               const std::vector<int>& true_order, int l,
               bool set_overlap = false);
double map_at_l(const std::vector<std::vector<int>>& predicted_orders,
                const std::vector<std::vector<int>>& true_orders, int l,
                bool set_overlap = false);

// Mean of true-positive and true-negative rates; with single-class truth
// the undefined rate is excluded.
double balanced_accuracy(const std::vector<int>& pred,
                         const std::vector<int>& truth);

struct MatchedPairsOptions {
  int num_resamples = 1000;
  double alpha = 0.95;
  std::uint64_t seed = 1;
  int jobs = 1;
  // Normal-approximation test on per-segment error differences instead of
  // bootstrap sign agreement.
  bool gillick = false;
};

struct MatchedPairsResult {
  bool significant = false;
  // Bootstrap mode: fraction of resamples whose WER difference matches the
  // full-corpus sign. Normal-approximation mode: |z| statistic.
  double agreement = 0.0;
  int full_sign = 0;  // sign of corpus WER(a) - corpus WER(b)
};

MatchedPairsResult matched_pairs_test(const std::vector<EditCounts>& a,
                                      const std::vector<EditCounts>& b,
                                      const MatchedPairsOptions& options = {});

// Mean half-squared-L2 spread of the per-input one-hot bin indicators
// around each bin's average indicator; null is an ordinary symbol.
// Always in [0, 1/2]; 0 for an empty network.
double diversity(const WordTransitionNetwork& wtn);

}  // namespace qerover

#endif  // QEROVER_METRICS_HPP
