// wtn.hpp -- word transition networks: iterative alignment and voting.
#ifndef QEROVER_WTN_HPP
#define QEROVER_WTN_HPP

#include <string>
#include <vector>

#include "qerover/vocab.hpp"

namespace qerover {

// One alignment slot entry: the word (or kNullWord) contributed by the
// hypothesis at source_rank.
struct Candidate {
  WordId entry = kNullWord;
  int source_rank = 0;

  bool operator==(const Candidate&) const = default;
};

// A confusion bin: exactly one candidate per source rank folded in so far,
// ranks strictly increasing.
struct Bin {
  std::vector<Candidate> candidates;

  bool operator==(const Bin&) const = default;
};

struct WordTransitionNetwork {
  std::vector<Bin> bins;
  int num_inputs = 0;

  bool operator==(const WordTransitionNetwork&) const = default;
};

// Seeds a WTN from the skeleton hypothesis (rank 1).
WordTransitionNetwork wtn_from_hypothesis(const WordSeq& hyp);

// Folds one hypothesis into the WTN by dynamic programming. Costs: 0 when
// the word matches any non-null entry of a bin, 1 for substitution,
// insertion (a fresh bin, null for all prior ranks), or deletion (the
// hypothesis contributes null to an existing bin). Equal-cost paths are
// broken during backtrace by match > substitution > deletion > insertion.
WordTransitionNetwork align_pair(const WordTransitionNetwork& wtn,
                                 const WordSeq& hyp);

// Folds hypotheses in rank order, first one as skeleton.
WordTransitionNetwork build_wtn(const std::vector<WordSeq>& ranked_hyps);

struct VoteOptions {
  // Weight of null entries in the frequency count; words weigh 1.
  double null_weight = 1.0;
};

// Per-bin frequency voting. Ties go to the entry whose smallest source
// rank is lowest; winning nulls emit nothing.
WordSeq vote(const WordTransitionNetwork& wtn, const VoteOptions& options = {});

WordSeq combine_segment(const std::vector<WordSeq>& ranked_hyps,
                        const VoteOptions& options = {});

// Per-segment combination, parallel over segments when jobs > 1; output
// order always follows input order.
std::vector<WordSeq> combine_corpus(
    const std::vector<std::vector<WordSeq>>& ranked_hyps_per_segment,
    const VoteOptions& options = {}, int jobs = 1);

// Debug rendering: one line per bin, entries as word@rank with "@" for
// null, e.g. "hello@1 @@2".
std::string dump_wtn(const WordTransitionNetwork& wtn, const Vocab& vocab);

}  // namespace qerover

#endif  // QEROVER_WTN_HPP
