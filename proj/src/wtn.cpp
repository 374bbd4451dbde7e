#include "qerover/wtn.hpp"

#include <algorithm>
#include <cstdint>
#include <map>

#include "qerover/common.hpp"

namespace qerover {
namespace {

bool bin_matches(const Bin& bin, WordId word) {
  for (const auto& c : bin.candidates)
    if (c.entry != kNullWord && c.entry == word) return true;
  return false;
}

}  // namespace

WordTransitionNetwork wtn_from_hypothesis(const WordSeq& hyp) {
  WordTransitionNetwork wtn;
  wtn.num_inputs = 1;
  wtn.bins.reserve(hyp.size());
  for (WordId w : hyp) wtn.bins.push_back(Bin{{Candidate{w, 1}}});
  return wtn;
}

WordTransitionNetwork align_pair(const WordTransitionNetwork& wtn,
                                 const WordSeq& hyp) {
  const std::size_t nb = wtn.bins.size();
  const std::size_t nh = hyp.size();
  const int new_rank = wtn.num_inputs + 1;

  // dp[i][j]: cost of aligning the first i bins with the first j words.
  std::vector<std::vector<std::uint32_t>> dp(
      nb + 1, std::vector<std::uint32_t>(nh + 1, 0));
  for (std::size_t i = 1; i <= nb; ++i) dp[i][0] = std::uint32_t(i);
  for (std::size_t j = 1; j <= nh; ++j) dp[0][j] = std::uint32_t(j);
  for (std::size_t i = 1; i <= nb; ++i) {
    for (std::size_t j = 1; j <= nh; ++j) {
      const std::uint32_t diag =
          dp[i - 1][j - 1] + (bin_matches(wtn.bins[i - 1], hyp[j - 1]) ? 0 : 1);
      const std::uint32_t del = dp[i - 1][j] + 1;
      const std::uint32_t ins = dp[i][j - 1] + 1;
      dp[i][j] = std::min({diag, del, ins});
    }
  }

  // Backtrace, preferring match, then substitution, then deletion, then
  // insertion; collected in reverse bin order.
  WordTransitionNetwork out;
  out.num_inputs = new_rank;
  std::vector<Bin> rev;
  rev.reserve(std::max(nb, nh));
  std::size_t i = nb, j = nh;
  auto null_prefix = [&] {
    Bin bin;
    bin.candidates.reserve(std::size_t(new_rank));
    for (int r = 1; r < new_rank; ++r)
      bin.candidates.push_back(Candidate{kNullWord, r});
    return bin;
  };
  while (i > 0 || j > 0) {
    bool take_diag = false;
    if (i > 0 && j > 0) {
      const std::uint32_t cost =
          bin_matches(wtn.bins[i - 1], hyp[j - 1]) ? 0 : 1;
      take_diag = dp[i][j] == dp[i - 1][j - 1] + cost;
    }
    if (take_diag) {
      Bin bin = wtn.bins[i - 1];
      bin.candidates.push_back(Candidate{hyp[j - 1], new_rank});
      rev.push_back(std::move(bin));
      --i, --j;
    } else if (i > 0 && dp[i][j] == dp[i - 1][j] + 1) {
      Bin bin = wtn.bins[i - 1];
      bin.candidates.push_back(Candidate{kNullWord, new_rank});
      rev.push_back(std::move(bin));
      --i;
    } else {
      Bin bin = null_prefix();
      bin.candidates.push_back(Candidate{hyp[j - 1], new_rank});
      rev.push_back(std::move(bin));
      --j;
    }
  }
  out.bins.assign(rev.rbegin(), rev.rend());
  return out;
}

WordTransitionNetwork build_wtn(const std::vector<WordSeq>& ranked_hyps) {
  if (ranked_hyps.empty())
    throw ValidationError("build_wtn needs at least one hypothesis");
  WordTransitionNetwork wtn = wtn_from_hypothesis(ranked_hyps[0]);
  for (std::size_t r = 1; r < ranked_hyps.size(); ++r)
    wtn = align_pair(wtn, ranked_hyps[r]);
  return wtn;
}

WordSeq vote(const WordTransitionNetwork& wtn, const VoteOptions& options) {
  WordSeq out;
  for (const auto& bin : wtn.bins) {
    // Weight and first (smallest) source rank per distinct entry. Rank
    // sets of distinct entries are disjoint, so first ranks are unique
    // and the tie order is total.
    std::map<WordId, std::pair<double, int>> tally;
    for (const auto& c : bin.candidates) {
      const double w = c.entry == kNullWord ? options.null_weight : 1.0;
      auto [it, fresh] = tally.try_emplace(c.entry, 0.0, c.source_rank);
      it->second.first += w;
      if (!fresh) it->second.second = std::min(it->second.second, c.source_rank);
    }
    WordId best = kNullWord;
    double best_w = -1.0;
    int best_rank = 0;
    for (const auto& [entry, wr] : tally) {
      const auto [weight, first_rank] = wr;
      if (weight > best_w || (weight == best_w && first_rank < best_rank)) {
        best = entry;
        best_w = weight;
        best_rank = first_rank;
      }
    }
    if (best != kNullWord) out.push_back(best);
  }
  return out;
}

WordSeq combine_segment(const std::vector<WordSeq>& ranked_hyps,
                        const VoteOptions& options) {
  return vote(build_wtn(ranked_hyps), options);
}

std::vector<WordSeq> combine_corpus(
    const std::vector<std::vector<WordSeq>>& ranked_hyps_per_segment,
    const VoteOptions& options, int jobs) {
  std::vector<WordSeq> out(ranked_hyps_per_segment.size());
  parallel_for(std::int64_t(ranked_hyps_per_segment.size()), jobs,
               [&](std::int64_t k) {
                 out[std::size_t(k)] =
                     combine_segment(ranked_hyps_per_segment[std::size_t(k)],
                                     options);
               });
  return out;
}

std::string dump_wtn(const WordTransitionNetwork& wtn, const Vocab& vocab) {
  std::string out;
  for (const auto& bin : wtn.bins) {
    for (std::size_t i = 0; i < bin.candidates.size(); ++i) {
      if (i) out += ' ';
      const auto& c = bin.candidates[i];
      out += (c.entry == kNullWord ? std::string("@") : vocab.word(c.entry));
      out += '@';
      out += std::to_string(c.source_rank);
    }
    out += '\n';
  }
  return out;
}

}  // namespace qerover
