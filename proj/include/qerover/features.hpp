// features.hpp -- the 75 per-(segment, hypothesis) QE features.
#ifndef QEROVER_FEATURES_HPP
#define QEROVER_FEATURES_HPP

#include <array>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qerover/dsp.hpp"
#include "qerover/lexicon.hpp"
#include "qerover/ngram.hpp"
#include "qerover/types.hpp"

namespace qerover {

// Fixed 75-dimensional layout: 17 signal, 10 textual, 26 hybrid, 22 word.
// Unavailable groups are zero-filled with their mask bit cleared.
struct FeatureVector {
  static constexpr int kDim = 75;
  static constexpr int kSignalOffset = 0;
  static constexpr int kSignalCount = 17;
  static constexpr int kTextualOffset = 17;
  static constexpr int kTextualCount = 10;
  static constexpr int kHybridOffset = 27;
  static constexpr int kHybridCount = 26;
  static constexpr int kWordOffset = 53;
  static constexpr int kWordCount = 22;

  enum MaskBit : unsigned {
    kSignalBit = 1u,
    kTextualBit = 2u,
    kHybridBit = 4u,
    kWordBit = 8u,
    kPosBit = 16u,  // POS-derived slots inside textual/word groups
  };

  std::array<double, kDim> values{};
  unsigned mask = 0;

  bool operator==(const FeatureVector&) const = default;
};

struct FeatureConfig {
  bool base = true;  // signal + textual + hybrid groups
  bool word = true;  // word group
  std::vector<std::string> hesitation_words = {"uh", "um", "eh",
                                               "ah", "er", "hmm"};
  std::vector<std::string> stop_words = {
      "a",    "an",  "and", "are",  "as",   "at",   "be",   "been", "for",
      "he",   "i",   "in",  "is",   "it",   "not",  "of",   "on",   "or",
      "she",  "that", "the", "they", "this", "to",   "was",  "we",
      "were", "with", "you"};
  // Shortest uncovered stretch of the segment counted as a silence.
  double min_silence = 0.0;
  DspConfig dsp;
};

// Shared read-only scorers and tables. Null members disable the features
// that need them (those dimensions stay 0).
struct FeatureResources {
  const NgramLM* lm = nullptr;      // textual-feature LM over words
  const NgramLM* pos_lm = nullptr;  // LM over POS tag sequences
  const WordScorer* lm_in = nullptr;   // in-domain word-level n-gram
  const WordScorer* lm_out = nullptr;  // out-of-domain word-level n-gram
  const WordScorer* aux_in = nullptr;   // second scorer pair standing in
  const WordScorer* aux_out = nullptr;  // for the neural-LM slots
  const Lexicon* lexicon = nullptr;
  const PosTable* pos_table = nullptr;
};

// 12 MFCC means (coefficients 1..12), whole-segment log energy,
// mean/min/max raw frame energy, duration in seconds.
std::array<double, FeatureVector::kSignalCount> extract_signal_features(
    std::span<const double> samples, int sample_rate, const DspConfig& dsp);

// Word count, LM log probability, POS LM log probability, both log
// perplexities, and the five token-share percentages (as fractions).
// pos_ok reports whether every token carried a POS tag.
std::array<double, FeatureVector::kTextualCount> extract_textual_features(
    const std::vector<Token>& tokens, const FeatureResources& res,
    const FeatureConfig& cfg, bool* pos_ok);

// SNR, noise/word energy statistics, silence/word counts, rates,
// durations and their ratios, pitch statistics, hesitation count and rate.
std::array<double, FeatureVector::kHybridCount> extract_hybrid_features(
    const Segment& segment, const std::vector<Token>& tokens,
    std::span<const double> samples, int sample_rate,
    const FeatureConfig& cfg);

// Per-token values averaged over the hypothesis: POS ids and scores of
// previous/current/next word, four LM probability slots, five phoneme
// class counts, homophones, lexical neighbors, five binary indicators.
std::array<double, FeatureVector::kWordCount> extract_word_features(
    const Segment& segment, const std::vector<Token>& tokens,
    const FeatureResources& res, const FeatureConfig& cfg, bool* pos_ok);

// Full vector for one hypothesis; pass an empty sample span when the
// segment has no audio.
FeatureVector extract_features(const Segment& segment,
                               const Hypothesis& hypothesis,
                               std::span<const double> samples,
                               int sample_rate, const FeatureResources& res,
                               const FeatureConfig& cfg);

using FeatureTable =
    std::map<std::pair<std::string, std::string>, FeatureVector>;

struct ExtractionResult {
  FeatureTable features;
  std::vector<std::string> warnings;
};

ExtractionResult extract_all(const Dataset& dataset,
                             const FeatureResources& res,
                             const FeatureConfig& cfg, int jobs = 1);

// CSV with header segment_id,system_id,f000..f074,mask.
void write_features_csv(const std::string& path, const FeatureTable& table);
FeatureTable read_features_csv(const std::string& path);

}  // namespace qerover

#endif  // QEROVER_FEATURES_HPP
