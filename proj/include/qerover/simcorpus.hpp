// simcorpus.hpp -- deterministic synthetic corpus generator: references,
// corrupted multi-system hypotheses, tone+noise audio, ground-truth WER.
#ifndef QEROVER_SIMCORPUS_HPP
#define QEROVER_SIMCORPUS_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qerover/types.hpp"
#include "qerover/wav.hpp"

namespace qerover {

struct SimProfile {
  int num_segments = 100;
  int num_systems = 4;
  int vocab_size = 200;
  // One base error rate per system; per-segment rates add uniform jitter.
  std::vector<double> base_error_rates;
  double jitter = 0.05;
  double p_sub = 0.6;
  double p_ins = 0.2;
  double p_del = 0.2;
  // Probability that a corrupted word is drawn from the marked error
  // vocabulary, which textual/word features can detect.
  double rho = 0.0;
  std::uint64_t seed = 1;
  int num_speakers = 8;
  int sample_rate = 8000;
  bool with_audio = true;
  int min_ref_len = 5;
  int max_ref_len = 20;

  void validate() const;
};

struct SimCorpus {
  Dataset dataset;
  // Keyed by utterance id; empty when audio generation is off.
  std::map<std::string, WavData> audio;
  // The clean vocabulary the references draw from.
  std::vector<std::string> vocabulary;
};

SimCorpus generate(const SimProfile& profile, int jobs = 1);

// The generator's clean vocabulary (purely alphabetic words), useful for
// training lexicon/LM resources that match the corpus.
std::vector<std::string> sim_vocabulary(int vocab_size);

// Writes WAVs, the manifest/segment/CTM files, a letter-as-phoneme
// lexicon (lexicon.tsv + phoneme_classes.tsv), and the reference
// sentences (lm_text.txt) under dir; returns the manifest path.
std::string emit(const SimCorpus& corpus, const std::string& dir);

}  // namespace qerover

#endif  // QEROVER_SIMCORPUS_HPP
