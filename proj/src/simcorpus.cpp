#include "qerover/simcorpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "qerover/common.hpp"
#include "qerover/corpus.hpp"
#include "qerover/metrics.hpp"
#include "qerover/vocab.hpp"

namespace qerover {

namespace {

namespace fs = std::filesystem;

std::string base26(int index, int width) {
  std::string s(std::size_t(width), 'a');
  for (int i = width - 1; i >= 0; --i) {
    s[std::size_t(i)] = char('a' + index % 26);
    index /= 26;
  }
  return s;
}

std::string zero_pad(const char* prefix, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%05zu", prefix, index);
  return buf;
}

// Marked error words carry a digit so the non-alphabetic-fraction and
// out-of-vocabulary feature channels respond to injected errors.
std::string error_word(std::uint64_t index) {
  return "x" + std::to_string(index % 997);
}

struct SegmentPlan {
  Segment segment;
  std::vector<Hypothesis> hyps;  // one per system, dataset order
  double mean_rate = 0.0;
  int speaker_index = 0;
};

}  // namespace

void SimProfile::validate() const {
  if (num_segments < 1) throw ValidationError("num_segments must be >= 1");
  if (num_systems < 2) throw ValidationError("num_systems must be >= 2");
  if (vocab_size < 2) throw ValidationError("vocab_size must be >= 2");
  if (base_error_rates.size() != std::size_t(num_systems)) {
    throw ValidationError("need one base error rate per system");
  }
  for (double r : base_error_rates) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw ValidationError("base error rates must lie in [0,1]");
    }
  }
  if (!(jitter >= 0.0 && jitter <= 1.0)) {
    throw ValidationError("jitter must lie in [0,1]");
  }
  double mix = p_sub + p_ins + p_del;
  if (p_sub < 0.0 || p_ins < 0.0 || p_del < 0.0 ||
      std::abs(mix - 1.0) > 1e-9) {
    throw ValidationError("sub/ins/del mix must be non-negative and sum to 1");
  }
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw ValidationError("rho must lie in [0,1]");
  }
  if (num_speakers < 1) throw ValidationError("num_speakers must be >= 1");
  if (sample_rate < 1000) throw ValidationError("sample_rate must be >= 1000");
  if (min_ref_len < 1 || max_ref_len < min_ref_len) {
    throw ValidationError("reference length bounds are invalid");
  }
}

std::vector<std::string> sim_vocabulary(int vocab_size) {
  int width = 1;
  long cap = 26;
  while (cap < vocab_size) {
    cap *= 26;
    ++width;
  }
  std::vector<std::string> vocab;
  vocab.reserve(std::size_t(vocab_size));
  for (int i = 0; i < vocab_size; ++i) vocab.push_back(base26(i, width));
  return vocab;
}

SimCorpus generate(const SimProfile& profile, int jobs) {
  profile.validate();
  const std::size_t k = std::size_t(profile.num_segments);
  const std::size_t r = std::size_t(profile.num_systems);
  const std::vector<std::string> vocab = sim_vocabulary(profile.vocab_size);

  SimCorpus corpus;
  corpus.vocabulary = vocab;
  corpus.dataset.systems.reserve(r);
  for (std::size_t i = 0; i < r; ++i) {
    corpus.dataset.systems.push_back(zero_pad("sys", i));
  }

  std::vector<SegmentPlan> plans(k);
  parallel_for(k, jobs, [&](std::size_t s) {
    SegmentPlan& plan = plans[s];
    Rng seg_rng(Rng::derive(profile.seed, s));
    const int n =
        seg_rng.next_int(profile.min_ref_len, profile.max_ref_len);
    std::vector<std::string> ref;
    ref.reserve(std::size_t(n));
    for (int i = 0; i < n; ++i) {
      ref.push_back(vocab[seg_rng.next_below(vocab.size())]);
    }
    plan.speaker_index = int(s) % profile.num_speakers;

    Segment& seg = plan.segment;
    seg.segment_id = zero_pad("seg", s);
    seg.utterance_id = zero_pad("utt", s);
    seg.speaker_id = zero_pad("spk", std::size_t(plan.speaker_index));
    seg.start = 0.0;
    seg.end = 0.35 * n + 0.2;
    seg.reference = ref;
    if (profile.with_audio) seg.audio_ref = seg.utterance_id;

    plan.hyps.resize(r);
    double rate_sum = 0.0;
    for (std::size_t sys = 0; sys < r; ++sys) {
      Rng rng(Rng::derive(profile.seed, k + s * r + sys));
      double rate = profile.base_error_rates[sys];
      if (profile.jitter > 0.0) {
        rate += rng.next_uniform(-profile.jitter, profile.jitter);
      }
      rate = std::clamp(rate, 0.0, 1.0);
      rate_sum += rate;

      auto corrupted_word = [&](const std::string& original) {
        if (profile.rho > 0.0 && rng.next_double() < profile.rho) {
          return error_word(rng.next_u64());
        }
        std::string w = vocab[rng.next_below(vocab.size())];
        while (w == original && vocab.size() > 1) {
          w = vocab[rng.next_below(vocab.size())];
        }
        return w;
      };

      std::vector<std::string> words;
      words.reserve(ref.size() + 4);
      for (const auto& w : ref) {
        if (rng.next_double() < rate) {
          double type = rng.next_double();
          if (type < profile.p_sub) {
            words.push_back(corrupted_word(w));
          } else if (type < profile.p_sub + profile.p_ins) {
            words.push_back(w);
            words.push_back(corrupted_word(""));
          }
          // Deletions drop the word.
        } else {
          words.push_back(w);
        }
      }

      Hypothesis& hyp = plan.hyps[sys];
      hyp.system_id = corpus.dataset.systems[sys];
      hyp.segment_id = seg.segment_id;
      const std::size_t m = words.size();
      const double span = seg.end - seg.start;
      hyp.tokens.reserve(m);
      for (std::size_t i = 0; i < m; ++i) {
        Token tok;
        tok.word = words[i];
        tok.start = seg.start + span * double(i) / double(m == 0 ? 1 : m);
        tok.duration = 0.8 * span / double(m == 0 ? 1 : m);
        hyp.tokens.push_back(std::move(tok));
      }
      hyp.true_wer = wer(words, ref).rate;
    }
    plan.mean_rate = rate_sum / double(r);
  });

  for (auto& plan : plans) {
    corpus.dataset.segments.push_back(std::move(plan.segment));
    for (auto& hyp : plan.hyps) {
      corpus.dataset.hypotheses[{hyp.segment_id, hyp.system_id}] =
          std::move(hyp);
    }
  }

  if (profile.with_audio) {
    std::vector<WavData> clips(k);
    parallel_for(k, jobs, [&](std::size_t s) {
      const Segment& seg = corpus.dataset.segments[s];
      Rng rng(Rng::derive(profile.seed, k + k * r + s));
      WavData& wav = clips[s];
      wav.sample_rate = profile.sample_rate;
      const std::size_t num_samples =
          std::size_t(std::ceil(seg.end * profile.sample_rate));
      wav.samples.assign(num_samples, 0.0);
      // Harder segments get more noise, tying SNR to difficulty.
      const double noise_amp = 0.01 + 0.3 * plans[s].mean_rate;
      for (auto& v : wav.samples) {
        v = noise_amp * rng.next_uniform(-1.0, 1.0);
      }
      const double freq =
          150.0 + 150.0 * double(plans[s].speaker_index) /
                      double(std::max(1, profile.num_speakers - 1));
      const Hypothesis& first =
          corpus.dataset.hyp(seg.segment_id, corpus.dataset.systems[0]);
      for (const Token& tok : first.tokens) {
        const std::size_t lo =
            std::size_t(std::max(0.0, tok.start) * profile.sample_rate);
        const std::size_t hi = std::min(
            num_samples,
            std::size_t((tok.start + tok.duration) * profile.sample_rate));
        for (std::size_t i = lo; i < hi; ++i) {
          wav.samples[i] += 0.3 * std::sin(2.0 * std::numbers::pi * freq *
                                           double(i) / profile.sample_rate);
        }
      }
    });
    for (std::size_t s = 0; s < k; ++s) {
      corpus.audio[corpus.dataset.segments[s].utterance_id] =
          std::move(clips[s]);
    }
  }

  corpus.dataset.validate();
  return corpus;
}

namespace {

const char* letter_class(char c) {
  switch (c) {
    case 'a': case 'e': case 'i': case 'o': case 'u':
      return "vowel";
    case 'b': case 'p': case 't': case 'd': case 'k': case 'g':
      return "stop";
    case 'f': case 'v': case 's': case 'z': case 'h':
      return "fricative";
    case 'm': case 'n':
      return "nasal";
    case 'l': case 'r': case 'w': case 'y':
      return "liquid";
    default:
      return "other";
  }
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace

std::string emit(const SimCorpus& corpus, const std::string& dir) {
  fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "'");
  Dataset dataset = corpus.dataset;
  if (!corpus.audio.empty()) {
    fs::create_directories(root / "audio", ec);
    if (ec) throw IoError("cannot create directory '" + dir + "/audio'");
    for (const auto& [utt, wav] : corpus.audio) {
      std::string rel = "audio/" + utt + ".wav";
      write_wav((root / rel).string(), wav);
      dataset.audio[utt] = rel;
    }
  }
  if (!corpus.vocabulary.empty()) {
    // Letters stand in for phonemes, so the lexicon covers exactly the
    // clean vocabulary and injected error words stay out-of-lexicon.
    std::string lex;
    for (const auto& word : corpus.vocabulary) {
      lex += word;
      lex += '\t';
      for (std::size_t i = 0; i < word.size(); ++i) {
        if (i > 0) lex += ' ';
        lex += word[i];
      }
      lex += '\n';
    }
    write_text_file(root / "lexicon.tsv", lex);
    std::string classes;
    for (char c = 'a'; c <= 'z'; ++c) {
      classes += c;
      classes += '\t';
      classes += letter_class(c);
      classes += '\n';
    }
    write_text_file(root / "phoneme_classes.tsv", classes);
  }
  std::string text;
  for (const auto& seg : dataset.segments) {
    if (!seg.reference) continue;
    for (std::size_t i = 0; i < seg.reference->size(); ++i) {
      if (i > 0) text += ' ';
      text += (*seg.reference)[i];
    }
    text += '\n';
  }
  if (!text.empty()) write_text_file(root / "lm_text.txt", text);
  return save_dataset(dataset, dir);
}

}  // namespace qerover
