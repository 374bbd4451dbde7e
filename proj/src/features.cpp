#include "qerover/features.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "qerover/common.hpp"
#include "qerover/wav.hpp"

namespace qerover {
namespace {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

double min_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : *std::min_element(v.begin(), v.end());
}

double max_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / double(v.size()));
}

double ratio(double num, double den) { return den != 0.0 ? num / den : 0.0; }

bool is_numeric_token(const std::string& w) {
  bool digit_seen = false;
  for (char c : w) {
    if (std::isdigit(static_cast<unsigned char>(c)))
      digit_seen = true;
    else if (c != '.' && c != ',')
      return false;
  }
  return digit_seen;
}

bool is_plain_alpha(const std::string& w) {
  if (w.empty()) return false;
  for (char c : w)
    if (c < 'a' || c > 'z') return false;
  return true;
}

bool in_list(const std::string& w, const std::vector<std::string>& list) {
  return std::find(list.begin(), list.end(), w) != list.end();
}

// Uncovered stretches of [segment.start, segment.end] longer than
// min_silence, with token spans merged first.
std::vector<std::pair<double, double>> silence_regions(
    const Segment& segment, const std::vector<Token>& tokens,
    double min_silence) {
  std::vector<std::pair<double, double>> spans;
  for (const auto& t : tokens) {
    const double a = std::max(t.start, segment.start);
    const double b = std::min(t.end(), segment.end);
    if (b > a) spans.emplace_back(a, b);
  }
  std::sort(spans.begin(), spans.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& s : spans) {
    if (!merged.empty() && s.first <= merged.back().second)
      merged.back().second = std::max(merged.back().second, s.second);
    else
      merged.push_back(s);
  }
  std::vector<std::pair<double, double>> gaps;
  double cursor = segment.start;
  for (const auto& s : merged) {
    if (s.first - cursor > min_silence) gaps.emplace_back(cursor, s.first);
    cursor = std::max(cursor, s.second);
  }
  if (segment.end - cursor > min_silence)
    gaps.emplace_back(cursor, segment.end);
  return gaps;
}

double mean_word_log_prob(const std::vector<Token>& tokens,
                          const WordScorer* scorer) {
  if (!scorer || tokens.empty()) return 0.0;
  std::vector<std::string> words;
  words.reserve(tokens.size());
  for (const auto& t : tokens) words.push_back(t.word);
  double sum = 0.0;
  for (std::size_t i = 0; i < words.size(); ++i)
    sum += scorer->word_log_prob(std::span(words.data(), i), words[i]);
  return sum / double(words.size());
}

}  // namespace

std::array<double, FeatureVector::kSignalCount> extract_signal_features(
    std::span<const double> samples, int sample_rate, const DspConfig& dsp) {
  std::array<double, FeatureVector::kSignalCount> out{};
  if (samples.empty() || sample_rate <= 0) return out;

  const std::size_t win =
      std::size_t(std::lround(sample_rate * dsp.window_ms / 1000.0));
  if (samples.size() >= win && win > 0) {
    const auto cep = mfcc(samples, sample_rate, dsp);
    for (int c = 1; c <= 12; ++c) {
      double s = 0.0;
      for (const auto& frame : cep) s += frame[std::size_t(c)];
      out[std::size_t(c - 1)] = s / double(cep.size());
    }
  }

  double energy = 0.0;
  for (double x : samples) energy += x * x;
  out[12] = std::log(energy + 1e-12);

  const auto fe = frame_energies(samples, sample_rate, dsp);
  out[13] = mean_of(fe);
  out[14] = min_of(fe);
  out[15] = max_of(fe);
  out[16] = double(samples.size()) / double(sample_rate);
  return out;
}

std::array<double, FeatureVector::kTextualCount> extract_textual_features(
    const std::vector<Token>& tokens, const FeatureResources& res,
    const FeatureConfig& cfg, bool* pos_ok) {
  std::array<double, FeatureVector::kTextualCount> out{};
  bool tags_complete = true;
  for (const auto& t : tokens) tags_complete = tags_complete && t.pos_tag.has_value();
  if (pos_ok) *pos_ok = tags_complete;
  const std::size_t n = tokens.size();
  out[0] = double(n);
  if (n == 0) return out;

  std::vector<std::string> words;
  words.reserve(n);
  for (const auto& t : tokens) words.push_back(t.word);

  if (res.lm) {
    const double lp = res.lm->sentence_log_prob(words);
    out[1] = lp;
    out[3] = -lp / double(n);  // log perplexity
  }
  if (res.pos_lm && tags_complete) {
    std::vector<std::string> tags;
    tags.reserve(n);
    for (const auto& t : tokens) tags.push_back(*t.pos_tag);
    const double lp = res.pos_lm->sentence_log_prob(tags);
    out[2] = lp;
    out[4] = -lp / double(n);
  }

  double numeric = 0.0, nonalpha = 0.0, content = 0.0, nouns = 0.0,
         verbs = 0.0;
  for (const auto& t : tokens) {
    if (is_numeric_token(t.word)) numeric += 1.0;
    if (!is_plain_alpha(t.word)) nonalpha += 1.0;
    if (!in_list(t.word, cfg.stop_words)) content += 1.0;
    if (t.pos_tag) {
      const char c =
          char(std::tolower(static_cast<unsigned char>((*t.pos_tag)[0])));
      if (c == 'n') nouns += 1.0;
      if (c == 'v') verbs += 1.0;
    }
  }
  out[5] = numeric / double(n);
  out[6] = nonalpha / double(n);
  out[7] = content / double(n);
  out[8] = tags_complete ? nouns / double(n) : 0.0;
  out[9] = tags_complete ? verbs / double(n) : 0.0;
  return out;
}

namespace {

// Per-segment DSP products shared by every hypothesis of the segment.
struct SegmentDsp {
  bool has_audio = false;
  std::array<double, FeatureVector::kSignalCount> signal{};
  std::vector<double> frame_energies;
  std::array<double, 4> pitch_stats{};  // mean/std/min/max over voiced
};

SegmentDsp compute_segment_dsp(std::span<const double> samples,
                               int sample_rate, const DspConfig& dsp) {
  SegmentDsp out;
  if (samples.empty() || sample_rate <= 0) return out;
  out.has_audio = true;
  out.signal = extract_signal_features(samples, sample_rate, dsp);
  out.frame_energies = frame_energies(samples, sample_rate, dsp);
  const auto f0 = pitch_track(samples, sample_rate, dsp);
  std::vector<double> voiced;
  for (double v : f0)
    if (v > 0.0) voiced.push_back(v);
  out.pitch_stats = {mean_of(voiced), std_of(voiced), min_of(voiced),
                     max_of(voiced)};
  return out;
}

std::array<double, FeatureVector::kHybridCount> hybrid_from_dsp(
    const Segment& segment, const std::vector<Token>& tokens,
    const SegmentDsp& dsp, const FeatureConfig& cfg) {
  std::array<double, FeatureVector::kHybridCount> out{};
  const double span = segment.span();
  const auto gaps = silence_regions(segment, tokens, cfg.min_silence);

  // Frame energies split into word frames and noise frames by the frame
  // center time.
  std::vector<double> word_e, noise_e;
  const double hop = cfg.dsp.hop_ms / 1000.0;
  const double half_win = cfg.dsp.window_ms / 2000.0;
  for (std::size_t f = 0; f < dsp.frame_energies.size(); ++f) {
    const double center = segment.start + double(f) * hop + half_win;
    bool in_word = false;
    for (const auto& t : tokens)
      if (center >= t.start && center < t.end()) {
        in_word = true;
        break;
      }
    if (in_word)
      word_e.push_back(dsp.frame_energies[f]);
    else
      noise_e.push_back(dsp.frame_energies[f]);
  }

  const double mean_we = mean_of(word_e);
  const double mean_ne = mean_of(noise_e);
  out[0] = (mean_we > 0.0 && mean_ne > 0.0)
               ? 10.0 * std::log10(mean_we / mean_ne)
               : 0.0;
  out[1] = mean_ne;
  out[2] = min_of(noise_e);
  out[3] = max_of(noise_e);
  out[4] = mean_we;
  out[5] = min_of(word_e);
  out[6] = max_of(word_e);
  out[7] = (!word_e.empty() && !noise_e.empty())
               ? max_of(word_e) - min_of(noise_e)
               : 0.0;

  std::vector<double> word_durs, gap_durs;
  for (const auto& t : tokens) word_durs.push_back(t.duration);
  for (const auto& g : gaps) gap_durs.push_back(g.second - g.first);
  const double d_wrd = std::accumulate(word_durs.begin(), word_durs.end(), 0.0);
  const double d_sil = std::accumulate(gap_durs.begin(), gap_durs.end(), 0.0);

  out[8] = double(gaps.size());
  out[9] = ratio(double(gaps.size()), span);
  out[10] = ratio(double(tokens.size()), span);
  out[11] = ratio(double(gaps.size()), double(tokens.size()));
  out[12] = d_wrd;
  out[13] = d_sil;
  out[14] = mean_of(word_durs);
  out[15] = mean_of(gap_durs);
  out[16] = ratio(d_sil, d_wrd);
  out[17] = d_wrd - d_sil;
  out[18] = std_of(word_durs);
  out[19] = std_of(gap_durs);

  if (dsp.has_audio) {
    out[20] = dsp.pitch_stats[0];
    out[21] = dsp.pitch_stats[1];
    out[22] = dsp.pitch_stats[2];
    out[23] = dsp.pitch_stats[3];
  }

  double hes = 0.0;
  for (const auto& t : tokens)
    if (in_list(t.word, cfg.hesitation_words)) hes += 1.0;
  out[24] = hes;
  out[25] = ratio(hes, double(tokens.size()));
  return out;
}

}  // namespace

std::array<double, FeatureVector::kHybridCount> extract_hybrid_features(
    const Segment& segment, const std::vector<Token>& tokens,
    std::span<const double> samples, int sample_rate,
    const FeatureConfig& cfg) {
  return hybrid_from_dsp(segment, tokens,
                         compute_segment_dsp(samples, sample_rate, cfg.dsp),
                         cfg);
}

std::array<double, FeatureVector::kWordCount> extract_word_features(
    const Segment& segment, const std::vector<Token>& tokens,
    const FeatureResources& res, const FeatureConfig& cfg, bool* pos_ok) {
  std::array<double, FeatureVector::kWordCount> out{};
  bool tags_complete = true;
  for (const auto& t : tokens) tags_complete = tags_complete && t.pos_tag.has_value();
  if (pos_ok) *pos_ok = tags_complete;
  const std::size_t n = tokens.size();
  if (n == 0) return out;

  auto tag_id = [&](std::ptrdiff_t i) -> double {
    if (i < 0 || i >= std::ptrdiff_t(n) || !res.pos_table) return -1.0;
    const auto& tag = tokens[std::size_t(i)].pos_tag;
    return tag ? double(res.pos_table->id(*tag)) : -1.0;
  };
  auto tag_score = [&](std::ptrdiff_t i) -> double {
    if (i < 0 || i >= std::ptrdiff_t(n) || !res.pos_table) return 0.0;
    const auto& tag = tokens[std::size_t(i)].pos_tag;
    return tag ? res.pos_table->score(*tag) : 0.0;
  };

  double sums[FeatureVector::kWordCount] = {};
  for (std::size_t i = 0; i < n; ++i) {
    const std::ptrdiff_t pi = std::ptrdiff_t(i);
    if (tags_complete && res.pos_table) {
      sums[0] += tag_id(pi - 1);
      sums[1] += tag_score(pi - 1);
      sums[2] += tag_id(pi);
      sums[3] += tag_score(pi);
      sums[4] += tag_id(pi + 1);
      sums[5] += tag_score(pi + 1);
    }
    if (res.lexicon) {
      const auto& w = tokens[i].word;
      const auto classes = res.lexicon->class_counts(w);
      for (int c = 0; c < 5; ++c) sums[10 + c] += double(classes[std::size_t(c)]);
      sums[15] += double(res.lexicon->homophone_count(w));
      sums[16] += double(res.lexicon->neighbor_count(w));
    }
    if (in_list(tokens[i].word, cfg.stop_words)) sums[17] += 1.0;
    if (i + 1 < n && tokens[i].word == tokens[i + 1].word) sums[18] += 1.0;
    if (i > 0 && tokens[i].word == tokens[i - 1].word) sums[19] += 1.0;
    const double gap_after = (i + 1 < n ? tokens[i + 1].start : segment.end) -
                             tokens[i].end();
    const double gap_before =
        tokens[i].start - (i > 0 ? tokens[i - 1].end() : segment.start);
    if (gap_after > cfg.min_silence) sums[20] += 1.0;
    if (gap_before > cfg.min_silence) sums[21] += 1.0;
  }
  sums[6] = double(n) * mean_word_log_prob(tokens, res.aux_in);
  sums[7] = double(n) * mean_word_log_prob(tokens, res.aux_out);
  sums[8] = double(n) * mean_word_log_prob(tokens, res.lm_in);
  sums[9] = double(n) * mean_word_log_prob(tokens, res.lm_out);

  for (int k = 0; k < FeatureVector::kWordCount; ++k)
    out[std::size_t(k)] = sums[k] / double(n);
  return out;
}

namespace {

FeatureVector assemble_features(const Segment& segment,
                                const Hypothesis& hypothesis,
                                const SegmentDsp& dsp,
                                const FeatureResources& res,
                                const FeatureConfig& cfg) {
  FeatureVector fv;
  bool pos_ok_textual = true;
  bool pos_ok_word = true;

  if (cfg.base) {
    if (dsp.has_audio) {
      std::copy(dsp.signal.begin(), dsp.signal.end(),
                fv.values.begin() + FeatureVector::kSignalOffset);
      fv.mask |= FeatureVector::kSignalBit;
    }
    const auto txt =
        extract_textual_features(hypothesis.tokens, res, cfg, &pos_ok_textual);
    std::copy(txt.begin(), txt.end(),
              fv.values.begin() + FeatureVector::kTextualOffset);
    fv.mask |= FeatureVector::kTextualBit;
    if (dsp.has_audio) {
      const auto hyb = hybrid_from_dsp(segment, hypothesis.tokens, dsp, cfg);
      std::copy(hyb.begin(), hyb.end(),
                fv.values.begin() + FeatureVector::kHybridOffset);
      fv.mask |= FeatureVector::kHybridBit;
    }
  }
  if (cfg.word) {
    const auto wrd = extract_word_features(segment, hypothesis.tokens, res,
                                           cfg, &pos_ok_word);
    std::copy(wrd.begin(), wrd.end(),
              fv.values.begin() + FeatureVector::kWordOffset);
    fv.mask |= FeatureVector::kWordBit;
  }
  if (pos_ok_textual && pos_ok_word && res.pos_table)
    fv.mask |= FeatureVector::kPosBit;

  for (double v : fv.values)
    if (!std::isfinite(v))
      throw ValidationError("non-finite feature for segment " +
                            segment.segment_id);
  return fv;
}

}  // namespace

FeatureVector extract_features(const Segment& segment,
                               const Hypothesis& hypothesis,
                               std::span<const double> samples,
                               int sample_rate, const FeatureResources& res,
                               const FeatureConfig& cfg) {
  return assemble_features(
      segment, hypothesis,
      cfg.base ? compute_segment_dsp(samples, sample_rate, cfg.dsp)
               : SegmentDsp{},
      res, cfg);
}

ExtractionResult extract_all(const Dataset& dataset,
                             const FeatureResources& res,
                             const FeatureConfig& cfg, int jobs) {
  ExtractionResult result;

  // Utterance waveforms loaded once, serially.
  std::map<std::string, WavData> wavs;
  std::set<std::string> warned;
  if (cfg.base) {
    for (const auto& seg : dataset.segments) {
      if (seg.audio_ref) {
        if (!wavs.count(*seg.audio_ref)) wavs[*seg.audio_ref] = read_wav(*seg.audio_ref);
      } else if (warned.insert(seg.utterance_id).second) {
        result.warnings.push_back("utterance " + seg.utterance_id +
                                  ": no audio; signal and hybrid features "
                                  "masked");
      }
    }
  }

  // Phase 1: per-segment DSP products, shared across systems.
  const std::size_t num_segments = dataset.segments.size();
  std::vector<std::span<const double>> slices(num_segments);
  std::vector<int> rates(num_segments, 0);
  for (std::size_t s = 0; s < num_segments; ++s) {
    const auto& seg = dataset.segments[s];
    if (!seg.audio_ref || !cfg.base) continue;
    const auto& wav = wavs.at(*seg.audio_ref);
    rates[s] = wav.sample_rate;
    const auto lo = std::size_t(std::clamp<double>(
        std::floor(seg.start * wav.sample_rate), 0.0,
        double(wav.samples.size())));
    const auto hi = std::size_t(std::clamp<double>(
        std::ceil(seg.end * wav.sample_rate), double(lo),
        double(wav.samples.size())));
    slices[s] = std::span(wav.samples.data() + lo, hi - lo);
  }
  std::vector<SegmentDsp> dsp(num_segments);
  if (cfg.base)
    parallel_for(std::int64_t(num_segments), jobs, [&](std::int64_t s) {
      dsp[std::size_t(s)] = compute_segment_dsp(
          slices[std::size_t(s)], rates[std::size_t(s)], cfg.dsp);
    });

  // Phase 2: per-hypothesis assembly.
  const std::size_t num_systems = dataset.systems.size();
  std::vector<FeatureVector> vectors(num_segments * num_systems);
  parallel_for(std::int64_t(vectors.size()), jobs, [&](std::int64_t i) {
    const std::size_t s = std::size_t(i) / num_systems;
    const std::size_t m = std::size_t(i) % num_systems;
    const auto& seg = dataset.segments[s];
    vectors[std::size_t(i)] = assemble_features(
        seg, dataset.hyp(seg.segment_id, dataset.systems[m]), dsp[s], res,
        cfg);
  });
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const std::size_t s = i / num_systems;
    const std::size_t m = i % num_systems;
    result.features[{dataset.segments[s].segment_id, dataset.systems[m]}] =
        vectors[i];
  }
  return result;
}

void write_features_csv(const std::string& path, const FeatureTable& table) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write feature file: " + path);
  out << "segment_id,system_id";
  for (int i = 0; i < FeatureVector::kDim; ++i) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "f%03d", i);
    out << "," << buf;
  }
  out << ",mask\n";
  for (const auto& [key, fv] : table) {
    if (key.first.find(',') != std::string::npos ||
        key.second.find(',') != std::string::npos)
      throw ValidationError("identifier contains a comma: " + key.first +
                            "/" + key.second);
    out << key.first << "," << key.second;
    for (double v : fv.values) out << "," << format_double(v);
    out << "," << fv.mask << "\n";
  }
  if (!out) throw IoError("short write: " + path);
}

FeatureTable read_features_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open feature file: " + path);
  FeatureTable table;
  std::string line;
  int lineno = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() != std::size_t(FeatureVector::kDim) + 3)
      throw ParseError(path, lineno, "expected " +
                           std::to_string(FeatureVector::kDim + 3) +
                           " fields, got " + std::to_string(fields.size()));
    if (header) {
      if (fields[0] != "segment_id")
        throw ParseError(path, lineno, "missing header row");
      header = false;
      continue;
    }
    FeatureVector fv;
    for (int i = 0; i < FeatureVector::kDim; ++i) {
      const auto& f = fields[std::size_t(i) + 2];
      auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(),
                                     fv.values[std::size_t(i)]);
      if (ec != std::errc() || p != f.data() + f.size())
        throw ParseError(path, lineno, "bad number '" + f + "'");
    }
    const auto& m = fields.back();
    unsigned mask = 0;
    auto [p, ec] = std::from_chars(m.data(), m.data() + m.size(), mask);
    if (ec != std::errc() || p != m.data() + m.size())
      throw ParseError(path, lineno, "bad mask '" + m + "'");
    fv.mask = mask;
    if (!table.emplace(std::make_pair(fields[0], fields[1]), fv).second)
      throw ParseError(path, lineno, "duplicate row for (" + fields[0] +
                           ", " + fields[1] + ")");
  }
  if (header) throw ParseError(path, lineno, "empty feature file");
  return table;
}

}  // namespace qerover
