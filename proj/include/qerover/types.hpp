// types.hpp -- corpus data model: tokens, segments, hypotheses, datasets.
#ifndef QEROVER_TYPES_HPP
#define QEROVER_TYPES_HPP

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qerover/common.hpp"

namespace qerover {

// One recognized word with its time span. Words are lowercased at ingestion.
struct Token {
  std::string word;
  double start = 0.0;
  double duration = 0.0;
  std::optional<double> confidence;
  std::optional<std::string> pos_tag;  // from a token-parallel side file

  void validate() const {
    if (word.empty()) throw ValidationError("token word is empty");
    for (char c : word)
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r')
        throw ValidationError("token word contains whitespace: '" + word + "'");
    if (start < 0.0) throw ValidationError("token start < 0");
    if (duration < 0.0)
      throw ValidationError("token duration < 0 for '" + word + "'");
    if (!std::isfinite(start + duration))
      throw ValidationError("token span not finite");
    if (confidence && (*confidence < 0.0 || *confidence > 1.0))
      throw ValidationError("token confidence outside [0,1]");
  }

  double midpoint() const { return start + duration / 2.0; }
  double end() const { return start + duration; }

  bool operator==(const Token&) const = default;
};

// A time-bounded speech unit of one utterance.
struct Segment {
  std::string segment_id;
  std::string utterance_id;
  std::string speaker_id;
  double start = 0.0;
  double end = 0.0;
  std::optional<std::string> audio_ref;        // path to a waveform
  std::optional<std::vector<std::string>> reference;

  void validate() const {
    if (segment_id.empty()) throw ValidationError("segment id is empty");
    if (!(end > start))
      throw ValidationError("segment " + segment_id + ": end <= start");
  }

  double span() const { return end - start; }

  bool operator==(const Segment&) const = default;
};

// One system's transcription of one segment.
struct Hypothesis {
  std::string system_id;
  std::string segment_id;
  std::vector<Token> tokens;
  std::optional<double> true_wer;
  std::optional<int> true_rank;
  std::optional<double> predicted_wer;

  void validate(const Segment& seg, double slack) const {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      tokens[i].validate();
      if (i > 0 && tokens[i].start < tokens[i - 1].start)
        throw ValidationError("hypothesis " + system_id + "/" + segment_id +
                              ": tokens not sorted by start");
      if (tokens[i].start < seg.start - slack ||
          tokens[i].end() > seg.end + slack)
        throw ValidationError("hypothesis " + system_id + "/" + segment_id +
                              ": token '" + tokens[i].word +
                              "' outside segment span");
    }
    if (true_rank && !true_wer)
      throw ValidationError("true_rank present without true_wer");
    if (true_wer && *true_wer < 0.0)
      throw ValidationError("true_wer < 0");
  }

  std::vector<std::string> words() const {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(t.word);
    return out;
  }

  bool operator==(const Hypothesis&) const = default;
};

// The full corpus: every (segment, system) pair holds exactly one
// hypothesis, possibly with zero tokens.
struct Dataset {
  std::vector<Segment> segments;
  std::vector<std::string> systems;
  std::map<std::pair<std::string, std::string>, Hypothesis> hypotheses;
  std::map<std::string, std::string> audio;  // utterance_id -> wav path

  const Hypothesis& hyp(const std::string& segment_id,
                        const std::string& system_id) const {
    auto it = hypotheses.find({segment_id, system_id});
    if (it == hypotheses.end())
      throw ValidationError("no hypothesis for (" + segment_id + ", " +
                            system_id + ")");
    return it->second;
  }

  Hypothesis& hyp(const std::string& segment_id, const std::string& system_id) {
    return const_cast<Hypothesis&>(
        static_cast<const Dataset*>(this)->hyp(segment_id, system_id));
  }

  void validate(double slack = 0.5) const;

  bool operator==(const Dataset&) const = default;
};

}  // namespace qerover

#endif  // QEROVER_TYPES_HPP
