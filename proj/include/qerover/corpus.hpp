// corpus.hpp -- CTM/reference/manifest ingestion and segmentation alignment.
#ifndef QEROVER_CORPUS_HPP
#define QEROVER_CORPUS_HPP

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qerover/types.hpp"

namespace qerover {

struct CorpusOptions {
  // Tolerated overshoot of token spans past segment edges.
  double slack = 0.5;
  // Words dropped at ingestion (e.g. hesitation markers). Empty by default:
  // stripping fillers here would also hide them from the feature extractor.
  std::vector<std::string> strip_words;
  // Applied to each lowercased word; returning "" drops the token.
  std::function<std::string(const std::string&)> normalize;
};

// Parses a CTM hypothesis file:
//   <utterance-id> <channel> <start-sec> <dur-sec> <word> [confidence]
// with ';;'-prefixed comment lines. Words are lowercased. Tokens come back
// in file order.
std::vector<std::pair<std::string, Token>> parse_ctm(const std::string& path);

// Parses the segment/reference file, one segment per line:
//   <segment-id> <utterance-id> <speaker-id> <start-sec> <end-sec> <word...>
// A line with no trailing words defines a segment without a reference.
std::vector<Segment> parse_segments(const std::string& path);

// Attaches token-parallel POS tags from a side file of lines
// `<utterance-id> <tag>`, one per CTM token in the same order.
void attach_pos_tags(std::vector<std::pair<std::string, Token>>& tokens,
                     const std::string& pos_path);

// Assigns each token to the reference segment (of its utterance) whose
// half-open span [start, end) contains the token's temporal midpoint.
// Tokens covered by no segment are dropped; order is preserved.
std::map<std::string, std::vector<Token>> align_segmentations(
    const std::map<std::string, std::vector<Token>>& tokens_by_utterance,
    const std::vector<Segment>& reference_segments);

// Loads a dataset manifest: a JSON document
//   { "systems": [{"id": ..., "ctm": ..., "pos": optional}, ...],
//     "segments": <path>,
//     "audio": {utterance-id: wav path, ...} }        (optional)
// Relative paths resolve against the manifest's directory. Every
// (segment, system) pair ends up with exactly one hypothesis, empty when
// the CTM contributed no tokens.
Dataset load_manifest(const std::string& path,
                      const CorpusOptions& options = {});

// Writes dataset to dir as manifest.json + segments.txt + per-system CTM
// (and POS side files when tags are present). Audio entries keep their
// stored paths. Returns the manifest path.
std::string save_dataset(const Dataset& dataset, const std::string& dir);

}  // namespace qerover

#endif  // QEROVER_CORPUS_HPP
