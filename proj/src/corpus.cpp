#include "qerover/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qerover/common.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace qerover {
namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

double parse_num(const std::string& s, const std::string& file, int line) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ParseError(file, line, "bad number '" + s + "'");
  return v;
}

std::string lower(std::string s) {
  for (char& c : s) c = char(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

bool is_comment_or_blank(const std::string& line) {
  auto pos = line.find_first_not_of(" \t");
  if (pos == std::string::npos) return true;
  return line.compare(pos, 2, ";;") == 0;
}

}  // namespace

std::vector<std::pair<std::string, Token>> parse_ctm(const std::string& path) {
  auto lines = read_lines(path);
  std::vector<std::pair<std::string, Token>> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int lineno = int(i) + 1;
    if (is_comment_or_blank(lines[i])) continue;
    auto fields = split_ws(lines[i]);
    if (fields.size() != 5 && fields.size() != 6)
      throw ParseError(path, lineno,
                       "expected 5 or 6 fields, got " +
                           std::to_string(fields.size()));
    Token tok;
    tok.word = lower(fields[4]);
    tok.start = parse_num(fields[2], path, lineno);
    tok.duration = parse_num(fields[3], path, lineno);
    if (fields.size() == 6)
      tok.confidence = parse_num(fields[5], path, lineno);
    try {
      tok.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": " +
                            e.what());
    }
    out.emplace_back(fields[0], std::move(tok));
  }
  return out;
}

std::vector<Segment> parse_segments(const std::string& path) {
  auto lines = read_lines(path);
  std::vector<Segment> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int lineno = int(i) + 1;
    if (is_comment_or_blank(lines[i])) continue;
    auto fields = split_ws(lines[i]);
    if (fields.size() < 5)
      throw ParseError(path, lineno, "expected at least 5 fields");
    Segment seg;
    seg.segment_id = fields[0];
    seg.utterance_id = fields[1];
    seg.speaker_id = fields[2];
    seg.start = parse_num(fields[3], path, lineno);
    seg.end = parse_num(fields[4], path, lineno);
    if (fields.size() > 5) {
      std::vector<std::string> words(fields.begin() + 5, fields.end());
      for (auto& w : words) w = lower(w);
      seg.reference = std::move(words);
    }
    try {
      seg.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": " +
                            e.what());
    }
    out.push_back(std::move(seg));
  }
  return out;
}

void attach_pos_tags(std::vector<std::pair<std::string, Token>>& tokens,
                     const std::string& pos_path) {
  auto lines = read_lines(pos_path);
  std::vector<std::pair<std::string, std::string>> tags;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_comment_or_blank(lines[i])) continue;
    auto fields = split_ws(lines[i]);
    if (fields.size() != 2)
      throw ParseError(pos_path, int(i) + 1, "expected 2 fields");
    tags.emplace_back(fields[0], fields[1]);
  }
  if (tags.size() != tokens.size())
    throw ValidationError(pos_path + ": " + std::to_string(tags.size()) +
                          " tags for " + std::to_string(tokens.size()) +
                          " tokens");
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tags[i].first != tokens[i].first)
      throw ValidationError(pos_path + ": tag " + std::to_string(i + 1) +
                            " names utterance " + tags[i].first +
                            " but token belongs to " + tokens[i].first);
    tokens[i].second.pos_tag = tags[i].second;
  }
}

std::map<std::string, std::vector<Token>> align_segmentations(
    const std::map<std::string, std::vector<Token>>& tokens_by_utterance,
    const std::vector<Segment>& reference_segments) {
  // Per-utterance segment lists, sorted by start.
  std::map<std::string, std::vector<const Segment*>> by_utt;
  for (const auto& seg : reference_segments)
    by_utt[seg.utterance_id].push_back(&seg);
  for (auto& [utt, segs] : by_utt)
    std::sort(segs.begin(), segs.end(),
              [](const Segment* a, const Segment* b) {
                return a->start < b->start;
              });

  std::map<std::string, std::vector<Token>> out;
  for (const auto& seg : reference_segments) out[seg.segment_id];

  for (const auto& [utt, tokens] : tokens_by_utterance) {
    auto it = by_utt.find(utt);
    if (it == by_utt.end()) continue;
    const auto& segs = it->second;
    for (const auto& tok : tokens) {
      const double mid = tok.midpoint();
      // Last segment with start <= mid; token kept if mid < its end.
      auto pos = std::upper_bound(
          segs.begin(), segs.end(), mid,
          [](double m, const Segment* s) { return m < s->start; });
      if (pos == segs.begin()) continue;
      const Segment* seg = *(pos - 1);
      if (mid < seg->end) out[seg->segment_id].push_back(tok);
    }
  }
  return out;
}

void Dataset::validate(double slack) const {
  std::map<std::string, const Segment*> seg_index;
  std::map<std::string, std::vector<const Segment*>> by_utt;
  for (const auto& seg : segments) {
    seg.validate();
    if (!seg_index.emplace(seg.segment_id, &seg).second)
      throw ValidationError("duplicate segment id: " + seg.segment_id);
    by_utt[seg.utterance_id].push_back(&seg);
    if (seg.reference && seg.reference->empty())
      throw ValidationError("segment " + seg.segment_id +
                            ": empty reference should be absent");
  }
  for (const auto& [utt, segs] : by_utt)
    for (std::size_t i = 1; i < segs.size(); ++i)
      if (segs[i]->start < segs[i - 1]->end)
        throw ValidationError("utterance " + utt +
                              ": segments overlap or are unsorted");

  std::set<std::string> sys_set(systems.begin(), systems.end());
  if (sys_set.size() != systems.size())
    throw ValidationError("duplicate system id");

  if (hypotheses.size() != segments.size() * systems.size())
    throw ValidationError("expected " +
                          std::to_string(segments.size() * systems.size()) +
                          " hypotheses, found " +
                          std::to_string(hypotheses.size()));
  for (const auto& [key, h] : hypotheses) {
    auto it = seg_index.find(key.first);
    if (it == seg_index.end())
      throw ValidationError("hypothesis names unknown segment " + key.first);
    if (!sys_set.count(key.second))
      throw ValidationError("hypothesis names unknown system " + key.second);
    if (h.segment_id != key.first || h.system_id != key.second)
      throw ValidationError("hypothesis key/field mismatch for (" + key.first +
                            ", " + key.second + ")");
    h.validate(*it->second, slack);
  }
}

Dataset load_manifest(const std::string& path, const CorpusOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path, 0, e.what());
  }

  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path fp(p);
    return (fp.is_absolute() ? fp : base / fp).string();
  };

  if (!doc.contains("systems") || !doc["systems"].is_array() ||
      doc["systems"].empty())
    throw ValidationError(path + ": manifest needs a non-empty systems list");
  if (!doc.contains("segments"))
    throw ValidationError(path + ": manifest needs a segments path");

  Dataset ds;
  const std::string seg_path = resolve(doc["segments"].get<std::string>());
  if (!fs::exists(seg_path))
    throw IoError("manifest references missing file: " + seg_path);
  ds.segments = parse_segments(seg_path);

  if (doc.contains("audio")) {
    for (const auto& [utt, p] : doc["audio"].items()) {
      std::string wav = resolve(p.get<std::string>());
      if (!fs::exists(wav))
        throw IoError("manifest references missing file: " + wav);
      ds.audio[utt] = wav;
    }
    for (auto& seg : ds.segments) {
      auto it = ds.audio.find(seg.utterance_id);
      if (it != ds.audio.end()) seg.audio_ref = it->second;
    }
  }

  std::set<std::string> seen;
  for (const auto& sys : doc["systems"]) {
    const std::string id = sys.at("id").get<std::string>();
    if (!seen.insert(id).second)
      throw ValidationError(path + ": system listed twice: " + id);
    ds.systems.push_back(id);

    const std::string ctm_path = resolve(sys.at("ctm").get<std::string>());
    if (!fs::exists(ctm_path))
      throw IoError("manifest references missing file: " + ctm_path);
    auto tokens = parse_ctm(ctm_path);
    if (sys.contains("pos")) {
      const std::string pos_path = resolve(sys["pos"].get<std::string>());
      if (!fs::exists(pos_path))
        throw IoError("manifest references missing file: " + pos_path);
      attach_pos_tags(tokens, pos_path);
    }

    // Normalization pass: user hook, then the strip list.
    std::vector<std::pair<std::string, Token>> kept;
    kept.reserve(tokens.size());
    for (auto& [utt, tok] : tokens) {
      if (options.normalize) {
        tok.word = options.normalize(tok.word);
        if (tok.word.empty()) continue;
      }
      if (std::find(options.strip_words.begin(), options.strip_words.end(),
                    tok.word) != options.strip_words.end())
        continue;
      kept.emplace_back(utt, std::move(tok));
    }

    std::map<std::string, std::vector<Token>> by_utt;
    for (auto& [utt, tok] : kept) by_utt[utt].push_back(std::move(tok));
    auto assigned = align_segmentations(by_utt, ds.segments);
    for (auto& [seg_id, toks] : assigned) {
      Hypothesis h;
      h.system_id = id;
      h.segment_id = seg_id;
      h.tokens = std::move(toks);
      ds.hypotheses[{seg_id, id}] = std::move(h);
    }
  }

  ds.validate(options.slack);
  return ds;
}

std::string save_dataset(const Dataset& dataset, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory: " + dir);

  auto write_file = [&](const std::string& name, const std::string& body) {
    const std::string p = (fs::path(dir) / name).string();
    std::ofstream f(p);
    if (!f) throw IoError("cannot write file: " + p);
    f << body;
    if (!f) throw IoError("short write: " + p);
    return p;
  };

  std::string segs;
  for (const auto& seg : dataset.segments) {
    segs += seg.segment_id + " " + seg.utterance_id + " " + seg.speaker_id +
            " " + format_double(seg.start) + " " + format_double(seg.end);
    if (seg.reference)
      for (const auto& w : *seg.reference) segs += " " + w;
    segs += "\n";
  }
  write_file("segments.txt", segs);

  json manifest;
  manifest["segments"] = "segments.txt";
  manifest["systems"] = json::array();
  for (const auto& sys : dataset.systems) {
    std::string ctm;
    std::string pos;
    bool any_pos = false;
    for (const auto& seg : dataset.segments) {
      const auto& h = dataset.hyp(seg.segment_id, sys);
      for (const auto& tok : h.tokens) {
        ctm += seg.utterance_id + " 1 " + format_double(tok.start) + " " +
               format_double(tok.duration) + " " + tok.word;
        if (tok.confidence) ctm += " " + format_double(*tok.confidence);
        ctm += "\n";
        pos += seg.utterance_id + " " + tok.pos_tag.value_or("x") + "\n";
        if (tok.pos_tag) any_pos = true;
      }
    }
    write_file(sys + ".ctm", ctm);
    json entry;
    entry["id"] = sys;
    entry["ctm"] = sys + ".ctm";
    if (any_pos) {
      write_file(sys + ".pos", pos);
      entry["pos"] = sys + ".pos";
    }
    manifest["systems"].push_back(entry);
  }
  if (!dataset.audio.empty()) {
    json audio;
    for (const auto& [utt, p] : dataset.audio) audio[utt] = p;
    manifest["audio"] = audio;
  }
  return write_file("manifest.json", manifest.dump(2) + "\n");
}

}  // namespace qerover
