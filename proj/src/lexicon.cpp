#include "qerover/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "qerover/common.hpp"

namespace qerover {
namespace {

const std::vector<std::vector<std::string>> kNoProns;

PhonemeClass class_from_name(const std::string& name, const std::string& file,
                             int line) {
  if (name == "fricative") return PhonemeClass::fricative;
  if (name == "liquid") return PhonemeClass::liquid;
  if (name == "nasal") return PhonemeClass::nasal;
  if (name == "stop") return PhonemeClass::stop;
  if (name == "vowel") return PhonemeClass::vowel;
  if (name == "other") return PhonemeClass::other;
  throw ParseError(file, line, "unknown phoneme class '" + name + "'");
}

// Exactly-one-edit test on phoneme sequences.
bool within_one_edit(const std::vector<std::string>& a,
                     const std::vector<std::string>& b) {
  const std::size_t na = a.size(), nb = b.size();
  if (na > nb) return within_one_edit(b, a);
  if (nb - na > 1) return false;
  std::size_t i = 0;
  while (i < na && a[i] == b[i]) ++i;
  if (i == na) return nb == na + 1;  // b has one trailing extra phoneme
  if (na == nb) {
    for (std::size_t j = i + 1; j < na; ++j)
      if (a[j] != b[j]) return false;
    return true;  // single substitution
  }
  for (std::size_t j = i; j < na; ++j)
    if (a[j] != b[j + 1]) return false;
  return true;  // single insertion in b
}

}  // namespace

Lexicon Lexicon::load(const std::string& pron_path,
                      const std::string& class_path) {
  Lexicon lex;
  {
    std::ifstream in(pron_path);
    if (!in) throw IoError("cannot open lexicon file: " + pron_path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos)
        throw ParseError(pron_path, lineno, "expected word<TAB>phonemes");
      const std::string word = line.substr(0, tab);
      std::istringstream ss(line.substr(tab + 1));
      std::vector<std::string> phonemes;
      std::string p;
      while (ss >> p) phonemes.push_back(p);
      if (word.empty() || phonemes.empty())
        throw ParseError(pron_path, lineno, "empty word or pronunciation");
      lex.add_pronunciation(word, phonemes);
    }
  }
  {
    std::ifstream in(class_path);
    if (!in) throw IoError("cannot open phoneme class file: " + class_path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ss(line);
      std::string phoneme, cls;
      if (!(ss >> phoneme >> cls))
        throw ParseError(class_path, lineno, "expected phoneme and class");
      lex.set_class(phoneme, class_from_name(cls, class_path, lineno));
    }
  }
  return lex;
}

void Lexicon::add_pronunciation(const std::string& word,
                                const std::vector<std::string>& phonemes) {
  prons_[word].push_back(phonemes);
}

void Lexicon::set_class(const std::string& phoneme, PhonemeClass cls) {
  classes_[phoneme] = cls;
}

bool Lexicon::contains(const std::string& word) const {
  return prons_.count(word) > 0;
}

const std::vector<std::vector<std::string>>& Lexicon::pronunciations(
    const std::string& word) const {
  auto it = prons_.find(word);
  return it == prons_.end() ? kNoProns : it->second;
}

int Lexicon::homophone_count(const std::string& word) const {
  auto it = prons_.find(word);
  if (it == prons_.end()) return 0;
  int count = 0;
  for (const auto& [other, prons] : prons_) {
    if (other == word) continue;
    bool shared = false;
    for (const auto& a : it->second) {
      for (const auto& b : prons)
        if (a == b) {
          shared = true;
          break;
        }
      if (shared) break;
    }
    if (shared) ++count;
  }
  return count;
}

int Lexicon::neighbor_count(const std::string& word) const {
  auto it = prons_.find(word);
  if (it == prons_.end()) return 0;
  int count = 0;
  for (const auto& [other, prons] : prons_) {
    if (other == word) continue;
    bool exact = false;
    bool near = false;
    for (const auto& a : it->second) {
      for (const auto& b : prons) {
        if (a == b) exact = true;
        else if (within_one_edit(a, b)) near = true;
      }
    }
    if (near && !exact) ++count;
  }
  return count;
}

std::array<int, 5> Lexicon::class_counts(const std::string& word) const {
  std::array<int, 5> counts{};
  auto it = prons_.find(word);
  if (it == prons_.end() || it->second.empty()) return counts;
  for (const auto& p : it->second.front()) {
    const PhonemeClass cls = phoneme_class(p);
    if (cls != PhonemeClass::other) ++counts[std::size_t(cls)];
  }
  return counts;
}

PhonemeClass Lexicon::phoneme_class(const std::string& phoneme) const {
  auto it = classes_.find(phoneme);
  return it == classes_.end() ? PhonemeClass::other : it->second;
}

PosTable PosTable::from_corpus(
    const std::vector<std::vector<std::string>>& tag_sentences) {
  PosTable table;
  std::map<std::string, std::int64_t> counts;
  std::int64_t total = 0;
  for (const auto& sent : tag_sentences)
    for (const auto& tag : sent) {
      ++counts[tag];
      ++total;
    }
  int next = 0;
  for (const auto& [tag, c] : counts) {
    table.tags_.push_back(tag);
    table.index_[tag] = {next++, double(c) / double(std::max<std::int64_t>(
                                     total, 1))};
  }
  return table;
}

int PosTable::id(const std::string& tag) const {
  auto it = index_.find(tag);
  return it == index_.end() ? -1 : it->second.first;
}

double PosTable::score(const std::string& tag) const {
  auto it = index_.find(tag);
  return it == index_.end() ? 0.0 : it->second.second;
}

}  // namespace qerover
