// lexicon.hpp -- pronunciation lexicon, phoneme classes, POS tag table.
#ifndef QEROVER_LEXICON_HPP
#define QEROVER_LEXICON_HPP

#include <array>
#include <map>
#include <string>
#include <vector>

namespace qerover {

// The five phoneme classes counted by the word features, in slot order.
enum class PhonemeClass { fricative, liquid, nasal, stop, vowel, other };

class Lexicon {
 public:
  Lexicon() = default;

  // Pronunciation file: `word<TAB>phoneme phoneme ...`, multiple lines per
  // word allowed. Class file: `phoneme<TAB>class` with class one of
  // fricative/liquid/nasal/stop/vowel/other; unlisted phonemes are other.
  static Lexicon load(const std::string& pron_path,
                      const std::string& class_path);

  void add_pronunciation(const std::string& word,
                         const std::vector<std::string>& phonemes);
  void set_class(const std::string& phoneme, PhonemeClass cls);

  bool contains(const std::string& word) const;
  const std::vector<std::vector<std::string>>& pronunciations(
      const std::string& word) const;

  // Other words sharing a pronunciation with this word.
  int homophone_count(const std::string& word) const;

  // Other words whose pronunciation sits at phoneme edit distance exactly
  // 1 from one of this word's pronunciations, homophones excluded.
  int neighbor_count(const std::string& word) const;

  // Counts over the word's first pronunciation, slots
  // [fricative, liquid, nasal, stop, vowel]; zeros for unknown words.
  std::array<int, 5> class_counts(const std::string& word) const;

  PhonemeClass phoneme_class(const std::string& phoneme) const;

 private:
  std::map<std::string, std::vector<std::vector<std::string>>> prons_;
  std::map<std::string, PhonemeClass> classes_;
};

// Tag vocabulary with unigram scores, for the POS id/score word features.
class PosTable {
 public:
  PosTable() = default;
  static PosTable from_corpus(
      const std::vector<std::vector<std::string>>& tag_sentences);

  // Index of the tag in the sorted tag vocabulary; -1 when unknown.
  int id(const std::string& tag) const;
  // Relative unigram frequency of the tag; 0 when unknown.
  double score(const std::string& tag) const;

  const std::vector<std::string>& tags() const { return tags_; }

 private:
  std::vector<std::string> tags_;
  std::map<std::string, std::pair<int, double>> index_;
};

}  // namespace qerover

#endif  // QEROVER_LEXICON_HPP
