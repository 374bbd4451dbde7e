// vocab.hpp -- word interning. Alignment and scoring work on integer word
// ids; strings appear only at the I/O boundary.
#ifndef QEROVER_VOCAB_HPP
#define QEROVER_VOCAB_HPP

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace qerover {

using WordId = std::int32_t;

// Id of the null arc in a word transition network ("@" in dumps). Not a
// vocabulary entry.
constexpr WordId kNullWord = -1;

using WordSeq = std::vector<WordId>;

class Vocab {
 public:
  WordId add(const std::string& word) {
    auto it = index_.find(word);
    if (it != index_.end()) return it->second;
    WordId id = static_cast<WordId>(words_.size());
    words_.push_back(word);
    index_.emplace(words_.back(), id);
    return id;
  }

  // -1 when absent
  WordId find(const std::string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? WordId(-1) : it->second;
  }

  const std::string& word(WordId id) const { return words_[id]; }
  std::size_t size() const { return words_.size(); }

  WordSeq add_all(std::span<const std::string> words) {
    WordSeq out;
    out.reserve(words.size());
    for (const auto& w : words) out.push_back(add(w));
    return out;
  }

  std::vector<std::string> strings(std::span<const WordId> seq) const {
    std::vector<std::string> out;
    out.reserve(seq.size());
    for (WordId id : seq) out.push_back(words_[id]);
    return out;
  }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> index_;
};

}  // namespace qerover

#endif  // QEROVER_VOCAB_HPP
