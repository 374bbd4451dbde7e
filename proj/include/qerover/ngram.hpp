// ngram.hpp -- Witten-Bell interpolated backoff n-gram language model.
#ifndef QEROVER_NGRAM_HPP
#define QEROVER_NGRAM_HPP

#include <map>
#include <span>
#include <string>
#include <vector>

namespace qerover {

// Anything that can score a word in context with a natural-log probability.
class WordScorer {
 public:
  virtual ~WordScorer() = default;
  virtual double word_log_prob(std::span<const std::string> context,
                               const std::string& word) const = 0;
};

// Interpolated Witten-Bell model stored in backoff form:
//   P(w|h) = (c(hw) + T(h) P(w|h')) / (N(h) + T(h))
// with T(h) the distinct continuation types of h and N(h) their total
// count. Listed n-grams carry the fully interpolated probability, so
// backoff evaluation with bow(h) = T(h)/(N(h)+T(h)) reproduces the model
// exactly, which keeps the ARPA round trip lossless. Sentence-end events
// are not modeled: probabilities cover vocabulary words plus a single
// unknown-word class, and sum to 1 in every context.
class NgramLM : public WordScorer {
 public:
  NgramLM() = default;

  static NgramLM train(const std::vector<std::vector<std::string>>& sentences,
                       int order);

  int order() const { return order_; }
  const std::vector<std::string>& vocabulary() const { return vocab_; }

  // ln P(word | context); the context is the words preceding `word` in
  // the sentence, padded internally with sentence-start markers.
  double word_log_prob(std::span<const std::string> context,
                       const std::string& word) const override;

  // Sum of word_log_prob over the sentence.
  double sentence_log_prob(const std::vector<std::string>& words) const;

  // exp(-log_prob / word count); words must be non-empty.
  double perplexity(const std::vector<std::string>& words) const;

  // Total probability mass of vocabulary plus unknown in this context.
  // Diagnostic: equals 1 up to rounding.
  double prob_sum(const std::vector<std::string>& context) const;

  void save_arpa(const std::string& path) const;
  static NgramLM load_arpa(const std::string& path);

 private:
  int order_ = 0;
  double unk_log_prob_ = 0.0;
  // probs_[k-1]: joined k-gram -> ln P; bows_[len-1]: joined context of
  // that length -> ln backoff weight.
  std::vector<std::map<std::string, double>> probs_;
  std::vector<std::map<std::string, double>> bows_;
  std::vector<std::string> vocab_;

  double lookup(std::span<const std::string> context,
                const std::string& word) const;
};

}  // namespace qerover

#endif  // QEROVER_NGRAM_HPP
