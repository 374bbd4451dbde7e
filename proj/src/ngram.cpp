#include "qerover/ngram.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "qerover/common.hpp"

namespace qerover {
namespace {

constexpr char kSep = '\x1f';
const std::string kBos = "<s>";
const std::string kUnk = "<unk>";
const double kLn10 = 2.302585092994046;

std::string join(std::span<const std::string> words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += kSep;
    out += words[i];
  }
  return out;
}

}  // namespace

NgramLM NgramLM::train(const std::vector<std::vector<std::string>>& sentences,
                       int order) {
  if (order < 1) throw ValidationError("lm order must be >= 1");
  bool any = false;
  for (const auto& s : sentences) any = any || !s.empty();
  if (!any) throw ValidationError("lm training corpus is empty");

  // counts[k-1]: k-gram -> count, events ending at real words only.
  std::vector<std::map<std::string, std::int64_t>> counts{std::size_t(order)};
  for (const auto& sent : sentences) {
    for (int k = 1; k <= order; ++k) {
      std::vector<std::string> padded(std::size_t(k - 1), kBos);
      padded.insert(padded.end(), sent.begin(), sent.end());
      for (std::size_t i = std::size_t(k - 1); i < padded.size(); ++i) {
        std::span<const std::string> gram(&padded[i - std::size_t(k - 1)],
                                          std::size_t(k));
        ++counts[std::size_t(k - 1)][join(gram)];
      }
    }
  }

  // Continuation totals per context: N (token count), T (type count).
  struct ContStats {
    std::int64_t n = 0;
    std::int64_t t = 0;
  };
  std::vector<std::map<std::string, ContStats>> cont{std::size_t(order)};
  for (int k = 1; k <= order; ++k) {
    for (const auto& [gram, c] : counts[std::size_t(k - 1)]) {
      const auto cut = gram.rfind(kSep);
      const std::string ctx =
          cut == std::string::npos ? std::string() : gram.substr(0, cut);
      auto& st = cont[std::size_t(k - 1)][ctx];
      st.n += c;
      st.t += 1;
    }
  }

  NgramLM lm;
  lm.order_ = order;
  lm.probs_.resize(std::size_t(order));
  lm.bows_.resize(std::size_t(order));

  const auto& uni = cont[0].at(std::string());
  lm.unk_log_prob_ = std::log(double(uni.t) / double(uni.n + uni.t));
  for (const auto& [w, c] : counts[0]) {
    lm.probs_[0][w] = std::log(double(c) / double(uni.n + uni.t));
    lm.vocab_.push_back(w);
  }

  for (int k = 2; k <= order; ++k) {
    for (const auto& [gram, c] : counts[std::size_t(k - 1)]) {
      const auto cut = gram.rfind(kSep);
      const std::string ctx = gram.substr(0, cut);
      const std::string word = gram.substr(cut + 1);
      const auto& st = cont[std::size_t(k - 1)].at(ctx);
      // Lower-order probability of the same word under the shortened
      // context; the k-1 tables are already final.
      const auto ctx_cut = ctx.find(kSep);
      const std::string low_gram =
          (k == 2 ? word : ctx.substr(ctx_cut + 1) + kSep + word);
      double p_low;
      auto it = lm.probs_[std::size_t(k - 2)].find(low_gram);
      if (it != lm.probs_[std::size_t(k - 2)].end()) {
        p_low = std::exp(it->second);
      } else {
        // The shortened gram is always observed when the full one is,
        // except for sentence-start padding contexts at k-1 = 1 vs <s>.
        p_low = std::exp(lm.unk_log_prob_);
      }
      lm.probs_[std::size_t(k - 1)][gram] =
          std::log((double(c) + double(st.t) * p_low) /
                   double(st.n + st.t));
    }
    // Backoff weights for contexts of length k-1.
    for (const auto& [ctx, st] : cont[std::size_t(k - 1)]) {
      lm.bows_[std::size_t(k - 1)][ctx] =
          std::log(double(st.t) / double(st.n + st.t));
    }
  }
  return lm;
}

double NgramLM::lookup(std::span<const std::string> context,
                       const std::string& word) const {
  if (!context.empty()) {
    const std::string key = join(context) + kSep + word;
    auto it = probs_[context.size()].find(key);
    if (it != probs_[context.size()].end()) return it->second;
    double bow = 0.0;
    auto bit = bows_[context.size()].find(join(context));
    if (bit != bows_[context.size()].end()) bow = bit->second;
    return bow + lookup(context.subspan(1), word);
  }
  auto it = probs_[0].find(word);
  if (it != probs_[0].end()) return it->second;
  return unk_log_prob_;
}

double NgramLM::word_log_prob(std::span<const std::string> context,
                              const std::string& word) const {
  if (order_ < 1) throw ValidationError("lm not trained");
  const std::size_t want = std::size_t(order_ - 1);
  std::vector<std::string> ctx;
  ctx.reserve(want);
  if (context.size() < want)
    ctx.assign(want - context.size(), kBos);
  const std::size_t take = std::min(context.size(), want);
  ctx.insert(ctx.end(), context.end() - std::ptrdiff_t(take), context.end());
  return lookup(ctx, word);
}

double NgramLM::sentence_log_prob(const std::vector<std::string>& words) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < words.size(); ++i)
    sum += word_log_prob(std::span(words.data(), i), words[i]);
  return sum;
}

double NgramLM::perplexity(const std::vector<std::string>& words) const {
  if (words.empty()) throw ValidationError("perplexity of empty sentence");
  return std::exp(-sentence_log_prob(words) / double(words.size()));
}

double NgramLM::prob_sum(const std::vector<std::string>& context) const {
  double sum = 0.0;
  for (const auto& w : vocab_)
    sum += std::exp(word_log_prob(context, w));
  // A word no corpus contains: exercises the full backoff chain to the
  // unknown-class mass.
  sum += std::exp(word_log_prob(context, std::string(1, '\x01')));
  return sum;
}

void NgramLM::save_arpa(const std::string& path) const {
  if (order_ < 1) throw ValidationError("lm not trained");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write lm file: " + path);

  auto render = [](const std::string& joined) {
    std::string s = joined;
    std::replace(s.begin(), s.end(), kSep, ' ');
    return s;
  };
  auto log10_of = [](double ln_val) { return ln_val / kLn10; };

  // Backoff contexts that are not word events themselves (the start marker
  // and its padding repetitions) still need their weights in the file, so
  // they get placeholder entries.
  std::vector<std::vector<std::string>> extras{std::size_t(order_)};
  for (int k = 1; k < order_; ++k)
    for (const auto& [ctx, bow] : bows_[std::size_t(k)])
      if (!probs_[std::size_t(k - 1)].count(ctx))
        extras[std::size_t(k - 1)].push_back(ctx);

  out << "\\data\\\n";
  for (int k = 1; k <= order_; ++k) {
    std::size_t n =
        probs_[std::size_t(k - 1)].size() + extras[std::size_t(k - 1)].size();
    if (k == 1) n += 1;  // <unk>
    out << "ngram " << k << "=" << n << "\n";
  }
  for (int k = 1; k <= order_; ++k) {
    out << "\n\\" << k << "-grams:\n";
    auto write_entry = [&](const std::string& gram, double lp10) {
      out << format_double(lp10) << "\t" << render(gram);
      if (k < order_) {
        auto bit = bows_[std::size_t(k)].find(gram);
        if (bit != bows_[std::size_t(k)].end())
          out << "\t" << format_double(log10_of(bit->second));
      }
      out << "\n";
    };
    if (k == 1)
      out << format_double(log10_of(unk_log_prob_)) << "\t" << kUnk << "\n";
    for (const auto& gram : extras[std::size_t(k - 1)])
      write_entry(gram, -99.0);
    for (const auto& [gram, lp] : probs_[std::size_t(k - 1)])
      write_entry(gram, log10_of(lp));
  }
  out << "\n\\end\\\n";
  if (!out) throw IoError("short write: " + path);
}

NgramLM NgramLM::load_arpa(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lm file: " + path);

  NgramLM lm;
  std::string line;
  int lineno = 0;
  int section = 0;  // current k, 0 outside
  bool in_data = false;
  std::vector<std::size_t> declared;

  auto parse_num = [&](const std::string& s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
      throw ParseError(path, lineno, "bad number '" + s + "'");
    return v;
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "\\data\\") {
      in_data = true;
      continue;
    }
    if (line == "\\end\\") break;
    if (line.size() > 2 && line.front() == '\\' &&
        line.substr(line.size() - 7) == "-grams:") {
      section = int(parse_num(line.substr(1, line.size() - 8)));
      if (section < 1 || std::size_t(section) > declared.size())
        throw ParseError(path, lineno, "unexpected n-gram section");
      continue;
    }
    if (in_data && section == 0) {
      if (line.rfind("ngram ", 0) != 0)
        throw ParseError(path, lineno, "expected 'ngram k=n'");
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ParseError(path, lineno, "expected 'ngram k=n'");
      declared.push_back(std::size_t(parse_num(line.substr(eq + 1))));
      continue;
    }
    if (section == 0) throw ParseError(path, lineno, "entry outside section");

    std::istringstream ss(line);
    std::vector<std::string> fields;
    std::string tok;
    while (ss >> tok) fields.push_back(tok);
    const std::size_t k = std::size_t(section);
    if (fields.size() != k + 1 && fields.size() != k + 2)
      throw ParseError(path, lineno, "wrong field count for order " +
                                         std::to_string(section));
    if (lm.probs_.size() < k) {
      lm.probs_.resize(declared.size());
      lm.bows_.resize(declared.size());
      lm.order_ = int(declared.size());
    }
    const double lp = parse_num(fields[0]) * kLn10;
    std::span<const std::string> words(&fields[1], k);
    const std::string gram = join(words);
    const bool has_bow = fields.size() == k + 2;
    if (has_bow && k < std::size_t(lm.order_))
      lm.bows_[k][gram] = parse_num(fields[k + 1]) * kLn10;
    if (k == 1 && fields[1] == kUnk) {
      lm.unk_log_prob_ = lp;
      continue;
    }
    // No real event ends at the start marker; such lines only carry bows.
    if (fields[k] == kBos) continue;
    if (k == 1) lm.vocab_.push_back(fields[1]);
    lm.probs_[k - 1][gram] = lp;
  }
  if (lm.order_ < 1) throw ParseError(path, lineno, "no n-gram sections");
  std::sort(lm.vocab_.begin(), lm.vocab_.end());
  return lm;
}

}  // namespace qerover
