#include "qerover/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "qerover/common.hpp"

namespace qerover {

WerResult wer(const WordSeq& hyp, const WordSeq& ref) {
  const std::size_t nh = hyp.size();
  const std::size_t nr = ref.size();
  // Flat scratch matrix, reused across calls; this sits on the per-segment
  // scoring hot path.
  thread_local std::vector<std::uint32_t> dp;
  const std::size_t stride = nh + 1;
  dp.assign((nr + 1) * stride, 0);
  auto at = [&](std::size_t i, std::size_t j) -> std::uint32_t& {
    return dp[i * stride + j];
  };
  for (std::size_t i = 1; i <= nr; ++i) at(i, 0) = std::uint32_t(i);
  for (std::size_t j = 1; j <= nh; ++j) at(0, j) = std::uint32_t(j);
  for (std::size_t i = 1; i <= nr; ++i)
    for (std::size_t j = 1; j <= nh; ++j) {
      const std::uint32_t diag =
          at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      const std::uint32_t del = at(i - 1, j) + 1;  // ref word unmatched
      const std::uint32_t ins = at(i, j - 1) + 1;  // extra hyp word
      at(i, j) = std::min({diag, del, ins});
    }

  WerResult res;
  res.counts.reference_words = std::int64_t(nr);
  std::size_t i = nr, j = nh;
  while (i > 0 || j > 0) {
    bool take_diag = false;
    if (i > 0 && j > 0) {
      const bool match = ref[i - 1] == hyp[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (match ? 0 : 1)) {
        take_diag = true;
        if (!match) ++res.counts.substitutions;
      }
    }
    if (take_diag) {
      --i, --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++res.counts.deletions;
      --i;
    } else {
      ++res.counts.insertions;
      --j;
    }
  }
  res.rate = double(res.counts.errors()) /
             double(std::max<std::int64_t>(res.counts.reference_words, 1));
  return res;
}

WerResult wer(const std::vector<std::string>& hyp,
              const std::vector<std::string>& ref) {
  Vocab vocab;
  return wer(vocab.add_all(hyp), vocab.add_all(ref));
}

std::int64_t edit_distance(const WordSeq& a, const WordSeq& b) {
  const std::size_t na = a.size(), nb = b.size();
  std::vector<std::uint32_t> row(nb + 1);
  for (std::size_t j = 0; j <= nb; ++j) row[j] = std::uint32_t(j);
  for (std::size_t i = 1; i <= na; ++i) {
    std::uint32_t prev_diag = row[0];
    row[0] = std::uint32_t(i);
    for (std::size_t j = 1; j <= nb; ++j) {
      const std::uint32_t diag = prev_diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      prev_diag = row[j];
      row[j] = std::min({diag, row[j] + 1, row[j - 1] + 1});
    }
  }
  return row[nb];
}

double corpus_wer(const std::vector<EditCounts>& counts) {
  EditCounts total;
  for (const auto& c : counts) total += c;
  return double(total.errors()) /
         double(std::max<std::int64_t>(total.reference_words, 1));
}

double mae(const std::vector<double>& pred, const std::vector<double>& truth) {
  if (pred.size() != truth.size())
    throw ValidationError("mae: size mismatch");
  if (pred.empty()) throw ValidationError("mae: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    sum += std::abs(pred[i] - truth[i]);
  return sum / double(pred.size());
}

double ap_at_l(const std::vector<int>& predicted_order,
               const std::vector<int>& true_order, int l, bool set_overlap) {
  if (predicted_order.size() != true_order.size())
    throw ValidationError("ap_at_l: order length mismatch");
  if (l < 1 || std::size_t(l) > predicted_order.size())
    throw ValidationError("ap_at_l: depth " + std::to_string(l) +
                          " outside list length " +
                          std::to_string(predicted_order.size()));
  if (std::set<int>(predicted_order.begin(), predicted_order.end()) !=
      std::set<int>(true_order.begin(), true_order.end()))
    throw ValidationError("ap_at_l: orders are over different item sets");

  double sum = 0.0;
  if (set_overlap) {
    std::set<int> pred_top, true_top;
    for (int pos = 1; pos <= l; ++pos) {
      pred_top.insert(predicted_order[std::size_t(pos - 1)]);
      true_top.insert(true_order[std::size_t(pos - 1)]);
      int overlap = 0;
      for (int item : pred_top) overlap += true_top.count(item) ? 1 : 0;
      sum += double(overlap) / double(pos);
    }
  } else {
    int correct = 0;
    for (int pos = 1; pos <= l; ++pos) {
      if (predicted_order[std::size_t(pos - 1)] ==
          true_order[std::size_t(pos - 1)])
        ++correct;
      sum += double(correct) / double(pos);
    }
  }
  return sum / double(l);
}

double map_at_l(const std::vector<std::vector<int>>& predicted_orders,
                const std::vector<std::vector<int>>& true_orders, int l,
                bool set_overlap) {
  if (predicted_orders.size() != true_orders.size())
    throw ValidationError("map_at_l: segment count mismatch");
  if (predicted_orders.empty()) throw ValidationError("map_at_l: empty input");
  double sum = 0.0;
  for (std::size_t k = 0; k < predicted_orders.size(); ++k)
    sum += ap_at_l(predicted_orders[k], true_orders[k], l, set_overlap);
  return sum / double(predicted_orders.size());
}

double balanced_accuracy(const std::vector<int>& pred,
                         const std::vector<int>& truth) {
  if (pred.size() != truth.size())
    throw ValidationError("balanced_accuracy: size mismatch");
  if (pred.empty()) throw ValidationError("balanced_accuracy: empty input");
  std::int64_t tp = 0, tn = 0, pos = 0, neg = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (truth[i]) {
      ++pos;
      if (pred[i]) ++tp;
    } else {
      ++neg;
      if (!pred[i]) ++tn;
    }
  }
  if (pos == 0) return double(tn) / double(neg);
  if (neg == 0) return double(tp) / double(pos);
  return 0.5 * (double(tp) / double(pos) + double(tn) / double(neg));
}

namespace {

int sign_of(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

// Inverse standard normal CDF (Acklam's rational approximation).
double inverse_normal_cdf(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  if (p <= 0.0 || p >= 1.0)
    throw ValidationError("inverse_normal_cdf: p outside (0,1)");
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
             c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
          a[5]) *
         q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

MatchedPairsResult matched_pairs_test(const std::vector<EditCounts>& a,
                                      const std::vector<EditCounts>& b,
                                      const MatchedPairsOptions& options) {
  if (a.empty()) throw ValidationError("matched_pairs_test: empty corpus");
  if (a.size() != b.size())
    throw ValidationError("matched_pairs_test: segment sets differ");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].reference_words != b[i].reference_words)
      throw ValidationError(
          "matched_pairs_test: reference lengths differ at segment " +
          std::to_string(i));
  if (options.num_resamples < 1)
    throw ValidationError("matched_pairs_test: num_resamples < 1");

  const std::size_t n = a.size();
  MatchedPairsResult res;
  res.full_sign = sign_of(corpus_wer(a) - corpus_wer(b));

  if (options.gillick) {
    // Matched-pairs z-test on per-segment error-count differences.
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      mean += double(a[i].errors() - b[i].errors());
    mean /= double(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = double(a[i].errors() - b[i].errors()) - mean;
      var += d * d;
    }
    var /= n > 1 ? double(n - 1) : 1.0;
    const double se = std::sqrt(var / double(n));
    // constant nonzero difference: unbounded evidence
    const double z = se > 0.0 ? mean / se
                              : (mean == 0.0 ? 0.0
                                             : std::numeric_limits<
                                                   double>::infinity() *
                                                   (mean > 0 ? 1.0 : -1.0));
    const double crit = inverse_normal_cdf(1.0 - (1.0 - options.alpha) / 2.0);
    res.agreement = std::abs(z);
    res.significant = std::abs(z) >= crit && res.full_sign != 0;
    return res;
  }

  std::vector<int> agree(std::size_t(options.num_resamples), 0);
  parallel_for(options.num_resamples, options.jobs, [&](std::int64_t k) {
    Rng rng(Rng::derive(options.seed, std::uint64_t(k)));
    EditCounts ta, tb;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t pick = std::size_t(rng.next_below(std::uint64_t(n)));
      ta += a[pick];
      tb += b[pick];
    }
    const double diff =
        double(ta.errors()) /
            double(std::max<std::int64_t>(ta.reference_words, 1)) -
        double(tb.errors()) /
            double(std::max<std::int64_t>(tb.reference_words, 1));
    agree[std::size_t(k)] = sign_of(diff) == res.full_sign ? 1 : 0;
  });
  std::int64_t hits = 0;
  for (int v : agree) hits += v;
  res.agreement = double(hits) / double(options.num_resamples);
  res.significant = res.agreement >= options.alpha && res.full_sign != 0;
  return res;
}

double diversity(const WordTransitionNetwork& wtn) {
  if (wtn.bins.empty() || wtn.num_inputs <= 0) return 0.0;
  const double m = double(wtn.num_inputs);
  double total = 0.0;
  for (const auto& bin : wtn.bins) {
    // Sum over inputs of half the squared distance between the one-hot
    // entry indicator and the bin average reduces to (M - sum n_e^2 / M)/2
    // with n_e the per-entry multiplicities.
    std::map<WordId, int> mult;
    for (const auto& c : bin.candidates) ++mult[c.entry];
    double sq = 0.0;
    for (const auto& [entry, n] : mult) sq += double(n) * double(n);
    total += 0.5 * (m - sq / m);
  }
  return total / (double(wtn.bins.size()) * m);
}

}  // namespace qerover
