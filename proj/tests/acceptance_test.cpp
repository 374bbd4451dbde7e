// Acceptance gate: one self-contained check per shipped guarantee. Each
// criterion prints exactly one PASS/FAIL line with its key numbers; the
// exit code is the number of failures. Tolerances and seeds are pinned
// here on purpose -- every run must reproduce the same margins.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qerover/common.hpp"
#include "qerover/corpus.hpp"
#include "qerover/dsp.hpp"
#include "qerover/features.hpp"
#include "qerover/levelsel.hpp"
#include "qerover/metrics.hpp"
#include "qerover/ngram.hpp"
#include "qerover/pipeline.hpp"
#include "qerover/qelearn.hpp"
#include "qerover/simcorpus.hpp"
#include "qerover/tree.hpp"
#include "qerover/types.hpp"
#include "qerover/vocab.hpp"
#include "qerover/wtn.hpp"
#include "oracles.hpp"

namespace {

using namespace qerover;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

// Exact-match and runtime pins shared by the criteria below.
constexpr double kTinyTol = 1e-9;
constexpr double kMfccTol = 1e-6;
constexpr double kOracleGapMargin = 0.02;   // criterion 3, absolute WER
constexpr double kQeGainMin = 0.010;        // criterion 4, vs mean random
constexpr double kQeOracleGapMax = 0.015;   // criterion 4, vs SegO
constexpr double kUntieWerSlack = 0.001;    // criterion 5
constexpr double kAutoLevelSlack = 0.005;   // criterion 9, vs best fixed
constexpr double kAutoLevelMinBa = 0.60;    // criterion 9
constexpr double kWerSweepBudgetSec = 30.0;   // criterion 1
constexpr double kOracleBudgetSec = 120.0;    // criterion 3
constexpr double kQeGainBudgetSec = 300.0;    // criterion 4

double elapsed(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string format(const char* fmt, ...) {
  va_list args;
  va_start(args, fmt);
  char buf[512];
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return buf;
}

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::vector<double> spread(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i)
    out.push_back(lo + (hi - lo) * (n > 1 ? double(i) / (n - 1) : 0.0));
  return out;
}

// ---------------------------------------------------------------- criterion 1

// Sweeps every pair of sequences with length <= 8 over a 3-word alphabet.
// The outer recursion enumerates the reference; the inner sweep reuses one
// DP row per prefix of the hypothesis, so the oracle distance for all
// 9841^2 pairs is exact and independent of the scoring code under test.
Outcome criterion1() {
  auto t0 = Clock::now();
  constexpr int kAlphabet = 3;
  constexpr int kMaxLen = 8;
  long long pairs = 0;
  long long mismatches = 0;
  std::vector<int> a;
  WordSeq wa, wb;

  auto sweep = [&] {
    wa.assign(a.begin(), a.end());
    oracles::for_all_edit_distances(a, kAlphabet, kMaxLen,
                                    [&](const std::vector<int>& b, int dist) {
                                      wb.assign(b.begin(), b.end());
                                      ++pairs;
                                      const WerResult r = wer(wb, wa);
                                      if (r.counts.errors() != dist ||
                                          r.counts.reference_words !=
                                              std::int64_t(wa.size()))
                                        ++mismatches;
                                    });
  };
  std::function<void()> dfs = [&] {
    sweep();
    if (int(a.size()) == kMaxLen) return;
    for (int c = 0; c < kAlphabet; ++c) {
      a.push_back(c);
      dfs();
      a.pop_back();
    }
  };
  dfs();

  const double sec = elapsed(t0);
  const bool ok = mismatches == 0 && sec < kWerSweepBudgetSec;
  return {ok, format("%lld pairs, %lld mismatches, %.1fs", pairs, mismatches,
                     sec)};
}

// ---------------------------------------------------------------- criterion 2

// Frequency vote over one bin, written from the tie rule's definition:
// highest count wins, ties go to the entry whose earliest contributing
// rank is smallest, a winning null emits nothing.
std::vector<WordId> vote_bin_oracle(const Bin& bin) {
  std::map<WordId, int> freq;
  std::map<WordId, int> min_rank;
  for (const Candidate& c : bin.candidates) {
    freq[c.entry] += 1;
    auto it = min_rank.find(c.entry);
    if (it == min_rank.end() || c.source_rank < it->second)
      min_rank[c.entry] = c.source_rank;
  }
  WordId best = bin.candidates.front().entry;
  for (const auto& [entry, count] : freq) {
    if (count > freq[best] ||
        (count == freq[best] && min_rank[entry] < min_rank[best]))
      best = entry;
  }
  if (best == kNullWord) return {};
  return {best};
}

Outcome criterion2() {
  Rng rng(20260822);
  int recovered = 0;
  int l1_exact = 0;
  constexpr int kNetworks = 1000;
  for (int t = 0; t < kNetworks; ++t) {
    const int inputs = 2 + t % 4;
    std::vector<WordSeq> hyps;
    for (int r = 0; r < inputs; ++r) {
      WordSeq h(rng.next_below(11));
      for (WordId& w : h) w = WordId(rng.next_below(5));
      hyps.push_back(std::move(h));
    }
    const WordTransitionNetwork wtn = build_wtn(hyps);
    bool all_recovered = true;
    for (int rank = 1; rank <= inputs; ++rank) {
      WordSeq got;
      for (const Bin& bin : wtn.bins)
        for (const Candidate& c : bin.candidates)
          if (c.source_rank == rank && c.entry != kNullWord)
            got.push_back(c.entry);
      if (got != hyps[std::size_t(rank - 1)]) all_recovered = false;
    }
    recovered += all_recovered;
    if (combine_segment({hyps[0]}) == hyps[0]) ++l1_exact;
  }

  // Exhaustive 2- and 3-entry bins over {word0, word1, null}.
  const WordId alphabet[3] = {0, 1, kNullWord};
  int bins_checked = 0;
  int bin_mismatches = 0;
  for (int entries = 2; entries <= 3; ++entries) {
    std::vector<int> pick(std::size_t(entries), 0);
    for (;;) {
      Bin bin;
      for (int r = 0; r < entries; ++r)
        bin.candidates.push_back(
            {alphabet[pick[std::size_t(r)]], r + 1});
      WordTransitionNetwork wtn;
      wtn.bins.push_back(bin);
      wtn.num_inputs = entries;
      WordSeq got = vote(wtn);
      std::vector<WordId> want = vote_bin_oracle(bin);
      ++bins_checked;
      if (got != want) ++bin_mismatches;
      int i = entries - 1;
      while (i >= 0 && pick[std::size_t(i)] == 2) pick[std::size_t(i--)] = 0;
      if (i < 0) break;
      ++pick[std::size_t(i)];
    }
  }

  const bool ok = recovered == kNetworks && l1_exact == kNetworks &&
                  bin_mismatches == 0;
  return {ok, format("%d/%d networks recovered, %d/%d L1 exact, %d/%d bins",
                     recovered, kNetworks, l1_exact, kNetworks,
                     bins_checked - bin_mismatches, bins_checked)};
}

// ---------------------------------------------------------------- criterion 3

Outcome criterion3() {
  auto t0 = Clock::now();
  SimProfile p;
  p.num_segments = 500;
  p.num_systems = 6;
  p.base_error_rates = spread(0.1, 0.5, 6);
  p.seed = 412;
  p.with_audio = false;
  const Dataset ds = generate(p).dataset;

  auto l1 = [&](const SegmentOrders& orders) {
    return *combine_at_level(ds, orders, 1).wer;
  };
  const double sego = l1(oracle_orders(ds, RankSource::kSegO, 2.0));
  const double syso = l1(oracle_orders(ds, RankSource::kSysO, 2.0));
  const double insego = l1(oracle_orders(ds, RankSource::kInSegO, 2.0));
  double rand_mean = 0.0;
  for (int it = 0; it < 20; ++it)
    rand_mean += l1(random_orders(ds, p.seed, std::uint64_t(it)));
  rand_mean /= 20.0;

  const double sec = elapsed(t0);
  const bool ok = syso - sego >= kOracleGapMargin &&
                  rand_mean - syso >= kOracleGapMargin &&
                  insego - rand_mean >= kOracleGapMargin &&
                  sec < kOracleBudgetSec;
  return {ok, format("sego=%.4f syso=%.4f random=%.4f insego=%.4f, %.1fs",
                     sego, syso, rand_mean, insego, sec)};
}

// ---------------------------------------------------------------- criterion 4

Outcome criterion4() {
  auto t0 = Clock::now();
  SimProfile p;
  p.num_segments = 400;
  p.num_systems = 6;
  p.base_error_rates = spread(0.1, 0.5, 6);
  p.rho = 0.9;
  p.seed = 503;
  p.with_audio = false;
  SimProfile pe = p;
  pe.seed = p.seed + 1000003;

  const Dataset train_ds = generate(p).dataset;
  std::vector<std::vector<std::string>> sentences;
  for (const Segment& s : train_ds.segments) sentences.push_back(*s.reference);
  const NgramLM lm = NgramLM::train(sentences, 3);
  FeatureResources res;
  res.lm = &lm;
  res.lm_in = &lm;
  FeatureConfig cfg;
  const FeatureTable train_features = extract_all(train_ds, res, cfg).features;
  const Dataset eval_ds = generate(pe).dataset;
  const FeatureTable eval_features = extract_all(eval_ds, res, cfg).features;

  TrainQeOptions opt;
  opt.method = "mlr";
  opt.mask = FeatureVector::kTextualBit | FeatureVector::kWordBit;
  opt.seed = p.seed;
  const QEModel model = train_qe(train_ds, train_features, opt).model;

  const SegmentOrders model_o = model_orders(eval_ds, eval_features, model);
  int best_level = 1;
  double best = 1e18;
  for (int l = 1; l <= p.num_systems; ++l) {
    const double w = *combine_at_level(eval_ds, model_o, l).wer;
    if (w < best) {
      best = w;
      best_level = l;
    }
  }
  double rand_mean = 0.0;
  for (int it = 0; it < 20; ++it)
    rand_mean += *combine_at_level(
                      eval_ds, random_orders(eval_ds, p.seed, std::uint64_t(it)),
                      best_level)
                      .wer;
  rand_mean /= 20.0;
  const double sego =
      *combine_at_level(eval_ds, oracle_orders(eval_ds, RankSource::kSegO, 2.0),
                        best_level)
           .wer;

  const double sec = elapsed(t0);
  const bool ok = rand_mean - best >= kQeGainMin &&
                  best - sego <= kQeOracleGapMax && sec < kQeGainBudgetSec;
  return {ok,
          format("L%d model=%.4f random=%.4f sego=%.4f gain=%.4f gap=%.4f, "
                 "%.1fs",
                 best_level, best, rand_mean, sego, rand_mean - best,
                 best - sego, sec)};
}

// ---------------------------------------------------------------- criterion 5

Outcome criterion5() {
  SimProfile p;
  p.num_segments = 200;
  p.num_systems = 4;
  p.base_error_rates = {0.2, 0.27, 0.34, 0.4};
  p.jitter = 0.05;
  p.rho = 0.9;
  p.seed = 604;
  p.with_audio = false;
  p.min_ref_len = 4;
  p.max_ref_len = 8;
  SimProfile pe = p;
  pe.seed = p.seed + 1000003;

  const Dataset train_ds = generate(p).dataset;
  int tied = 0;
  for (const Segment& s : train_ds.segments) {
    std::vector<double> rates;
    for (const std::string& sys : train_ds.systems)
      rates.push_back(
          wer(train_ds.hyp(s.segment_id, sys).words(), *s.reference).rate);
    bool any = false;
    for (std::size_t i = 0; i < rates.size(); ++i)
      for (std::size_t j = i + 1; j < rates.size(); ++j)
        if (rates[i] == rates[j]) any = true;
    tied += any;
  }
  const double tie_fraction = double(tied) / double(p.num_segments);

  std::vector<std::vector<std::string>> sentences;
  for (const Segment& s : train_ds.segments) sentences.push_back(*s.reference);
  const NgramLM lm = NgramLM::train(sentences, 3);
  FeatureResources res;
  res.lm = &lm;
  res.lm_in = &lm;
  FeatureConfig cfg;
  const FeatureTable train_features = extract_all(train_ds, res, cfg).features;

  const unsigned mask = FeatureVector::kTextualBit | FeatureVector::kWordBit;
  std::vector<std::string> warnings;
  const auto tied_set = build_mlr(train_ds, train_features, 2.0, &warnings);
  auto untied_set = tied_set;
  untie(untied_set, global_prior(train_ds, 2.0));
  RankerParams params;
  params.seed = p.seed;
  const double map_tied =
      cv_ranker(train_ds, tied_set, {params}, 4, kMinCombinationLevel, 1, mask)
          .best_map;
  const double map_untied =
      cv_ranker(train_ds, untied_set, {params}, 4, kMinCombinationLevel, 1,
                mask)
          .best_map;

  TrainQeOptions opt;
  opt.method = "mlr";
  opt.mask = mask;
  opt.seed = p.seed;
  const QEModel model_tied = train_qe(train_ds, train_features, opt).model;
  opt.untie = true;
  const QEModel model_untied = train_qe(train_ds, train_features, opt).model;

  const Dataset eval_ds = generate(pe).dataset;
  const FeatureTable eval_features = extract_all(eval_ds, res, cfg).features;
  const SegmentOrders tied_o = model_orders(eval_ds, eval_features, model_tied);
  const SegmentOrders untied_o =
      model_orders(eval_ds, eval_features, model_untied);
  int best_level = 1;
  double wer_tied = 1e18;
  for (int l = 1; l <= p.num_systems; ++l) {
    const double w = *combine_at_level(eval_ds, tied_o, l).wer;
    if (w < wer_tied) {
      wer_tied = w;
      best_level = l;
    }
  }
  const double wer_untied =
      *combine_at_level(eval_ds, untied_o, best_level).wer;

  const bool ok = tie_fraction >= 0.5 && map_untied >= map_tied &&
                  wer_untied - wer_tied <= kUntieWerSlack;
  return {ok,
          format("ties=%.2f map tied=%.4f untied=%.4f, L%d wer tied=%.4f "
                 "untied=%.4f",
                 tie_fraction, map_tied, map_untied, best_level, wer_tied,
                 wer_untied)};
}

// ---------------------------------------------------------------- criterion 6

Outcome criterion6() {
  const WordSeq base = {0, 1, 2};
  const double identical =
      diversity(build_wtn({base, base, base}));
  const double all_disagree =
      diversity(build_wtn({{0, 1, 2}, {3, 4, 5}}));

  Rng rng(66);
  double max_seen = 0.0;
  constexpr int kNetworks = 10000;
  for (int t = 0; t < kNetworks; ++t) {
    const int inputs = 2 + int(rng.next_below(5));
    std::vector<WordSeq> hyps;
    for (int r = 0; r < inputs; ++r) {
      WordSeq h(rng.next_below(9));
      for (WordId& w : h) w = WordId(rng.next_below(4));
      hyps.push_back(std::move(h));
    }
    max_seen = std::max(max_seen, diversity(build_wtn(hyps)));
  }

  const bool ok = std::abs(identical) <= kTinyTol &&
                  std::abs(all_disagree - 0.25) <= kTinyTol &&
                  max_seen <= 0.5 + kTinyTol;
  return {ok, format("identical=%.2e disagree-0.25=%.2e max=%.4f over %d",
                     identical, all_disagree - 0.25, max_seen, kNetworks)};
}

// ---------------------------------------------------------------- criterion 7

Outcome criterion7() {
  const double perfect = ap_at_l({0, 1, 2, 3}, {0, 1, 2, 3}, 4);
  const double swapped = ap_at_l({1, 0}, {0, 1}, 2);
  // Truth 1,2,3,4 predicted as 1,2,4,3: P = 1, 1, 2/3, 2/4.
  const double last_pair = ap_at_l({0, 1, 3, 2}, {0, 1, 2, 3}, 4);
  const double want_last_pair = 19.0 / 24.0;

  const double mae_zero = mae({0.1, 0.5, 0.9}, {0.1, 0.5, 0.9});
  const double mae_unit = mae({0.0, 1.0}, {1.0, 0.0});
  const double ba_perfect = balanced_accuracy({1, 0, 1, 0}, {1, 0, 1, 0});
  const double ba_chance = balanced_accuracy({1, 1, 0, 0}, {1, 0, 1, 0});

  const bool ok = std::abs(perfect - 1.0) <= kTinyTol &&
                  std::abs(swapped) <= kTinyTol &&
                  std::abs(last_pair - want_last_pair) <= kTinyTol &&
                  std::abs(mae_zero) <= kTinyTol &&
                  std::abs(mae_unit - 1.0) <= kTinyTol &&
                  std::abs(ba_perfect - 1.0) <= kTinyTol &&
                  std::abs(ba_chance - 0.5) <= kTinyTol;
  return {ok, format("ap=%.6f/%.6f/%.6f mae=%.2f/%.2f ba=%.2f/%.2f", perfect,
                     swapped, last_pair, mae_zero, mae_unit, ba_perfect,
                     ba_chance)};
}

// ---------------------------------------------------------------- criterion 8

Outcome criterion8(const fs::path& dir) {
  // Step-function benchmark: y flips at x0 = 0.5, four distractor dims.
  const std::vector<int> dims = {0, 1, 2, 3, 4};
  Rng rng(88);
  auto draw = [&](std::size_t n, std::vector<FeatRow>& x,
                  std::vector<double>& y) {
    x.assign(n, FeatRow{});
    y.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (int d : dims) x[i][std::size_t(d)] = rng.next_double();
      y[i] = x[i][0] > 0.5 ? 1.0 : 0.0;
    }
  };
  std::vector<FeatRow> xtr, xev;
  std::vector<double> ytr, yev;
  draw(400, xtr, ytr);
  draw(200, xev, yev);

  XrtParams xp;
  xp.k_features = 3;
  xp.min_leaf = 2;
  xp.seed = 88;
  const XrtModel xrt = fit_xrt(xtr, ytr, dims, xp);
  const XrtModel xrt_again = fit_xrt(xtr, ytr, dims, xp);
  double mean_y = 0.0;
  for (double v : ytr) mean_y += v;
  mean_y /= double(ytr.size());
  double mae_model = 0.0;
  double mae_mean = 0.0;
  bool deterministic = true;
  for (std::size_t i = 0; i < xev.size(); ++i) {
    const double pred = xrt.predict(xev[i]);
    mae_model += std::abs(pred - yev[i]);
    mae_mean += std::abs(mean_y - yev[i]);
    if (pred != xrt_again.predict(xev[i])) deterministic = false;
  }
  mae_model /= double(xev.size());
  mae_mean /= double(xev.size());

  // Noise-free separable ranking: within every group the single
  // informative feature decreases with the rank label.
  std::vector<FeatRow> xr;
  std::vector<RankGroup> groups;
  std::vector<std::vector<int>> true_orders;
  for (int g = 0; g < 40; ++g) {
    RankGroup group;
    for (int q = 0; q < 4; ++q) {
      FeatRow row{};
      row[0] = 3.0 - q;
      row[1] = 0.1 * double((g + q) % 7);
      group.instance_index.push_back(int(xr.size()));
      group.rank.push_back(double(q + 1));
      xr.push_back(row);
    }
    groups.push_back(std::move(group));
    true_orders.push_back({0, 1, 2, 3});
  }
  RankerParams rp;
  rp.seed = 88;
  const RankerModel ranker = fit_ranker(xr, groups, dims, rp);
  const RankerModel ranker_again = fit_ranker(xr, groups, dims, rp);
  std::vector<std::vector<int>> pred_orders;
  for (const RankGroup& group : groups) {
    std::vector<std::pair<double, int>> scored;
    for (int local = 0; local < 4; ++local) {
      const FeatRow& row = xr[std::size_t(group.instance_index[std::size_t(local)])];
      scored.push_back({-ranker.score(row), local});
      if (ranker.score(row) != ranker_again.score(row)) deterministic = false;
    }
    std::stable_sort(scored.begin(), scored.end());
    std::vector<int> order;
    for (const auto& [neg, local] : scored) order.push_back(local);
    pred_orders.push_back(std::move(order));
  }
  const double ranker_map = map_at_l(pred_orders, true_orders, 4);

  // Serialization: both model kinds reload bit-exact.
  QEModel packed_xrt;
  packed_xrt.kind = "xrt_regressor";
  packed_xrt.feature_mask = ~0u;
  packed_xrt.xrt = xrt;
  QEModel packed_ranker;
  packed_ranker.kind = "ranking_forest";
  packed_ranker.feature_mask = ~0u;
  packed_ranker.ranker = ranker;
  const std::string path_xrt = (dir / "model_xrt.json").string();
  const std::string path_ranker = (dir / "model_ranker.json").string();
  packed_xrt.save(path_xrt);
  packed_ranker.save(path_ranker);
  const QEModel loaded_xrt = QEModel::load(path_xrt);
  const QEModel loaded_ranker = QEModel::load(path_ranker);
  bool round_trip = true;
  for (std::size_t i = 0; i < xev.size(); ++i) {
    FeatureVector fv;
    fv.values = xev[i];
    fv.mask = ~0u;
    if (packed_xrt.predict(fv) != loaded_xrt.predict(fv)) round_trip = false;
    if (packed_ranker.predict(fv) != loaded_ranker.predict(fv))
      round_trip = false;
  }

  const bool ok = mae_model <= 0.5 * mae_mean &&
                  std::abs(ranker_map - 1.0) <= kTinyTol && deterministic &&
                  round_trip;
  return {ok,
          format("xrt mae=%.4f vs mean=%.4f, ranker map=%.4f, "
                 "deterministic=%d round_trip=%d",
                 mae_model, mae_mean, ranker_map, int(deterministic),
                 int(round_trip))};
}

// ---------------------------------------------------------------- criterion 9

Outcome criterion9() {
  // Delete-heavy corruption makes the weak systems agree on nulls, so deep
  // combination genuinely hurts on some segments and helps on others.
  SimProfile p;
  p.num_segments = 250;
  p.num_systems = 6;
  p.base_error_rates = {0.1, 0.15, 0.2, 0.45, 0.5, 0.55};
  p.jitter = 0.3;
  p.p_sub = 0.3;
  p.p_ins = 0.0;
  p.p_del = 0.7;
  p.seed = 709;
  p.with_audio = false;
  SimProfile pe = p;
  pe.seed = p.seed + 1000003;

  const Dataset train_ds = generate(p).dataset;
  const Dataset eval_ds = generate(pe).dataset;
  const SegmentOrders train_o = oracle_orders(train_ds, RankSource::kSysO, 2.0);
  const SegmentOrders eval_o = oracle_orders(eval_ds, RankSource::kSysO, 2.0);

  const auto instances = build_level_instances(train_ds, train_o, {});
  std::vector<std::string> warnings;
  const LevelSelectorOutcome outcome =
      train_level_selector(instances, 4, p.seed, &warnings);
  const double ba =
      outcome.cv_balanced_accuracy[std::size_t(outcome.chosen)];

  const auto decisions = choose_levels(eval_ds, eval_o, outcome.classifier, {});
  const double wer_auto =
      *combine_at_chosen_levels(eval_ds, eval_o, decisions).wer;

  double best_fixed = 1e18;
  for (int l = kMinCombinationLevel; l <= p.num_systems; ++l)
    best_fixed = std::min(best_fixed, *combine_at_level(eval_ds, eval_o, l).wer);

  double rand_mean = 0.0;
  constexpr int kRandomRuns = 5;
  for (int r = 0; r < kRandomRuns; ++r) {
    Rng rng(Rng::derive(p.seed + 77, std::uint64_t(r)));
    std::vector<LevelDecisionRow> rows;
    for (const Segment& seg : eval_ds.segments)
      rows.push_back({seg.segment_id,
                      kMinCombinationLevel +
                          int(rng.next_below(
                              std::uint64_t(p.num_systems -
                                            kMinCombinationLevel + 1))),
                      1.0});
    rand_mean += *combine_at_chosen_levels(eval_ds, eval_o, rows).wer;
  }
  rand_mean /= double(kRandomRuns);

  const bool ok = ba > kAutoLevelMinBa && wer_auto < rand_mean &&
                  wer_auto - best_fixed <= kAutoLevelSlack;
  return {ok,
          format("%s ba=%.3f auto=%.4f random=%.4f best_fixed=%.4f",
                 level_algo_name(outcome.chosen), ba, wer_auto, rand_mean,
                 best_fixed)};
}

// --------------------------------------------------------------- criterion 10

Outcome criterion10() {
  Rng rng(10);
  std::vector<EditCounts> a;
  for (int s = 0; s < 60; ++s) {
    EditCounts c;
    c.reference_words = 10 + std::int64_t(rng.next_below(11));
    c.substitutions = std::int64_t(rng.next_below(4));
    c.insertions = std::int64_t(rng.next_below(2));
    c.deletions = std::int64_t(rng.next_below(2));
    a.push_back(c);
  }
  std::vector<EditCounts> b = a;
  for (EditCounts& c : b) c.substitutions += 1;

  int false_alarms = 0;
  for (std::uint64_t s = 1; s <= 100; ++s) {
    MatchedPairsOptions opt;
    opt.seed = s;
    if (matched_pairs_test(a, a, opt).significant) ++false_alarms;
  }
  const MatchedPairsResult dominating = matched_pairs_test(a, b);

  const bool ok = false_alarms == 0 && dominating.significant &&
                  std::abs(dominating.agreement - 1.0) <= kTinyTol;
  return {ok, format("self false alarms=%d/100, dominating significant=%d "
                     "agreement=%.3f",
                     false_alarms, int(dominating.significant),
                     dominating.agreement)};
}

// --------------------------------------------------------------- criterion 11

bool all_finite(const FeatureVector& fv) {
  for (double v : fv.values)
    if (!std::isfinite(v)) return false;
  return true;
}

Outcome criterion11(const fs::path& dir) {
  // MFCC against the direct-DFT oracle on a deterministic tone mixture.
  constexpr double kPi = 3.14159265358979323846;
  constexpr int kRate = 8000;
  std::vector<double> samples(std::size_t(kRate * 2 / 5));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double t = double(i) / kRate;
    samples[i] = 0.5 * std::sin(2.0 * kPi * 440.0 * t) +
                 0.3 * std::sin(2.0 * kPi * 1200.0 * t + 1.0) +
                 0.2 * std::sin(2.0 * kPi * 2500.0 * t + 2.0);
  }
  const DspConfig dsp;
  const auto fast = mfcc(samples, kRate, dsp);
  const auto direct = oracles::mfcc_direct_dft(samples, kRate, dsp);
  double mfcc_diff = fast.size() == direct.size() ? 0.0 : 1.0;
  if (fast.size() == direct.size())
    for (std::size_t f = 0; f < fast.size(); ++f) {
      if (fast[f].size() != direct[f].size()) mfcc_diff = 1.0;
      for (std::size_t j = 0; j < fast[f].size() && mfcc_diff < 1.0; ++j)
        mfcc_diff = std::max(mfcc_diff, std::abs(fast[f][j] - direct[f][j]));
    }

  // Degenerate-input fuzz: every variant must yield 75 finite values.
  std::vector<std::vector<std::string>> sentences = {{"aa", "ab", "ac"},
                                                     {"ab", "ad"}};
  const NgramLM lm = NgramLM::train(sentences, 2);
  int fuzz_total = 0;
  int fuzz_finite = 0;
  const std::vector<std::vector<double>> audio_cases = {
      {},
      {0.0, 0.0, 0.0},
      {1e9, -1e9, 1e9, -1e9, 0.0},
      std::vector<double>(64, 1e-12),
      std::vector<double>(4000, 0.25),
  };
  for (int variant = 0; variant < 50; ++variant) {
    Segment seg;
    seg.segment_id = "s";
    seg.utterance_id = "u";
    seg.speaker_id = "spk";
    seg.start = 0.0;
    seg.end = variant % 5 == 0 ? 0.01 : 0.5;
    Hypothesis hyp;
    hyp.system_id = "sys";
    hyp.segment_id = "s";
    const int token_count = variant % 4;
    for (int i = 0; i < token_count; ++i) {
      Token tok;
      tok.word = i % 2 == 0 ? "aa" : "zq";
      tok.start = variant % 3 == 0 ? 5.0 : 0.01 * i;  // sometimes off-span
      tok.duration = variant % 7 == 0 ? 0.0 : 0.05;
      if (variant % 5 == 1) tok.confidence = 0.5;
      hyp.tokens.push_back(tok);
    }
    FeatureResources res;
    if (variant % 2 == 0) {
      res.lm = &lm;
      res.lm_in = &lm;
    }
    FeatureConfig cfg;
    cfg.base = variant % 3 != 1;
    cfg.word = variant % 3 != 2;
    const auto& audio = audio_cases[std::size_t(variant) % audio_cases.size()];
    const FeatureVector fv =
        extract_features(seg, hyp, audio, kRate, res, cfg);
    ++fuzz_total;
    fuzz_finite += all_finite(fv);
  }

  // Group concatenation: the full vector equals base and word extractions
  // laid side by side.
  SimProfile p;
  p.num_segments = 10;
  p.num_systems = 3;
  p.base_error_rates = {0.1, 0.25, 0.4};
  p.seed = 1111;
  p.with_audio = true;
  const SimCorpus corpus = generate(p);
  const std::string manifest = emit(corpus, (dir / "bw").string());
  const Dataset ds = load_manifest(manifest);
  std::vector<std::vector<std::string>> ref_sentences;
  for (const Segment& s : ds.segments) ref_sentences.push_back(*s.reference);
  const NgramLM corpus_lm = NgramLM::train(ref_sentences, 3);
  FeatureResources res;
  res.lm = &corpus_lm;
  res.lm_in = &corpus_lm;
  FeatureConfig cfg_b;
  cfg_b.word = false;
  FeatureConfig cfg_w;
  cfg_w.base = false;
  FeatureConfig cfg_bw;
  const FeatureTable table_b = extract_all(ds, res, cfg_b).features;
  const FeatureTable table_w = extract_all(ds, res, cfg_w).features;
  const FeatureTable table_bw = extract_all(ds, res, cfg_bw).features;
  bool concat_ok = table_b.size() == table_bw.size() &&
                   table_w.size() == table_bw.size();
  for (const auto& [key, bw] : table_bw) {
    if (!concat_ok) break;
    const FeatureVector& fb = table_b.at(key);
    const FeatureVector& fw = table_w.at(key);
    for (int i = 0; i < FeatureVector::kWordOffset; ++i)
      if (bw.values[std::size_t(i)] != fb.values[std::size_t(i)])
        concat_ok = false;
    for (int i = FeatureVector::kWordOffset; i < FeatureVector::kDim; ++i)
      if (bw.values[std::size_t(i)] != fw.values[std::size_t(i)])
        concat_ok = false;
    if (bw.mask != (fb.mask | fw.mask)) concat_ok = false;
  }

  const bool ok = mfcc_diff <= kMfccTol && fuzz_finite == fuzz_total &&
                  concat_ok;
  return {ok, format("mfcc diff=%.2e, fuzz finite=%d/%d, concat=%d", mfcc_diff,
                     fuzz_finite, fuzz_total, int(concat_ok))};
}

}  // namespace

int main() {
  const fs::path dir =
      fs::temp_directory_path() / "qerover_acceptance";
  std::error_code ec;
  fs::remove_all(dir, ec);
  fs::create_directories(dir);

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, criterion1},
      {2, criterion2},
      {3, criterion3},
      {4, criterion4},
      {5, criterion5},
      {6, criterion6},
      {7, criterion7},
      {8, [&] { return criterion8(dir); }},
      {9, criterion9},
      {10, criterion10},
      {11, [&] { return criterion11(dir); }},
  };

  int failures = 0;
  for (const auto& [number, run] : criteria) {
    Outcome outcome;
    try {
      outcome = run();
    } catch (const std::exception& e) {
      outcome = {false, format("exception: %s", e.what())};
    }
    std::printf("criterion %d: %s (%s)\n", number,
                outcome.ok ? "PASS" : "FAIL", outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.ok) ++failures;
  }

  fs::remove_all(dir, ec);
  return failures;
}
