#include "qerover/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "qerover/common.hpp"

namespace qerover {

namespace {

double capped_segment_wer(const Dataset& dataset, const Segment& seg,
                          const std::string& system, double cap) {
  const Hypothesis& hyp = dataset.hyp(seg.segment_id, system);
  return std::min(wer(hyp.words(), *seg.reference).rate, cap);
}

void require_references(const Dataset& dataset, const char* what) {
  for (const auto& seg : dataset.segments) {
    if (!seg.reference) {
      throw ValidationError(std::string(what) + " needs a reference for every "
                            "segment; segment '" + seg.segment_id +
                            "' has none");
    }
  }
  if (dataset.segments.empty()) {
    throw ValidationError(std::string(what) + " needs at least one segment");
  }
}

std::vector<WordSeq> ranked_seqs(const Dataset& dataset, const Segment& seg,
                                 const std::vector<int>& order, int level,
                                 Vocab& vocab) {
  std::vector<WordSeq> seqs;
  seqs.reserve(std::size_t(level));
  for (int i = 0; i < level; ++i) {
    const std::string& sys = dataset.systems[std::size_t(order[std::size_t(i)])];
    seqs.push_back(vocab.add_all(dataset.hyp(seg.segment_id, sys).words()));
  }
  return seqs;
}

std::vector<std::string> to_words(const WordSeq& seq, const Vocab& vocab) {
  std::vector<std::string> words;
  words.reserve(seq.size());
  for (WordId id : seq) words.push_back(vocab.word(id));
  return words;
}

void check_orders(const Dataset& dataset, const SegmentOrders& orders) {
  if (orders.size() != dataset.segments.size()) {
    throw ValidationError("order count does not match segment count");
  }
  for (const auto& o : orders) {
    if (o.size() != dataset.systems.size()) {
      throw ValidationError("segment order does not cover every system");
    }
  }
}

}  // namespace

RankSource parse_rank_source(const std::string& name) {
  if (name == "random") return RankSource::kRandom;
  if (name == "syso") return RankSource::kSysO;
  if (name == "sego") return RankSource::kSegO;
  if (name == "insyso") return RankSource::kInSysO;
  if (name == "insego") return RankSource::kInSegO;
  if (name == "model") return RankSource::kModel;
  throw ValidationError("unknown ranking source '" + name + "'");
}

const char* rank_source_name(RankSource source) {
  switch (source) {
    case RankSource::kRandom: return "random";
    case RankSource::kSysO: return "syso";
    case RankSource::kSegO: return "sego";
    case RankSource::kInSysO: return "insyso";
    case RankSource::kInSegO: return "insego";
    case RankSource::kModel: return "model";
  }
  return "unknown";
}

SegmentOrders oracle_orders(const Dataset& dataset, RankSource source,
                            double wer_cap) {
  require_references(dataset, "oracle ranking");
  const std::size_t r = dataset.systems.size();
  SegmentOrders orders(dataset.segments.size());
  if (source == RankSource::kSysO || source == RankSource::kInSysO) {
    std::vector<EditCounts> pooled(r);
    for (const auto& seg : dataset.segments) {
      for (std::size_t i = 0; i < r; ++i) {
        pooled[i] += wer(dataset.hyp(seg.segment_id, dataset.systems[i])
                             .words(),
                         *seg.reference)
                         .counts;
      }
    }
    std::vector<int> order(r);
    for (std::size_t i = 0; i < r; ++i) order[i] = int(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return corpus_wer({pooled[std::size_t(a)]}) <
             corpus_wer({pooled[std::size_t(b)]});
    });
    if (source == RankSource::kInSysO) {
      std::reverse(order.begin(), order.end());
    }
    for (auto& o : orders) o = order;
    return orders;
  }
  if (source == RankSource::kSegO || source == RankSource::kInSegO) {
    for (std::size_t s = 0; s < dataset.segments.size(); ++s) {
      const Segment& seg = dataset.segments[s];
      std::vector<double> wers(r);
      for (std::size_t i = 0; i < r; ++i) {
        wers[i] = capped_segment_wer(dataset, seg, dataset.systems[i],
                                     wer_cap);
      }
      std::vector<int> order(r);
      for (std::size_t i = 0; i < r; ++i) order[i] = int(i);
      bool worst_first = source == RankSource::kInSegO;
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return worst_first ? wers[std::size_t(a)] > wers[std::size_t(b)]
                           : wers[std::size_t(a)] < wers[std::size_t(b)];
      });
      orders[s] = std::move(order);
    }
    return orders;
  }
  throw ValidationError("not an oracle ranking source");
}

SegmentOrders random_orders(const Dataset& dataset, std::uint64_t seed,
                            std::uint64_t iteration) {
  const std::size_t r = dataset.systems.size();
  SegmentOrders orders(dataset.segments.size());
  std::uint64_t iter_seed = Rng::derive(seed, iteration);
  for (std::size_t s = 0; s < orders.size(); ++s) {
    Rng rng(Rng::derive(iter_seed, s));
    std::vector<int> order(r);
    for (std::size_t i = 0; i < r; ++i) order[i] = int(i);
    rng.shuffle(order);
    orders[s] = std::move(order);
  }
  return orders;
}

SegmentOrders model_orders(const Dataset& dataset,
                           const FeatureTable& features,
                           const QEModel& model) {
  SegmentOrders orders(dataset.segments.size());
  for (std::size_t s = 0; s < dataset.segments.size(); ++s) {
    const Segment& seg = dataset.segments[s];
    std::vector<FeatureVector> fvs;
    fvs.reserve(dataset.systems.size());
    for (const auto& sys : dataset.systems) {
      auto it = features.find({seg.segment_id, sys});
      if (it == features.end()) {
        throw ValidationError("no feature vector for segment '" +
                              seg.segment_id + "' system '" + sys + "'");
      }
      fvs.push_back(it->second);
    }
    orders[s] = rank_order(model, fvs);
  }
  return orders;
}

CombineResult combine_at_level(const Dataset& dataset,
                               const SegmentOrders& orders, int level,
                               const VoteOptions& vote_options, int jobs) {
  check_orders(dataset, orders);
  if (level < 1) throw ValidationError("combination level must be >= 1");
  if (std::size_t(level) > dataset.systems.size()) {
    throw ValidationError("combination level " + std::to_string(level) +
                          " exceeds system count " +
                          std::to_string(dataset.systems.size()));
  }
  CombineResult result;
  result.outputs.resize(dataset.segments.size());
  parallel_for(dataset.segments.size(), jobs, [&](std::size_t s) {
    Vocab vocab;
    std::vector<WordSeq> seqs =
        ranked_seqs(dataset, dataset.segments[s], orders[s], level, vocab);
    result.outputs[s] = to_words(combine_segment(seqs, vote_options), vocab);
  });
  std::vector<EditCounts> counts(dataset.segments.size());
  std::vector<char> has_ref(dataset.segments.size(), 0);
  parallel_for(dataset.segments.size(), jobs, [&](std::size_t s) {
    const Segment& seg = dataset.segments[s];
    if (!seg.reference) return;
    has_ref[s] = 1;
    counts[s] = wer(result.outputs[s], *seg.reference).counts;
  });
  for (std::size_t s = 0; s < counts.size(); ++s) {
    if (has_ref[s]) result.counts.push_back(counts[s]);
  }
  if (!result.counts.empty()) result.wer = corpus_wer(result.counts);
  return result;
}

LevelScan scan_levels(const Dataset& dataset, const SegmentOrders& orders,
                      const VoteOptions& vote_options, int jobs) {
  const int r = int(dataset.systems.size());
  if (r < kMinCombinationLevel) {
    throw ValidationError("level scanning needs at least " +
                          std::to_string(kMinCombinationLevel) + " systems");
  }
  LevelScan scan;
  for (int level = kMinCombinationLevel; level <= r; ++level) {
    scan.levels.push_back(level);
    scan.results.push_back(
        combine_at_level(dataset, orders, level, vote_options, jobs));
  }
  return scan;
}

namespace {

struct SegmentLevelData {
  std::vector<std::pair<int, LevelFeatures>> candidates;
  std::vector<double> level_wers;  // empty when no reference
};

SegmentLevelData segment_level_data(const Dataset& dataset, const Segment& seg,
                                    const std::vector<int>& order,
                                    const PredWerTable& pred_wer,
                                    const VoteOptions& vote_options) {
  const int r = int(dataset.systems.size());
  SegmentLevelData data;
  Vocab vocab;
  std::vector<WordSeq> seqs =
      ranked_seqs(dataset, seg, order, r, vocab);
  std::vector<double> preds(std::size_t(r), 0.0);
  for (int i = 0; i < r; ++i) {
    auto it = pred_wer.find(
        {seg.segment_id, dataset.systems[std::size_t(order[std::size_t(i)])]});
    if (it != pred_wer.end()) preds[std::size_t(i)] = it->second;
  }
  for (int level = kMinCombinationLevel; level <= r; ++level) {
    std::vector<WordSeq> top(seqs.begin(), seqs.begin() + level);
    WordTransitionNetwork wtn = build_wtn(top);
    WordSeq combined = vote(wtn, vote_options);
    std::vector<double> top_preds(preds.begin(), preds.begin() + level);
    data.candidates.emplace_back(
        level, level_features(top, combined, wtn, top_preds));
    if (seg.reference) {
      data.level_wers.push_back(
          wer(to_words(combined, vocab), *seg.reference).rate);
    }
  }
  return data;
}

}  // namespace

std::vector<LevelInstance> build_level_instances(
    const Dataset& dataset, const SegmentOrders& orders,
    const PredWerTable& pred_wer, const VoteOptions& vote_options, int jobs) {
  check_orders(dataset, orders);
  if (dataset.systems.size() < std::size_t(kMinCombinationLevel)) {
    throw ValidationError("level training needs at least " +
                          std::to_string(kMinCombinationLevel) + " systems");
  }
  std::vector<std::vector<LevelInstance>> per_segment(dataset.segments.size());
  parallel_for(dataset.segments.size(), jobs, [&](std::size_t s) {
    const Segment& seg = dataset.segments[s];
    if (!seg.reference) return;
    SegmentLevelData data =
        segment_level_data(dataset, seg, orders[s], pred_wer, vote_options);
    std::vector<int> labels = label_levels(data.level_wers);
    for (std::size_t i = 0; i < data.candidates.size(); ++i) {
      per_segment[s].push_back({seg.segment_id, data.candidates[i].first,
                                data.candidates[i].second, labels[i]});
    }
  });
  std::vector<LevelInstance> instances;
  for (auto& block : per_segment) {
    for (auto& inst : block) instances.push_back(std::move(inst));
  }
  if (instances.empty()) {
    throw ValidationError("level training needs referenced segments");
  }
  return instances;
}

std::vector<LevelDecisionRow> choose_levels(const Dataset& dataset,
                                            const SegmentOrders& orders,
                                            const LevelClassifier& clf,
                                            const PredWerTable& pred_wer,
                                            const VoteOptions& vote_options,
                                            int jobs) {
  check_orders(dataset, orders);
  if (dataset.systems.size() < std::size_t(kMinCombinationLevel)) {
    throw ValidationError("level selection needs at least " +
                          std::to_string(kMinCombinationLevel) + " systems");
  }
  std::vector<LevelDecisionRow> rows(dataset.segments.size());
  parallel_for(dataset.segments.size(), jobs, [&](std::size_t s) {
    const Segment& seg = dataset.segments[s];
    SegmentLevelData data =
        segment_level_data(dataset, seg, orders[s], pred_wer, vote_options);
    LevelDecision decision = predict_level(clf, data.candidates);
    rows[s] = {seg.segment_id, decision.level, decision.confidence};
  });
  return rows;
}

CombineResult combine_at_chosen_levels(
    const Dataset& dataset, const SegmentOrders& orders,
    const std::vector<LevelDecisionRow>& decisions,
    const VoteOptions& vote_options, int jobs) {
  check_orders(dataset, orders);
  std::map<std::string, int> level_by_segment;
  for (const auto& d : decisions) level_by_segment[d.segment_id] = d.level;
  std::vector<int> levels(dataset.segments.size());
  for (std::size_t s = 0; s < dataset.segments.size(); ++s) {
    auto it = level_by_segment.find(dataset.segments[s].segment_id);
    if (it == level_by_segment.end()) {
      throw ValidationError("no level decision for segment '" +
                            dataset.segments[s].segment_id + "'");
    }
    levels[s] = std::clamp(it->second, 1, int(dataset.systems.size()));
  }
  CombineResult result;
  result.outputs.resize(dataset.segments.size());
  std::vector<EditCounts> counts(dataset.segments.size());
  std::vector<char> has_ref(dataset.segments.size(), 0);
  parallel_for(dataset.segments.size(), jobs, [&](std::size_t s) {
    const Segment& seg = dataset.segments[s];
    int level = levels[s];
    Vocab vocab;
    std::vector<WordSeq> seqs =
        ranked_seqs(dataset, seg, orders[s], level, vocab);
    result.outputs[s] =
        to_words(combine_segment(seqs, vote_options), vocab);
    if (seg.reference) {
      has_ref[s] = 1;
      counts[s] = wer(result.outputs[s], *seg.reference).counts;
    }
  });
  for (std::size_t s = 0; s < counts.size(); ++s) {
    if (has_ref[s]) result.counts.push_back(counts[s]);
  }
  if (!result.counts.empty()) result.wer = corpus_wer(result.counts);
  return result;
}

namespace {

void add_marks(EvaluateReport& report,
               const std::vector<std::vector<std::vector<EditCounts>>>& counts,
               const std::vector<std::string>& methods,
               const EvaluateOptions& options) {
  auto find_method = [&](const std::string& name) {
    for (std::size_t i = 0; i < methods.size(); ++i) {
      if (methods[i] == name) return int(i);
    }
    return -1;
  };
  const int random_idx = find_method("random");
  const int syso_idx = find_method("syso");
  const int sego_idx = find_method("sego");
  struct MarkSpec {
    int baseline;
    const char* symbol;
  };
  const MarkSpec specs[] = {{random_idx, "†"},   // †
                            {syso_idx, "•"},     // •
                            {sego_idx, "★"}};    // ★
  for (std::size_t m = 0; m < methods.size(); ++m) {
    if (random_idx >= 0 && std::size_t(random_idx) == m) continue;
    for (std::size_t l = 0; l < report.levels.size(); ++l) {
      std::string marks;
      for (const MarkSpec& spec : specs) {
        if (spec.baseline < 0 || std::size_t(spec.baseline) == m) continue;
        MatchedPairsResult res = matched_pairs_test(
            counts[m][l], counts[std::size_t(spec.baseline)][l],
            options.significance);
        if (!res.significant) marks += spec.symbol;
      }
      report.rows[m].cells[l].marks = std::move(marks);
    }
  }
}

}  // namespace

EvaluateReport evaluate_dataset(const Dataset& dataset,
                                const FeatureTable* features,
                                const QEModel* model,
                                const EvaluateOptions& options) {
  require_references(dataset, "evaluation");
  if (options.random_iters < 1) {
    throw ValidationError("random evaluation needs at least one iteration");
  }
  const int r = int(dataset.systems.size());
  EvaluateReport report;
  for (int level = 1; level <= r; ++level) report.levels.push_back(level);

  std::vector<std::string> methods = {"random", "insyso", "insego", "syso",
                                      "sego"};
  if (model != nullptr) {
    if (features == nullptr) {
      throw ValidationError("model evaluation needs extracted features");
    }
    methods.push_back("model");
  }

  // counts[method][level] = per-segment edit counts of the run used for
  // significance testing (random: the median-WER iteration).
  std::vector<std::vector<std::vector<EditCounts>>> counts(
      methods.size(),
      std::vector<std::vector<EditCounts>>(report.levels.size()));
  report.rows.resize(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    report.rows[m].method = methods[m];
    report.rows[m].cells.resize(report.levels.size());
  }

  for (std::size_t m = 0; m < methods.size(); ++m) {
    const std::string& name = methods[m];
    if (name == "random") {
      for (std::size_t l = 0; l < report.levels.size(); ++l) {
        std::vector<double> wers(std::size_t(options.random_iters));
        std::vector<std::vector<EditCounts>> iter_counts(
            std::size_t(options.random_iters));
        for (int it = 0; it < options.random_iters; ++it) {
          SegmentOrders orders =
              random_orders(dataset, options.seed, std::uint64_t(it));
          CombineResult res = combine_at_level(
              dataset, orders, report.levels[l], options.vote, options.jobs);
          wers[std::size_t(it)] = *res.wer;
          iter_counts[std::size_t(it)] = std::move(res.counts);
        }
        double mean = 0.0;
        for (double w : wers) mean += w;
        mean /= double(wers.size());
        double var = 0.0;
        for (double w : wers) var += (w - mean) * (w - mean);
        var /= double(wers.size());
        report.rows[m].cells[l].wer = mean;
        report.rows[m].cells[l].stddev = std::sqrt(std::max(0.0, var));
        // Median iteration by (WER, index) stands in for "the" random run.
        std::vector<std::size_t> by_wer(wers.size());
        for (std::size_t i = 0; i < by_wer.size(); ++i) by_wer[i] = i;
        std::stable_sort(by_wer.begin(), by_wer.end(),
                         [&](std::size_t a, std::size_t b) {
                           return wers[a] < wers[b];
                         });
        counts[m][l] = std::move(iter_counts[by_wer[(by_wer.size() - 1) / 2]]);
      }
      continue;
    }
    SegmentOrders orders;
    if (name == "model") {
      orders = model_orders(dataset, *features, *model);
    } else {
      orders =
          oracle_orders(dataset, parse_rank_source(name), options.wer_cap);
    }
    for (std::size_t l = 0; l < report.levels.size(); ++l) {
      CombineResult res = combine_at_level(dataset, orders, report.levels[l],
                                           options.vote, options.jobs);
      report.rows[m].cells[l].wer = *res.wer;
      counts[m][l] = std::move(res.counts);
    }
  }

  add_marks(report, counts, methods, options);
  return report;
}

std::string render_report(const EvaluateReport& report) {
  std::ostringstream out;
  std::size_t name_width = 6;
  for (const auto& row : report.rows) {
    name_width = std::max(name_width, row.method.size());
  }
  out << std::string(name_width, ' ');
  char buf[64];
  for (int level : report.levels) {
    std::snprintf(buf, sizeof(buf), "  %-12s",
                  ("L" + std::to_string(level)).c_str());
    out << buf;
  }
  out << '\n';
  for (const auto& row : report.rows) {
    out << row.method << std::string(name_width - row.method.size(), ' ');
    for (const auto& cell : row.cells) {
      std::string text;
      std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * cell.wer);
      text = buf;
      if (cell.stddev > 0.0) {
        std::snprintf(buf, sizeof(buf), "±%.2f", 100.0 * cell.stddev);
        text += buf;
      }
      text += cell.marks;
      // Marks are multi-byte; pad by display length.
      std::size_t display = 0;
      for (char c : text) {
        if ((c & 0xC0) != 0x80) ++display;
      }
      out << "  " << text;
      for (std::size_t i = display; i < 12; ++i) out << ' ';
    }
    out << '\n';
  }
  return out.str();
}

nlohmann::json report_to_json(const EvaluateReport& report) {
  nlohmann::json j;
  j["levels"] = report.levels;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : report.rows) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& cell : row.cells) {
      cells.push_back({{"wer", cell.wer},
                       {"stddev", cell.stddev},
                       {"marks", cell.marks}});
    }
    rows.push_back({{"method", row.method}, {"cells", std::move(cells)}});
  }
  j["rows"] = std::move(rows);
  return j;
}

}  // namespace qerover
