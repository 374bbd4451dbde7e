#include "qerover/qelearn.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "qerover/common.hpp"
#include "qerover/metrics.hpp"

namespace qerover {

namespace {

double capped_wer(const Hypothesis& hyp, const std::vector<std::string>& ref,
                  double cap) {
  double w = wer(hyp.words(), ref).rate;
  return std::min(w, cap);
}

const FeatureVector& features_for(const FeatureTable& features,
                                  const std::string& segment_id,
                                  const std::string& system_id) {
  auto it = features.find({segment_id, system_id});
  if (it == features.end()) {
    throw ValidationError("no feature vector for segment '" + segment_id +
                          "' system '" + system_id + "'");
  }
  return it->second;
}

void warn_no_reference(const std::string& segment_id,
                       std::vector<std::string>* warnings) {
  if (warnings != nullptr) {
    warnings->push_back("segment '" + segment_id +
                        "' has no reference; excluded from training");
  }
}

}  // namespace

std::vector<TrainingInstance> build_rr1(const Dataset& dataset,
                                        const FeatureTable& features,
                                        double wer_cap,
                                        std::vector<std::string>* warnings) {
  std::vector<TrainingInstance> out;
  for (const auto& seg : dataset.segments) {
    if (!seg.reference) {
      warn_no_reference(seg.segment_id, warnings);
      continue;
    }
    for (const auto& sys : dataset.systems) {
      const Hypothesis& hyp = dataset.hyp(seg.segment_id, sys);
      out.push_back({seg.segment_id, sys,
                     features_for(features, seg.segment_id, sys),
                     capped_wer(hyp, *seg.reference, wer_cap)});
    }
  }
  return out;
}

std::vector<TrainingInstance> build_rr2(const Dataset& dataset,
                                        const FeatureTable& features,
                                        double wer_cap, std::uint64_t seed,
                                        std::vector<std::string>* warnings) {
  std::vector<TrainingInstance> out;
  for (std::size_t s = 0; s < dataset.segments.size(); ++s) {
    const auto& seg = dataset.segments[s];
    if (!seg.reference) {
      warn_no_reference(seg.segment_id, warnings);
      continue;
    }
    Rng rng(Rng::derive(seed, s));
    const std::string& sys =
        dataset.systems[rng.next_below(dataset.systems.size())];
    const Hypothesis& hyp = dataset.hyp(seg.segment_id, sys);
    out.push_back({seg.segment_id, sys,
                   features_for(features, seg.segment_id, sys),
                   capped_wer(hyp, *seg.reference, wer_cap)});
  }
  return out;
}

std::vector<TrainingInstance> build_mlr(const Dataset& dataset,
                                        const FeatureTable& features,
                                        double wer_cap,
                                        std::vector<std::string>* warnings) {
  std::vector<TrainingInstance> out;
  for (const auto& seg : dataset.segments) {
    if (!seg.reference) {
      warn_no_reference(seg.segment_id, warnings);
      continue;
    }
    std::vector<double> wers;
    wers.reserve(dataset.systems.size());
    for (const auto& sys : dataset.systems) {
      wers.push_back(
          capped_wer(dataset.hyp(seg.segment_id, sys), *seg.reference,
                     wer_cap));
    }
    for (std::size_t i = 0; i < dataset.systems.size(); ++i) {
      // Competition rank: ties share the smallest rank of their block.
      int rank = 1;
      for (double w : wers) {
        if (w < wers[i]) ++rank;
      }
      out.push_back({seg.segment_id, dataset.systems[i],
                     features_for(features, seg.segment_id,
                                  dataset.systems[i]),
                     double(rank)});
    }
  }
  return out;
}

std::vector<std::string> global_prior(const Dataset& dataset,
                                      double wer_cap) {
  std::vector<EditCounts> pooled(dataset.systems.size());
  bool any_reference = false;
  for (const auto& seg : dataset.segments) {
    if (!seg.reference) continue;
    any_reference = true;
    for (std::size_t i = 0; i < dataset.systems.size(); ++i) {
      const Hypothesis& hyp = dataset.hyp(seg.segment_id,
                                          dataset.systems[i]);
      pooled[i] += wer(hyp.words(), *seg.reference).counts;
    }
  }
  if (!any_reference) {
    throw ValidationError("global prior needs at least one referenced segment");
  }
  std::vector<std::size_t> order(dataset.systems.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     double wa = std::min(corpus_wer({pooled[a]}), wer_cap);
                     double wb = std::min(corpus_wer({pooled[b]}), wer_cap);
                     return wa < wb;
                   });
  std::vector<std::string> prior;
  prior.reserve(order.size());
  for (std::size_t i : order) prior.push_back(dataset.systems[i]);
  return prior;
}

void untie(std::vector<TrainingInstance>& instances,
           const std::vector<std::string>& prior) {
  std::map<std::string, int> prior_pos;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    prior_pos[prior[i]] = int(i);
  }
  std::size_t begin = 0;
  while (begin < instances.size()) {
    std::size_t end = begin + 1;
    while (end < instances.size() &&
           instances[end].segment_id == instances[begin].segment_id) {
      ++end;
    }
    std::vector<std::size_t> order;
    for (std::size_t i = begin; i < end; ++i) {
      auto it = prior_pos.find(instances[i].system_id);
      if (it == prior_pos.end()) {
        throw ValidationError("system '" + instances[i].system_id +
                              "' missing from the global prior");
      }
      order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       if (instances[a].label != instances[b].label) {
                         return instances[a].label < instances[b].label;
                       }
                       return prior_pos[instances[a].system_id] <
                              prior_pos[instances[b].system_id];
                     });
    std::vector<double> new_labels(end - begin);
    for (std::size_t r = 0; r < order.size(); ++r) {
      new_labels[order[r] - begin] = double(r + 1);
    }
    for (std::size_t i = begin; i < end; ++i) {
      instances[i].label = new_labels[i - begin];
    }
    begin = end;
  }
}

double XrtModel::predict(const FeatRow& x) const {
  double sum = 0.0;
  for (const auto& t : trees) sum += t.predict(x);
  return trees.empty() ? 0.0 : sum / double(trees.size());
}

XrtModel fit_xrt(std::span<const FeatRow> x, std::span<const double> y,
                 const std::vector<int>& dims, const XrtParams& params,
                 int jobs) {
  if (x.size() != y.size() || x.empty()) {
    throw ValidationError("regressor training needs matching non-empty data");
  }
  if (params.n_trees < 1 || params.k_features < 1 || params.min_leaf < 1) {
    throw ValidationError("invalid extremely-randomized-trees parameters");
  }
  XrtModel model;
  model.params = params;
  model.dims = dims;
  model.trees.resize(std::size_t(params.n_trees));
  parallel_for(std::size_t(params.n_trees), jobs, [&](std::size_t t) {
    Rng rng(Rng::derive(params.seed, t));
    model.trees[t] =
        fit_extra_tree(x, y, dims, params.k_features, params.min_leaf, rng);
  });
  return model;
}

double RankerModel::score(const FeatRow& x) const {
  if (bags.empty()) return 0.0;
  double total = 0.0;
  for (const auto& bag : bags) {
    double s = 0.0;
    for (const auto& t : bag) s += params.learning_rate * t.predict(x);
    total += s;
  }
  return total / double(bags.size());
}

RankerModel fit_ranker(std::span<const FeatRow> x,
                       const std::vector<RankGroup>& groups,
                       const std::vector<int>& dims,
                       const RankerParams& params, int jobs) {
  if (groups.empty()) {
    throw ValidationError("ranker training needs at least one group");
  }
  for (const auto& g : groups) {
    if (g.instance_index.size() != g.rank.size() || g.instance_index.empty()) {
      throw ValidationError("malformed ranking group");
    }
    for (int idx : g.instance_index) {
      if (idx < 0 || std::size_t(idx) >= x.size()) {
        throw ValidationError("ranking group index out of range");
      }
    }
  }
  if (params.n_bags < 1 || params.trees_per_bag < 1 || params.leaves < 2 ||
      params.learning_rate <= 0.0) {
    throw ValidationError("invalid ranking-forest parameters");
  }
  RankerModel model;
  model.params = params;
  model.dims = dims;
  model.bags.resize(std::size_t(params.n_bags));
  parallel_for(std::size_t(params.n_bags), jobs, [&](std::size_t b) {
    Rng rng(Rng::derive(params.seed, b));
    // Bootstrap whole groups so every pair stays intact.
    std::vector<std::size_t> sampled(groups.size());
    for (auto& g : sampled) g = rng.next_below(groups.size());
    std::vector<char> member(x.size(), 0);
    for (std::size_t g : sampled) {
      for (int idx : groups[g].instance_index) member[std::size_t(idx)] = 1;
    }
    std::vector<int> rows;
    for (std::size_t i = 0; i < member.size(); ++i) {
      if (member[i]) rows.push_back(int(i));
    }
    std::vector<double> scores(x.size(), 0.0);
    std::vector<double> grad(x.size(), 0.0);
    std::vector<Tree>& bag = model.bags[b];
    bag.reserve(std::size_t(params.trees_per_bag));
    for (int t = 0; t < params.trees_per_bag; ++t) {
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t g : sampled) {
        const RankGroup& grp = groups[g];
        for (std::size_t a = 0; a < grp.instance_index.size(); ++a) {
          for (std::size_t c = 0; c < grp.instance_index.size(); ++c) {
            if (grp.rank[a] >= grp.rank[c]) continue;
            // a should score above c; logistic pairwise gradient.
            int ia = grp.instance_index[a];
            int ic = grp.instance_index[c];
            double lambda =
                1.0 / (1.0 + std::exp(scores[std::size_t(ia)] -
                                      scores[std::size_t(ic)]));
            grad[std::size_t(ia)] += lambda;
            grad[std::size_t(ic)] -= lambda;
          }
        }
      }
      Tree tree = fit_greedy_tree(x, grad, rows, dims, params.leaves, 1, 0,
                                  rng);
      for (int r : rows) {
        scores[std::size_t(r)] +=
            params.learning_rate * tree.predict(x[std::size_t(r)]);
      }
      bag.push_back(std::move(tree));
    }
  });
  return model;
}

double QEModel::predict(const FeatureVector& fv) const {
  if (xrt) return xrt->predict(fv.values);
  if (ranker) return ranker->score(fv.values);
  throw ValidationError("empty model");
}

void QEModel::save(const std::string& path) const {
  nlohmann::json j;
  j["kind"] = kind;
  j["version"] = kVersion;
  j["feature_mask"] = feature_mask;
  if (xrt) {
    j["params"] = {{"n_trees", xrt->params.n_trees},
                   {"k_features", xrt->params.k_features},
                   {"min_leaf", xrt->params.min_leaf},
                   {"seed", xrt->params.seed}};
    j["dims"] = xrt->dims;
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : xrt->trees) trees.push_back(t.to_json());
    j["trees"] = std::move(trees);
  } else if (ranker) {
    j["params"] = {{"n_bags", ranker->params.n_bags},
                   {"trees_per_bag", ranker->params.trees_per_bag},
                   {"leaves", ranker->params.leaves},
                   {"learning_rate", ranker->params.learning_rate},
                   {"seed", ranker->params.seed}};
    j["dims"] = ranker->dims;
    nlohmann::json bags = nlohmann::json::array();
    for (const auto& bag : ranker->bags) {
      nlohmann::json jb = nlohmann::json::array();
      for (const auto& t : bag) jb.push_back(t.to_json());
      bags.push_back(std::move(jb));
    }
    j["trees"] = std::move(bags);
  } else {
    throw ValidationError("refusing to save an empty model");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model file '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing model file '" + path + "'");
}

QEModel QEModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read model file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path, 0, e.what());
  }
  if (!j.is_object() || !j.contains("version") ||
      !j["version"].is_number_integer()) {
    throw ValidationError("model file '" + path + "' has no version");
  }
  if (j["version"].get<int>() != kVersion) {
    throw ValidationError("model file '" + path + "' has unsupported version " +
                          std::to_string(j["version"].get<int>()));
  }
  QEModel model;
  try {
    model.kind = j.at("kind").get<std::string>();
    model.feature_mask = j.at("feature_mask").get<unsigned>();
    const auto& p = j.at("params");
    if (model.kind == "xrt_regressor") {
      XrtModel xm;
      xm.params.n_trees = p.at("n_trees").get<int>();
      xm.params.k_features = p.at("k_features").get<int>();
      xm.params.min_leaf = p.at("min_leaf").get<int>();
      xm.params.seed = p.at("seed").get<std::uint64_t>();
      xm.dims = j.at("dims").get<std::vector<int>>();
      for (const auto& jt : j.at("trees")) {
        xm.trees.push_back(Tree::from_json(jt));
      }
      model.xrt = std::move(xm);
    } else if (model.kind == "ranking_forest") {
      RankerModel rm;
      rm.params.n_bags = p.at("n_bags").get<int>();
      rm.params.trees_per_bag = p.at("trees_per_bag").get<int>();
      rm.params.leaves = p.at("leaves").get<int>();
      rm.params.learning_rate = p.at("learning_rate").get<double>();
      rm.params.seed = p.at("seed").get<std::uint64_t>();
      rm.dims = j.at("dims").get<std::vector<int>>();
      for (const auto& jb : j.at("trees")) {
        std::vector<Tree> bag;
        for (const auto& jt : jb) bag.push_back(Tree::from_json(jt));
        rm.bags.push_back(std::move(bag));
      }
      model.ranker = std::move(rm);
    } else {
      throw ValidationError("model file '" + path + "' has unknown kind '" +
                            model.kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("model file '" + path + "' is malformed: " +
                          std::string(e.what()));
  }
  return model;
}

std::vector<int> rank_order(const QEModel& model,
                            const std::vector<FeatureVector>& features) {
  std::vector<double> pred(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    pred[i] = model.predict(features[i]);
  }
  std::vector<int> order(features.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = int(i);
  bool ascending = model.kind == "xrt_regressor";
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return ascending ? pred[std::size_t(a)] < pred[std::size_t(b)]
                     : pred[std::size_t(a)] > pred[std::size_t(b)];
  });
  return order;
}

std::vector<int> live_dims(unsigned mask) {
  std::vector<int> dims;
  auto add = [&](int offset, int count) {
    for (int i = 0; i < count; ++i) dims.push_back(offset + i);
  };
  if (mask & FeatureVector::kSignalBit) {
    add(FeatureVector::kSignalOffset, FeatureVector::kSignalCount);
  }
  if (mask & FeatureVector::kTextualBit) {
    add(FeatureVector::kTextualOffset, FeatureVector::kTextualCount);
  }
  if (mask & FeatureVector::kHybridBit) {
    add(FeatureVector::kHybridOffset, FeatureVector::kHybridCount);
  }
  if (mask & FeatureVector::kWordBit) {
    add(FeatureVector::kWordOffset, FeatureVector::kWordCount);
  }
  if (dims.empty()) throw ValidationError("feature mask selects no group");
  return dims;
}

std::vector<int> speaker_folds(const Dataset& dataset, int k) {
  if (k < 2) throw ValidationError("cross-validation needs at least 2 folds");
  std::map<std::string, std::vector<std::size_t>> by_speaker;
  for (std::size_t s = 0; s < dataset.segments.size(); ++s) {
    by_speaker[dataset.segments[s].speaker_id].push_back(s);
  }
  if (std::size_t(k) > by_speaker.size()) {
    throw ValidationError("fold count " + std::to_string(k) +
                          " exceeds speaker count " +
                          std::to_string(by_speaker.size()));
  }
  // Largest speakers first, each into the currently smallest fold.
  std::vector<std::pair<std::string, std::vector<std::size_t>>> speakers(
      by_speaker.begin(), by_speaker.end());
  std::stable_sort(speakers.begin(), speakers.end(),
                   [](const auto& a, const auto& b) {
                     if (a.second.size() != b.second.size()) {
                       return a.second.size() > b.second.size();
                     }
                     return a.first < b.first;
                   });
  std::vector<std::size_t> fold_sizes(std::size_t(k), 0);
  std::vector<int> folds(dataset.segments.size(), 0);
  for (const auto& [speaker, segs] : speakers) {
    std::size_t best = 0;
    for (std::size_t f = 1; f < fold_sizes.size(); ++f) {
      if (fold_sizes[f] < fold_sizes[best]) best = f;
    }
    fold_sizes[best] += segs.size();
    for (std::size_t s : segs) folds[s] = int(best);
  }
  return folds;
}

namespace {

struct InstanceIndex {
  std::vector<FeatRow> x;
  std::vector<int> fold;  // per instance
  std::map<std::string, int> segment_fold;
};

InstanceIndex index_instances(const Dataset& dataset,
                              const std::vector<TrainingInstance>& instances,
                              int k) {
  InstanceIndex idx;
  std::vector<int> seg_folds = speaker_folds(dataset, k);
  for (std::size_t s = 0; s < dataset.segments.size(); ++s) {
    idx.segment_fold[dataset.segments[s].segment_id] = seg_folds[s];
  }
  idx.x.reserve(instances.size());
  idx.fold.reserve(instances.size());
  for (const auto& inst : instances) {
    auto it = idx.segment_fold.find(inst.segment_id);
    if (it == idx.segment_fold.end()) {
      throw ValidationError("training instance references unknown segment '" +
                            inst.segment_id + "'");
    }
    idx.x.push_back(inst.features.values);
    idx.fold.push_back(it->second);
  }
  return idx;
}

unsigned common_mask(const std::vector<TrainingInstance>& instances) {
  if (instances.empty()) {
    throw ValidationError("cross-validation needs training instances");
  }
  unsigned mask = ~0u;
  for (const auto& inst : instances) mask &= inst.features.mask;
  return mask;
}

}  // namespace

XrtCvOutcome cv_xrt(const Dataset& dataset,
                    const std::vector<TrainingInstance>& instances,
                    const std::vector<XrtParams>& grid, int k, int jobs,
                    unsigned mask) {
  if (grid.empty()) throw ValidationError("empty hyperparameter grid");
  InstanceIndex idx = index_instances(dataset, instances, k);
  std::vector<int> dims = live_dims(common_mask(instances) & mask);
  XrtCvOutcome outcome;
  bool first = true;
  for (const auto& params : grid) {
    std::map<std::pair<std::string, std::string>, double> oof;
    double abs_err = 0.0;
    std::size_t n = 0;
    for (int f = 0; f < k; ++f) {
      std::vector<FeatRow> train_x;
      std::vector<double> train_y;
      for (std::size_t i = 0; i < instances.size(); ++i) {
        if (idx.fold[i] != f) {
          train_x.push_back(idx.x[i]);
          train_y.push_back(instances[i].label);
        }
      }
      if (train_x.empty()) {
        throw ValidationError("fold " + std::to_string(f) +
                              " leaves no training data");
      }
      XrtModel model = fit_xrt(train_x, train_y, dims, params, jobs);
      for (std::size_t i = 0; i < instances.size(); ++i) {
        if (idx.fold[i] != f) continue;
        double p = model.predict(idx.x[i]);
        oof[{instances[i].segment_id, instances[i].system_id}] = p;
        abs_err += std::abs(p - instances[i].label);
        ++n;
      }
    }
    double fold_mae = n > 0 ? abs_err / double(n) : 0.0;
    if (first || fold_mae < outcome.best_mae) {
      outcome.best = params;
      outcome.best_mae = fold_mae;
      outcome.oof = std::move(oof);
      first = false;
    }
  }
  return outcome;
}

RankerCvOutcome cv_ranker(const Dataset& dataset,
                          const std::vector<TrainingInstance>& instances,
                          const std::vector<RankerParams>& grid, int k,
                          int map_depth, int jobs, unsigned mask) {
  if (grid.empty()) throw ValidationError("empty hyperparameter grid");
  InstanceIndex idx = index_instances(dataset, instances, k);
  std::vector<int> dims = live_dims(common_mask(instances) & mask);

  // Contiguous instance blocks per segment become ranking groups.
  std::vector<RankGroup> groups;
  std::vector<std::string> group_segment;
  std::size_t begin = 0;
  while (begin < instances.size()) {
    std::size_t end = begin + 1;
    while (end < instances.size() &&
           instances[end].segment_id == instances[begin].segment_id) {
      ++end;
    }
    RankGroup g;
    for (std::size_t i = begin; i < end; ++i) {
      g.instance_index.push_back(int(i));
      g.rank.push_back(instances[i].label);
    }
    groups.push_back(std::move(g));
    group_segment.push_back(instances[begin].segment_id);
    begin = end;
  }

  // Evaluation truth: strict per-segment order by (capped true WER, global
  // prior position), independent of how the training labels were tied.
  std::vector<std::string> prior = global_prior(dataset, 2.0);
  std::map<std::string, int> prior_pos;
  for (std::size_t i = 0; i < prior.size(); ++i) prior_pos[prior[i]] = int(i);

  RankerCvOutcome outcome;
  bool first = true;
  for (const auto& params : grid) {
    std::map<std::pair<std::string, std::string>, double> oof;
    for (int f = 0; f < k; ++f) {
      std::vector<RankGroup> train_groups;
      for (std::size_t g = 0; g < groups.size(); ++g) {
        if (idx.segment_fold.at(group_segment[g]) != f) {
          train_groups.push_back(groups[g]);
        }
      }
      if (train_groups.empty()) {
        throw ValidationError("fold " + std::to_string(f) +
                              " leaves no training groups");
      }
      RankerModel model = fit_ranker(idx.x, train_groups, dims, params, jobs);
      for (std::size_t g = 0; g < groups.size(); ++g) {
        if (idx.segment_fold.at(group_segment[g]) != f) continue;
        for (std::size_t j = 0; j < groups[g].instance_index.size(); ++j) {
          std::size_t i = std::size_t(groups[g].instance_index[j]);
          oof[{instances[i].segment_id, instances[i].system_id}] =
              model.score(idx.x[i]);
        }
      }
    }
    // MAP over segments using the out-of-fold scores of this setting.
    std::vector<std::vector<int>> predicted, truth;
    for (const auto& seg : dataset.segments) {
      if (!seg.reference) continue;
      std::vector<int> items(dataset.systems.size());
      for (std::size_t i = 0; i < items.size(); ++i) items[i] = int(i);
      std::vector<double> score(items.size()), twer(items.size());
      bool have_all = true;
      for (std::size_t i = 0; i < items.size(); ++i) {
        auto it = oof.find({seg.segment_id, dataset.systems[i]});
        if (it == oof.end()) {
          have_all = false;
          break;
        }
        score[i] = it->second;
        twer[i] = capped_wer(dataset.hyp(seg.segment_id, dataset.systems[i]),
                             *seg.reference, 2.0);
      }
      if (!have_all) continue;
      std::vector<int> pred_order = items;
      std::stable_sort(pred_order.begin(), pred_order.end(),
                       [&](int a, int b) {
                         return score[std::size_t(a)] > score[std::size_t(b)];
                       });
      std::vector<int> true_order = items;
      std::stable_sort(
          true_order.begin(), true_order.end(), [&](int a, int b) {
            if (twer[std::size_t(a)] != twer[std::size_t(b)]) {
              return twer[std::size_t(a)] < twer[std::size_t(b)];
            }
            return prior_pos.at(dataset.systems[std::size_t(a)]) <
                   prior_pos.at(dataset.systems[std::size_t(b)]);
          });
      predicted.push_back(std::move(pred_order));
      truth.push_back(std::move(true_order));
    }
    if (predicted.empty()) {
      throw ValidationError("no referenced segments with out-of-fold scores");
    }
    int depth =
        std::min<int>(map_depth, int(dataset.systems.size()));
    double fold_map = map_at_l(predicted, truth, depth);
    if (first || fold_map > outcome.best_map) {
      outcome.best = params;
      outcome.best_map = fold_map;
      outcome.oof_scores = std::move(oof);
      first = false;
    }
  }
  return outcome;
}

std::vector<XrtParams> default_xrt_grid(std::uint64_t seed) {
  std::vector<XrtParams> grid;
  for (int n_trees : {100, 300}) {
    for (int k_features : {9, 25}) {
      for (int min_leaf : {1, 5}) {
        grid.push_back({n_trees, k_features, min_leaf, seed});
      }
    }
  }
  return grid;
}

std::vector<RankerParams> default_ranker_grid(std::uint64_t seed) {
  std::vector<RankerParams> grid;
  for (int n_bags : {10, 30}) {
    for (int leaves : {16, 64}) {
      grid.push_back({n_bags, 50, leaves, 0.1, seed});
    }
  }
  return grid;
}

TrainQeResult train_qe(const Dataset& dataset, const FeatureTable& features,
                       const TrainQeOptions& options) {
  TrainQeResult result;
  std::vector<TrainingInstance> instances;
  if (options.method == "rr1") {
    instances = build_rr1(dataset, features, options.wer_cap,
                          &result.warnings);
  } else if (options.method == "rr2") {
    instances = build_rr2(dataset, features, options.wer_cap, options.seed,
                          &result.warnings);
  } else if (options.method == "mlr") {
    instances = build_mlr(dataset, features, options.wer_cap,
                          &result.warnings);
  } else {
    throw ValidationError("unknown training method '" + options.method +
                          "'; expected rr1, rr2, or mlr");
  }
  if (instances.empty()) {
    throw ValidationError("no referenced segments to train on");
  }
  if (options.untie) {
    if (options.method != "mlr") {
      throw ValidationError("untying applies to mlr training only");
    }
    untie(instances, global_prior(dataset, options.wer_cap));
  }
  unsigned mask = common_mask(instances) & options.mask;
  std::vector<int> dims = live_dims(mask);
  result.model.feature_mask = mask;

  if (options.method == "mlr") {
    RankerParams params{10, 50, 16, 0.1, options.seed};
    if (options.cv_folds > 0) {
      int depth = options.map_depth > 0 ? options.map_depth
                                        : int(dataset.systems.size());
      RankerCvOutcome cv = cv_ranker(dataset, instances,
                                     default_ranker_grid(options.seed),
                                     options.cv_folds, depth, options.jobs,
                                     options.mask);
      params = cv.best;
      result.cv_objective = cv.best_map;
    }
    std::vector<FeatRow> x;
    x.reserve(instances.size());
    for (const auto& inst : instances) x.push_back(inst.features.values);
    std::vector<RankGroup> groups;
    std::size_t begin = 0;
    while (begin < instances.size()) {
      std::size_t end = begin + 1;
      while (end < instances.size() &&
             instances[end].segment_id == instances[begin].segment_id) {
        ++end;
      }
      RankGroup g;
      for (std::size_t i = begin; i < end; ++i) {
        g.instance_index.push_back(int(i));
        g.rank.push_back(instances[i].label);
      }
      groups.push_back(std::move(g));
      begin = end;
    }
    result.model.kind = "ranking_forest";
    result.model.ranker =
        fit_ranker(x, groups, dims, params, options.jobs);
  } else {
    XrtParams params{100, 9, 1, options.seed};
    if (options.cv_folds > 0) {
      XrtCvOutcome cv =
          cv_xrt(dataset, instances, default_xrt_grid(options.seed),
                 options.cv_folds, options.jobs, options.mask);
      params = cv.best;
      result.cv_objective = cv.best_mae;
    }
    std::vector<FeatRow> x;
    std::vector<double> y;
    x.reserve(instances.size());
    for (const auto& inst : instances) {
      x.push_back(inst.features.values);
      y.push_back(inst.label);
    }
    result.model.kind = "xrt_regressor";
    result.model.xrt = fit_xrt(x, y, dims, params, options.jobs);
  }
  return result;
}

}  // namespace qerover
