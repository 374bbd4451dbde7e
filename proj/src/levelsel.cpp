#include "qerover/levelsel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>

#include "json.hpp"
#include "qerover/common.hpp"
#include "qerover/metrics.hpp"

namespace qerover {

namespace {

FeatRow to_row(const LevelFeatures& f) {
  FeatRow row{};
  for (int i = 0; i < kNumLevelFeatures; ++i) row[std::size_t(i)] = f[std::size_t(i)];
  return row;
}

std::vector<int> level_dims() {
  std::vector<int> dims(kNumLevelFeatures);
  for (int i = 0; i < kNumLevelFeatures; ++i) dims[std::size_t(i)] = i;
  return dims;
}

}  // namespace

LevelFeatures level_features(const std::vector<WordSeq>& hyps,
                             const WordSeq& combined,
                             const WordTransitionNetwork& wtn,
                             const std::vector<double>& pred_wer) {
  if (hyps.size() < 2) {
    throw ValidationError("level features need at least 2 hypotheses");
  }
  if (pred_wer.size() != hyps.size()) {
    throw ValidationError("predicted-WER count does not match hypotheses");
  }
  LevelFeatures f{};
  f[0] = diversity(wtn);
  f[1] = double(edit_distance(hyps.front(), hyps.back()));
  double sum_first = 0.0;
  for (std::size_t i = 1; i < hyps.size(); ++i) {
    sum_first += double(edit_distance(hyps.front(), hyps[i]));
  }
  f[2] = sum_first / double(hyps.size() - 1);
  double sum_adj = 0.0;
  for (std::size_t i = 0; i + 1 < hyps.size(); ++i) {
    sum_adj += double(edit_distance(hyps[i], hyps[i + 1]));
  }
  f[3] = sum_adj / double(hyps.size() - 1);
  double sum_comb = 0.0;
  for (const auto& h : hyps) {
    sum_comb += double(edit_distance(h, combined));
  }
  f[4] = sum_comb / double(hyps.size());
  double lo = pred_wer[0], hi = pred_wer[0], sum = 0.0;
  for (double p : pred_wer) {
    lo = std::min(lo, p);
    hi = std::max(hi, p);
    sum += p;
  }
  f[5] = sum / double(pred_wer.size());
  f[6] = lo;
  f[7] = hi;
  return f;
}

std::vector<int> label_levels(const std::vector<double>& level_wers) {
  if (level_wers.empty()) {
    throw ValidationError("cannot label an empty level set");
  }
  double best = *std::min_element(level_wers.begin(), level_wers.end());
  std::vector<int> labels(level_wers.size(), 0);
  for (std::size_t i = 0; i < level_wers.size(); ++i) {
    if (level_wers[i] == best) labels[i] = 1;
  }
  return labels;
}

const char* level_algo_name(LevelAlgo algo) {
  switch (algo) {
    case LevelAlgo::kNaiveBayes: return "naive_bayes";
    case LevelAlgo::kRandomForest: return "random_forest";
    case LevelAlgo::kLinearSvm: return "linear_svm";
  }
  return "unknown";
}

double LevelClassifier::positive_confidence(const LevelFeatures& x) const {
  if (constant) return constant_class == 1 ? 1.0 : 0.0;
  switch (algo) {
    case LevelAlgo::kNaiveBayes: {
      std::array<double, 2> log_joint = log_prior;
      for (int c = 0; c < 2; ++c) {
        for (int i = 0; i < kNumLevelFeatures; ++i) {
          double v = var[std::size_t(c)][std::size_t(i)];
          double d = x[std::size_t(i)] - mean[std::size_t(c)][std::size_t(i)];
          log_joint[std::size_t(c)] +=
              -0.5 * (std::log(2.0 * std::numbers::pi * v) + d * d / v);
        }
      }
      double m = std::max(log_joint[0], log_joint[1]);
      double e0 = std::exp(log_joint[0] - m);
      double e1 = std::exp(log_joint[1] - m);
      return e1 / (e0 + e1);
    }
    case LevelAlgo::kRandomForest: {
      double sum = 0.0;
      FeatRow row = to_row(x);
      for (const auto& t : forest) sum += t.predict(row);
      double p = forest.empty() ? 0.0 : sum / double(forest.size());
      return std::clamp(p, 0.0, 1.0);
    }
    case LevelAlgo::kLinearSvm: {
      double margin = bias;
      for (int i = 0; i < kNumLevelFeatures; ++i) {
        double z = (x[std::size_t(i)] - scale_mean[std::size_t(i)]) /
                   scale_std[std::size_t(i)];
        margin += weights[std::size_t(i)] * z;
      }
      return 1.0 / (1.0 + std::exp(-margin));
    }
  }
  throw ValidationError("unknown level classifier algorithm");
}

LevelClassifier fit_level_classifier(
    const std::vector<LevelInstance>& instances, LevelAlgo algo,
    std::uint64_t seed, std::vector<std::string>* warnings) {
  if (instances.empty()) {
    throw ValidationError("level classifier needs training instances");
  }
  LevelClassifier clf;
  clf.algo = algo;
  bool has0 = false, has1 = false;
  for (const auto& inst : instances) {
    (inst.label == 1 ? has1 : has0) = true;
  }
  if (!has0 || !has1) {
    clf.constant = true;
    clf.constant_class = has1 ? 1 : 0;
    if (warnings != nullptr) {
      warnings->push_back(
          "level training labels are single-class; using a constant "
          "classifier");
    }
    return clf;
  }
  switch (algo) {
    case LevelAlgo::kNaiveBayes: {
      std::array<std::size_t, 2> n{};
      for (const auto& inst : instances) {
        int c = inst.label;
        ++n[std::size_t(c)];
        for (int i = 0; i < kNumLevelFeatures; ++i) {
          clf.mean[std::size_t(c)][std::size_t(i)] += inst.features[std::size_t(i)];
        }
      }
      for (int c = 0; c < 2; ++c) {
        clf.log_prior[std::size_t(c)] =
            std::log(double(n[std::size_t(c)]) / double(instances.size()));
        for (int i = 0; i < kNumLevelFeatures; ++i) {
          clf.mean[std::size_t(c)][std::size_t(i)] /= double(n[std::size_t(c)]);
        }
      }
      for (const auto& inst : instances) {
        int c = inst.label;
        for (int i = 0; i < kNumLevelFeatures; ++i) {
          double d = inst.features[std::size_t(i)] -
                     clf.mean[std::size_t(c)][std::size_t(i)];
          clf.var[std::size_t(c)][std::size_t(i)] += d * d;
        }
      }
      double max_var = 0.0;
      for (int c = 0; c < 2; ++c) {
        for (int i = 0; i < kNumLevelFeatures; ++i) {
          clf.var[std::size_t(c)][std::size_t(i)] /= double(n[std::size_t(c)]);
          max_var = std::max(max_var, clf.var[std::size_t(c)][std::size_t(i)]);
        }
      }
      double floor = 1e-9 * max_var + 1e-12;
      for (int c = 0; c < 2; ++c) {
        for (int i = 0; i < kNumLevelFeatures; ++i) {
          clf.var[std::size_t(c)][std::size_t(i)] += floor;
        }
      }
      break;
    }
    case LevelAlgo::kRandomForest: {
      std::vector<FeatRow> x;
      std::vector<double> y;
      x.reserve(instances.size());
      for (const auto& inst : instances) {
        x.push_back(to_row(inst.features));
        y.push_back(double(inst.label));
      }
      const int kTrees = 50;
      std::vector<int> dims = level_dims();
      clf.forest.resize(kTrees);
      for (int t = 0; t < kTrees; ++t) {
        Rng rng(Rng::derive(seed, std::size_t(t)));
        std::vector<int> rows(instances.size());
        for (auto& r : rows) r = int(rng.next_below(instances.size()));
        clf.forest[std::size_t(t)] =
            fit_greedy_tree(x, y, rows, dims, 16, 1, 3, rng);
      }
      break;
    }
    case LevelAlgo::kLinearSvm: {
      for (const auto& inst : instances) {
        for (int i = 0; i < kNumLevelFeatures; ++i) {
          clf.scale_mean[std::size_t(i)] += inst.features[std::size_t(i)];
        }
      }
      for (int i = 0; i < kNumLevelFeatures; ++i) {
        clf.scale_mean[std::size_t(i)] /= double(instances.size());
      }
      for (const auto& inst : instances) {
        for (int i = 0; i < kNumLevelFeatures; ++i) {
          double d = inst.features[std::size_t(i)] - clf.scale_mean[std::size_t(i)];
          clf.scale_std[std::size_t(i)] += d * d;
        }
      }
      for (int i = 0; i < kNumLevelFeatures; ++i) {
        clf.scale_std[std::size_t(i)] =
            std::sqrt(clf.scale_std[std::size_t(i)] / double(instances.size()));
        if (clf.scale_std[std::size_t(i)] < 1e-12) {
          clf.scale_std[std::size_t(i)] = 1.0;
        }
      }
      // Pegasos on standardized features with an unregularized bias.
      const double lambda = 0.01;
      const std::size_t epochs = 100;
      Rng rng(Rng::derive(seed, 0));
      std::size_t n = instances.size();
      for (std::size_t t = 1; t <= epochs * n; ++t) {
        const LevelInstance& inst = instances[rng.next_below(n)];
        double yv = inst.label == 1 ? 1.0 : -1.0;
        double margin = clf.bias;
        LevelFeatures z{};
        for (int i = 0; i < kNumLevelFeatures; ++i) {
          z[std::size_t(i)] = (inst.features[std::size_t(i)] -
                               clf.scale_mean[std::size_t(i)]) /
                              clf.scale_std[std::size_t(i)];
          margin += clf.weights[std::size_t(i)] * z[std::size_t(i)];
        }
        double eta = 1.0 / (lambda * double(t));
        for (int i = 0; i < kNumLevelFeatures; ++i) {
          clf.weights[std::size_t(i)] *= 1.0 - eta * lambda;
        }
        if (yv * margin < 1.0) {
          for (int i = 0; i < kNumLevelFeatures; ++i) {
            clf.weights[std::size_t(i)] += eta * yv * z[std::size_t(i)];
          }
          clf.bias += eta * yv;
        }
      }
      break;
    }
  }
  return clf;
}

LevelSelectorOutcome train_level_selector(
    const std::vector<LevelInstance>& instances, int k, std::uint64_t seed,
    std::vector<std::string>* warnings) {
  if (k < 2) throw ValidationError("cross-validation needs at least 2 folds");
  // Segment-grouped folds, segments in first-appearance order.
  std::map<std::string, int> segment_fold;
  int next = 0;
  for (const auto& inst : instances) {
    if (segment_fold.emplace(inst.segment_id, next % k).second) ++next;
  }
  if (next < k) {
    throw ValidationError("fold count exceeds segment count");
  }
  LevelSelectorOutcome outcome;
  const std::array<LevelAlgo, 3> algos = {LevelAlgo::kNaiveBayes,
                                          LevelAlgo::kRandomForest,
                                          LevelAlgo::kLinearSvm};
  bool first = true;
  for (std::size_t a = 0; a < algos.size(); ++a) {
    std::vector<int> pred, truth;
    for (int f = 0; f < k; ++f) {
      std::vector<LevelInstance> train;
      for (const auto& inst : instances) {
        if (segment_fold[inst.segment_id] != f) train.push_back(inst);
      }
      if (train.empty()) continue;
      LevelClassifier clf =
          fit_level_classifier(train, algos[a], seed + a, nullptr);
      for (const auto& inst : instances) {
        if (segment_fold[inst.segment_id] != f) continue;
        pred.push_back(clf.positive_confidence(inst.features) >= 0.5 ? 1 : 0);
        truth.push_back(inst.label);
      }
    }
    double ba = balanced_accuracy(pred, truth);
    outcome.cv_balanced_accuracy[a] = ba;
    if (first || ba > outcome.cv_balanced_accuracy[std::size_t(outcome.chosen)]) {
      outcome.chosen = algos[a];
      first = false;
    }
  }
  outcome.classifier = fit_level_classifier(
      instances, outcome.chosen, seed + std::size_t(outcome.chosen), warnings);
  return outcome;
}

LevelDecision predict_level(
    const LevelClassifier& clf,
    const std::vector<std::pair<int, LevelFeatures>>& candidates) {
  if (candidates.empty()) {
    throw ValidationError("no candidate levels to choose from");
  }
  LevelDecision best_positive{0, -1.0};
  LevelDecision best_any{0, -1.0};
  for (const auto& [level, features] : candidates) {
    double conf = clf.positive_confidence(features);
    if (conf > best_any.confidence) best_any = {level, conf};
    if (conf >= 0.5 && conf > best_positive.confidence) {
      best_positive = {level, conf};
    }
  }
  return best_positive.level > 0 ? best_positive : best_any;
}

void save_level_classifier(const LevelClassifier& clf,
                           const std::string& path) {
  nlohmann::json j;
  j["kind"] = "level_selector";
  j["version"] = LevelClassifier::kVersion;
  j["algorithm"] = level_algo_name(clf.algo);
  j["constant"] = clf.constant;
  j["constant_class"] = clf.constant_class;
  j["log_prior"] = clf.log_prior;
  j["mean"] = clf.mean;
  j["var"] = clf.var;
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : clf.forest) trees.push_back(t.to_json());
  j["forest"] = std::move(trees);
  j["scale_mean"] = clf.scale_mean;
  j["scale_std"] = clf.scale_std;
  j["weights"] = clf.weights;
  j["bias"] = clf.bias;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write classifier file '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing classifier file '" + path + "'");
}

LevelClassifier load_level_classifier(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read classifier file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path, 0, e.what());
  }
  if (!j.is_object() || j.value("kind", "") != "level_selector") {
    throw ValidationError("file '" + path + "' is not a level classifier");
  }
  if (j.value("version", -1) != LevelClassifier::kVersion) {
    throw ValidationError("classifier file '" + path +
                          "' has unsupported version");
  }
  LevelClassifier clf;
  try {
    std::string name = j.at("algorithm").get<std::string>();
    if (name == "naive_bayes") {
      clf.algo = LevelAlgo::kNaiveBayes;
    } else if (name == "random_forest") {
      clf.algo = LevelAlgo::kRandomForest;
    } else if (name == "linear_svm") {
      clf.algo = LevelAlgo::kLinearSvm;
    } else {
      throw ValidationError("unknown classifier algorithm '" + name + "'");
    }
    clf.constant = j.at("constant").get<bool>();
    clf.constant_class = j.at("constant_class").get<int>();
    clf.log_prior = j.at("log_prior").get<std::array<double, 2>>();
    clf.mean = j.at("mean").get<std::array<LevelFeatures, 2>>();
    clf.var = j.at("var").get<std::array<LevelFeatures, 2>>();
    for (const auto& jt : j.at("forest")) {
      clf.forest.push_back(Tree::from_json(jt));
    }
    clf.scale_mean = j.at("scale_mean").get<LevelFeatures>();
    clf.scale_std = j.at("scale_std").get<LevelFeatures>();
    clf.weights = j.at("weights").get<LevelFeatures>();
    clf.bias = j.at("bias").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("classifier file '" + path + "' is malformed: " +
                          std::string(e.what()));
  }
  return clf;
}

void write_level_decisions(const std::string& path,
                           const std::vector<LevelDecisionRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write decisions file '" + path + "'");
  out << "segment_id,chosen_level,confidence\n";
  for (const auto& r : rows) {
    out << r.segment_id << ',' << r.level << ',' << format_double(r.confidence)
        << '\n';
  }
  if (!out) throw IoError("failed writing decisions file '" + path + "'");
}

}  // namespace qerover
