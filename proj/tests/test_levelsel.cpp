#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "qerover/common.hpp"
#include "qerover/levelsel.hpp"
#include "qerover/metrics.hpp"

using namespace qerover;
namespace fs = std::filesystem;
using doctest::Approx;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("qerover_levelsel_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

LevelFeatures shifted(double center, Rng& rng) {
  LevelFeatures f{};
  for (int i = 0; i < kNumLevelFeatures; ++i) {
    f[std::size_t(i)] = center * (1.0 + 0.1 * double(i)) +
                        rng.next_gaussian() * 0.3;
  }
  return f;
}

// Separable corpus: label-1 instances cluster at +2, label-0 at -2.
std::vector<LevelInstance> separable_instances(int num_segments,
                                               std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LevelInstance> out;
  for (int s = 0; s < num_segments; ++s) {
    for (int level = 3; level <= 5; ++level) {
      LevelInstance inst;
      inst.segment_id = "seg" + std::to_string(s);
      inst.level = level;
      inst.label = level == 4 ? 1 : 0;
      inst.features = shifted(inst.label == 1 ? 2.0 : -2.0, rng);
      out.push_back(inst);
    }
  }
  return out;
}

// Linear probe with confidence sigmoid(x[0]): no fitting involved.
LevelClassifier linear_probe() {
  LevelClassifier clf;
  clf.algo = LevelAlgo::kLinearSvm;
  for (int i = 0; i < kNumLevelFeatures; ++i) {
    clf.scale_std[std::size_t(i)] = 1.0;
  }
  clf.weights[0] = 1.0;
  return clf;
}

LevelFeatures only_x0(double v) {
  LevelFeatures f{};
  f[0] = v;
  return f;
}

}  // namespace

TEST_CASE("level features pack diversity, distances, and predicted wer") {
  WordSeq h1 = {0, 1, 2};
  WordSeq h2 = {0, 1};
  WordSeq h3 = {5};
  std::vector<WordSeq> hyps = {h1, h2, h3};
  auto wtn = build_wtn(hyps);
  WordSeq combined = {0, 1};

  auto f = level_features(hyps, combined, wtn, {0.2, 0.4, 0.9});
  CHECK(f[0] == Approx(diversity(wtn)));
  CHECK(f[1] == 3.0);               // lev(h1, h3)
  CHECK(f[2] == Approx(2.0));      // mean of lev(h1,h2)=1, lev(h1,h3)=3
  CHECK(f[3] == Approx(1.5));      // mean of lev(h1,h2)=1, lev(h2,h3)=2
  CHECK(f[4] == Approx(1.0));      // lev to combined: 1, 0, 2
  CHECK(f[5] == Approx(0.5));
  CHECK(f[6] == Approx(0.2));
  CHECK(f[7] == Approx(0.9));

  CHECK_THROWS_AS(level_features({h1}, combined, wtn, {0.1}),
                  ValidationError);
  CHECK_THROWS_AS(level_features(hyps, combined, wtn, {0.1}),
                  ValidationError);
}

TEST_CASE("labels mark every level attaining the minimum wer") {
  CHECK(label_levels({0.3, 0.1, 0.1, 0.5}) == std::vector<int>{0, 1, 1, 0});
  CHECK(label_levels({0.2}) == std::vector<int>{1});
  CHECK(label_levels({0.4, 0.4}) == std::vector<int>{1, 1});
  CHECK_THROWS_AS(label_levels({}), ValidationError);
}

TEST_CASE("all three classifiers separate a clean two-class problem") {
  auto instances = separable_instances(30, 71);
  Rng probe_rng(5);

  for (LevelAlgo algo : {LevelAlgo::kNaiveBayes, LevelAlgo::kRandomForest,
                         LevelAlgo::kLinearSvm}) {
    CAPTURE(level_algo_name(algo));
    auto clf = fit_level_classifier(instances, algo, 11, nullptr);
    CHECK_FALSE(clf.constant);
    int correct = 0;
    for (int i = 0; i < 40; ++i) {
      const bool positive = i % 2 == 0;
      const auto x = shifted(positive ? 2.0 : -2.0, probe_rng);
      const double conf = clf.positive_confidence(x);
      CHECK(conf >= 0.0);
      CHECK(conf <= 1.0);
      if ((conf >= 0.5) == positive) ++correct;
    }
    CHECK(correct >= 38);
  }
}

TEST_CASE("classifier training is deterministic under the seed") {
  auto instances = separable_instances(20, 3);
  Rng probe_rng(8);
  std::vector<LevelFeatures> probes;
  for (int i = 0; i < 10; ++i) probes.push_back(shifted(0.5, probe_rng));

  for (LevelAlgo algo : {LevelAlgo::kNaiveBayes, LevelAlgo::kRandomForest,
                         LevelAlgo::kLinearSvm}) {
    auto a = fit_level_classifier(instances, algo, 42, nullptr);
    auto b = fit_level_classifier(instances, algo, 42, nullptr);
    for (const auto& x : probes) {
      CHECK(a.positive_confidence(x) == b.positive_confidence(x));
    }
  }
}

TEST_CASE("single-class labels fall back to a constant answer") {
  auto instances = separable_instances(5, 2);
  for (auto& inst : instances) inst.label = 1;
  std::vector<std::string> warnings;
  auto clf =
      fit_level_classifier(instances, LevelAlgo::kRandomForest, 1, &warnings);
  CHECK(clf.constant);
  CHECK(clf.constant_class == 1);
  CHECK(clf.positive_confidence(only_x0(123.0)) == 1.0);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("single-class") != std::string::npos);

  for (auto& inst : instances) inst.label = 0;
  auto zero = fit_level_classifier(instances, LevelAlgo::kNaiveBayes, 1,
                                   nullptr);
  CHECK(zero.constant);
  CHECK(zero.constant_class == 0);
  CHECK(zero.positive_confidence(only_x0(-5.0)) == 0.0);

  CHECK_THROWS_AS(fit_level_classifier({}, LevelAlgo::kNaiveBayes, 1, nullptr),
                  ValidationError);
}

TEST_CASE("selector cross-validates all algorithms and refits the best") {
  auto instances = separable_instances(24, 19);
  auto outcome = train_level_selector(instances, 4, 7, nullptr);

  const double chosen_ba =
      outcome.cv_balanced_accuracy[std::size_t(outcome.chosen)];
  for (double ba : outcome.cv_balanced_accuracy) {
    CHECK(ba >= 0.0);
    CHECK(ba <= 1.0);
    CHECK(chosen_ba >= ba);
  }
  CHECK(chosen_ba > 0.9);  // trivially separable
  CHECK(outcome.classifier.algo == outcome.chosen);
  CHECK(outcome.classifier.positive_confidence(only_x0(0.0)) >= 0.0);

  CHECK_THROWS_AS(train_level_selector(instances, 1, 7, nullptr),
                  ValidationError);
  auto tiny = separable_instances(2, 1);
  CHECK_THROWS_AS(train_level_selector(tiny, 5, 7, nullptr), ValidationError);
}

TEST_CASE("ties among algorithms keep the earliest one") {
  // Constant labels make every algorithm score identically.
  auto instances = separable_instances(8, 4);
  for (auto& inst : instances) inst.label = inst.segment_id == "seg0" ? 1 : 0;
  for (auto& inst : instances) inst.features = only_x0(double(inst.label));
  auto outcome = train_level_selector(instances, 2, 1, nullptr);
  bool all_equal = true;
  for (double ba : outcome.cv_balanced_accuracy) {
    all_equal = all_equal && ba == outcome.cv_balanced_accuracy[0];
  }
  if (all_equal) CHECK(outcome.chosen == LevelAlgo::kNaiveBayes);
}

TEST_CASE("prediction prefers confident positives then falls back") {
  auto clf = linear_probe();

  // sigmoid(2) and sigmoid(3) are positive; the latter is more confident.
  auto d = predict_level(
      clf, {{3, only_x0(-1.0)}, {4, only_x0(2.0)}, {5, only_x0(3.0)}});
  CHECK(d.level == 5);
  CHECK(d.confidence == Approx(1.0 / (1.0 + std::exp(-3.0))));

  // Equal confidence keeps the earlier (smaller) level.
  d = predict_level(clf, {{3, only_x0(2.0)}, {4, only_x0(2.0)}});
  CHECK(d.level == 3);

  // Nothing positive: highest confidence wins regardless of threshold.
  d = predict_level(clf, {{3, only_x0(-2.0)}, {4, only_x0(-1.0)}});
  CHECK(d.level == 4);
  CHECK(d.confidence < 0.5);

  // A weaker positive still beats a stronger negative.
  d = predict_level(clf, {{3, only_x0(-4.0)}, {4, only_x0(0.1)}});
  CHECK(d.level == 4);

  CHECK_THROWS_AS(predict_level(clf, {}), ValidationError);
}

TEST_CASE("classifier files round trip for every algorithm") {
  TempDir dir;
  auto instances = separable_instances(15, 33);
  Rng probe_rng(2);
  std::vector<LevelFeatures> probes;
  for (int i = 0; i < 10; ++i) {
    probes.push_back(shifted(probe_rng.next_uniform(-2.0, 2.0), probe_rng));
  }

  int idx = 0;
  for (LevelAlgo algo : {LevelAlgo::kNaiveBayes, LevelAlgo::kRandomForest,
                         LevelAlgo::kLinearSvm}) {
    auto clf = fit_level_classifier(instances, algo, 9, nullptr);
    const auto path =
        (dir.path / ("clf" + std::to_string(idx++) + ".json")).string();
    save_level_classifier(clf, path);
    auto loaded = load_level_classifier(path);
    CHECK(loaded.algo == algo);
    for (const auto& x : probes) {
      CHECK(loaded.positive_confidence(x) == clf.positive_confidence(x));
    }
  }

  // Constant fallback survives the trip too.
  auto ones = instances;
  for (auto& inst : ones) inst.label = 1;
  auto constant = fit_level_classifier(ones, LevelAlgo::kLinearSvm, 1, nullptr);
  const auto cpath = (dir.path / "constant.json").string();
  save_level_classifier(constant, cpath);
  auto cloaded = load_level_classifier(cpath);
  CHECK(cloaded.constant);
  CHECK(cloaded.constant_class == 1);
}

TEST_CASE("classifier files reject junk with typed errors") {
  TempDir dir;
  CHECK_THROWS_AS(load_level_classifier((dir.path / "absent.json").string()),
                  IoError);
  auto write_file = [&](const std::string& name, const std::string& body) {
    const auto p = (dir.path / name).string();
    std::ofstream out(p);
    out << body;
    return p;
  };
  CHECK_THROWS_AS(load_level_classifier(write_file("junk.json", "[1, 2")),
                  ParseError);
  CHECK_THROWS_AS(
      load_level_classifier(write_file("kind.json", "{\"kind\":\"other\"}")),
      ValidationError);
  CHECK_THROWS_AS(
      load_level_classifier(write_file(
          "ver.json", "{\"kind\":\"level_selector\",\"version\":9}")),
      ValidationError);
  CHECK_THROWS_AS(
      load_level_classifier(write_file(
          "algo.json",
          "{\"kind\":\"level_selector\",\"version\":1,"
          "\"algorithm\":\"perceptron\"}")),
      ValidationError);
}

TEST_CASE("decision rows serialize as a three-column csv") {
  TempDir dir;
  const auto path = (dir.path / "decisions.csv").string();
  write_level_decisions(path, {{"segA", 3, 0.75}, {"segB", 5, 0.5}});
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "segment_id,chosen_level,confidence");
  std::getline(in, line);
  CHECK(line == "segA,3,0.75");
  std::getline(in, line);
  CHECK(line == "segB,5,0.5");
  CHECK_FALSE(std::getline(in, line));
}
