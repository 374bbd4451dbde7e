// qerover -- segment-level QE-informed ROVER combination of ASR outputs.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qerover/common.hpp"
#include "qerover/corpus.hpp"
#include "qerover/features.hpp"
#include "qerover/levelsel.hpp"
#include "qerover/ngram.hpp"
#include "qerover/pipeline.hpp"
#include "qerover/qelearn.hpp"
#include "qerover/simcorpus.hpp"

namespace fs = std::filesystem;
using namespace qerover;

namespace {

struct CorpusCliOptions {
  std::string manifest;
  double slack = 0.5;
  std::vector<std::string> strip_words;

  Dataset load() const {
    CorpusOptions opts;
    opts.slack = slack;
    opts.strip_words = strip_words;
    return load_manifest(manifest, opts);
  }
};

void add_corpus_options(CLI::App* sub, CorpusCliOptions& opts) {
  sub->add_option("--manifest", opts.manifest, "Dataset manifest JSON")
      ->required();
  sub->add_option("--slack", opts.slack,
                  "Tolerated token overshoot past segment edges, seconds")
      ->capture_default_str();
  sub->add_option("--strip", opts.strip_words,
                  "Words dropped at ingestion (repeatable)");
}

unsigned feature_set_mask(const std::string& set) {
  if (set == "b") {
    return FeatureVector::kSignalBit | FeatureVector::kTextualBit |
           FeatureVector::kHybridBit;
  }
  if (set == "w") return FeatureVector::kWordBit;
  if (set == "bw") {
    return FeatureVector::kSignalBit | FeatureVector::kTextualBit |
           FeatureVector::kHybridBit | FeatureVector::kWordBit;
  }
  throw ValidationError("unknown feature set '" + set +
                        "'; expected b, w, or bw");
}

struct ResourceFiles {
  std::string lm, pos_lm, lm_in, lm_out, aux_in, aux_out;
  std::string lexicon, phoneme_classes;
};

void add_resource_options(CLI::App* sub, ResourceFiles& files) {
  sub->add_option("--lm", files.lm, "Word n-gram model, ARPA format");
  sub->add_option("--pos-lm", files.pos_lm, "POS-tag n-gram model, ARPA");
  sub->add_option("--lm-in", files.lm_in, "In-domain word n-gram, ARPA");
  sub->add_option("--lm-out", files.lm_out, "Out-of-domain word n-gram, ARPA");
  sub->add_option("--aux-lm-in", files.aux_in,
                  "Second in-domain scorer, ARPA");
  sub->add_option("--aux-lm-out", files.aux_out,
                  "Second out-of-domain scorer, ARPA");
  sub->add_option("--lexicon", files.lexicon,
                  "Pronunciation lexicon, word<TAB>phonemes");
  sub->add_option("--phoneme-classes", files.phoneme_classes,
                  "Phoneme class table, phoneme<TAB>class");
}

struct LoadedResources {
  std::optional<NgramLM> lm, pos_lm, lm_in, lm_out, aux_in, aux_out;
  std::optional<Lexicon> lexicon;
  std::optional<PosTable> pos_table;

  FeatureResources view() const {
    FeatureResources res;
    if (lm) res.lm = &*lm;
    if (pos_lm) res.pos_lm = &*pos_lm;
    if (lm_in) res.lm_in = &*lm_in;
    if (lm_out) res.lm_out = &*lm_out;
    if (aux_in) res.aux_in = &*aux_in;
    if (aux_out) res.aux_out = &*aux_out;
    if (lexicon) res.lexicon = &*lexicon;
    if (pos_table) res.pos_table = &*pos_table;
    return res;
  }
};

LoadedResources load_resources(const ResourceFiles& files,
                               const Dataset& dataset) {
  LoadedResources res;
  auto load_lm = [](const std::string& path) {
    return NgramLM::load_arpa(path);
  };
  if (!files.lm.empty()) res.lm = load_lm(files.lm);
  if (!files.pos_lm.empty()) res.pos_lm = load_lm(files.pos_lm);
  if (!files.lm_in.empty()) res.lm_in = load_lm(files.lm_in);
  if (!files.lm_out.empty()) res.lm_out = load_lm(files.lm_out);
  if (!files.aux_in.empty()) res.aux_in = load_lm(files.aux_in);
  if (!files.aux_out.empty()) res.aux_out = load_lm(files.aux_out);
  if (files.lexicon.empty() != files.phoneme_classes.empty()) {
    throw ValidationError(
        "--lexicon and --phoneme-classes must be given together");
  }
  if (!files.lexicon.empty()) {
    res.lexicon = Lexicon::load(files.lexicon, files.phoneme_classes);
  }
  // POS table from whatever tags the corpus carries.
  std::vector<std::vector<std::string>> tag_sentences;
  for (const auto& [key, hyp] : dataset.hypotheses) {
    std::vector<std::string> tags;
    bool complete = !hyp.tokens.empty();
    for (const auto& tok : hyp.tokens) {
      if (!tok.pos_tag) {
        complete = false;
        break;
      }
      tags.push_back(*tok.pos_tag);
    }
    if (complete) tag_sentences.push_back(std::move(tags));
  }
  if (!tag_sentences.empty()) {
    res.pos_table = PosTable::from_corpus(tag_sentences);
  }
  return res;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
  if (!out) throw IoError("failed writing '" + path + "'");
}

void write_json(const std::string& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

void write_combined(const std::string& path, const Dataset& dataset,
                    const std::vector<std::vector<std::string>>& outputs) {
  std::string text;
  for (std::size_t s = 0; s < dataset.segments.size(); ++s) {
    text += dataset.segments[s].segment_id;
    for (const auto& w : outputs[s]) {
      text += ' ';
      text += w;
    }
    text += '\n';
  }
  write_text(path, text);
}

std::vector<std::vector<std::string>> manifest_sentences(
    const Dataset& dataset) {
  std::vector<std::vector<std::string>> sentences;
  for (const auto& seg : dataset.segments) {
    if (seg.reference && !seg.reference->empty()) {
      sentences.push_back(*seg.reference);
    }
  }
  return sentences;
}

std::vector<std::vector<std::string>> text_file_sentences(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read text file '" + path + "'");
  std::vector<std::vector<std::string>> sentences;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> words;
    std::string word;
    for (char c : line) {
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!word.empty()) words.push_back(std::move(word)), word.clear();
      } else {
        word += char(std::tolower(static_cast<unsigned char>(c)));
      }
    }
    if (!word.empty()) words.push_back(std::move(word));
    if (!words.empty()) sentences.push_back(std::move(words));
  }
  return sentences;
}

PredWerTable predict_wer_table(const FeatureTable& features,
                               const QEModel& model) {
  if (model.kind != "xrt_regressor") {
    throw ValidationError(
        "predicted-WER features need an xrt_regressor model");
  }
  PredWerTable table;
  for (const auto& [key, fv] : features) {
    table[key] = model.predict(fv);
  }
  return table;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  SimProfile profile;
  std::vector<double> rates;
  bool no_audio = false;
  std::string out;
};

void run_simulate(SimulateArgs& args, int jobs) {
  SimProfile& p = args.profile;
  if (args.rates.empty()) {
    p.base_error_rates.clear();
    for (int i = 0; i < p.num_systems; ++i) {
      p.base_error_rates.push_back(
          0.10 + 0.30 * (p.num_systems > 1
                             ? double(i) / double(p.num_systems - 1)
                             : 0.0));
    }
  } else if (args.rates.size() == 1) {
    p.base_error_rates.assign(std::size_t(p.num_systems), args.rates[0]);
  } else {
    p.base_error_rates = args.rates;
  }
  p.with_audio = !args.no_audio;
  SimCorpus corpus = generate(p, jobs);
  std::string manifest = emit(corpus, args.out);
  std::cout << manifest << '\n';
}

// ---------------------------------------------------------------- train-lm

struct TrainLmArgs {
  std::vector<std::string> text_files;
  std::string manifest;
  int order = 3;
  std::string out;
};

void run_train_lm(TrainLmArgs& args) {
  std::vector<std::vector<std::string>> sentences;
  for (const auto& path : args.text_files) {
    auto part = text_file_sentences(path);
    sentences.insert(sentences.end(), part.begin(), part.end());
  }
  if (!args.manifest.empty()) {
    CorpusCliOptions corpus_opts;
    corpus_opts.manifest = args.manifest;
    auto part = manifest_sentences(corpus_opts.load());
    sentences.insert(sentences.end(), part.begin(), part.end());
  }
  if (sentences.empty()) {
    throw ValidationError("no training sentences; give --text or --manifest");
  }
  NgramLM lm = NgramLM::train(sentences, args.order);
  lm.save_arpa(args.out);
  std::cout << args.out << '\n';
}

// -------------------------------------------------------- extract-features

struct ExtractArgs {
  CorpusCliOptions corpus;
  ResourceFiles resources;
  std::string feature_set = "bw";
  double min_silence = 0.0;
  std::string out;
};

void run_extract(ExtractArgs& args, int jobs) {
  unsigned mask = feature_set_mask(args.feature_set);
  Dataset dataset = args.corpus.load();
  LoadedResources res = load_resources(args.resources, dataset);
  FeatureConfig cfg;
  cfg.base = (mask & ~FeatureVector::kWordBit) != 0;
  cfg.word = (mask & FeatureVector::kWordBit) != 0;
  cfg.min_silence = args.min_silence;
  ExtractionResult result = extract_all(dataset, res.view(), cfg, jobs);
  print_warnings(result.warnings);
  write_features_csv(args.out, result.features);
  std::cout << args.out << '\n';
}

// ----------------------------------------------------------------- train-qe

struct TrainQeArgs {
  CorpusCliOptions corpus;
  std::string features_csv;
  TrainQeOptions options;
  std::string feature_set = "bw";
  std::string out;
};

void run_train_qe(TrainQeArgs& args, int jobs) {
  Dataset dataset = args.corpus.load();
  FeatureTable table = read_features_csv(args.features_csv);
  args.options.mask = feature_set_mask(args.feature_set);
  args.options.jobs = jobs;
  TrainQeResult result = train_qe(dataset, table, args.options);
  print_warnings(result.warnings);
  result.model.save(args.out);
  if (args.options.cv_folds > 0) {
    const char* objective =
        args.options.method == "mlr" ? "MAP" : "MAE";
    std::cout << "cross-validation " << objective << ": "
              << format_double(result.cv_objective) << '\n';
  }
  std::cout << args.out << '\n';
}

// --------------------------------------------------------------------- rank

struct RankArgs {
  CorpusCliOptions corpus;
  std::string features_csv;
  std::string model_path;
  std::string out;
};

void run_rank(RankArgs& args) {
  Dataset dataset = args.corpus.load();
  FeatureTable table = read_features_csv(args.features_csv);
  QEModel model = QEModel::load(args.model_path);
  SegmentOrders orders = model_orders(dataset, table, model);
  std::string text = "segment_id,rank,system_id,score\n";
  for (std::size_t s = 0; s < dataset.segments.size(); ++s) {
    const Segment& seg = dataset.segments[s];
    for (std::size_t r = 0; r < orders[s].size(); ++r) {
      const std::string& sys =
          dataset.systems[std::size_t(orders[s][r])];
      double score = model.predict(table.at({seg.segment_id, sys}));
      text += seg.segment_id + "," + std::to_string(r + 1) + "," + sys +
              "," + format_double(score) + "\n";
    }
  }
  write_text(args.out, text);
  std::cout << args.out << '\n';
}

// ------------------------------------------------------------------ combine

struct CombineArgs {
  CorpusCliOptions corpus;
  std::string ranking = "random";
  std::string level = "all";
  std::string features_csv;
  std::string model_path;
  std::string classifier_path;
  std::string regressor_path;
  int random_iters = 20;
  std::uint64_t seed = 1;
  double wer_cap = 2.0;
  double null_weight = 1.0;
  std::string out;
};

SegmentOrders orders_for(const Dataset& dataset, RankSource source,
                         const CombineArgs& args, const FeatureTable* table,
                         const QEModel* model, std::uint64_t iteration) {
  switch (source) {
    case RankSource::kRandom:
      return random_orders(dataset, args.seed, iteration);
    case RankSource::kModel:
      return model_orders(dataset, *table, *model);
    default:
      return oracle_orders(dataset, source, args.wer_cap);
  }
}

void run_combine(CombineArgs& args, int jobs) {
  Dataset dataset = args.corpus.load();
  RankSource source = parse_rank_source(args.ranking);
  VoteOptions vote_options{args.null_weight};

  std::optional<FeatureTable> table;
  std::optional<QEModel> model;
  if (source == RankSource::kModel) {
    if (args.features_csv.empty() || args.model_path.empty()) {
      throw ValidationError("--ranking model needs --features and --model");
    }
    table = read_features_csv(args.features_csv);
    model = QEModel::load(args.model_path);
  }

  std::optional<LevelClassifier> classifier;
  PredWerTable pred_wer;
  bool auto_level = args.level == "auto";
  if (auto_level) {
    if (args.classifier_path.empty()) {
      throw ValidationError("--level auto needs --classifier");
    }
    classifier = load_level_classifier(args.classifier_path);
    if (!args.regressor_path.empty()) {
      if (args.features_csv.empty()) {
        throw ValidationError("--regressor needs --features");
      }
      if (!table) table = read_features_csv(args.features_csv);
      pred_wer = predict_wer_table(*table, QEModel::load(args.regressor_path));
    }
  }

  nlohmann::json summary;
  summary["ranking"] = args.ranking;
  summary["level"] = args.level;

  const int iters =
      source == RankSource::kRandom ? std::max(1, args.random_iters) : 1;
  summary["random_iters"] = source == RankSource::kRandom ? iters : 1;

  auto combine_once = [&](const SegmentOrders& orders,
                          int level) -> CombineResult {
    if (auto_level) {
      std::vector<LevelDecisionRow> decisions = choose_levels(
          dataset, orders, *classifier, pred_wer, vote_options, jobs);
      return combine_at_chosen_levels(dataset, orders, decisions,
                                      vote_options, jobs);
    }
    return combine_at_level(dataset, orders, level, vote_options, jobs);
  };

  std::vector<int> levels;
  if (auto_level) {
    levels.push_back(0);  // sentinel, per-segment decisions
  } else if (args.level == "all") {
    for (int l = 1; l <= int(dataset.systems.size()); ++l) {
      levels.push_back(l);
    }
  } else {
    try {
      levels.push_back(std::stoi(args.level));
    } catch (const std::exception&) {
      throw ValidationError("--level must be an integer, 'all', or 'auto'");
    }
  }

  nlohmann::json level_results = nlohmann::json::array();
  for (int level : levels) {
    std::vector<double> wers;
    CombineResult first_result;
    for (int it = 0; it < iters; ++it) {
      SegmentOrders orders = orders_for(dataset, source, args,
                                        table ? &*table : nullptr,
                                        model ? &*model : nullptr,
                                        std::uint64_t(it));
      CombineResult res = combine_once(orders, level);
      if (res.wer) wers.push_back(*res.wer);
      if (it == 0) first_result = std::move(res);
    }
    nlohmann::json entry;
    entry["level"] = auto_level ? nlohmann::json("auto")
                                : nlohmann::json(level);
    if (!wers.empty()) {
      double mean = 0.0;
      for (double w : wers) mean += w;
      mean /= double(wers.size());
      entry["wer"] = mean;
      if (wers.size() > 1) {
        double var = 0.0;
        for (double w : wers) var += (w - mean) * (w - mean);
        entry["stddev"] = std::sqrt(var / double(wers.size()));
      }
    }
    std::string suffix =
        auto_level ? "auto"
                   : (levels.size() > 1 ? "L" + std::to_string(level) : "");
    std::string out_path = args.out;
    if (!suffix.empty()) out_path += "." + suffix;
    write_combined(out_path + ".txt", dataset, first_result.outputs);
    entry["output"] = out_path + ".txt";
    level_results.push_back(std::move(entry));
  }
  summary["results"] = std::move(level_results);
  write_json(args.out + ".json", summary);

  for (const auto& entry : summary["results"]) {
    std::cout << "level " << entry["level"].dump() << ": ";
    if (entry.contains("wer")) {
      std::cout << "WER " << format_double(entry["wer"].get<double>());
      if (entry.contains("stddev")) {
        std::cout << " ± " << format_double(entry["stddev"].get<double>());
      }
    } else {
      std::cout << "no references, not scored";
    }
    std::cout << '\n';
  }
}

// ---------------------------------------------------- select-level-train

struct SelectLevelArgs {
  CorpusCliOptions corpus;
  std::string ranking = "sego";
  std::string features_csv;
  std::string model_path;
  std::string regressor_path;
  double wer_cap = 2.0;
  double null_weight = 1.0;
  int cv_folds = 4;
  std::uint64_t seed = 1;
  std::string out;
};

void run_select_level_train(SelectLevelArgs& args, int jobs) {
  Dataset dataset = args.corpus.load();
  RankSource source = parse_rank_source(args.ranking);
  VoteOptions vote_options{args.null_weight};

  std::optional<FeatureTable> table;
  if (!args.features_csv.empty()) {
    table = read_features_csv(args.features_csv);
  }
  SegmentOrders orders;
  if (source == RankSource::kModel) {
    if (!table || args.model_path.empty()) {
      throw ValidationError("--ranking model needs --features and --model");
    }
    orders = model_orders(dataset, *table, QEModel::load(args.model_path));
  } else if (source == RankSource::kRandom) {
    orders = random_orders(dataset, args.seed, 0);
  } else {
    orders = oracle_orders(dataset, source, args.wer_cap);
  }

  PredWerTable pred_wer;
  if (!args.regressor_path.empty()) {
    if (!table) {
      throw ValidationError("--regressor needs --features");
    }
    pred_wer = predict_wer_table(*table, QEModel::load(args.regressor_path));
  }

  std::vector<LevelInstance> instances = build_level_instances(
      dataset, orders, pred_wer, vote_options, jobs);
  std::vector<std::string> warnings;
  LevelSelectorOutcome outcome =
      train_level_selector(instances, args.cv_folds, args.seed, &warnings);
  print_warnings(warnings);
  save_level_classifier(outcome.classifier, args.out);
  for (int a = 0; a < 3; ++a) {
    std::cout << level_algo_name(LevelAlgo(a)) << " balanced accuracy: "
              << format_double(outcome.cv_balanced_accuracy[std::size_t(a)])
              << '\n';
  }
  std::cout << "selected: " << level_algo_name(outcome.chosen) << '\n';
  std::cout << args.out << '\n';
}

// ----------------------------------------------------------------- evaluate

struct EvaluateArgs {
  CorpusCliOptions corpus;
  std::string features_csv;
  std::string model_path;
  EvaluateOptions options;
  bool gillick = false;
  std::string out;
};

void run_evaluate(EvaluateArgs& args, int jobs) {
  Dataset dataset = args.corpus.load();
  args.options.jobs = jobs;
  args.options.significance.jobs = jobs;
  args.options.significance.gillick = args.gillick;
  std::optional<FeatureTable> table;
  std::optional<QEModel> model;
  if (!args.model_path.empty()) {
    if (args.features_csv.empty()) {
      throw ValidationError("--model needs --features");
    }
    table = read_features_csv(args.features_csv);
    model = QEModel::load(args.model_path);
  }
  EvaluateReport report =
      evaluate_dataset(dataset, table ? &*table : nullptr,
                       model ? &*model : nullptr, args.options);
  std::string text = render_report(report);
  std::cout << text;
  if (!args.out.empty()) {
    write_text(args.out + ".txt", text);
    write_json(args.out + ".json", report_to_json(report));
  }
}

// ----------------------------------------------------------------- pipeline

struct PipelineArgs {
  SimProfile profile;
  std::vector<double> rates;
  bool no_audio = false;
  std::string method = "mlr";
  bool untie = false;
  std::string feature_set = "bw";
  int cv_folds = 0;
  int lm_order = 3;
  int level_folds = 4;
  std::string level = "all";
  int random_iters = 20;
  std::string out;
};

void run_pipeline(PipelineArgs& args, int jobs) {
  fs::create_directories(args.out);

  // Disjoint train/eval corpora from one profile, different seeds.
  SimulateArgs train_sim{args.profile, args.rates, args.no_audio,
                         (fs::path(args.out) / "train").string()};
  run_simulate(train_sim, jobs);
  SimulateArgs eval_sim{args.profile, args.rates, args.no_audio,
                        (fs::path(args.out) / "eval").string()};
  eval_sim.profile.seed = args.profile.seed + 1000003;
  run_simulate(eval_sim, jobs);

  std::string train_manifest =
      (fs::path(args.out) / "train" / "manifest.json").string();
  std::string eval_manifest =
      (fs::path(args.out) / "eval" / "manifest.json").string();

  TrainLmArgs lm_args;
  lm_args.manifest = train_manifest;
  lm_args.order = args.lm_order;
  lm_args.out = (fs::path(args.out) / "lm.arpa").string();
  run_train_lm(lm_args);

  auto features_for = [&](const std::string& manifest,
                          const std::string& corpus_dir,
                          const std::string& csv) {
    ExtractArgs ex;
    ex.corpus.manifest = manifest;
    ex.resources.lm = lm_args.out;
    ex.resources.lm_in = lm_args.out;
    ex.resources.lexicon =
        (fs::path(corpus_dir) / "lexicon.tsv").string();
    ex.resources.phoneme_classes =
        (fs::path(corpus_dir) / "phoneme_classes.tsv").string();
    ex.feature_set = args.feature_set;
    ex.out = csv;
    run_extract(ex, jobs);
  };
  std::string train_csv = (fs::path(args.out) / "train_features.csv").string();
  std::string eval_csv = (fs::path(args.out) / "eval_features.csv").string();
  features_for(train_manifest, (fs::path(args.out) / "train").string(),
               train_csv);
  features_for(eval_manifest, (fs::path(args.out) / "eval").string(),
               eval_csv);

  TrainQeArgs qe;
  qe.corpus.manifest = train_manifest;
  qe.features_csv = train_csv;
  qe.options.method = args.method;
  qe.options.untie = args.untie;
  qe.options.seed = args.profile.seed;
  qe.options.cv_folds = args.cv_folds;
  qe.feature_set = args.feature_set;
  qe.out = (fs::path(args.out) / "qe_model.json").string();
  run_train_qe(qe, jobs);

  EvaluateArgs ev;
  ev.corpus.manifest = eval_manifest;
  ev.features_csv = eval_csv;
  ev.model_path = qe.out;
  ev.options.random_iters = args.random_iters;
  ev.options.seed = args.profile.seed;
  ev.out = (fs::path(args.out) / "report").string();
  run_evaluate(ev, jobs);

  if (args.level == "auto") {
    // Regressor for the predicted-WER level features.
    TrainQeArgs rr;
    rr.corpus.manifest = train_manifest;
    rr.features_csv = train_csv;
    rr.options.method = "rr1";
    rr.options.seed = args.profile.seed;
    rr.feature_set = args.feature_set;
    rr.out = (fs::path(args.out) / "rr_model.json").string();
    run_train_qe(rr, jobs);

    SelectLevelArgs sel;
    sel.corpus.manifest = train_manifest;
    sel.ranking = "model";
    sel.features_csv = train_csv;
    sel.model_path = qe.out;
    sel.regressor_path = rr.out;
    sel.cv_folds = args.level_folds;
    sel.seed = args.profile.seed;
    sel.out = (fs::path(args.out) / "level_classifier.json").string();
    run_select_level_train(sel, jobs);

    CombineArgs comb;
    comb.corpus.manifest = eval_manifest;
    comb.ranking = "model";
    comb.level = "auto";
    comb.features_csv = eval_csv;
    comb.model_path = qe.out;
    comb.classifier_path = sel.out;
    comb.regressor_path = rr.out;
    comb.seed = args.profile.seed;
    comb.out = (fs::path(args.out) / "combined_auto").string();
    run_combine(comb, jobs);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Segment-level ASR hypothesis combination with quality-estimation "
      "ranking"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "TOML-style key/value config file; flags override it");
  app.fallthrough();

  int jobs = hardware_jobs();
  app.add_option("--jobs", jobs, "Worker thread cap")->capture_default_str();

  auto add_profile_options = [](CLI::App* sub, SimProfile& p,
                                std::vector<double>& rates, bool& no_audio) {
    sub->add_option("--segments", p.num_segments, "Segment count")
        ->capture_default_str();
    sub->add_option("--systems", p.num_systems, "System count")
        ->capture_default_str();
    sub->add_option("--vocab-size", p.vocab_size, "Vocabulary size")
        ->capture_default_str();
    sub->add_option("--rates", rates,
                    "Per-system base error rates (one value broadcasts; "
                    "empty spreads 0.10..0.40)");
    sub->add_option("--jitter", p.jitter, "Per-segment rate jitter")
        ->capture_default_str();
    sub->add_option("--p-sub", p.p_sub, "Substitution share")
        ->capture_default_str();
    sub->add_option("--p-ins", p.p_ins, "Insertion share")
        ->capture_default_str();
    sub->add_option("--p-del", p.p_del, "Deletion share")
        ->capture_default_str();
    sub->add_option("--rho", p.rho,
                    "Probability that corrupted words are feature-visible")
        ->capture_default_str();
    sub->add_option("--seed", p.seed, "Random seed")->capture_default_str();
    sub->add_option("--speakers", p.num_speakers, "Speaker count")
        ->capture_default_str();
    sub->add_option("--sample-rate", p.sample_rate, "Audio sample rate")
        ->capture_default_str();
    sub->add_flag("--no-audio", no_audio, "Skip audio generation");
    sub->add_option("--min-ref-len", p.min_ref_len, "Shortest reference")
        ->capture_default_str();
    sub->add_option("--max-ref-len", p.max_ref_len, "Longest reference")
        ->capture_default_str();
  };

  SimulateArgs sim_args;
  CLI::App* sim = app.add_subcommand("simulate", "Generate a synthetic corpus");
  add_profile_options(sim, sim_args.profile, sim_args.rates,
                      sim_args.no_audio);
  sim->add_option("--out", sim_args.out, "Output directory")->required();
  sim->callback([&] { run_simulate(sim_args, jobs); });

  TrainLmArgs lm_args;
  CLI::App* lm = app.add_subcommand("train-lm", "Train an n-gram model");
  lm->add_option("--text", lm_args.text_files,
                 "Training text, one sentence per line (repeatable)");
  lm->add_option("--manifest", lm_args.manifest,
                 "Train on this dataset's references");
  lm->add_option("--order", lm_args.order, "Model order")
      ->capture_default_str();
  lm->add_option("--out", lm_args.out, "Output ARPA path")->required();
  lm->callback([&] { run_train_lm(lm_args); });

  ExtractArgs extract_args;
  CLI::App* extract =
      app.add_subcommand("extract-features", "Compute the 75 QE features");
  add_corpus_options(extract, extract_args.corpus);
  add_resource_options(extract, extract_args.resources);
  extract->add_option("--features", extract_args.feature_set,
                      "Feature set: b, w, or bw")
      ->capture_default_str();
  extract->add_option("--min-silence", extract_args.min_silence,
                      "Shortest gap counted as a silence, seconds")
      ->capture_default_str();
  extract->add_option("--out", extract_args.out, "Output CSV path")
      ->required();
  extract->callback([&] { run_extract(extract_args, jobs); });

  TrainQeArgs qe_args;
  CLI::App* qe = app.add_subcommand("train-qe", "Train a ranking model");
  add_corpus_options(qe, qe_args.corpus);
  qe->add_option("--features", qe_args.features_csv, "Feature CSV")
      ->required();
  qe->add_option("--method", qe_args.options.method,
                 "Training method: rr1, rr2, or mlr")
      ->capture_default_str()
      ->check(CLI::IsMember({"rr1", "rr2", "mlr"}));
  qe->add_flag("--untie", qe_args.options.untie,
               "Break tied ranks with the global system prior (mlr)");
  qe->add_option("--feature-set", qe_args.feature_set,
                 "Feature set: b, w, or bw")
      ->capture_default_str();
  qe->add_option("--wer-cap", qe_args.options.wer_cap, "Label WER cap")
      ->capture_default_str();
  qe->add_option("--seed", qe_args.options.seed, "Random seed")
      ->capture_default_str();
  qe->add_option("--cv", qe_args.options.cv_folds,
                 "Speaker-disjoint folds for grid tuning; 0 = defaults")
      ->capture_default_str();
  qe->add_option("--out", qe_args.out, "Output model path")->required();
  qe->callback([&] { run_train_qe(qe_args, jobs); });

  RankArgs rank_args;
  CLI::App* rank = app.add_subcommand("rank", "Rank hypotheses with a model");
  add_corpus_options(rank, rank_args.corpus);
  rank->add_option("--features", rank_args.features_csv, "Feature CSV")
      ->required();
  rank->add_option("--model", rank_args.model_path, "Model file")->required();
  rank->add_option("--out", rank_args.out, "Output CSV path")->required();
  rank->callback([&] { run_rank(rank_args); });

  CombineArgs combine_args;
  CLI::App* combine = app.add_subcommand("combine", "ROVER combination");
  add_corpus_options(combine, combine_args.corpus);
  combine->add_option("--ranking", combine_args.ranking,
                      "random, syso, sego, insyso, insego, or model")
      ->capture_default_str();
  combine->add_option("--level", combine_args.level,
                      "Combination level: an integer, 'all', or 'auto'")
      ->capture_default_str();
  combine->add_option("--features", combine_args.features_csv, "Feature CSV");
  combine->add_option("--model", combine_args.model_path, "Ranking model");
  combine->add_option("--classifier", combine_args.classifier_path,
                      "Level classifier (for --level auto)");
  combine->add_option("--regressor", combine_args.regressor_path,
                      "WER regressor for level features (--level auto)");
  combine->add_option("--random-iters", combine_args.random_iters,
                      "Averaging iterations for random ranking")
      ->capture_default_str();
  combine->add_option("--seed", combine_args.seed, "Random seed")
      ->capture_default_str();
  combine->add_option("--wer-cap", combine_args.wer_cap, "Oracle WER cap")
      ->capture_default_str();
  combine->add_option("--null-weight", combine_args.null_weight,
                      "Voting weight of null entries")
      ->capture_default_str();
  combine->add_option("--out", combine_args.out, "Output path prefix")
      ->required();
  combine->callback([&] { run_combine(combine_args, jobs); });

  SelectLevelArgs select_args;
  CLI::App* select = app.add_subcommand("select-level-train",
                                        "Train the level classifier");
  add_corpus_options(select, select_args.corpus);
  select->add_option("--ranking", select_args.ranking,
                     "Ranking source for the level features")
      ->capture_default_str();
  select->add_option("--features", select_args.features_csv, "Feature CSV");
  select->add_option("--model", select_args.model_path, "Ranking model");
  select->add_option("--regressor", select_args.regressor_path,
                     "WER regressor for level features");
  select->add_option("--wer-cap", select_args.wer_cap, "Oracle WER cap")
      ->capture_default_str();
  select->add_option("--null-weight", select_args.null_weight,
                     "Voting weight of null entries")
      ->capture_default_str();
  select->add_option("--cv", select_args.cv_folds,
                     "Folds for classifier selection")
      ->capture_default_str();
  select->add_option("--seed", select_args.seed, "Random seed")
      ->capture_default_str();
  select->add_option("--out", select_args.out, "Output classifier path")
      ->required();
  select->callback([&] { run_select_level_train(select_args, jobs); });

  EvaluateArgs eval_args;
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "Per-level WER table with marks");
  add_corpus_options(evaluate, eval_args.corpus);
  evaluate->add_option("--features", eval_args.features_csv, "Feature CSV");
  evaluate->add_option("--model", eval_args.model_path, "Ranking model");
  evaluate->add_option("--random-iters", eval_args.options.random_iters,
                       "Random-ranking iterations")
      ->capture_default_str();
  evaluate->add_option("--seed", eval_args.options.seed, "Random seed")
      ->capture_default_str();
  evaluate->add_option("--wer-cap", eval_args.options.wer_cap,
                       "Oracle WER cap")
      ->capture_default_str();
  evaluate->add_option("--alpha", eval_args.options.significance.alpha,
                       "Significance agreement threshold")
      ->capture_default_str();
  evaluate->add_option("--resamples",
                       eval_args.options.significance.num_resamples,
                       "Bootstrap resamples")
      ->capture_default_str();
  evaluate->add_flag("--gillick", eval_args.gillick,
                     "Normal-approximation matched-pairs test");
  evaluate->add_option("--out", eval_args.out,
                       "Report path prefix (.txt and .json)");
  evaluate->callback([&] { run_evaluate(eval_args, jobs); });

  PipelineArgs pipe_args;
  CLI::App* pipe =
      app.add_subcommand("pipeline", "End-to-end synthetic experiment");
  add_profile_options(pipe, pipe_args.profile, pipe_args.rates,
                      pipe_args.no_audio);
  pipe->add_option("--method", pipe_args.method,
                   "QE training method: rr1, rr2, or mlr")
      ->capture_default_str()
      ->check(CLI::IsMember({"rr1", "rr2", "mlr"}));
  pipe->add_flag("--untie", pipe_args.untie, "Untied mlr labels");
  pipe->add_option("--feature-set", pipe_args.feature_set,
                   "Feature set: b, w, or bw")
      ->capture_default_str();
  pipe->add_option("--cv", pipe_args.cv_folds,
                   "QE tuning folds; 0 = defaults")
      ->capture_default_str();
  pipe->add_option("--lm-order", pipe_args.lm_order, "LM order")
      ->capture_default_str();
  pipe->add_option("--level", pipe_args.level,
                   "Evaluation level: 'all' or 'auto'")
      ->capture_default_str();
  pipe->add_option("--level-cv", pipe_args.level_folds,
                   "Folds for level-classifier selection")
      ->capture_default_str();
  pipe->add_option("--random-iters", pipe_args.random_iters,
                   "Random-ranking iterations")
      ->capture_default_str();
  pipe->add_option("--out", pipe_args.out, "Output directory")->required();
  pipe->callback([&] { run_pipeline(pipe_args, jobs); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
