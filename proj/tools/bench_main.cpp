// Timing comparison of the OpenMP kernels against the serial reference path.
#include <chrono>
#include <cstdio>
#include <vector>

#include "qerover/common.hpp"
#include "qerover/features.hpp"
#include "qerover/pipeline.hpp"
#include "qerover/qelearn.hpp"
#include "qerover/simcorpus.hpp"

using namespace qerover;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

template <typename Fn>
double timed(Fn&& fn) {
  auto t0 = std::chrono::steady_clock::now();
  fn();
  return seconds_since(t0);
}

void report(const char* name, double serial, double parallel, bool match) {
  std::printf("%-18s serial %7.3fs  parallel %7.3fs  speedup %5.2fx  %s\n",
              name, serial, parallel, parallel > 0 ? serial / parallel : 0.0,
              match ? "outputs match" : "OUTPUTS DIFFER");
}

}  // namespace

int main() {
  const int jobs = hardware_jobs();
  std::printf("worker threads: %d\n", jobs);

  SimProfile profile;
  profile.num_segments = 300;
  profile.num_systems = 6;
  profile.base_error_rates = {0.10, 0.16, 0.22, 0.28, 0.34, 0.40};
  profile.seed = 42;
  SimCorpus corpus = generate(profile, jobs);

  // Corpus combination at full depth, random ranking.
  SegmentOrders orders = random_orders(corpus.dataset, 7, 0);
  CombineResult serial_combine, parallel_combine;
  double t_combine_serial = timed([&] {
    serial_combine = combine_at_level(corpus.dataset, orders,
                                      profile.num_systems, VoteOptions{}, 1);
  });
  double t_combine_parallel = timed([&] {
    parallel_combine = combine_at_level(corpus.dataset, orders,
                                        profile.num_systems, VoteOptions{},
                                        jobs);
  });
  report("combine", t_combine_serial, t_combine_parallel,
         serial_combine.outputs == parallel_combine.outputs &&
             serial_combine.counts == parallel_combine.counts);

  // Feature extraction, signal processing included.
  FeatureResources resources;
  FeatureConfig config;
  ExtractionResult serial_feat, parallel_feat;
  double t_feat_serial = timed([&] {
    serial_feat = extract_all(corpus.dataset, resources, config, 1);
  });
  double t_feat_parallel = timed([&] {
    parallel_feat = extract_all(corpus.dataset, resources, config, jobs);
  });
  bool feat_match = serial_feat.features.size() == parallel_feat.features.size();
  if (feat_match) {
    for (const auto& [key, fv] : serial_feat.features) {
      auto it = parallel_feat.features.find(key);
      if (it == parallel_feat.features.end() ||
          it->second.values != fv.values || it->second.mask != fv.mask) {
        feat_match = false;
        break;
      }
    }
  }
  report("extract-features", t_feat_serial, t_feat_parallel, feat_match);

  // Regressor training on the extracted features.
  std::vector<std::string> warnings;
  std::vector<TrainingInstance> instances =
      build_rr1(corpus.dataset, serial_feat.features, 2.0, &warnings);
  std::vector<FeatRow> x;
  std::vector<double> y;
  for (const auto& inst : instances) {
    FeatRow row{};
    for (std::size_t d = 0; d < FeatureVector::kDim; ++d) {
      row[d] = inst.features.values[d];
    }
    x.push_back(row);
    y.push_back(inst.label);
  }
  std::vector<int> dims = live_dims(instances.front().features.mask);
  XrtParams params;
  params.n_trees = 100;
  XrtModel serial_model, parallel_model;
  double t_xrt_serial =
      timed([&] { serial_model = fit_xrt(x, y, dims, params, 1); });
  double t_xrt_parallel =
      timed([&] { parallel_model = fit_xrt(x, y, dims, params, jobs); });
  bool xrt_match = serial_model.trees.size() == parallel_model.trees.size();
  if (xrt_match) {
    for (const auto& row : x) {
      if (serial_model.predict(row) != parallel_model.predict(row)) {
        xrt_match = false;
        break;
      }
    }
  }
  report("fit-xrt", t_xrt_serial, t_xrt_parallel, xrt_match);
  return 0;
}
