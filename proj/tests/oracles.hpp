// Independent reference implementations the tests compare against. These are
// deliberately written from the definitions, not by calling library code.
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "qerover/dsp.hpp"

namespace oracles {

// Minimal edit distance by plain recursion. Exponential; small inputs only.
inline int edit_distance_recursive(std::span<const int> a,
                                   std::span<const int> b) {
  if (a.empty()) return int(b.size());
  if (b.empty()) return int(a.size());
  const int keep =
      edit_distance_recursive(a.subspan(1), b.subspan(1)) +
      (a[0] == b[0] ? 0 : 1);
  const int drop_a = edit_distance_recursive(a.subspan(1), b) + 1;
  const int drop_b = edit_distance_recursive(a, b.subspan(1)) + 1;
  return std::min({keep, drop_a, drop_b});
}

// Enumerates every sequence b with |b| <= max_len over {0..alphabet-1} in
// depth-first order and reports dist(a, b), maintaining one DP row per
// prefix so the whole sweep costs O(#sequences * |a|).
template <typename Fn>
void for_all_edit_distances(const std::vector<int>& a, int alphabet,
                            int max_len, Fn&& visit) {
  const std::size_t n = a.size();
  std::vector<std::vector<int>> rows;
  rows.emplace_back(n + 1);
  for (std::size_t i = 0; i <= n; ++i) rows[0][i] = int(i);
  std::vector<int> b;

  auto dfs = [&](auto&& self) -> void {
    visit(b, rows.back()[n]);
    if (int(b.size()) == max_len) return;
    for (int c = 0; c < alphabet; ++c) {
      const std::vector<int>& prev = rows.back();
      std::vector<int> next(n + 1);
      next[0] = int(b.size()) + 1;
      for (std::size_t i = 1; i <= n; ++i) {
        const int keep = prev[i - 1] + (a[i - 1] == c ? 0 : 1);
        next[i] = std::min({keep, prev[i] + 1, next[i - 1] + 1});
      }
      b.push_back(c);
      rows.push_back(std::move(next));
      self(self);
      rows.pop_back();
      b.pop_back();
    }
  };
  dfs(dfs);
}

// MFCC computed with a direct O(N^2) DFT in place of the fast transform,
// everything else re-derived from the same published recipe.
inline std::vector<std::vector<double>> mfcc_direct_dft(
    std::span<const double> samples, int sample_rate,
    const qerover::DspConfig& cfg) {
  constexpr double kPi = 3.14159265358979323846;
  const std::size_t win =
      std::size_t(std::lround(sample_rate * cfg.window_ms / 1000.0));
  const std::size_t hop =
      std::size_t(std::lround(sample_rate * cfg.hop_ms / 1000.0));
  const std::size_t frames =
      samples.size() >= win && win > 0 && hop > 0
          ? 1 + (samples.size() - win) / hop
          : 0;

  std::vector<double> pre(samples.size());
  if (!samples.empty()) pre[0] = samples[0];
  for (std::size_t i = 1; i < samples.size(); ++i)
    pre[i] = samples[i] - cfg.preemphasis * samples[i - 1];

  std::vector<double> hamming(win);
  for (std::size_t i = 0; i < win; ++i)
    hamming[i] =
        0.54 - 0.46 * std::cos(2.0 * kPi * double(i) / double(win - 1));

  std::size_t nfft = 1;
  while (nfft < win) nfft <<= 1;
  const std::size_t nspec = nfft / 2 + 1;

  const double nyquist = sample_rate / 2.0;
  const int nf = cfg.num_filters;
  auto mel_of = [](double hz) {
    return 2595.0 * std::log10(1.0 + hz / 700.0);
  };
  auto hz_of = [](double mel) {
    return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
  };
  std::vector<double> mel_points(std::size_t(nf) + 2);
  for (int i = 0; i < nf + 2; ++i)
    mel_points[std::size_t(i)] = mel_of(nyquist) * double(i) / double(nf + 1);

  std::vector<std::vector<double>> out(
      frames, std::vector<double>(std::size_t(cfg.num_cepstra), 0.0));
  for (std::size_t f = 0; f < frames; ++f) {
    std::vector<double> windowed(nfft, 0.0);
    for (std::size_t i = 0; i < win; ++i)
      windowed[i] = pre[f * hop + i] * hamming[i];

    std::vector<double> mag(nspec);
    for (std::size_t k = 0; k < nspec; ++k) {
      std::complex<double> acc(0.0, 0.0);
      for (std::size_t t = 0; t < nfft; ++t) {
        const double phase = -2.0 * kPi * double(k) * double(t) / double(nfft);
        acc += windowed[t] * std::complex<double>(std::cos(phase),
                                                  std::sin(phase));
      }
      mag[k] = std::abs(acc);
    }

    std::vector<double> logfb(std::size_t(nf), 0.0);
    for (int m = 0; m < nf; ++m) {
      const double lo = hz_of(mel_points[std::size_t(m)]);
      const double mid = hz_of(mel_points[std::size_t(m) + 1]);
      const double hi = hz_of(mel_points[std::size_t(m) + 2]);
      double acc = 0.0;
      for (std::size_t k = 0; k < nspec; ++k) {
        const double hz = double(k) * sample_rate / double(nfft);
        double w = 0.0;
        if (hz > lo && hz < mid)
          w = (hz - lo) / (mid - lo);
        else if (hz >= mid && hz < hi)
          w = (hi - hz) / (hi - mid);
        acc += w * mag[k];
      }
      logfb[std::size_t(m)] =
          acc > 0.0 ? std::max(std::log(acc), cfg.log_floor) : cfg.log_floor;
    }
    for (int j = 0; j < cfg.num_cepstra; ++j) {
      double acc = 0.0;
      for (int m = 0; m < nf; ++m)
        acc += logfb[std::size_t(m)] *
               std::cos(kPi * double(j) * (2.0 * m + 1.0) / (2.0 * nf));
      out[f][std::size_t(j)] =
          (j == 0 ? std::sqrt(1.0 / nf) : std::sqrt(2.0 / nf)) * acc;
    }
  }
  return out;
}

}  // namespace oracles
