#include "qerover/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qerover/common.hpp"

namespace qerover {
namespace {

constexpr double kPi = std::numbers::pi;

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

double mel_of(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double hz_of(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

std::size_t win_samples(int rate, double ms) {
  return std::size_t(std::lround(rate * ms / 1000.0));
}

}  // namespace

void fft(std::vector<std::complex<double>>& data) {
  const std::size_t n = data.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw ValidationError("fft size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / double(len);
    const std::complex<double> wn(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = data[i + k];
        const auto v = data[i + k + len / 2] * w;
        data[i + k] = u + v;
        data[i + k + len / 2] = u - v;
        w *= wn;
      }
    }
  }
}

std::size_t frame_count(std::size_t n, std::size_t win, std::size_t hop) {
  if (n < win || win == 0 || hop == 0) return 0;
  return 1 + (n - win) / hop;
}

std::vector<double> frame_energies(std::span<const double> samples,
                                   int sample_rate, const DspConfig& cfg) {
  if (sample_rate <= 0) throw ValidationError("sample rate must be positive");
  const std::size_t win = win_samples(sample_rate, cfg.window_ms);
  const std::size_t hop = win_samples(sample_rate, cfg.hop_ms);
  const std::size_t frames = frame_count(samples.size(), win, hop);
  std::vector<double> out(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t i = 0; i < win; ++i) {
      const double s = samples[f * hop + i];
      acc += s * s;
    }
    out[f] = acc / double(win);
  }
  return out;
}

std::vector<std::vector<double>> mfcc(std::span<const double> samples,
                                      int sample_rate, const DspConfig& cfg) {
  if (sample_rate <= 0) throw ValidationError("sample rate must be positive");
  const std::size_t win = win_samples(sample_rate, cfg.window_ms);
  const std::size_t hop = win_samples(sample_rate, cfg.hop_ms);
  const std::size_t frames = frame_count(samples.size(), win, hop);
  if (frames == 0)
    throw ValidationError("mfcc needs at least one full window of samples");

  // Pre-emphasis over the whole signal.
  std::vector<double> pre(samples.size());
  if (!samples.empty()) pre[0] = samples[0];
  for (std::size_t i = 1; i < samples.size(); ++i)
    pre[i] = samples[i] - cfg.preemphasis * samples[i - 1];

  std::vector<double> hamming(win);
  for (std::size_t i = 0; i < win; ++i)
    hamming[i] =
        0.54 - 0.46 * std::cos(2.0 * kPi * double(i) / double(win - 1));

  const std::size_t nfft = next_pow2(win);
  const std::size_t nspec = nfft / 2 + 1;

  // Triangular mel filters: num_filters + 2 points evenly spaced in mel
  // between 0 and Nyquist, mapped onto FFT bin frequencies.
  const double nyquist = sample_rate / 2.0;
  const int nf = cfg.num_filters;
  std::vector<double> mel_points(std::size_t(nf) + 2);
  for (int i = 0; i < nf + 2; ++i)
    mel_points[std::size_t(i)] = mel_of(nyquist) * double(i) / double(nf + 1);
  std::vector<std::vector<double>> filters(
      std::size_t(nf), std::vector<double>(nspec, 0.0));
  for (int m = 0; m < nf; ++m) {
    const double lo = hz_of(mel_points[std::size_t(m)]);
    const double mid = hz_of(mel_points[std::size_t(m) + 1]);
    const double hi = hz_of(mel_points[std::size_t(m) + 2]);
    for (std::size_t k = 0; k < nspec; ++k) {
      const double f = double(k) * sample_rate / double(nfft);
      if (f > lo && f < mid)
        filters[std::size_t(m)][k] = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi)
        filters[std::size_t(m)][k] = (hi - f) / (hi - mid);
    }
  }

  std::vector<std::vector<double>> out(
      frames, std::vector<double>(std::size_t(cfg.num_cepstra), 0.0));
  std::vector<std::complex<double>> buf(nfft);
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t i = 0; i < win; ++i)
      buf[i] = pre[f * hop + i] * hamming[i];
    std::fill(buf.begin() + std::ptrdiff_t(win), buf.end(),
              std::complex<double>(0.0, 0.0));
    fft(buf);

    std::vector<double> logfb(std::size_t(nf), 0.0);
    for (int m = 0; m < nf; ++m) {
      double acc = 0.0;
      for (std::size_t k = 0; k < nspec; ++k)
        acc += filters[std::size_t(m)][k] * std::abs(buf[k]);
      logfb[std::size_t(m)] =
          acc > 0.0 ? std::max(std::log(acc), cfg.log_floor) : cfg.log_floor;
    }
    for (int j = 0; j < cfg.num_cepstra; ++j) {
      double acc = 0.0;
      for (int m = 0; m < nf; ++m)
        acc += logfb[std::size_t(m)] *
               std::cos(kPi * double(j) * (2.0 * m + 1.0) / (2.0 * nf));
      const double scale =
          j == 0 ? std::sqrt(1.0 / nf) : std::sqrt(2.0 / nf);
      out[f][std::size_t(j)] = scale * acc;
    }
  }
  return out;
}

std::vector<double> pitch_track(std::span<const double> samples,
                                int sample_rate, const DspConfig& cfg) {
  if (sample_rate <= 0) throw ValidationError("sample rate must be positive");
  const std::size_t win = win_samples(sample_rate, cfg.pitch_window_ms);
  const std::size_t hop = win_samples(sample_rate, cfg.hop_ms);
  const std::size_t frames = frame_count(samples.size(), win, hop);
  const std::size_t lag_min = std::size_t(
      std::max(1L, std::lround(sample_rate / cfg.pitch_max_hz)));
  const std::size_t lag_max =
      std::size_t(std::lround(sample_rate / cfg.pitch_min_hz));

  std::vector<double> out(frames, 0.0);
  if (lag_max + 1 >= win) return out;  // window too short for the range
  for (std::size_t f = 0; f < frames; ++f) {
    const double* x = samples.data() + f * hop;
    double e0 = 0.0;
    for (std::size_t i = 0; i < win; ++i) e0 += x[i] * x[i];
    if (e0 <= 0.0) continue;

    double best_r = 0.0;
    std::vector<double> rvals(lag_max + 1, 0.0);
    for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
      double num = 0.0, ea = 0.0, eb = 0.0;
      for (std::size_t i = 0; i + lag < win; ++i) {
        num += x[i] * x[i + lag];
        ea += x[i] * x[i];
        eb += x[i + lag] * x[i + lag];
      }
      const double den = std::sqrt(ea * eb);
      const double r = den > 0.0 ? num / den : 0.0;
      rvals[lag] = r;
      if (r > best_r) best_r = r;
    }
    if (best_r < cfg.voicing_threshold) continue;

    // Shortest-lag local maximum near the global peak; taking the global
    // maximum itself halves pure tones down an octave because the
    // autocorrelation repeats at every multiple of the period.
    const double need = std::max(cfg.voicing_threshold, 0.9 * best_r);
    std::size_t best_lag = 0;
    for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
      const double left = lag > lag_min ? rvals[lag - 1] : -1.0;
      const double right = lag < lag_max ? rvals[lag + 1] : -1.0;
      if (rvals[lag] >= need && rvals[lag] >= left && rvals[lag] >= right) {
        best_lag = lag;
        break;
      }
    }
    if (best_lag == 0) continue;

    // Parabolic refinement around the peak.
    double lag = double(best_lag);
    if (best_lag > lag_min && best_lag < lag_max) {
      const double a = rvals[best_lag - 1];
      const double b = rvals[best_lag];
      const double c = rvals[best_lag + 1];
      const double den = a - 2.0 * b + c;
      if (den < 0.0) lag += 0.5 * (a - c) / den;
    }
    out[f] = sample_rate / lag;
  }
  return out;
}

}  // namespace qerover
