// dsp.hpp -- FFT, framing, MFCC front end, autocorrelation pitch tracking.
#ifndef QEROVER_DSP_HPP
#define QEROVER_DSP_HPP

#include <complex>
#include <span>
#include <vector>

namespace qerover {

struct DspConfig {
  double preemphasis = 0.97;
  double window_ms = 20.0;
  double hop_ms = 10.0;
  int num_filters = 26;
  int num_cepstra = 13;        // includes coefficient 0
  double log_floor = -50.0;    // floor of log filterbank energies
  double pitch_window_ms = 40.0;
  double pitch_min_hz = 60.0;
  double pitch_max_hz = 400.0;
  double voicing_threshold = 0.45;  // on the normalized autocorrelation
};

// In-place radix-2 FFT; size must be a power of two.
void fft(std::vector<std::complex<double>>& data);

// 1 + floor((n - win) / hop), or 0 when n < win.
std::size_t frame_count(std::size_t n, std::size_t win, std::size_t hop);

// Mean squared amplitude of each frame of the raw waveform.
std::vector<double> frame_energies(std::span<const double> samples,
                                   int sample_rate, const DspConfig& cfg = {});

// MFCC matrix, one row of num_cepstra coefficients per frame: pre-emphasis,
// Hamming window, magnitude spectrum, triangular mel filterbank spanning
// 0..Nyquist, floored log, orthonormal DCT-II. Requires at least one full
// window of samples.
std::vector<std::vector<double>> mfcc(std::span<const double> samples,
                                      int sample_rate,
                                      const DspConfig& cfg = {});

// Per-frame fundamental frequency in Hz, 0 for unvoiced frames. Peak
// search on the normalized autocorrelation within the configured range.
std::vector<double> pitch_track(std::span<const double> samples,
                                int sample_rate, const DspConfig& cfg = {});

}  // namespace qerover

#endif  // QEROVER_DSP_HPP
