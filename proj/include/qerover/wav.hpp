// wav.hpp -- PCM 16-bit mono RIFF/WAVE reading and writing.
#ifndef QEROVER_WAV_HPP
#define QEROVER_WAV_HPP

#include <string>
#include <vector>

namespace qerover {

struct WavData {
  int sample_rate = 16000;
  std::vector<double> samples;  // normalized to [-1, 1]

  double duration() const {
    return sample_rate > 0
               ? static_cast<double>(samples.size()) / sample_rate
               : 0.0;
  }
};

// Reads a 16-bit mono PCM WAV file. Other encodings are rejected.
WavData read_wav(const std::string& path);

// Writes samples as 16-bit mono PCM, clipping to [-1, 1].
void write_wav(const std::string& path, const WavData& wav);

}  // namespace qerover

#endif  // QEROVER_WAV_HPP
