#pragma once

#include <string>
#include <vector>

namespace sslspk {

struct Waveform {
  std::vector<double> samples;  // nominal range [-1, 1]
  int sample_rate = 16000;

  double seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// 16-bit PCM mono RIFF only; stereo or compressed files are rejected with a
// DataError naming the offending property.
Waveform read_wav(const std::string& path);
void write_wav(const std::string& path, const Waveform& w);

}  // namespace sslspk
