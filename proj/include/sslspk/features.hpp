#pragma once

#include <vector>

#include "sslspk/tensor.hpp"
#include "sslspk/wav.hpp"

namespace sslspk {

struct FeatureConfig {
  int sample_rate = 16000;
  int n_mels = 40;
  double frame_length_s = 0.025;  // Hamming window length
  double frame_shift_s = 0.010;
  int nfft = 512;        // smallest power of two >= the 400-sample frame
  double fmin_hz = 0.0;  // lower mel edge
  double fmax_hz = 0.0;  // 0 = sample_rate / 2

  int frame_samples() const;
  int hop_samples() const;
  double fmax_or_default() const;
};

// T x n_mels log-mel energies after per-utterance instance normalization.
struct MelSpectrogram {
  Tensor frames;
  double frame_shift_s = 0.010;
  double frame_length_s = 0.025;
};

// Frames of frame_samples() with hop hop_samples(), each multiplied by the
// Hamming window 0.54 - 0.46 cos(2 pi n / (L-1)). T = 1 + floor((len-L)/hop).
Tensor frame_and_window(const Waveform& w, const FeatureConfig& cfg);

// Zero-padded length-nfft real FFT magnitude squared, T x (nfft/2+1).
Tensor power_spectrum(const Tensor& frames, const FeatureConfig& cfg);

// Triangular mel filters on the HTK scale mel(f) = 2595 log10(1 + f/700),
// spanning [fmin, fmax].
class MelFilterbank {
 public:
  explicit MelFilterbank(const FeatureConfig& cfg);

  // log(filter energy + 1e-10), T x n_mels
  Tensor apply_log(const Tensor& spectrum) const;
  // n_mels + 2 edge frequencies in Hz (including the outer edges)
  const std::vector<double>& edges_hz() const { return edges_hz_; }
  double weight_sum(int filter) const;

 private:
  int n_bins_;
  int n_mels_;
  std::vector<double> edges_hz_;
  std::vector<std::vector<double>> weights_;  // per filter, over FFT bins
};

// Per mel bin across time: subtract mean, divide by sqrt(var + 1e-5).
// A single frame normalizes to all zeros.
Tensor instance_normalize(const Tensor& mels);

// Full pipeline: frame/window -> power spectrum -> log-mel -> instance norm.
MelSpectrogram melspectrogram(const Waveform& w, const FeatureConfig& cfg);

double mel_of_hz(double hz);
double hz_of_mel(double mel);

}  // namespace sslspk
