#include "sslspk/features.hpp"

#include <cmath>
#include <string>

#include "sslspk/errors.hpp"
#include "sslspk/kernels.hpp"

namespace sslspk {

namespace {
constexpr double kLogFloor = 1e-10;
constexpr double kNormEps = 1e-5;
}  // namespace

int FeatureConfig::frame_samples() const {
  return static_cast<int>(std::lround(frame_length_s * sample_rate));
}

int FeatureConfig::hop_samples() const {
  return static_cast<int>(std::lround(frame_shift_s * sample_rate));
}

double FeatureConfig::fmax_or_default() const {
  return fmax_hz > 0.0 ? fmax_hz : sample_rate / 2.0;
}

double mel_of_hz(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double hz_of_mel(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

Tensor frame_and_window(const Waveform& w, const FeatureConfig& cfg) {
  if (w.samples.empty()) throw DataError("features: empty waveform");
  if (w.sample_rate <= 0) throw DataError("features: non-positive sample rate");
  const int len = static_cast<int>(w.samples.size());
  const int fl = cfg.frame_samples();
  const int hop = cfg.hop_samples();
  if (len < fl) {
    throw DataError("features: waveform too short, need at least " +
                    std::to_string(fl) + " samples (" +
                    std::to_string(cfg.frame_length_s * 1000) + " ms at " +
                    std::to_string(cfg.sample_rate) + " Hz), got " +
                    std::to_string(len));
  }
  const int t = 1 + (len - fl) / hop;

  std::vector<double> window(fl);
  for (int n = 0; n < fl; ++n) {
    window[n] = 0.54 - 0.46 * std::cos(2.0 * M_PI * n / (fl - 1));
  }

  Tensor frames({static_cast<std::size_t>(t), static_cast<std::size_t>(fl)});
  for (int i = 0; i < t; ++i) {
    const double* src = w.samples.data() + static_cast<std::size_t>(i) * hop;
    double* dst = frames.data() + static_cast<std::size_t>(i) * fl;
    for (int n = 0; n < fl; ++n) dst[n] = src[n] * window[n];
  }
  return frames;
}

Tensor power_spectrum(const Tensor& frames, const FeatureConfig& cfg) {
  const std::size_t t = frames.rows();
  const std::size_t fl = frames.cols();
  const auto nfft = static_cast<std::size_t>(cfg.nfft);
  if (fl > nfft) {
    throw ShapeError("features: frame length " + std::to_string(fl) +
                     " exceeds nfft " + std::to_string(nfft));
  }
  Tensor spec({t, nfft / 2 + 1});
  kernels::power_spectra(frames.data(), t, fl, nfft, spec.data());
  return spec;
}

MelFilterbank::MelFilterbank(const FeatureConfig& cfg)
    : n_bins_(cfg.nfft / 2 + 1), n_mels_(cfg.n_mels) {
  const double fmin = cfg.fmin_hz;
  const double fmax = cfg.fmax_or_default();
  if (!(fmin >= 0.0) || !(fmax > fmin) || fmax > cfg.sample_rate / 2.0 + 1e-9) {
    throw ConfigError("features: invalid mel range [" + std::to_string(fmin) +
                      ", " + std::to_string(fmax) + "] Hz");
  }
  const double mel_lo = mel_of_hz(fmin);
  const double mel_hi = mel_of_hz(fmax);
  edges_hz_.resize(n_mels_ + 2);
  for (int i = 0; i < n_mels_ + 2; ++i) {
    edges_hz_[i] = hz_of_mel(mel_lo + (mel_hi - mel_lo) * i / (n_mels_ + 1));
  }

  const double bin_hz = static_cast<double>(cfg.sample_rate) / cfg.nfft;
  weights_.assign(n_mels_, std::vector<double>(n_bins_, 0.0));
  for (int m = 0; m < n_mels_; ++m) {
    const double lo = edges_hz_[m], mid = edges_hz_[m + 1], hi = edges_hz_[m + 2];
    for (int b = 0; b < n_bins_; ++b) {
      const double f = b * bin_hz;
      if (f <= lo || f >= hi) continue;
      weights_[m][b] = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
    }
  }
}

double MelFilterbank::weight_sum(int filter) const {
  double s = 0.0;
  for (double w : weights_[filter]) s += w;
  return s;
}

Tensor MelFilterbank::apply_log(const Tensor& spectrum) const {
  if (spectrum.cols() != static_cast<std::size_t>(n_bins_)) {
    throw ShapeError("features: spectrum has " +
                     std::to_string(spectrum.cols()) + " bins, filterbank " +
                     std::to_string(n_bins_));
  }
  const std::size_t t = spectrum.rows();
  Tensor out({t, static_cast<std::size_t>(n_mels_)});
#pragma omp parallel for schedule(static) if (t > 16)
  for (long long i = 0; i < static_cast<long long>(t); ++i) {
    const double* si = spectrum.data() + static_cast<std::size_t>(i) * n_bins_;
    double* oi = out.data() + static_cast<std::size_t>(i) * n_mels_;
    for (int m = 0; m < n_mels_; ++m) {
      const auto& w = weights_[m];
      double e = 0.0;
      for (int b = 0; b < n_bins_; ++b) e += w[b] * si[b];
      oi[m] = std::log(e + kLogFloor);
    }
  }
  return out;
}

Tensor instance_normalize(const Tensor& mels) {
  const std::size_t t = mels.rows();
  const std::size_t d = mels.cols();
  if (t < 1) throw ShapeError("features: instance_normalize needs T >= 1");
  Tensor out(mels.shape());
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < t; ++i) mean += mels.data()[i * d + j];
    mean /= static_cast<double>(t);
    double var = 0.0;
    for (std::size_t i = 0; i < t; ++i) {
      const double c = mels.data()[i * d + j] - mean;
      var += c * c;
    }
    var /= static_cast<double>(t);
    const double inv = 1.0 / std::sqrt(var + kNormEps);
    for (std::size_t i = 0; i < t; ++i) {
      out.data()[i * d + j] = (mels.data()[i * d + j] - mean) * inv;
    }
  }
  return out;
}

MelSpectrogram melspectrogram(const Waveform& w, const FeatureConfig& cfg) {
  const Tensor framed = frame_and_window(w, cfg);
  const Tensor spec = power_spectrum(framed, cfg);
  const MelFilterbank fb(cfg);
  const Tensor logmel = fb.apply_log(spec);
  return MelSpectrogram{instance_normalize(logmel), cfg.frame_shift_s,
                        cfg.frame_length_s};
}

}  // namespace sslspk
