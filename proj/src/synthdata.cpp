#include "sslspk/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sslspk/errors.hpp"
#include "sslspk/kernels.hpp"

namespace sslspk {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kVoiceRms = 0.15;
constexpr double kMaxVoiceHz = 4000.0;

double mean_square(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double envelope_at(const SyntheticSpeaker& spk, double hz,
                   const std::vector<double>& freq_jitter,
                   const std::vector<double>& amp_jitter) {
  double e = 0.08;
  for (std::size_t j = 0; j < spk.formants.size(); ++j) {
    const Formant& f = spk.formants[j];
    const double center = f.freq_hz * freq_jitter[j];
    const double d = (hz - center) / f.width_hz;
    e += f.amp * amp_jitter[j] * std::exp(-0.5 * d * d);
  }
  return e;
}

// Harmonic stack with piecewise-constant fundamental per segment. Phasor
// state carries across segment boundaries so phase stays continuous while the
// rotation rate steps.
std::vector<double> synthesize_voice(const SyntheticSpeaker& spk,
                                     std::size_t n_samples, int sample_rate,
                                     Rng& rng, bool segment_drift) {
  const double f0_utt =
      spk.fundamental_hz * (1.0 + rng.uniform(-0.06, 0.06));
  std::vector<double> freq_jitter(spk.formants.size());
  std::vector<double> amp_jitter(spk.formants.size());
  for (auto& j : freq_jitter) j = 1.0 + rng.uniform(-0.04, 0.04);
  for (auto& j : amp_jitter) j = rng.uniform(0.7, 1.3);

  const int n_harm = std::max(
      1, static_cast<int>(std::min(kMaxVoiceHz, 0.45 * sample_rate) /
                          (f0_utt * 1.03)));
  std::vector<double> amps(n_harm);
  std::vector<std::complex<double>> phasors(n_harm);
  for (int h = 0; h < n_harm; ++h) {
    const double hz = (h + 1) * f0_utt;
    amps[h] = envelope_at(spk, hz, freq_jitter, amp_jitter) /
              std::pow(h + 1.0, spk.rolloff);
    const double phase = rng.uniform(0.0, kTwoPi);
    phasors[h] = std::complex<double>(std::cos(phase), std::sin(phase));
  }

  // segment boundaries roughly every 0.7-1.2 s, gains interpolated linearly
  std::vector<std::size_t> bounds{0};
  while (bounds.back() < n_samples) {
    const auto step = static_cast<std::size_t>(rng.uniform(0.7, 1.2) * sample_rate);
    bounds.push_back(std::min(n_samples, bounds.back() + std::max<std::size_t>(step, 1)));
  }
  std::vector<double> gains(bounds.size());
  for (auto& g : gains) g = rng.uniform(0.6, 1.0);

  std::vector<double> out(n_samples, 0.0);
  for (std::size_t seg = 0; seg + 1 < bounds.size(); ++seg) {
    const double f0_seg =
        segment_drift ? f0_utt * (1.0 + rng.uniform(-0.02, 0.02)) : f0_utt;
    std::vector<std::complex<double>> rot(n_harm);
    for (int h = 0; h < n_harm; ++h) {
      const double w = kTwoPi * (h + 1) * f0_seg / sample_rate;
      rot[h] = std::complex<double>(std::cos(w), std::sin(w));
    }
    const std::size_t lo = bounds[seg], hi = bounds[seg + 1];
    const double g0 = gains[seg], g1 = gains[seg + 1];
    for (std::size_t n = lo; n < hi; ++n) {
      double s = 0.0;
      for (int h = 0; h < n_harm; ++h) {
        s += amps[h] * phasors[h].imag();
        phasors[h] *= rot[h];
      }
      const double frac = static_cast<double>(n - lo) / static_cast<double>(hi - lo);
      out[n] = s * (g0 + (g1 - g0) * frac);
    }
  }
  return out;
}

void scale_to_rms(std::vector<double>& v, double target_rms) {
  const double ms = mean_square(v);
  if (ms <= 0.0) return;
  const double s = target_rms / std::sqrt(ms);
  for (double& x : v) x *= s;
}

std::vector<double> make_white(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.gaussian();
  return v;
}

std::vector<double> make_music(std::size_t n, int sample_rate, Rng& rng) {
  const int voices = 4;
  std::vector<double> out(n, 0.0);
  const auto block = static_cast<std::size_t>(0.5 * sample_rate);
  for (int v = 0; v < voices; ++v) {
    const double hz = rng.uniform(100.0, 3000.0);
    const double w = kTwoPi * hz / sample_rate;
    std::complex<double> rot(std::cos(w), std::sin(w));
    const double phase = rng.uniform(0.0, kTwoPi);
    std::complex<double> p(std::cos(phase), std::sin(phase));
    double amp0 = rng.uniform(0.3, 1.0);
    for (std::size_t start = 0; start < n; start += block) {
      const double amp1 = rng.uniform(0.3, 1.0);
      const std::size_t hi = std::min(n, start + block);
      for (std::size_t i = start; i < hi; ++i) {
        const double frac =
            static_cast<double>(i - start) / static_cast<double>(hi - start);
        out[i] += (amp0 + (amp1 - amp0) * frac) * p.imag();
        p *= rot;
      }
      amp0 = amp1;
    }
  }
  return out;
}

std::vector<double> make_babble(std::size_t n, int sample_rate, Rng& rng) {
  std::vector<double> out(n, 0.0);
  for (int v = 0; v < 3; ++v) {
    SyntheticSpeaker spk = make_speaker(-1, rng);
    std::vector<double> voice =
        synthesize_voice(spk, n, sample_rate, rng, /*segment_drift=*/false);
    for (std::size_t i = 0; i < n; ++i) out[i] += voice[i];
  }
  return out;
}

std::vector<double> make_reverb_ir(double tau_samples, Rng& rng) {
  const auto len = static_cast<std::size_t>(
      std::min(3.0 * tau_samples, 4800.0));
  std::vector<double> h(std::max<std::size_t>(len, 1));
  for (std::size_t i = 0; i < h.size(); ++i) {
    h[i] = std::exp(-static_cast<double>(i) / tau_samples) * rng.gaussian();
  }
  double energy = 0.0;
  for (double x : h) energy += x * x;
  const double inv = 1.0 / std::sqrt(energy);
  for (double& x : h) x *= inv;
  return h;
}

}  // namespace

SyntheticSpeaker make_speaker(int id, Rng& rng) {
  SyntheticSpeaker s;
  s.id = id;
  s.fundamental_hz = rng.uniform(80.0, 300.0);
  s.rolloff = rng.uniform(0.3, 1.0);
  s.formants = {
      Formant{rng.uniform(300.0, 900.0), rng.uniform(0.5, 1.5),
              rng.uniform(60.0, 160.0)},
      Formant{rng.uniform(1000.0, 2200.0), rng.uniform(0.5, 1.5),
              rng.uniform(80.0, 200.0)},
      Formant{rng.uniform(2400.0, 3800.0), rng.uniform(0.3, 1.0),
              rng.uniform(100.0, 260.0)},
  };
  return s;
}

Waveform synthesize_utterance(const SyntheticSpeaker& spk, double seconds,
                              int sample_rate, std::uint64_t utt_seed) {
  if (seconds <= 0.0) throw ConfigError("synthdata: non-positive duration");
  Rng rng(utt_seed);
  const auto n = static_cast<std::size_t>(seconds * sample_rate);
  std::vector<double> voice =
      synthesize_voice(spk, n, sample_rate, rng, /*segment_drift=*/true);
  scale_to_rms(voice, kVoiceRms);

  // noise floor 25-35 dB below the voice
  const double snr_db = rng.uniform(25.0, 35.0);
  const double noise_rms = kVoiceRms / std::pow(10.0, snr_db / 20.0);
  for (double& x : voice) {
    x += noise_rms * rng.gaussian();
    x = std::clamp(x, -1.0, 1.0);
  }
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples = std::move(voice);
  return w;
}

std::vector<Utterance> generate_corpus(int n_speakers,
                                       const std::vector<int>& utts_per_speaker,
                                       double utt_seconds, int sample_rate,
                                       std::uint64_t seed) {
  if (n_speakers < 2) throw ConfigError("synthdata: need at least 2 speakers");
  if (utts_per_speaker.empty() ||
      (utts_per_speaker.size() != 1 &&
       utts_per_speaker.size() != static_cast<std::size_t>(n_speakers))) {
    throw ConfigError(
        "synthdata: utts_per_speaker must have one entry or one per speaker");
  }
  std::vector<SyntheticSpeaker> speakers;
  speakers.reserve(n_speakers);
  for (int i = 0; i < n_speakers; ++i) {
    Rng rng(derive_seed(seed, "speaker", static_cast<std::uint64_t>(i)));
    speakers.push_back(make_speaker(i, rng));
  }

  std::vector<Utterance> corpus;
  for (int s = 0; s < n_speakers; ++s) {
    const int count =
        utts_per_speaker.size() == 1 ? utts_per_speaker[0] : utts_per_speaker[s];
    for (int u = 0; u < count; ++u) {
      Utterance utt;
      utt.utterance_id = static_cast<std::int64_t>(corpus.size());
      utt.speaker_id = s;
      corpus.push_back(std::move(utt));
    }
  }

#pragma omp parallel for schedule(dynamic) if (corpus.size() > 4)
  for (long long i = 0; i < static_cast<long long>(corpus.size()); ++i) {
    Utterance& utt = corpus[static_cast<std::size_t>(i)];
    const std::uint64_t utt_seed =
        derive_seed(seed, "utt", static_cast<std::uint64_t>(utt.utterance_id));
    utt.waveform = synthesize_utterance(speakers[utt.speaker_id], utt_seconds,
                                        sample_rate, utt_seed);
  }
  return corpus;
}

std::pair<Waveform, Waveform> extract_two_frames(const Waveform& w,
                                                 double frame_seconds,
                                                 Rng& rng) {
  const auto fl = static_cast<std::size_t>(
      std::lround(frame_seconds * w.sample_rate));
  if (fl == 0) throw ConfigError("extract_two_frames: zero frame length");
  if (w.samples.size() < 2 * fl) {
    throw DataError("extract_two_frames: utterance has " +
                    std::to_string(w.samples.size()) + " samples, need " +
                    std::to_string(2 * fl) + " for two non-overlapping frames");
  }
  // uniform over ordered non-overlapping placements: draw two starts in the
  // gap-removed space, sort, then shift the later one by one frame length
  const std::size_t slack = w.samples.size() - 2 * fl;
  std::size_t x1 = rng.uniform_index(slack + 1);
  std::size_t x2 = rng.uniform_index(slack + 1);
  std::size_t s1 = std::min(x1, x2);
  std::size_t s2 = std::max(x1, x2) + fl;
  const bool swap = rng.uniform() < 0.5;
  if (swap) std::swap(s1, s2);

  auto cut = [&](std::size_t start) {
    Waveform out;
    out.sample_rate = w.sample_rate;
    out.samples.assign(w.samples.begin() + static_cast<std::ptrdiff_t>(start),
                       w.samples.begin() + static_cast<std::ptrdiff_t>(start + fl));
    return out;
  };
  return {cut(s1), cut(s2)};
}

AugmentPlan draw_augment_plan(const AugmentPolicy& policy, Rng& rng) {
  auto check_range = [](const SnrRange& r, const char* name) {
    if (r.hi_db < r.lo_db) {
      throw ConfigError(std::string("augment: empty SNR range for ") + name);
    }
  };
  check_range(policy.snr_speech_db, "speech");
  check_range(policy.snr_music_db, "music");
  check_range(policy.snr_noise_db, "noise");
  if (policy.noise_prob < 0 || policy.noise_prob > 1 || policy.reverb_prob < 0 ||
      policy.reverb_prob > 1) {
    throw ConfigError("augment: probabilities must lie in [0, 1]");
  }

  AugmentPlan plan;
  plan.add_noise = rng.uniform() < policy.noise_prob;
  const double pick = rng.uniform();
  if (pick < 1.0 / 3.0) {
    plan.kind = NoiseKind::White;
    plan.snr_db = rng.uniform(policy.snr_noise_db.lo_db, policy.snr_noise_db.hi_db);
  } else if (pick < 2.0 / 3.0) {
    plan.kind = NoiseKind::Music;
    plan.snr_db = rng.uniform(policy.snr_music_db.lo_db, policy.snr_music_db.hi_db);
  } else {
    plan.kind = NoiseKind::Babble;
    plan.snr_db = rng.uniform(policy.snr_speech_db.lo_db, policy.snr_speech_db.hi_db);
  }
  plan.reverb = rng.uniform() < policy.reverb_prob;
  plan.reverb_tau_samples = rng.uniform(200.0, 1600.0);
  plan.seed = rng.raw();
  return plan;
}

AugmentParts apply_augment_plan(const Waveform& w, const AugmentPlan& plan) {
  Rng rng(plan.seed);
  const std::size_t n = w.samples.size();
  AugmentParts parts;
  parts.output.sample_rate = w.sample_rate;
  parts.output.samples = w.samples;
  parts.noise_part.assign(n, 0.0);

  if (plan.add_noise && n > 0) {
    std::vector<double> noise;
    switch (plan.kind) {
      case NoiseKind::White:
        noise = make_white(n, rng);
        break;
      case NoiseKind::Music:
        noise = make_music(n, w.sample_rate, rng);
        break;
      case NoiseKind::Babble:
        noise = make_babble(n, w.sample_rate, rng);
        break;
    }
    const double p_sig = mean_square(w.samples);
    const double p_noise = mean_square(noise);
    if (p_sig > 0.0 && p_noise > 0.0) {
      const double scale =
          std::sqrt(p_sig / (p_noise * std::pow(10.0, plan.snr_db / 10.0)));
      for (std::size_t i = 0; i < n; ++i) {
        parts.noise_part[i] = scale * noise[i];
        parts.output.samples[i] += parts.noise_part[i];
      }
      parts.measured_snr_db =
          10.0 * std::log10(p_sig / mean_square(parts.noise_part));
    }
  }

  if (plan.reverb && n > 0) {
    const std::vector<double> ir = make_reverb_ir(plan.reverb_tau_samples, rng);
    std::vector<double> wet = kernels::fft_convolve(parts.output.samples, ir);
    wet.resize(n);
    parts.output.samples = std::move(wet);
  }

  for (double& x : parts.output.samples) x = std::clamp(x, -1.0, 1.0);
  return parts;
}

Waveform augment(const Waveform& w, const AugmentPolicy& policy, Rng& rng) {
  return apply_augment_plan(w, draw_augment_plan(policy, rng)).output;
}

void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries) {
  std::ofstream f(path);
  if (!f) throw DataError("manifest: cannot write " + path);
  for (const auto& e : entries) {
    f << e.utt_id << ' ' << e.speaker_id << ' ' << e.path << ' ';
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", e.duration_s);
    f << buf << '\n';
  }
  if (!f) throw DataError("manifest: write failed for " + path);
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("manifest: cannot open " + path);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    ManifestEntry e;
    if (!(ss >> e.utt_id >> e.speaker_id >> e.path >> e.duration_s)) {
      throw DataError("manifest: malformed line " + std::to_string(line_no) +
                      " in " + path);
    }
    std::filesystem::path p(e.path);
    if (p.is_relative()) e.path = (base / p).string();
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace sslspk
