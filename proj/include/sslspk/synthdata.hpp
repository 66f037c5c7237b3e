#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sslspk/rng.hpp"
#include "sslspk/wav.hpp"

namespace sslspk {

struct Formant {
  double freq_hz;
  double amp;
  double width_hz;
};

// A speaker is a harmonic-stack voice: a fundamental plus a spectral envelope
// shaped by a few resonances. Utterances jitter the fundamental and envelope
// so that same-speaker material varies while staying closer than material
// from a different speaker.
struct SyntheticSpeaker {
  int id = -1;
  double fundamental_hz = 0.0;  // [80, 300]
  double rolloff = 0.7;         // harmonic amplitude decay exponent
  std::vector<Formant> formants;
};

struct Utterance {
  std::int64_t utterance_id = -1;
  int speaker_id = -1;
  Waveform waveform;
};

struct SnrRange {
  double lo_db;
  double hi_db;
};

struct AugmentPolicy {
  SnrRange snr_speech_db{13.0, 20.0};
  SnrRange snr_music_db{5.0, 15.0};
  SnrRange snr_noise_db{0.0, 15.0};
  double noise_prob = 1.0;   // apply one noise category with this probability
  double reverb_prob = 0.5;  // independent coin for reverberation
};

enum class NoiseKind { White, Music, Babble };

// A fully drawn augmentation: applying it is deterministic, so plans can be
// drawn serially and materialized in parallel.
struct AugmentPlan {
  bool add_noise = true;
  NoiseKind kind = NoiseKind::White;
  double snr_db = 10.0;
  bool reverb = false;
  double reverb_tau_samples = 800.0;
  std::uint64_t seed = 0;
};

struct AugmentParts {
  Waveform output;                  // mixed (+ reverb), clipped to [-1, 1]
  std::vector<double> noise_part;   // scaled noise component, pre-reverb
  double measured_snr_db = 0.0;     // recomputed from the two components
};

SyntheticSpeaker make_speaker(int id, Rng& rng);

// Deterministic in (speaker, utt_seed). Harmonic stack with per-utterance
// jitter, piecewise fundamental drift, and a low-level noise floor.
Waveform synthesize_utterance(const SyntheticSpeaker& spk, double seconds,
                              int sample_rate, std::uint64_t utt_seed);

// Per-speaker utterance counts come from `utts_per_speaker` (size 1 means the
// same count for every speaker). Utterance ids are sequential across the
// corpus; generation is parallel-safe because each utterance derives its own
// seed from (seed, utterance_id).
std::vector<Utterance> generate_corpus(int n_speakers,
                                       const std::vector<int>& utts_per_speaker,
                                       double utt_seconds, int sample_rate,
                                       std::uint64_t seed);

// Two segments with disjoint sample ranges, uniform over valid placements.
// Which segment becomes the first view is decided by a coin.
std::pair<Waveform, Waveform> extract_two_frames(const Waveform& w,
                                                 double frame_seconds,
                                                 Rng& rng);

AugmentPlan draw_augment_plan(const AugmentPolicy& policy, Rng& rng);
AugmentParts apply_augment_plan(const Waveform& w, const AugmentPlan& plan);
Waveform augment(const Waveform& w, const AugmentPolicy& policy, Rng& rng);

// ---- manifest: one line per utterance, `utt_id speaker_id path duration` ----
struct ManifestEntry {
  std::int64_t utt_id;
  int speaker_id;
  std::string path;  // as written (relative paths resolve against the manifest)
  double duration_s;
};

void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries);
// resolves relative wav paths against the manifest's directory
std::vector<ManifestEntry> read_manifest(const std::string& path);

}  // namespace sslspk
