#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sslspk/features.hpp"
#include "sslspk/tape.hpp"
#include "sslspk/tensor.hpp"

namespace sslspk {

// Frame-level network (two affine+tanh layers) followed by self-attentive
// pooling and an affine output projection. Attention scores each frame with
// a learned query over a tanh-transformed view: a = softmax_t(q . tanh(W h_t + b)).
struct EncoderParams {
  std::size_t input_dim = 40;
  std::size_t hidden = 64;     // H
  std::size_t embed_dim = 32;  // D

  Tensor frame1_w;  // H x input_dim
  Tensor frame1_b;  // 1 x H
  Tensor frame2_w;  // H x H
  Tensor frame2_b;  // 1 x H
  Tensor sap_w;     // H x H
  Tensor sap_b;     // 1 x H
  Tensor sap_q;     // H x 1
  Tensor out_w;     // D x H
  Tensor out_b;     // 1 x D

  // uniform in [-s, s] with s = sqrt(1 / fan_in) per layer
  static EncoderParams init(std::uint64_t seed, std::size_t hidden,
                            std::size_t embed_dim, std::size_t input_dim = 40);

  std::vector<std::pair<std::string, Tensor*>> named();
  std::vector<std::pair<std::string, const Tensor*>> named() const;
  std::vector<Tensor*> tensors();
};

// Parameter leaves on a tape; create once per tape and reuse for every
// utterance in the batch so gradients accumulate across the batch.
struct EncoderVars {
  Var frame1_w, frame1_b, frame2_w, frame2_b;
  Var sap_w, sap_b, sap_q;
  Var out_w, out_b;

  std::vector<Var> all() const {
    return {frame1_w, frame1_b, frame2_w, frame2_b, sap_w,
            sap_b,    sap_q,    out_w,    out_b};
  }
};

EncoderVars lift_params(GradTape& tape, const EncoderParams& p,
                        bool requires_grad);

struct EncodeResult {
  Var embedding;  // 1 x D raw (not normalized)
  Var attention;  // 1 x T, non-negative, sums to 1
};

EncodeResult encode_on_tape(GradTape& tape, const Tensor& mel,
                            const EncoderVars& v);

// rows are per-utterance raw embeddings, N x D
Var encode_batch_on_tape(GradTape& tape, const std::vector<const Tensor*>& mels,
                         const EncoderVars& v);

// value-only paths (no gradient bookkeeping kept alive)
Tensor encode_value(const Tensor& mel, const EncoderParams& p);

struct EmbeddingBatch {
  Tensor raw;         // N x D
  Tensor normalized;  // rows unit-norm
};

EmbeddingBatch encode_batch(const std::vector<MelSpectrogram>& mels,
                            const EncoderParams& p);

// checkpoint I/O for encoder parameters (kind = "encoder")
void save_encoder(const std::string& path, const EncoderParams& p);
EncoderParams load_encoder(const std::string& path);

}  // namespace sslspk
