#include "sslspk/encoder.hpp"

#include <cmath>

#include "sslspk/checkpoint.hpp"
#include "sslspk/errors.hpp"
#include "sslspk/rng.hpp"

namespace sslspk {

namespace {
Tensor uniform_init(Rng& rng, std::size_t rows, std::size_t cols,
                    std::size_t fan_in) {
  const double s = std::sqrt(1.0 / static_cast<double>(fan_in));
  Tensor t({rows, cols});
  for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-s, s);
  return t;
}
}  // namespace

EncoderParams EncoderParams::init(std::uint64_t seed, std::size_t hidden,
                                  std::size_t embed_dim, std::size_t input_dim) {
  if (hidden < 1 || embed_dim < 1 || input_dim < 1) {
    throw ConfigError("encoder: sizes must be >= 1");
  }
  Rng rng(derive_seed(seed, "encoder-init"));
  EncoderParams p;
  p.input_dim = input_dim;
  p.hidden = hidden;
  p.embed_dim = embed_dim;
  p.frame1_w = uniform_init(rng, hidden, input_dim, input_dim);
  p.frame1_b = uniform_init(rng, 1, hidden, input_dim);
  p.frame2_w = uniform_init(rng, hidden, hidden, hidden);
  p.frame2_b = uniform_init(rng, 1, hidden, hidden);
  p.sap_w = uniform_init(rng, hidden, hidden, hidden);
  p.sap_b = uniform_init(rng, 1, hidden, hidden);
  p.sap_q = uniform_init(rng, hidden, 1, hidden);
  p.out_w = uniform_init(rng, embed_dim, hidden, hidden);
  p.out_b = uniform_init(rng, 1, embed_dim, hidden);
  return p;
}

std::vector<std::pair<std::string, Tensor*>> EncoderParams::named() {
  return {{"frame1.weight", &frame1_w}, {"frame1.bias", &frame1_b},
          {"frame2.weight", &frame2_w}, {"frame2.bias", &frame2_b},
          {"sap.weight", &sap_w},       {"sap.bias", &sap_b},
          {"sap.query", &sap_q},        {"out.weight", &out_w},
          {"out.bias", &out_b}};
}

std::vector<std::pair<std::string, const Tensor*>> EncoderParams::named() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (auto& [name, t] : const_cast<EncoderParams*>(this)->named()) {
    out.emplace_back(name, t);
  }
  return out;
}

std::vector<Tensor*> EncoderParams::tensors() {
  std::vector<Tensor*> out;
  for (auto& [name, t] : named()) out.push_back(t);
  return out;
}

EncoderVars lift_params(GradTape& tape, const EncoderParams& p,
                        bool requires_grad) {
  auto lift = [&](const Tensor& t) {
    Tensor copy = t;
    copy.set_requires_grad(requires_grad);
    return tape.leaf(std::move(copy));
  };
  EncoderVars v;
  v.frame1_w = lift(p.frame1_w);
  v.frame1_b = lift(p.frame1_b);
  v.frame2_w = lift(p.frame2_w);
  v.frame2_b = lift(p.frame2_b);
  v.sap_w = lift(p.sap_w);
  v.sap_b = lift(p.sap_b);
  v.sap_q = lift(p.sap_q);
  v.out_w = lift(p.out_w);
  v.out_b = lift(p.out_b);
  return v;
}

EncodeResult encode_on_tape(GradTape& tape, const Tensor& mel,
                            const EncoderVars& v) {
  if (!mel.is_matrix() || mel.rows() < 1) {
    throw ShapeError("encoder: mel input must be a T x input_dim matrix, T >= 1");
  }
  Var x = tape.constant(mel);  // T x input_dim
  Var h1 = tape.tanh(tape.add(tape.matmul(x, tape.transpose(v.frame1_w)),
                              v.frame1_b));  // T x H
  Var h = tape.tanh(tape.add(tape.matmul(h1, tape.transpose(v.frame2_w)),
                             v.frame2_b));  // T x H
  Var u = tape.tanh(tape.add(tape.matmul(h, tape.transpose(v.sap_w)),
                             v.sap_b));         // T x H
  Var scores = tape.matmul(u, v.sap_q);         // T x 1
  Var attention = tape.softmax_rows(tape.transpose(scores));  // 1 x T
  Var pooled = tape.matmul(attention, h);       // 1 x H
  Var out = tape.add(tape.matmul(pooled, tape.transpose(v.out_w)), v.out_b);
  return {out, attention};
}

Var encode_batch_on_tape(GradTape& tape, const std::vector<const Tensor*>& mels,
                         const EncoderVars& v) {
  if (mels.empty()) throw ShapeError("encoder: empty batch");
  Var rows = encode_on_tape(tape, *mels[0], v).embedding;
  for (std::size_t i = 1; i < mels.size(); ++i) {
    try {
      rows = tape.concat_rows(rows, encode_on_tape(tape, *mels[i], v).embedding);
    } catch (const std::exception& e) {
      throw ShapeError("encoder: batch item " + std::to_string(i) + ": " +
                       e.what());
    }
  }
  return rows;
}

Tensor encode_value(const Tensor& mel, const EncoderParams& p) {
  GradTape tape;
  EncoderVars v = lift_params(tape, p, /*requires_grad=*/false);
  return tape.value(encode_on_tape(tape, mel, v).embedding);
}

EmbeddingBatch encode_batch(const std::vector<MelSpectrogram>& mels,
                            const EncoderParams& p) {
  if (mels.empty()) throw ShapeError("encoder: empty batch");
  Tensor raw({mels.size(), p.embed_dim});
  for (std::size_t i = 0; i < mels.size(); ++i) {
    Tensor e;
    try {
      e = encode_value(mels[i].frames, p);
    } catch (const std::exception& ex) {
      throw ShapeError("encoder: batch item " + std::to_string(i) + ": " +
                       ex.what());
    }
    for (std::size_t j = 0; j < p.embed_dim; ++j) raw.at(i, j) = e.at(0, j);
  }
  GradTape tape;
  Tensor normalized = tape.value(tape.l2_normalize_rows(tape.constant(raw)));
  return {std::move(raw), std::move(normalized)};
}

void save_encoder(const std::string& path, const EncoderParams& p) {
  Checkpoint ckpt;
  ckpt.meta["kind"] = "encoder";
  ckpt.meta["input_dim"] = std::to_string(p.input_dim);
  ckpt.meta["hidden"] = std::to_string(p.hidden);
  ckpt.meta["embed_dim"] = std::to_string(p.embed_dim);
  // scoring convention recorded for auditability
  ckpt.meta["sap_scoring"] = "softmax_t(query . tanh(W h_t + b))";
  for (const auto& [name, t] : p.named()) ckpt.tensors.emplace_back(name, *t);
  save_checkpoint(path, ckpt);
}

EncoderParams load_encoder(const std::string& path) {
  const Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.meta.count("kind") && ckpt.meta.at("kind") != "encoder") {
    throw DataError("encoder: " + path + " is a '" + ckpt.meta.at("kind") +
                    "' checkpoint");
  }
  EncoderParams p;
  p.input_dim = std::stoul(ckpt.meta.at("input_dim"));
  p.hidden = std::stoul(ckpt.meta.at("hidden"));
  p.embed_dim = std::stoul(ckpt.meta.at("embed_dim"));
  for (auto& [name, t] : p.named()) {
    *t = ckpt.tensor(name);
  }
  // shape sanity
  if (p.frame1_w.rows() != p.hidden || p.frame1_w.cols() != p.input_dim ||
      p.out_w.rows() != p.embed_dim || p.out_w.cols() != p.hidden) {
    throw DataError("encoder: " + path + " has inconsistent tensor shapes");
  }
  return p;
}

}  // namespace sslspk
