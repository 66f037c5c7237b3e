#pragma once

#include <vector>

#include "sslspk/tape.hpp"
#include "sslspk/tensor.hpp"

namespace sslspk {

// Temperature and additive margin for the contrastive losses. tau defaults to
// 1/30, matching the usual AM-softmax scale s = 30; the margin is subtracted
// from the positive pair's cosine only, wherever the positive term appears.
struct LossConfig {
  double tau = 1.0 / 30.0;
  double margin = 0.0;

  void validate() const;
};

// exp((cos - m) / tau) and exp(cos / tau) on unit vectors. Inputs whose norm
// deviates from 1 by more than 1e-6 violate the contract.
double sim_pos(const std::vector<double>& u, const std::vector<double>& v,
               const LossConfig& cfg);
double sim_neg(const std::vector<double>& u, const std::vector<double>& v,
               const LossConfig& cfg);

// Contrastive loss over N positive pairs (z_i, zp_i); the other N-1 rows of
// zp serve as negatives for anchor i. Rows must be unit-norm. Each anchor's
// term is computed in log-sum-exp form, so values stay finite and strictly
// ordered in the margin even at tau = 1/30.
Var nt_xent(GradTape& tape, Var z, Var zp, const LossConfig& cfg);

// All 2N rows of [z; zp] act as anchors; anchor i pairs with the other view
// of the same utterance and sees the remaining 2(N-1) rows as negatives.
Var nt_xent_symmetric(GradTape& tape, Var z, Var zp, const LossConfig& cfg);

// N positive pairs scored against K queue rows. The queue is a plain tensor:
// no gradient ever flows to it.
Var nt_xent_queue(GradTape& tape, Var z, Var zp, const Tensor& queue,
                  const LossConfig& cfg);

// contract check shared by the losses: every row unit-norm within 1e-6
void check_unit_rows(const Tensor& t, const char* what);

}  // namespace sslspk
