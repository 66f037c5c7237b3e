#pragma once

#include <string>
#include <vector>

#include "sslspk/tensor.hpp"

namespace sslspk {

// Adam with bias correction. Moment tensors shape-match their parameters and
// the step counter increases by exactly one per update. weight_decay defaults
// to 0 (plain L2 term added to the gradient when nonzero).
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  long long step = 0;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;

  static AdamState init_like(const std::vector<Tensor*>& params, double lr);
};

// One Adam update over the parameter list. `names`, when given, labels
// parameters in error messages (non-finite gradients abort with the name).
void adam_step(const std::vector<Tensor*>& params,
               const std::vector<Tensor>& grads, AdamState& state,
               const std::vector<std::string>* names = nullptr);

// base_lr reduced by 5% every 5 epochs: base_lr * 0.95^floor(epoch/5)
double lr_schedule(int epoch, double base_lr);

}  // namespace sslspk
