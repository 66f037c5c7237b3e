#include "sslspk/adam.hpp"

#include <cmath>

#include "sslspk/errors.hpp"

namespace sslspk {

AdamState AdamState::init_like(const std::vector<Tensor*>& params, double lr) {
  AdamState s;
  s.lr = lr;
  s.m.reserve(params.size());
  s.v.reserve(params.size());
  for (const Tensor* p : params) {
    s.m.emplace_back(p->shape());
    s.v.emplace_back(p->shape());
  }
  return s;
}

void adam_step(const std::vector<Tensor*>& params,
               const std::vector<Tensor>& grads, AdamState& state,
               const std::vector<std::string>* names) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ShapeError("adam_step: params/grads/state sizes disagree");
  }
  auto param_name = [&](std::size_t i) {
    return names && i < names->size() ? (*names)[i]
                                      : "param[" + std::to_string(i) + "]";
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(grads[i]) || !params[i]->same_shape(state.m[i])) {
      throw ShapeError("adam_step: shape mismatch for " + param_name(i));
    }
    for (double g : grads[i].values()) {
      if (!std::isfinite(g)) {
        throw NumericError("adam_step: non-finite gradient for " +
                           param_name(i));
      }
    }
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params[i]->data();
    const double* g = grads[i].data();
    double* m = state.m[i].data();
    double* v = state.v[i].data();
    const std::size_t n = params[i]->size();
    for (std::size_t j = 0; j < n; ++j) {
      double gj = g[j] + state.weight_decay * p[j];
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * gj;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * gj * gj;
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      p[j] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

double lr_schedule(int epoch, double base_lr) {
  if (epoch < 0) throw ConfigError("lr_schedule: negative epoch");
  return base_lr * std::pow(0.95, static_cast<double>(epoch / 5));
}

}  // namespace sslspk
