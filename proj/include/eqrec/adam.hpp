#pragma once

#include "eqrec/types.hpp"

namespace eqrec {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam. m and v are the first/second moment accumulators,
// t the step counter.
struct AdamState {
  AdamConfig cfg;
  Vector m, v;
  long t = 0;

  explicit AdamState(Index n, AdamConfig c = {})
      : cfg(c), m(Vector::Zero(n)), v(Vector::Zero(n)) {}
};

inline void adam_step(Vector& params, const Vector& grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  state.t += 1;
  const double b1 = state.cfg.beta1, b2 = state.cfg.beta2;
  state.m = b1 * state.m + (1.0 - b1) * grads;
  state.v = b2 * state.v + (1.0 - b2) * grads.cwiseProduct(grads);
  const double c1 = 1.0 - std::pow(b1, double(state.t));
  const double c2 = 1.0 - std::pow(b2, double(state.t));
  params.array() -= state.cfg.lr * (state.m.array() / c1) /
                    ((state.v.array() / c2).sqrt() + state.cfg.eps);
}

}  // namespace eqrec
