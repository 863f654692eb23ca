#pragma once

#include <vector>

#include "envdebias/param_store.hpp"

namespace envdebias {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // L2 penalty folded into the gradient; 0 disables it.
  double weight_decay = 0.0;
};

// First/second moment buffers for one ParamStore layout.
class AdamState {
 public:
  explicit AdamState(const ParamStore& like, AdamOptions options = {});

  long step_count() const { return step_; }
  const AdamOptions& options() const { return options_; }

  // One bias-corrected Adam update in place.
  void step(ParamStore& params, const Gradients& grads, double lr);

 private:
  AdamOptions options_;
  long step_ = 0;
  std::vector<Tensor2D> m_;
  std::vector<Tensor2D> v_;
};

inline void adam_step(ParamStore& params, const Gradients& grads, AdamState& state, double lr) {
  state.step(params, grads, lr);
}

}  // namespace envdebias
