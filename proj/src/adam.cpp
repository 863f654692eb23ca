#include "envdebias/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace envdebias {

AdamState::AdamState(const ParamStore& like, AdamOptions options) : options_(options) {
  for (std::size_t i = 0; i < like.size(); ++i) {
    m_.push_back(Tensor2D::Zero(like[i].rows(), like[i].cols()));
    v_.push_back(Tensor2D::Zero(like[i].rows(), like[i].cols()));
  }
}

void AdamState::step(ParamStore& params, const Gradients& grads, double lr) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw std::invalid_argument("adam: parameter layout mismatch");
  }
  ++step_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t i = 0; i < m_.size(); ++i) {
    Tensor2D& w = params.mutable_value(i);
    if (grads[i].rows() != w.rows() || grads[i].cols() != w.cols()) {
      throw std::invalid_argument("adam: gradient shape mismatch for " + params.name(i));
    }
    Tensor2D g = grads[i];
    if (options_.weight_decay != 0.0) g += options_.weight_decay * w;
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g.cwiseAbs2();
    w.array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + options_.epsilon);
  }
}

}  // namespace envdebias
