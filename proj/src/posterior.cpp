#include "envdebias/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "envdebias/errors.hpp"

namespace envdebias {

void PriorConfig::validate() const {
  if (!(p_e > 0.0 && p_e < 1.0)) {
    throw ConfigError("prior p_e must lie in (0,1), got " + std::to_string(p_e));
  }
  if (!(lambda_kl >= 0.0) || !std::isfinite(lambda_kl)) {
    throw ConfigError("lambda_kl must be a finite value >= 0");
  }
}

double posterior_probability(double ll_y1, double ll_a1, double ll_y0, double ll_a0,
                             const PriorConfig& prior) {
  if (!std::isfinite(ll_y1) || !std::isfinite(ll_a1) || !std::isfinite(ll_y0) ||
      !std::isfinite(ll_a0)) {
    throw NumericalError("infer_posterior: non-finite log-likelihood");
  }
  prior.validate();
  const double s1 = std::log(prior.p_e) + ll_a1 + ll_y1;
  const double s0 = std::log1p(-prior.p_e) + ll_a0 + ll_y0;
  const double m = std::max(s1, s0);
  const double w1 = std::exp(s1 - m);
  const double w0 = std::exp(s0 - m);
  return w1 / (w1 + w0);
}

EnvPosterior infer_posterior(std::span<const double> ll_y1, std::span<const double> ll_a1,
                             std::span<const double> ll_y0, std::span<const double> ll_a0,
                             const PriorConfig& prior) {
  const auto n = ll_y1.size();
  if (ll_a1.size() != n || ll_y0.size() != n || ll_a0.size() != n) {
    throw std::invalid_argument("infer_posterior: input lengths differ");
  }
  EnvPosterior out;
  out.q.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.q.push_back(posterior_probability(ll_y1[i], ll_a1[i], ll_y0[i], ll_a0[i], prior));
  }
  return out;
}

double weighted_nll(std::span<const double> q, std::span<const double> ll1,
                    std::span<const double> ll0) {
  if (ll1.size() != q.size() || ll0.size() != q.size()) {
    throw std::invalid_argument("weighted loss: input lengths differ");
  }
  if (q.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) acc += q[i] * ll1[i] + (1.0 - q[i]) * ll0[i];
  return -acc / static_cast<double>(q.size());
}

namespace {

double clamp_q(double q) { return std::clamp(q, kPosteriorClamp, 1.0 - kPosteriorClamp); }

}  // namespace

double kl_loss(std::span<const double> q, const PriorConfig& prior) {
  prior.validate();
  if (q.empty()) return 0.0;
  const double p = prior.p_e;
  double acc = 0.0;
  for (double qi : q) {
    const double c = clamp_q(qi);
    acc += c * std::log(c / p) + (1.0 - c) * std::log((1.0 - c) / (1.0 - p));
  }
  return acc / static_cast<double>(q.size());
}

std::vector<double> kl_loss_gradient(std::span<const double> q, const PriorConfig& prior) {
  prior.validate();
  const double p = prior.p_e;
  const auto n = static_cast<double>(q.size());
  std::vector<double> g;
  g.reserve(q.size());
  for (double qi : q) {
    const double c = clamp_q(qi);
    g.push_back((std::log(c / p) - std::log((1.0 - c) / (1.0 - p))) / n);
  }
  return g;
}

double total_loss(double l_cl, double l_reg, double l_kl, const PriorConfig& prior, int kl_sign) {
  if (kl_sign != 1 && kl_sign != -1) throw ConfigError("kl_sign must be +1 or -1");
  return l_cl + l_reg + static_cast<double>(kl_sign) * prior.lambda_kl * l_kl;
}

}  // namespace envdebias
