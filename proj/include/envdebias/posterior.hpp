#pragma once

#include <span>
#include <vector>

namespace envdebias {

struct PriorConfig {
  // Prior probability that a sample is environment-independent (e=1).
  double p_e = 0.7;
  double lambda_kl = 1.0;

  // Throws ConfigError unless 0 < p_e < 1 and lambda_kl >= 0.
  void validate() const;
};

// Per-sample q_i = p(e_i = 1 | A_i, X_i, y_i), used as a detached loss weight.
struct EnvPosterior {
  std::vector<double> q;
};

// Bayes rule over e in {0,1}, in log space:
//   s1 = log p_e + ll_A1 + ll_y1,  s0 = log(1 - p_e) + ll_A0 + ll_y0,
//   q = exp(s1) / (exp(s1) + exp(s0)) = sigmoid(s1 - s0).
double posterior_probability(double ll_y1, double ll_a1, double ll_y0, double ll_a0,
                             const PriorConfig& prior);

EnvPosterior infer_posterior(std::span<const double> ll_y1, std::span<const double> ll_a1,
                             std::span<const double> ll_y0, std::span<const double> ll_a0,
                             const PriorConfig& prior);

// -(1/N) Σ [q_i ll1_i + (1 - q_i) ll0_i]. Shared by the classification and
// structure losses.
double weighted_nll(std::span<const double> q, std::span<const double> ll1,
                    std::span<const double> ll0);

inline double classification_loss(std::span<const double> q, std::span<const double> ll_y1,
                                  std::span<const double> ll_y0) {
  return weighted_nll(q, ll_y1, ll_y0);
}

inline double structure_loss(std::span<const double> q, std::span<const double> ll_a1,
                             std::span<const double> ll_a0) {
  return weighted_nll(q, ll_a1, ll_a0);
}

inline constexpr double kPosteriorClamp = 1e-12;

// (1/N) Σ KL(Bernoulli(q_i) || Bernoulli(p_e)), q clamped to [1e-12, 1 - 1e-12].
double kl_loss(std::span<const double> q, const PriorConfig& prior);

// ∂ kl_loss / ∂ q_i for unclamped interior q.
std::vector<double> kl_loss_gradient(std::span<const double> q, const PriorConfig& prior);

// L_cl + L_reg + kl_sign * lambda_kl * L_KL.
double total_loss(double l_cl, double l_reg, double l_kl, const PriorConfig& prior,
                  int kl_sign = 1);

}  // namespace envdebias
