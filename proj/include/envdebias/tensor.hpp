#pragma once

#include <span>
#include <string_view>

#include <Eigen/Core>

namespace envdebias {

// Dense row-major matrix of doubles. Every exposed operation keeps entries
// finite; a NaN/Inf result raises NumericalError.
using Tensor2D = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

bool all_finite(const Tensor2D& t);

// Throws NumericalError naming `what` if any entry is non-finite.
void require_finite(const Tensor2D& t, std::string_view what);

// Forward primitives. All are pure; shape mismatches throw std::invalid_argument.
namespace ops {

Tensor2D matmul(const Tensor2D& a, const Tensor2D& b);
Tensor2D add(const Tensor2D& a, const Tensor2D& b);
// Adds a 1 x cols row to every row of `a`.
Tensor2D add_bias_row(const Tensor2D& a, const Tensor2D& bias);
Tensor2D relu(const Tensor2D& a);
Tensor2D sigmoid(const Tensor2D& a);
// log(sigmoid(a)) without overflow for large |a|.
Tensor2D log_sigmoid(const Tensor2D& a);
Tensor2D concat_cols(const Tensor2D& a, const Tensor2D& b);
// 1 x cols column-wise mean.
Tensor2D mean_rows(const Tensor2D& a);
// Elementwise natural log; requires strictly positive entries.
Tensor2D log(const Tensor2D& a);
Tensor2D softmax_rows(const Tensor2D& a);
Tensor2D log_softmax_rows(const Tensor2D& a);
// Per-row negative log-likelihood of `labels` under softmax(logits), computed
// via log-sum-exp. Result is rows x 1.
Tensor2D cross_entropy_from_logits(const Tensor2D& logits, std::span<const int> labels);

}  // namespace ops

}  // namespace envdebias
