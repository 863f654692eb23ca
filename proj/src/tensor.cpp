#include "envdebias/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "envdebias/errors.hpp"

namespace envdebias {

bool all_finite(const Tensor2D& t) { return t.allFinite(); }

void require_finite(const Tensor2D& t, std::string_view what) {
  if (!t.allFinite()) {
    throw NumericalError("non-finite values in " + std::string(what));
  }
}

namespace ops {
namespace {

void require_same_shape(const Tensor2D& a, const Tensor2D& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) +
                                "x" + std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

Tensor2D checked(Tensor2D t, const char* op) {
  require_finite(t, op);
  return t;
}

double log_sigmoid_scalar(double x) {
  // log σ(x) = -log(1 + e^{-x})
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

}  // namespace

Tensor2D matmul(const Tensor2D& a, const Tensor2D& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions differ (" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + ")");
  }
  return checked(a * b, "matmul");
}

Tensor2D add(const Tensor2D& a, const Tensor2D& b) {
  require_same_shape(a, b, "add");
  return checked(a + b, "add");
}

Tensor2D add_bias_row(const Tensor2D& a, const Tensor2D& bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols()) {
    throw std::invalid_argument("add_bias_row: bias must be 1 x " + std::to_string(a.cols()));
  }
  Tensor2D out = a;
  out.rowwise() += bias.row(0);
  return checked(std::move(out), "add_bias_row");
}

Tensor2D relu(const Tensor2D& a) { return a.cwiseMax(0.0); }

Tensor2D sigmoid(const Tensor2D& a) {
  return a.unaryExpr([](double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
}

Tensor2D log_sigmoid(const Tensor2D& a) { return a.unaryExpr(&log_sigmoid_scalar); }

Tensor2D concat_cols(const Tensor2D& a, const Tensor2D& b) {
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("concat_cols: row counts differ");
  }
  Tensor2D out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

Tensor2D mean_rows(const Tensor2D& a) {
  if (a.rows() == 0) throw std::invalid_argument("mean_rows: empty input");
  return a.colwise().mean();
}

Tensor2D log(const Tensor2D& a) {
  if ((a.array() <= 0.0).any()) {
    throw NumericalError("log: non-positive input");
  }
  return checked(a.array().log().matrix(), "log");
}

Tensor2D log_softmax_rows(const Tensor2D& a) {
  Tensor2D out(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const double m = a.row(r).maxCoeff();
    const double lse = m + std::log((a.row(r).array() - m).exp().sum());
    out.row(r) = a.row(r).array() - lse;
  }
  return checked(std::move(out), "log_softmax_rows");
}

Tensor2D softmax_rows(const Tensor2D& a) {
  Tensor2D out = log_softmax_rows(a).array().exp().matrix();
  for (Eigen::Index r = 0; r < out.rows(); ++r) out.row(r) /= out.row(r).sum();
  return out;
}

Tensor2D cross_entropy_from_logits(const Tensor2D& logits, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.rows()) {
    throw std::invalid_argument("cross_entropy_from_logits: label count differs from rows");
  }
  const Tensor2D logp = log_softmax_rows(logits);
  Tensor2D out(logits.rows(), 1);
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    if (y < 0 || y >= logits.cols()) {
      throw std::invalid_argument("cross_entropy_from_logits: label out of range");
    }
    out(r, 0) = -logp(r, y);
  }
  return out;
}

}  // namespace ops
}  // namespace envdebias
