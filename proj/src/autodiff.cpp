#include "envdebias/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include "envdebias/errors.hpp"

namespace envdebias {
namespace {

void accumulate(std::vector<Tensor2D>& grads, int id, const Tensor2D& g) {
  auto& slot = grads[static_cast<std::size_t>(id)];
  if (slot.size() == 0) {
    slot = g;
  } else {
    slot += g;
  }
}

}  // namespace

Var Tape::push(Tensor2D value, bool requires_grad,
               std::function<void(const Tensor2D&, std::vector<Tensor2D>&)> backprop) {
  nodes_.push_back(Node{std::move(value), requires_grad, -1,
                        requires_grad ? std::move(backprop) : nullptr});
  return Var{static_cast<int>(nodes_.size() - 1)};
}

Var Tape::param(std::size_t index) {
  if (index >= params_->size()) throw std::out_of_range("Tape::param: bad index");
  if (auto it = param_nodes_.find(index); it != param_nodes_.end()) return Var{it->second};
  Var v = push((*params_)[index], true, nullptr);
  nodes_.back().param_index = static_cast<int>(index);
  param_nodes_[index] = v.id;
  return v;
}

Var Tape::constant(Tensor2D value) { return push(std::move(value), false, nullptr); }

Var Tape::constant(double value) { return constant(Tensor2D::Constant(1, 1, value)); }

double Tape::scalar(Var v) const {
  const auto& t = value(v);
  if (t.rows() != 1 || t.cols() != 1) throw std::invalid_argument("Tape::scalar: not 1x1");
  return t(0, 0);
}

Var Tape::matmul(Var a, Var b) {
  const bool rg = requires_grad(a) || requires_grad(b);
  return push(ops::matmul(value(a), value(b)), rg,
              [this, a, b](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                if (requires_grad(a)) accumulate(grads, a.id, g * value(b).transpose());
                if (requires_grad(b)) accumulate(grads, b.id, value(a).transpose() * g);
              });
}

Var Tape::add(Var a, Var b) {
  const bool rg = requires_grad(a) || requires_grad(b);
  return push(ops::add(value(a), value(b)), rg,
              [this, a, b](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                if (requires_grad(a)) accumulate(grads, a.id, g);
                if (requires_grad(b)) accumulate(grads, b.id, g);
              });
}

Var Tape::sub(Var a, Var b) {
  const bool rg = requires_grad(a) || requires_grad(b);
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
    throw std::invalid_argument("sub: shape mismatch");
  }
  Tensor2D out = value(a) - value(b);
  require_finite(out, "sub");
  return push(std::move(out), rg, [this, a, b](const Tensor2D& g, std::vector<Tensor2D>& grads) {
    if (requires_grad(a)) accumulate(grads, a.id, g);
    if (requires_grad(b)) accumulate(grads, b.id, -g);
  });
}

Var Tape::add_bias_row(Var a, Var bias) {
  const bool rg = requires_grad(a) || requires_grad(bias);
  return push(ops::add_bias_row(value(a), value(bias)), rg,
              [this, a, bias](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                if (requires_grad(a)) accumulate(grads, a.id, g);
                if (requires_grad(bias)) accumulate(grads, bias.id, g.colwise().sum());
              });
}

Var Tape::relu(Var a) {
  return push(ops::relu(value(a)), requires_grad(a),
              [this, a](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                const Tensor2D mask = (value(a).array() > 0.0).cast<double>().matrix();
                accumulate(grads, a.id, g.cwiseProduct(mask));
              });
}

Var Tape::sigmoid(Var a) {
  Var out = push(ops::sigmoid(value(a)), requires_grad(a), nullptr);
  if (requires_grad(a)) {
    nodes_.back().backprop = [this, a, out](const Tensor2D& g, std::vector<Tensor2D>& grads) {
      const Tensor2D& s = value(out);
      accumulate(grads, a.id, (g.array() * s.array() * (1.0 - s.array())).matrix());
    };
  }
  return out;
}

Var Tape::log_sigmoid(Var a) {
  return push(ops::log_sigmoid(value(a)), requires_grad(a),
              [this, a](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                // d/dx log σ(x) = σ(-x)
                const Tensor2D s = ops::sigmoid(-value(a));
                accumulate(grads, a.id, g.cwiseProduct(s));
              });
}

Var Tape::log(Var a) {
  return push(ops::log(value(a)), requires_grad(a),
              [this, a](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                accumulate(grads, a.id, (g.array() / value(a).array()).matrix());
              });
}

Var Tape::concat_cols(Var a, Var b) {
  const bool rg = requires_grad(a) || requires_grad(b);
  return push(ops::concat_cols(value(a), value(b)), rg,
              [this, a, b](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                const auto ca = value(a).cols();
                const auto cb = value(b).cols();
                if (requires_grad(a)) accumulate(grads, a.id, g.leftCols(ca));
                if (requires_grad(b)) accumulate(grads, b.id, g.rightCols(cb));
              });
}

Var Tape::mean_rows(Var a) {
  return push(ops::mean_rows(value(a)), requires_grad(a),
              [this, a](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                const auto n = value(a).rows();
                Tensor2D out = g.replicate(n, 1) / static_cast<double>(n);
                accumulate(grads, a.id, out);
              });
}

Var Tape::softmax_rows(Var a) {
  Var out = push(ops::softmax_rows(value(a)), requires_grad(a), nullptr);
  if (requires_grad(a)) {
    nodes_.back().backprop = [this, a, out](const Tensor2D& g, std::vector<Tensor2D>& grads) {
      const Tensor2D& s = value(out);
      Tensor2D d(s.rows(), s.cols());
      for (Eigen::Index r = 0; r < s.rows(); ++r) {
        const double dot = g.row(r).dot(s.row(r));
        d.row(r) = s.row(r).array() * (g.row(r).array() - dot);
      }
      accumulate(grads, a.id, d);
    };
  }
  return out;
}

Var Tape::log_softmax_rows(Var a) {
  Var out = push(ops::log_softmax_rows(value(a)), requires_grad(a), nullptr);
  if (requires_grad(a)) {
    nodes_.back().backprop = [this, a, out](const Tensor2D& g, std::vector<Tensor2D>& grads) {
      const Tensor2D s = value(out).array().exp().matrix();
      Tensor2D d(s.rows(), s.cols());
      for (Eigen::Index r = 0; r < s.rows(); ++r) {
        d.row(r) = g.row(r) - s.row(r) * g.row(r).sum();
      }
      accumulate(grads, a.id, d);
    };
  }
  return out;
}

Var Tape::mul_const(Var a, const Tensor2D& c) {
  if (value(a).rows() != c.rows() || value(a).cols() != c.cols()) {
    throw std::invalid_argument("mul_const: shape mismatch");
  }
  Tensor2D out = value(a).cwiseProduct(c);
  require_finite(out, "mul_const");
  return push(std::move(out), requires_grad(a),
              [a, c](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                accumulate(grads, a.id, g.cwiseProduct(c));
              });
}

Var Tape::scale(Var a, double s) {
  Tensor2D out = value(a) * s;
  require_finite(out, "scale");
  return push(std::move(out), requires_grad(a),
              [a, s](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                accumulate(grads, a.id, g * s);
              });
}

Var Tape::sum(Var a) {
  return push(Tensor2D::Constant(1, 1, value(a).sum()), requires_grad(a),
              [this, a](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                accumulate(grads, a.id,
                           Tensor2D::Constant(value(a).rows(), value(a).cols(), g(0, 0)));
              });
}

Var Tape::pick(Var a, int r, int c) {
  const auto& v = value(a);
  if (r < 0 || r >= v.rows() || c < 0 || c >= v.cols()) {
    throw std::out_of_range("pick: index out of range");
  }
  return push(Tensor2D::Constant(1, 1, v(r, c)), requires_grad(a),
              [this, a, r, c](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                Tensor2D d = Tensor2D::Zero(value(a).rows(), value(a).cols());
                d(r, c) = g(0, 0);
                accumulate(grads, a.id, d);
              });
}

Var Tape::gather_rows(Var a, std::span<const int> rows) {
  const auto& v = value(a);
  Tensor2D out(static_cast<Eigen::Index>(rows.size()), v.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= v.rows()) throw std::out_of_range("gather_rows: bad row");
    out.row(static_cast<Eigen::Index>(k)) = v.row(rows[k]);
  }
  std::vector<int> idx(rows.begin(), rows.end());
  return push(std::move(out), requires_grad(a),
              [this, a, idx = std::move(idx)](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                Tensor2D d = Tensor2D::Zero(value(a).rows(), value(a).cols());
                for (std::size_t k = 0; k < idx.size(); ++k) {
                  d.row(idx[k]) += g.row(static_cast<Eigen::Index>(k));
                }
                accumulate(grads, a.id, d);
              });
}

Var Tape::weighted_sum(std::span<const Var> scalars, std::span<const double> weights) {
  if (scalars.size() != weights.size()) {
    throw std::invalid_argument("weighted_sum: size mismatch");
  }
  double total = 0.0;
  bool rg = false;
  for (std::size_t k = 0; k < scalars.size(); ++k) {
    total += weights[k] * scalar(scalars[k]);
    rg = rg || requires_grad(scalars[k]);
  }
  if (!std::isfinite(total)) throw NumericalError("weighted_sum: non-finite result");
  std::vector<Var> s(scalars.begin(), scalars.end());
  std::vector<double> w(weights.begin(), weights.end());
  return push(Tensor2D::Constant(1, 1, total), rg,
              [this, s = std::move(s), w = std::move(w)](const Tensor2D& g,
                                                         std::vector<Tensor2D>& grads) {
                for (std::size_t k = 0; k < s.size(); ++k) {
                  if (requires_grad(s[k]) && w[k] != 0.0) {
                    accumulate(grads, s[k].id, Tensor2D::Constant(1, 1, g(0, 0) * w[k]));
                  }
                }
              });
}

Gradients Tape::backward(Var loss) const {
  const auto& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) throw std::invalid_argument("backward: loss must be 1x1");
  if (!std::isfinite(lv(0, 0))) throw NumericalError("backward: non-finite loss");

  Gradients out(*params_);
  if (!requires_grad(loss)) return out;

  std::vector<Tensor2D> grads(nodes_.size());
  grads[static_cast<std::size_t>(loss.id)] = Tensor2D::Ones(1, 1);
  for (int id = loss.id; id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    auto& g = grads[static_cast<std::size_t>(id)];
    if (!n.requires_grad || g.size() == 0) continue;
    if (n.param_index >= 0) {
      out[static_cast<std::size_t>(n.param_index)] += g;
    } else if (n.backprop) {
      n.backprop(g, grads);
    }
    g.resize(0, 0);
  }
  if (!out.all_finite()) throw NumericalError("backward: non-finite gradient");
  return out;
}

}  // namespace envdebias
