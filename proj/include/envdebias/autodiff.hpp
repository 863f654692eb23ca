#pragma once

#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "envdebias/param_store.hpp"
#include "envdebias/tensor.hpp"

namespace envdebias {

// Handle to a value recorded on a Tape.
struct Var {
  int id = -1;
};

// Reverse-mode tape over Tensor2D values. One tape per forward pass; it is
// not thread-safe. Parameter leaves are bound to a ParamStore index, and
// backward() returns gradients laid out like that store.
//
// Reading a value with value()/scalar() and feeding it back through
// constant() is how a quantity is detached from the graph.
class Tape {
 public:
  explicit Tape(const ParamStore& params) : params_(&params) {}
  // Recorded closures refer back to the tape.
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var param(std::size_t index);
  Var param(std::string_view name) { return param(params_->index_of(name)); }
  Var constant(Tensor2D value);
  Var constant(double value);

  const Tensor2D& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  double scalar(Var v) const;
  bool requires_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].requires_grad; }

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var add_bias_row(Var a, Var bias);
  Var relu(Var a);
  Var sigmoid(Var a);
  Var log_sigmoid(Var a);
  Var log(Var a);
  Var concat_cols(Var a, Var b);
  Var mean_rows(Var a);
  Var softmax_rows(Var a);
  Var log_softmax_rows(Var a);
  // Elementwise product with a fixed matrix (dropout masks, sign flips).
  Var mul_const(Var a, const Tensor2D& c);
  Var scale(Var a, double s);
  // Sum of all entries, 1x1.
  Var sum(Var a);
  // Entry (r, c) as a 1x1 value.
  Var pick(Var a, int r, int c);
  // Rows of `a` selected by `rows`, in order (repeats allowed).
  Var gather_rows(Var a, std::span<const int> rows);
  // Σ_k w_k * s_k over 1x1 values.
  Var weighted_sum(std::span<const Var> scalars, std::span<const double> weights);

  // Gradients of the 1x1 value `loss` with respect to every parameter of the
  // bound store. Parameters never touched get zero gradients. Throws
  // NumericalError if any gradient is non-finite.
  Gradients backward(Var loss) const;

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor2D value;
    bool requires_grad = false;
    int param_index = -1;
    // Accumulates into the gradient buffers of its inputs.
    std::function<void(const Tensor2D& grad, std::vector<Tensor2D>& grads)> backprop;
  };

  Var push(Tensor2D value, bool requires_grad,
           std::function<void(const Tensor2D&, std::vector<Tensor2D>&)> backprop);
  const Node& node(Var v) const { return nodes_[static_cast<std::size_t>(v.id)]; }

  const ParamStore* params_;
  std::vector<Node> nodes_;
  std::unordered_map<std::size_t, int> param_nodes_;
};

}  // namespace envdebias
