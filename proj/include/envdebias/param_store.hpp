#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "envdebias/tensor.hpp"

namespace envdebias {

// Named learnable parameters in insertion order. Shapes are fixed once added.
class ParamStore {
 public:
  // Throws std::invalid_argument on a duplicate name.
  std::size_t add(std::string name, Tensor2D value);

  std::size_t size() const { return values_.size(); }
  bool contains(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;

  const std::string& name(std::size_t i) const { return names_[i]; }
  const std::vector<std::string>& names() const { return names_; }

  const Tensor2D& operator[](std::size_t i) const { return values_[i]; }
  const Tensor2D& at(std::string_view name) const { return values_[index_of(name)]; }

  // Writes keep the registered shape; a mismatch throws std::invalid_argument.
  void set(std::size_t i, Tensor2D value);
  void set(std::string_view name, Tensor2D value) { set(index_of(name), std::move(value)); }
  // Direct mutable access for optimizers; callers must not resize.
  Tensor2D& mutable_value(std::size_t i) { return values_[i]; }

  std::size_t scalar_count() const;

  friend bool operator==(const ParamStore& a, const ParamStore& b);

 private:
  std::vector<std::string> names_;
  std::vector<Tensor2D> values_;
};

// Gradient buffers laid out one-to-one with a ParamStore.
class Gradients {
 public:
  explicit Gradients(const ParamStore& like);

  std::size_t size() const { return values_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Tensor2D& operator[](std::size_t i) { return values_[i]; }
  const Tensor2D& operator[](std::size_t i) const { return values_[i]; }
  const Tensor2D& at(std::string_view name) const;

  bool all_finite() const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor2D> values_;
};

// Glorot-uniform U(-a, a), a = sqrt(6 / (rows + cols)).
Tensor2D glorot_uniform(int rows, int cols, std::uint64_t seed);

}  // namespace envdebias
