#include "envdebias/param_store.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace envdebias {

std::size_t ParamStore::add(std::string name, Tensor2D value) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return values_.size() - 1;
}

bool ParamStore::contains(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t ParamStore::index_of(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw std::invalid_argument("unknown parameter: " + std::string(name));
  return static_cast<std::size_t>(it - names_.begin());
}

void ParamStore::set(std::size_t i, Tensor2D value) {
  if (value.rows() != values_[i].rows() || value.cols() != values_[i].cols()) {
    throw std::invalid_argument("shape change for parameter " + names_[i]);
  }
  values_[i] = std::move(value);
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

bool operator==(const ParamStore& a, const ParamStore& b) {
  if (a.names_ != b.names_) return false;
  for (std::size_t i = 0; i < a.values_.size(); ++i) {
    const auto& x = a.values_[i];
    const auto& y = b.values_[i];
    if (x.rows() != y.rows() || x.cols() != y.cols() || x != y) return false;
  }
  return true;
}

Gradients::Gradients(const ParamStore& like) : names_(like.names()) {
  values_.reserve(like.size());
  for (std::size_t i = 0; i < like.size(); ++i) {
    values_.push_back(Tensor2D::Zero(like[i].rows(), like[i].cols()));
  }
}

const Tensor2D& Gradients::at(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw std::invalid_argument("unknown gradient: " + std::string(name));
  return values_[static_cast<std::size_t>(it - names_.begin())];
}

bool Gradients::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](const Tensor2D& t) { return t.allFinite(); });
}

Tensor2D glorot_uniform(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-a, a);
  Tensor2D w(rows, cols);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
  return w;
}

}  // namespace envdebias
