#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "laap/core/errors.hpp"
#include "laap/core/rng.hpp"
#include "laap/core/tensor.hpp"

namespace laap {

// Ordered, named parameter registry. Registration order is the canonical
// serialization order for checkpoints and the optimizer.
class ParamStore {
 public:
  Tensor add(const std::string& name, Tensor t) {
    if (index_.count(name)) throw ContractError("duplicate parameter name: " + name);
    t.set_requires_grad(true);
    index_[name] = items_.size();
    items_.emplace_back(name, t);
    return t;
  }

  const Tensor& get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("unknown parameter: " + name);
    return items_[it->second].second;
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }

  std::vector<Tensor> tensors() const {
    std::vector<Tensor> out;
    out.reserve(items_.size());
    for (const auto& [name, t] : items_) out.push_back(t);
    return out;
  }

  size_t total_size() const {
    size_t n = 0;
    for (const auto& [name, t] : items_) n += static_cast<size_t>(t.size());
    return n;
  }

  // Values of every parameter, concatenated in registration order.
  std::vector<double> flatten() const {
    std::vector<double> out;
    out.reserve(total_size());
    for (const auto& [name, t] : items_) out.insert(out.end(), t.data(), t.data() + t.size());
    return out;
  }

  void load_flat(const std::vector<double>& blob) {
    if (blob.size() != total_size())
      throw CorruptionError("parameter blob holds " + std::to_string(blob.size()) +
                            " values, expected " + std::to_string(total_size()));
    size_t off = 0;
    for (auto& [name, t] : items_) {
      std::copy(blob.begin() + static_cast<std::ptrdiff_t>(off),
                blob.begin() + static_cast<std::ptrdiff_t>(off + t.size()), t.data());
      off += static_cast<size_t>(t.size());
    }
  }

  void copy_values_from(const ParamStore& other) {
    if (other.items_.size() != items_.size())
      throw ContractError("parameter stores have different sizes");
    for (size_t i = 0; i < items_.size(); ++i) {
      const auto& [oname, ot] = other.items_[i];
      auto& [name, t] = items_[i];
      if (name != oname || t.size() != ot.size())
        throw ContractError("parameter mismatch at " + name + " vs " + oname);
      std::copy(ot.data(), ot.data() + ot.size(), t.data());
    }
  }

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
  std::unordered_map<std::string, size_t> index_;
};

namespace init {

inline Tensor xavier(Rng& rng, int rows, int cols) {
  const double limit = std::sqrt(6.0 / (rows + cols));
  Tensor t = Tensor::zeros({rows, cols});
  auto& v = t.values();
  for (auto& x : v) x = rng.uniform(-limit, limit);
  return t;
}

inline Tensor gaussian(Rng& rng, const Shape& shape, double stddev) {
  Tensor t = Tensor::zeros(shape);
  for (auto& x : t.values()) x = rng.normal() * stddev;
  return t;
}

inline Tensor zeros(const Shape& shape) { return Tensor::zeros(shape); }

inline Tensor ones(const Shape& shape) { return Tensor::full(shape, 1.0); }

}  // namespace init

}  // namespace laap
