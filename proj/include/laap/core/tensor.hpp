#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "laap/core/errors.hpp"

namespace laap {

using Shape = std::vector<int>;

inline std::int64_t numel(const Shape& s) {
  std::int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> val;
  std::vector<double> grad;  // empty until backward first touches it
  bool requires_grad = false;
};

}  // namespace detail

// Value handle with shared storage. Copies are shallow; every op allocates a
// fresh node. Gradients live on the node and accumulate across backward
// calls until zero_grad().
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape) {
    return Tensor(make_node(std::move(shape), {}, false));
  }

  static Tensor full(Shape shape, double v) {
    auto t = Tensor(make_node(std::move(shape), {}, false));
    std::fill(t.values().begin(), t.values().end(), v);
    return t;
  }

  static Tensor from(Shape shape, std::vector<double> values) {
    if (static_cast<std::int64_t>(values.size()) != numel(shape))
      throw ShapeError("Tensor::from: " + std::to_string(values.size()) +
                       " values for shape " + shape_str(shape));
    return Tensor(make_node(std::move(shape), std::move(values), false));
  }

  static Tensor scalar(double v) { return from({1}, {v}); }

  // Leaf that participates in differentiation.
  static Tensor param(Shape shape, std::vector<double> values) {
    Tensor t = from(std::move(shape), std::move(values));
    t.node_->requires_grad = true;
    return t;
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }
  std::int64_t size() const { return static_cast<std::int64_t>(node_->val.size()); }

  std::vector<double>& values() { return node_->val; }
  const std::vector<double>& values() const { return node_->val; }
  double* data() { return node_->val.data(); }
  const double* data() const { return node_->val.data(); }

  double item() const {
    if (!defined() || size() != 1) throw ContractError("item(): tensor is not a scalar");
    return node_->val[0];
  }

  double operator()(int i) const { return node_->val[static_cast<std::size_t>(i)]; }
  double operator()(int i, int j) const {
    return node_->val[static_cast<std::size_t>(i) * dim(rank() - 1) + j];
  }

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool b) {
    node_->requires_grad = b;
    return *this;
  }

  // Same-shape gradient buffer, zero-initialized on first access.
  std::vector<double>& grad() {
    auto& g = node_->grad;
    if (g.empty()) g.assign(node_->val.size(), 0.0);
    return g;
  }
  const std::vector<double>& grad() const {
    auto& g = node_->grad;
    if (g.empty()) g.assign(node_->val.size(), 0.0);
    return g;
  }
  bool has_grad() const { return !node_->grad.empty(); }

  void zero_grad() {
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
  }

  std::shared_ptr<detail::Node> node_ptr() const { return node_; }
  detail::Node& node() const { return *node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

  static std::shared_ptr<detail::Node> make_node(Shape shape, std::vector<double> values,
                                                 bool requires_grad) {
    auto n = std::make_shared<detail::Node>();
    std::int64_t count = numel(shape);
    n->shape = std::move(shape);
    if (values.empty())
      n->val.assign(static_cast<std::size_t>(count), 0.0);
    else
      n->val = std::move(values);
    n->requires_grad = requires_grad;
    return n;
  }

  std::shared_ptr<detail::Node> node_;
};

// Reverse-mode tape. At most one tape is active per thread; ops record their
// backward closures onto it while it lives. Records are kept in creation
// order, which is topological by construction, and replayed in reverse.
class Tape {
 public:
  Tape() {
    Tape*& slot = active_slot();
    if (slot) throw ContractError("a tape is already active on this thread");
    slot = this;
  }
  ~Tape() { active_slot() = nullptr; }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active() { return active_slot(); }

  void record(std::shared_ptr<detail::Node> out, std::function<void()> bwd) {
    records_.push_back({std::move(out), std::move(bwd)});
  }
  std::size_t num_records() const { return records_.size(); }

  // Seeds d(loss)/d(loss) = 1 and runs every record in reverse. Non-leaf
  // grads are scratch space reset per pass; leaf grads accumulate across
  // calls until cleared, so each call contributes exactly one d(loss)/d(leaf).
  void backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1)
      throw ContractError("backward requires a scalar loss");
    for (auto& r : records_) r.out->grad.clear();
    auto& g = loss.node().grad;
    if (g.empty()) g.assign(loss.node().val.size(), 0.0);
    g[0] += 1.0;
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) it->bwd();
  }

 private:
  struct Record {
    std::shared_ptr<detail::Node> out;
    std::function<void()> bwd;
  };
  static Tape*& active_slot() {
    thread_local Tape* t = nullptr;
    return t;
  }
  std::vector<Record> records_;
};

}  // namespace laap
