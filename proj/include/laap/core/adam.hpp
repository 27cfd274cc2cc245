#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "laap/core/tensor.hpp"

namespace laap {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over a fixed parameter list. Moment buffers are keyed
// by position, so the parameter order must not change between steps.
class AdamState {
 public:
  explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  std::int64_t step_count() const { return step_; }

  void step(std::vector<Tensor>& params) {
    if (m_.empty()) {
      m_.resize(params.size());
      v_.resize(params.size());
      for (std::size_t p = 0; p < params.size(); ++p) {
        m_[p].assign(static_cast<std::size_t>(params[p].size()), 0.0);
        v_[p].assign(static_cast<std::size_t>(params[p].size()), 0.0);
      }
    }
    if (m_.size() != params.size())
      throw ShapeError("adam: parameter count changed between steps");
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t p = 0; p < params.size(); ++p) {
      Tensor& t = params[p];
      if (m_[p].size() != static_cast<std::size_t>(t.size()))
        throw ShapeError("adam: parameter " + std::to_string(p) + " changed shape");
      const auto& g = t.grad();
      auto& m = m_[p];
      auto& v = v_[p];
      double* w = t.data();
      for (std::size_t i = 0; i < m.size(); ++i) {
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
  }

  static void zero_grads(std::vector<Tensor>& params) {
    for (Tensor& t : params) t.zero_grad();
  }

  // Flat serialization: step count followed by all moments in order.
  std::vector<double> serialize() const {
    std::vector<double> out;
    out.push_back(static_cast<double>(step_));
    for (const auto& m : m_) out.insert(out.end(), m.begin(), m.end());
    for (const auto& v : v_) out.insert(out.end(), v.begin(), v.end());
    return out;
  }

  void restore(const std::vector<double>& blob, const std::vector<Tensor>& params) {
    m_.resize(params.size());
    v_.resize(params.size());
    std::size_t off = 0;
    step_ = static_cast<std::int64_t>(blob.at(off++));
    for (std::size_t p = 0; p < params.size(); ++p) {
      m_[p].assign(blob.begin() + off, blob.begin() + off + params[p].size());
      off += static_cast<std::size_t>(params[p].size());
    }
    for (std::size_t p = 0; p < params.size(); ++p) {
      v_[p].assign(blob.begin() + off, blob.begin() + off + params[p].size());
      off += static_cast<std::size_t>(params[p].size());
    }
    if (off != blob.size()) throw CorruptionError("adam: state blob size mismatch");
  }

 private:
  AdamConfig cfg_;
  std::int64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace laap
