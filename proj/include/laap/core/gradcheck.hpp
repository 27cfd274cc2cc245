#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "laap/core/ops.hpp"
#include "laap/core/tensor.hpp"

namespace laap {

// Compares analytic gradients of a scalar-valued function against central
// finite differences and returns the worst relative error
// |analytic - numeric| / max(1e-8, |analytic| + |numeric|) over all parameter
// coordinates. `f` must be a deterministic pure function of `params` and is
// re-evaluated with perturbed coordinates, so it has to rebuild its graph on
// every call.
inline double grad_check(const std::function<Tensor()>& f, std::vector<Tensor> params,
                         double step = 1e-5) {
  for (Tensor& p : params) {
    p.set_requires_grad(true);
    p.zero_grad();
  }

  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    Tensor loss = f();
    if (!std::isfinite(loss.item())) throw NumericError("grad_check: non-finite loss");
    tape.backward(loss);
  }
  for (Tensor& p : params) analytic.push_back(p.grad());

  auto eval = [&]() {
    double v = f().item();
    if (!std::isfinite(v)) throw NumericError("grad_check: non-finite loss");
    return v;
  };

  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    double* w = params[p].data();
    for (std::int64_t i = 0; i < params[p].size(); ++i) {
      const double keep = w[i];
      w[i] = keep + step;
      const double up = eval();
      w[i] = keep - step;
      const double down = eval();
      w[i] = keep;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[p][static_cast<std::size_t>(i)];
      const double rel =
          std::fabs(a - numeric) / std::max(1e-8, std::fabs(a) + std::fabs(numeric));
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace laap
