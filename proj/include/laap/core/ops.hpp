#pragma once

// Differentiable tensor operations. Forward math runs eagerly; when a Tape
// is active and an input requires grad, each op records a closure that
// accumulates into its inputs' grad buffers.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <vector>

#include "laap/core/tensor.hpp"

namespace laap {

namespace detail {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

inline ECMap as_mat(const std::vector<double>& v, int r, int c) {
  return ECMap(v.data(), r, c);
}
inline EMap as_mat(std::vector<double>& v, int r, int c) {
  return EMap(v.data(), r, c);
}

inline bool any_requires_grad(std::initializer_list<const Tensor*> ins) {
  for (const Tensor* t : ins)
    if (t->requires_grad()) return true;
  return false;
}

inline void mark_and_record(Tensor& out, bool req, std::function<void()> bwd) {
  out.node().requires_grad = req;
  if (!req) return;
  if (Tape* t = Tape::active()) t->record(out.node_ptr(), std::move(bwd));
}

// Output grad, or nullptr when backward never reached this node.
inline const std::vector<double>* grad_out(const std::shared_ptr<Node>& n) {
  return n->grad.empty() ? nullptr : &n->grad;
}

inline std::vector<double>& grad_in(const std::shared_ptr<Node>& n) {
  if (n->grad.empty()) n->grad.assign(n->val.size(), 0.0);
  return n->grad;
}

// Operand roles for elementwise broadcasting: full shape, a vector applied
// along the last axis, or a single value.
enum class Bc { Full, Row, Scalar };

inline Bc classify(const Shape& big, const Shape& small, std::int64_t small_size,
                   const char* op) {
  if (big == small) return Bc::Full;
  if (small_size == 1) return Bc::Scalar;
  if (small.size() == 1 && !big.empty() && big.back() == small[0]) return Bc::Row;
  throw ShapeError(std::string(op) + ": cannot broadcast " + shape_str(small) +
                   " against " + shape_str(big));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise binary ops with limited broadcasting (same shape, last-axis
// vector, or scalar on either side).
// ---------------------------------------------------------------------------

namespace detail {

// fv(x, y) -> value; fa(x, y) -> dv/dx; fb(x, y) -> dv/dy.
template <class FV, class FA, class FB>
Tensor ew_binary(const Tensor& a, const Tensor& b, const char* op, FV fv, FA fa, FB fb) {
  const bool a_big = a.size() >= b.size();
  const Tensor& big = a_big ? a : b;
  const Tensor& small = a_big ? b : a;
  Bc mode = classify(big.shape(), small.shape(), small.size(), op);

  const std::int64_t n = big.size();
  const int last = big.rank() ? big.dim(big.rank() - 1) : 1;
  auto idx_small = [mode, last](std::int64_t i) -> std::int64_t {
    switch (mode) {
      case Bc::Full: return i;
      case Bc::Row: return i % last;
      default: return 0;
    }
  };

  Tensor out = Tensor::zeros(big.shape());
  {
    const double* av = a.data();
    const double* bv = b.data();
    double* ov = out.data();
    if (a_big) {
      for (std::int64_t i = 0; i < n; ++i) ov[i] = fv(av[i], bv[idx_small(i)]);
    } else {
      for (std::int64_t i = 0; i < n; ++i) ov[i] = fv(av[idx_small(i)], bv[i]);
    }
  }

  bool req = any_requires_grad({&a, &b});
  auto an = a.node_ptr(), bn = b.node_ptr(), on = out.node_ptr();
  mark_and_record(out, req, [an, bn, on, n, idx_small, a_big, fa, fb] {
    const auto* go = grad_out(on);
    if (!go) return;
    const double* av = an->val.data();
    const double* bv = bn->val.data();
    auto ai = [&](std::int64_t i) { return a_big ? i : idx_small(i); };
    auto bi = [&](std::int64_t i) { return a_big ? idx_small(i) : i; };
    if (an->requires_grad) {
      auto& ga = grad_in(an);
      for (std::int64_t i = 0; i < n; ++i)
        ga[ai(i)] += (*go)[i] * fa(av[ai(i)], bv[bi(i)]);
    }
    if (bn->requires_grad) {
      auto& gb = grad_in(bn);
      for (std::int64_t i = 0; i < n; ++i)
        gb[bi(i)] += (*go)[i] * fb(av[ai(i)], bv[bi(i)]);
    }
  });
  return out;
}

template <class FV, class FG>
Tensor ew_unary(const Tensor& x, FV fv, FG fg) {
  Tensor out = Tensor::zeros(x.shape());
  const std::int64_t n = x.size();
  for (std::int64_t i = 0; i < n; ++i) out.data()[i] = fv(x.data()[i]);

  auto xn = x.node_ptr(), on = out.node_ptr();
  mark_and_record(out, x.requires_grad(), [xn, on, n, fg] {
    const auto* go = grad_out(on);
    if (!go || !xn->requires_grad) return;
    auto& gx = grad_in(xn);
    // fg receives (input value, output value).
    for (std::int64_t i = 0; i < n; ++i) gx[i] += (*go)[i] * fg(xn->val[i], on->val[i]);
  });
  return out;
}

}  // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
  return detail::ew_binary(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  return detail::ew_binary(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  return detail::ew_binary(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

inline Tensor div(const Tensor& a, const Tensor& b) {
  return detail::ew_binary(
      a, b, "div", [](double x, double y) { return x / y; },
      [](double, double y) { return 1.0 / y; },
      [](double x, double y) { return -x / (y * y); });
}

// Subgradient at ties goes to the first operand.
inline Tensor tmin(const Tensor& a, const Tensor& b) {
  return detail::ew_binary(
      a, b, "tmin", [](double x, double y) { return x <= y ? x : y; },
      [](double x, double y) { return x <= y ? 1.0 : 0.0; },
      [](double x, double y) { return x <= y ? 0.0 : 1.0; });
}

inline Tensor tmax(const Tensor& a, const Tensor& b) {
  return detail::ew_binary(
      a, b, "tmax", [](double x, double y) { return x >= y ? x : y; },
      [](double x, double y) { return x >= y ? 1.0 : 0.0; },
      [](double x, double y) { return x >= y ? 0.0 : 1.0; });
}

inline Tensor neg(const Tensor& x) {
  return detail::ew_unary(
      x, [](double v) { return -v; }, [](double, double) { return -1.0; });
}

inline Tensor scale(const Tensor& x, double c) {
  return detail::ew_unary(
      x, [c](double v) { return c * v; }, [c](double, double) { return c; });
}

inline Tensor relu(const Tensor& x) {
  return detail::ew_unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

inline Tensor sigmoid(const Tensor& x) {
  return detail::ew_unary(
      x,
      [](double v) {
        // Split on sign so exp never overflows.
        return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                        : std::exp(v) / (1.0 + std::exp(v));
      },
      [](double, double s) { return s * (1.0 - s); });
}

inline Tensor abs_(const Tensor& x) {
  return detail::ew_unary(
      x, [](double v) { return std::fabs(v); },
      [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

// ---------------------------------------------------------------------------
// Reductions and structure ops
// ---------------------------------------------------------------------------

inline Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (std::int64_t i = 0; i < x.size(); ++i) s += x.data()[i];
  Tensor out = Tensor::scalar(s);
  auto xn = x.node_ptr(), on = out.node_ptr();
  detail::mark_and_record(out, x.requires_grad(), [xn, on] {
    const auto* go = detail::grad_out(on);
    if (!go || !xn->requires_grad) return;
    auto& gx = detail::grad_in(xn);
    for (auto& g : gx) g += (*go)[0];
  });
  return out;
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2)
    throw ShapeError("matmul: operands must be rank 2, got " + shape_str(a.shape()) +
                     " x " + shape_str(b.shape()));
  const int r = a.dim(0), k = a.dim(1), k2 = b.dim(0), c = b.dim(1);
  if (k != k2)
    throw ShapeError("matmul: inner dimensions disagree: " + shape_str(a.shape()) +
                     " x " + shape_str(b.shape()));
  Tensor out = Tensor::zeros({r, c});
  detail::as_mat(out.values(), r, c).noalias() =
      detail::as_mat(a.values(), r, k) * detail::as_mat(b.values(), k, c);

  bool req = detail::any_requires_grad({&a, &b});
  auto an = a.node_ptr(), bn = b.node_ptr(), on = out.node_ptr();
  detail::mark_and_record(out, req, [an, bn, on, r, k, c] {
    const auto* go = detail::grad_out(on);
    if (!go) return;
    auto gom = detail::as_mat(*go, r, c);
    if (an->requires_grad)
      detail::as_mat(detail::grad_in(an), r, k).noalias() +=
          gom * detail::as_mat(bn->val, k, c).transpose();
    if (bn->requires_grad)
      detail::as_mat(detail::grad_in(bn), k, c).noalias() +=
          detail::as_mat(an->val, r, k).transpose() * gom;
  });
  return out;
}

inline Tensor transpose(const Tensor& x) {
  if (x.rank() != 2) throw ShapeError("transpose: rank-2 tensor required");
  const int r = x.dim(0), c = x.dim(1);
  Tensor out = Tensor::zeros({c, r});
  detail::as_mat(out.values(), c, r).noalias() =
      detail::as_mat(x.values(), r, c).transpose();
  auto xn = x.node_ptr(), on = out.node_ptr();
  detail::mark_and_record(out, x.requires_grad(), [xn, on, r, c] {
    const auto* go = detail::grad_out(on);
    if (!go || !xn->requires_grad) return;
    detail::as_mat(detail::grad_in(xn), r, c).noalias() +=
        detail::as_mat(*go, c, r).transpose();
  });
  return out;
}

// Contiguous row slice [i0, i1) of a rank-2 tensor.
inline Tensor rows(const Tensor& x, int i0, int i1) {
  if (x.rank() != 2) throw ShapeError("rows: rank-2 tensor required");
  const int r = x.dim(0), c = x.dim(1);
  if (i0 < 0 || i1 > r || i0 >= i1)
    throw ShapeError("rows: bad range [" + std::to_string(i0) + "," + std::to_string(i1) +
                     ") for " + shape_str(x.shape()));
  Tensor out = Tensor::zeros({i1 - i0, c});
  std::copy(x.data() + static_cast<std::size_t>(i0) * c,
            x.data() + static_cast<std::size_t>(i1) * c, out.data());
  auto xn = x.node_ptr(), on = out.node_ptr();
  detail::mark_and_record(out, x.requires_grad(), [xn, on, i0, i1, c] {
    const auto* go = detail::grad_out(on);
    if (!go || !xn->requires_grad) return;
    auto& gx = detail::grad_in(xn);
    for (std::size_t i = 0; i < (*go).size(); ++i)
      gx[static_cast<std::size_t>(i0) * c + i] += (*go)[i];
  });
  return out;
}

inline Tensor row(const Tensor& x, int i) { return rows(x, i, i + 1); }

// Column slice [c0, c1) of a rank-2 tensor (per-head views).
inline Tensor col_range(const Tensor& x, int c0, int c1) {
  if (x.rank() != 2) throw ShapeError("col_range: rank-2 tensor required");
  const int r = x.dim(0), c = x.dim(1);
  if (c0 < 0 || c1 > c || c0 >= c1) throw ShapeError("col_range: bad range");
  const int w = c1 - c0;
  Tensor out = Tensor::zeros({r, w});
  for (int i = 0; i < r; ++i)
    std::copy(x.data() + static_cast<std::size_t>(i) * c + c0,
              x.data() + static_cast<std::size_t>(i) * c + c1,
              out.data() + static_cast<std::size_t>(i) * w);
  auto xn = x.node_ptr(), on = out.node_ptr();
  detail::mark_and_record(out, x.requires_grad(), [xn, on, r, c, c0, w] {
    const auto* go = detail::grad_out(on);
    if (!go || !xn->requires_grad) return;
    auto& gx = detail::grad_in(xn);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < w; ++j)
        gx[static_cast<std::size_t>(i) * c + c0 + j] +=
            (*go)[static_cast<std::size_t>(i) * w + j];
  });
  return out;
}

// Single element as a scalar tensor.
inline Tensor elem(const Tensor& x, int i) {
  if (i < 0 || i >= x.size()) throw ShapeError("elem: index out of range");
  Tensor out = Tensor::scalar(x.data()[i]);
  auto xn = x.node_ptr(), on = out.node_ptr();
  detail::mark_and_record(out, x.requires_grad(), [xn, on, i] {
    const auto* go = detail::grad_out(on);
    if (!go || !xn->requires_grad) return;
    detail::grad_in(xn)[static_cast<std::size_t>(i)] += (*go)[0];
  });
  return out;
}

// Vertical concatenation of rank-2 blocks with equal widths.
inline Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no operands");
  int c = parts[0].dim(parts[0].rank() - 1);
  int total = 0;
  bool req = false;
  for (const Tensor& p : parts) {
    if (p.rank() != 2) throw ShapeError("concat_rows: rank-2 operands required");
    if (p.dim(1) != c) throw ShapeError("concat_rows: widths disagree");
    total += p.dim(0);
    req = req || p.requires_grad();
  }
  Tensor out = Tensor::zeros({total, c});
  std::size_t off = 0;
  for (const Tensor& p : parts) {
    std::copy(p.data(), p.data() + p.size(), out.data() + off);
    off += static_cast<std::size_t>(p.size());
  }
  std::vector<std::shared_ptr<detail::Node>> in_nodes;
  in_nodes.reserve(parts.size());
  for (const Tensor& p : parts) in_nodes.push_back(p.node_ptr());
  auto on = out.node_ptr();
  detail::mark_and_record(out, req, [in_nodes, on] {
    const auto* go = detail::grad_out(on);
    if (!go) return;
    std::size_t off = 0;
    for (const auto& pn : in_nodes) {
      if (pn->requires_grad) {
        auto& gp = detail::grad_in(pn);
        for (std::size_t j = 0; j < pn->val.size(); ++j) gp[j] += (*go)[off + j];
      }
      off += pn->val.size();
    }
  });
  return out;
}

// Concatenation along the last axis. Accepts rank-1 operands (treated as one
// row each) or rank-2 operands with equal row counts.
inline Tensor concat_last(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_last: no operands");
  int r = parts[0].rank() == 1 ? 1 : parts[0].dim(0);
  int total = 0;
  bool req = false;
  for (const Tensor& p : parts) {
    if (p.rank() > 2) throw ShapeError("concat_last: rank-1 or rank-2 required");
    int pr = p.rank() == 1 ? 1 : p.dim(0);
    if (pr != r) throw ShapeError("concat_last: row counts disagree");
    total += p.dim(p.rank() - 1);
    req = req || p.requires_grad();
  }
  Shape out_shape = parts[0].rank() == 1 && r == 1 ? Shape{total} : Shape{r, total};
  Tensor out = Tensor::zeros(out_shape);
  int off = 0;
  for (const Tensor& p : parts) {
    int w = p.dim(p.rank() - 1);
    for (int i = 0; i < r; ++i)
      std::copy(p.data() + static_cast<std::size_t>(i) * w,
                p.data() + static_cast<std::size_t>(i + 1) * w,
                out.data() + static_cast<std::size_t>(i) * total + off);
    off += w;
  }
  std::vector<std::shared_ptr<detail::Node>> in_nodes;
  in_nodes.reserve(parts.size());
  for (const Tensor& p : parts) in_nodes.push_back(p.node_ptr());
  auto on = out.node_ptr();
  detail::mark_and_record(out, req, [in_nodes, on, r, total] {
    const auto* go = detail::grad_out(on);
    if (!go) return;
    int off = 0;
    for (const auto& pn : in_nodes) {
      int w = static_cast<int>(pn->val.size()) / r;
      if (pn->requires_grad) {
        auto& gp = detail::grad_in(pn);
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < w; ++j)
            gp[static_cast<std::size_t>(i) * w + j] +=
                (*go)[static_cast<std::size_t>(i) * total + off + j];
      }
      off += w;
    }
  });
  return out;
}

// Stacks rank-1 vectors (or single rows) into a rank-2 matrix.
inline Tensor stack_rows(const std::vector<Tensor>& rows_in) {
  if (rows_in.empty()) throw ShapeError("stack_rows: no rows");
  const int c = rows_in[0].dim(rows_in[0].rank() - 1);
  bool req = false;
  for (const Tensor& t : rows_in) {
    if (t.size() != c) throw ShapeError("stack_rows: row widths disagree");
    req = req || t.requires_grad();
  }
  const int r = static_cast<int>(rows_in.size());
  Tensor out = Tensor::zeros({r, c});
  for (int i = 0; i < r; ++i)
    std::copy(rows_in[static_cast<std::size_t>(i)].data(),
              rows_in[static_cast<std::size_t>(i)].data() + c,
              out.data() + static_cast<std::size_t>(i) * c);
  std::vector<std::shared_ptr<detail::Node>> in_nodes;
  for (const Tensor& t : rows_in) in_nodes.push_back(t.node_ptr());
  auto on = out.node_ptr();
  detail::mark_and_record(out, req, [in_nodes, on, c] {
    const auto* go = detail::grad_out(on);
    if (!go) return;
    for (std::size_t i = 0; i < in_nodes.size(); ++i) {
      if (!in_nodes[i]->requires_grad) continue;
      auto& gp = detail::grad_in(in_nodes[i]);
      for (int j = 0; j < c; ++j) gp[j] += (*go)[i * c + j];
    }
  });
  return out;
}

// Row gather from an embedding table; backward scatter-adds.
inline Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids) {
  if (table.rank() != 2) throw ShapeError("embedding_lookup: table must be rank 2");
  const int v = table.dim(0), d = table.dim(1);
  for (int id : ids)
    if (id < 0 || id >= v)
      throw ValidationError("embedding_lookup: id " + std::to_string(id) +
                            " out of range [0," + std::to_string(v) + ")");
  const int n = static_cast<int>(ids.size());
  Tensor out = Tensor::zeros({n, d});
  for (int i = 0; i < n; ++i)
    std::copy(table.data() + static_cast<std::size_t>(ids[i]) * d,
              table.data() + static_cast<std::size_t>(ids[i] + 1) * d,
              out.data() + static_cast<std::size_t>(i) * d);
  auto tn = table.node_ptr(), on = out.node_ptr();
  detail::mark_and_record(out, table.requires_grad(), [tn, on, ids, d] {
    const auto* go = detail::grad_out(on);
    if (!go || !tn->requires_grad) return;
    auto& gt = detail::grad_in(tn);
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (int j = 0; j < d; ++j)
        gt[static_cast<std::size_t>(ids[i]) * d + j] += (*go)[i * d + j];
  });
  return out;
}

// ---------------------------------------------------------------------------
// Normalization and probability ops
// ---------------------------------------------------------------------------

// Max-subtracted softmax over the last axis. Rejects rows whose maximum is
// not finite (all -inf, any NaN, +inf).
inline Tensor softmax_last_axis(const Tensor& x) {
  if (x.rank() < 1) throw ShapeError("softmax_last_axis: rank >= 1 required");
  const int d = x.dim(x.rank() - 1);
  const std::int64_t rows_n = x.size() / d;
  Tensor out = Tensor::zeros(x.shape());
  for (std::int64_t i = 0; i < rows_n; ++i) {
    const double* xv = x.data() + i * d;
    double* ov = out.data() + i * d;
    double m = xv[0];
    for (int j = 1; j < d; ++j) m = std::max(m, xv[j]);
    if (!std::isfinite(m)) throw NumericError("softmax_last_axis: non-finite logits");
    double s = 0.0;
    for (int j = 0; j < d; ++j) {
      ov[j] = std::exp(xv[j] - m);
      s += ov[j];
    }
    for (int j = 0; j < d; ++j) ov[j] /= s;
  }
  auto xn = x.node_ptr(), on = out.node_ptr();
  detail::mark_and_record(out, x.requires_grad(), [xn, on, rows_n, d] {
    const auto* go = detail::grad_out(on);
    if (!go || !xn->requires_grad) return;
    auto& gx = detail::grad_in(xn);
    for (std::int64_t i = 0; i < rows_n; ++i) {
      const double* y = on->val.data() + i * d;
      const double* g = go->data() + i * d;
      double dot = 0.0;
      for (int j = 0; j < d; ++j) dot += y[j] * g[j];
      for (int j = 0; j < d; ++j) gx[i * d + j] += y[j] * (g[j] - dot);
    }
  });
  return out;
}

// Last-axis layer norm with population variance and additive epsilon.
inline Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                         double eps = 1e-5) {
  if (x.rank() < 1) throw ShapeError("layer_norm: rank >= 1 required");
  const int d = x.dim(x.rank() - 1);
  if (d < 2) throw ContractError("layer_norm: last axis must be >= 2");
  if (gain.size() != d || bias.size() != d)
    throw ShapeError("layer_norm: gain/bias must have length " + std::to_string(d));
  const std::int64_t rows_n = x.size() / d;

  Tensor out = Tensor::zeros(x.shape());
  // Saved for backward: normalized values and reciprocal stddev per row.
  auto xhat = std::make_shared<std::vector<double>>(x.size());
  auto rstd = std::make_shared<std::vector<double>>(rows_n);
  for (std::int64_t i = 0; i < rows_n; ++i) {
    const double* xv = x.data() + i * d;
    double mean = 0.0;
    for (int j = 0; j < d; ++j) mean += xv[j];
    mean /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) var += (xv[j] - mean) * (xv[j] - mean);
    var /= d;
    const double r = 1.0 / std::sqrt(var + eps);
    (*rstd)[i] = r;
    for (int j = 0; j < d; ++j) {
      const double h = (xv[j] - mean) * r;
      (*xhat)[i * d + j] = h;
      out.data()[i * d + j] = gain.data()[j] * h + bias.data()[j];
    }
  }

  bool req = detail::any_requires_grad({&x, &gain, &bias});
  auto xn = x.node_ptr(), gn = gain.node_ptr(), bn = bias.node_ptr(), on = out.node_ptr();
  detail::mark_and_record(out, req, [xn, gn, bn, on, xhat, rstd, rows_n, d] {
    const auto* go = detail::grad_out(on);
    if (!go) return;
    for (std::int64_t i = 0; i < rows_n; ++i) {
      const double* g = go->data() + i * d;
      const double* h = xhat->data() + i * d;
      if (gn->requires_grad) {
        auto& gg = detail::grad_in(gn);
        for (int j = 0; j < d; ++j) gg[j] += g[j] * h[j];
      }
      if (bn->requires_grad) {
        auto& gb = detail::grad_in(bn);
        for (int j = 0; j < d; ++j) gb[j] += g[j];
      }
      if (xn->requires_grad) {
        auto& gx = detail::grad_in(xn);
        double s1 = 0.0, s2 = 0.0;  // sums of gain*g and gain*g*xhat
        for (int j = 0; j < d; ++j) {
          const double gg = gn->val[static_cast<std::size_t>(j)] * g[j];
          s1 += gg;
          s2 += gg * h[j];
        }
        const double r = (*rstd)[i];
        for (int j = 0; j < d; ++j) {
          const double gg = gn->val[static_cast<std::size_t>(j)] * g[j];
          gx[i * d + j] += r * (gg - s1 / d - h[j] * s2 / d);
        }
      }
    }
  });
  return out;
}

// Sum over all entries of binary cross entropy with logits against constant
// targets; the numerically safe max/log1p form.
inline Tensor bce_with_logits_sum(const Tensor& logits, const std::vector<double>& targets) {
  if (static_cast<std::int64_t>(targets.size()) != logits.size())
    throw ShapeError("bce_with_logits_sum: target count mismatch");
  double total = 0.0;
  for (std::int64_t i = 0; i < logits.size(); ++i) {
    const double s = logits.data()[i], t = targets[static_cast<std::size_t>(i)];
    total += std::max(s, 0.0) - s * t + std::log1p(std::exp(-std::fabs(s)));
  }
  Tensor out = Tensor::scalar(total);
  auto ln = logits.node_ptr(), on = out.node_ptr();
  detail::mark_and_record(out, logits.requires_grad(), [ln, on, targets] {
    const auto* go = detail::grad_out(on);
    if (!go || !ln->requires_grad) return;
    auto& gl = detail::grad_in(ln);
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const double s = ln->val[i];
      const double sig = s >= 0.0 ? 1.0 / (1.0 + std::exp(-s))
                                  : std::exp(s) / (1.0 + std::exp(s));
      gl[i] += (*go)[0] * (sig - targets[i]);
    }
  });
  return out;
}

// Softmax cross entropy of a logit vector against a single class index.
inline Tensor softmax_xent(const Tensor& logits, int target) {
  const std::int64_t n = logits.size();
  if (target < 0 || target >= n) throw ContractError("softmax_xent: target out of range");
  double m = logits.data()[0];
  for (std::int64_t i = 1; i < n; ++i) m = std::max(m, logits.data()[i]);
  if (!std::isfinite(m)) throw NumericError("softmax_xent: non-finite logits");
  double se = 0.0;
  for (std::int64_t i = 0; i < n; ++i) se += std::exp(logits.data()[i] - m);
  const double lse = m + std::log(se);
  Tensor out = Tensor::scalar(lse - logits.data()[target]);
  auto ln = logits.node_ptr(), on = out.node_ptr();
  detail::mark_and_record(out, logits.requires_grad(), [ln, on, target, m, se, n] {
    const auto* go = detail::grad_out(on);
    if (!go || !ln->requires_grad) return;
    auto& gl = detail::grad_in(ln);
    for (std::int64_t i = 0; i < n; ++i) {
      const double p = std::exp(ln->val[static_cast<std::size_t>(i)] - m) / se;
      gl[static_cast<std::size_t>(i)] += (*go)[0] * (p - (i == target ? 1.0 : 0.0));
    }
  });
  return out;
}

}  // namespace laap
