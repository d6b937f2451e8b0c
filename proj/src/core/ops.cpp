#include "sgnv/core/ops.hpp"

#include <cmath>
#include <limits>

namespace sgnv {

namespace {

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a->val.same_shape(b->val))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                Tensor::shape_str(a->val.shape()) + " vs " +
                                Tensor::shape_str(b->val.shape()));
}

void check_rank2(const Var& a, const char* op) {
  if (a->val.rank() != 2)
    throw std::invalid_argument(std::string(op) + ": rank-2 tensor required");
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

Var unary_op(const Var& a, const std::function<double(double)>& f,
             const std::function<double(double, double)>& dfdx_times_g) {
  Tensor out(a->val.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = f(a->val[i]);
  return make_op(std::move(out), {a}, [dfdx_times_g](Node& n) {
    Var& a = n.parents[0];
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (int64_t i = 0; i < n.grad.size(); ++i)
      a->grad[i] += dfdx_times_g(a->val[i], n.grad[i]);
  });
}

}  // namespace

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  Tensor out(a->val.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = a->val[i] + b->val[i];
  return make_op(std::move(out), {a, b}, [](Node& n) {
    for (auto& p : n.parents) {
      if (!p->requires_grad) continue;
      p->ensure_grad();
      for (int64_t i = 0; i < n.grad.size(); ++i) p->grad[i] += n.grad[i];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  Tensor out(a->val.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = a->val[i] - b->val[i];
  return make_op(std::move(out), {a, b}, [](Node& n) {
    Var& a = n.parents[0];
    Var& b = n.parents[1];
    if (a->requires_grad) {
      a->ensure_grad();
      for (int64_t i = 0; i < n.grad.size(); ++i) a->grad[i] += n.grad[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (int64_t i = 0; i < n.grad.size(); ++i) b->grad[i] -= n.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  Tensor out(a->val.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = a->val[i] * b->val[i];
  return make_op(std::move(out), {a, b}, [](Node& n) {
    Var& a = n.parents[0];
    Var& b = n.parents[1];
    if (a->requires_grad) {
      a->ensure_grad();
      for (int64_t i = 0; i < n.grad.size(); ++i)
        a->grad[i] += n.grad[i] * b->val[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (int64_t i = 0; i < n.grad.size(); ++i)
        b->grad[i] += n.grad[i] * a->val[i];
    }
  });
}

Var scale(const Var& a, double c) {
  return unary_op(
      a, [c](double x) { return c * x; },
      [c](double, double g) { return c * g; });
}

Var add_scalar(const Var& a, double c) {
  return unary_op(
      a, [c](double x) { return x + c; }, [](double, double g) { return g; });
}

Var relu(const Var& a) {
  return unary_op(
      a, [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double g) { return x > 0 ? g : 0.0; });
}

Var sigmoid(const Var& a) {
  return unary_op(
      a, [](double x) { return stable_sigmoid(x); },
      [](double x, double g) {
        double s = stable_sigmoid(x);
        return g * s * (1.0 - s);
      });
}

Var softplus(const Var& a) {
  return unary_op(
      a, [](double x) { return stable_softplus(x); },
      [](double x, double g) { return g * stable_sigmoid(x); });
}

Var exp_v(const Var& a) {
  return unary_op(
      a, [](double x) { return std::exp(x); },
      [](double x, double g) { return g * std::exp(x); });
}

Var log_v(const Var& a) {
  return unary_op(
      a, [](double x) { return std::log(x); },
      [](double x, double g) { return g / x; });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (int64_t i = 0; i < a->val.size(); ++i) s += a->val[i];
  return make_op(Tensor::scalar(s), {a}, [](Node& n) {
    Var& a = n.parents[0];
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (int64_t i = 0; i < a->grad.size(); ++i) a->grad[i] += n.grad[0];
  });
}

Var mean(const Var& a) { return scale(sum(a), 1.0 / double(a->val.size())); }

Var reshape(const Var& a, std::vector<int> shape) {
  if (Tensor::count(shape) != a->val.size())
    throw std::invalid_argument("reshape: element count mismatch");
  Tensor out(std::move(shape), a->val.raw());
  return make_op(std::move(out), {a}, [](Node& n) {
    Var& a = n.parents[0];
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (int64_t i = 0; i < n.grad.size(); ++i) a->grad[i] += n.grad[i];
  });
}

Var transpose(const Var& a) {
  check_rank2(a, "transpose");
  Tensor out({a->val.dim(1), a->val.dim(0)});
  out.mat() = a->val.mat().transpose();
  return make_op(std::move(out), {a}, [](Node& n) {
    Var& a = n.parents[0];
    if (!a->requires_grad) return;
    a->ensure_grad();
    a->grad.mat() += n.grad.mat().transpose();
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: empty");
  int cols = parts[0]->val.dim(1);
  int rows = 0;
  for (auto& p : parts) {
    check_rank2(p, "concat_rows");
    if (p->val.dim(1) != cols)
      throw std::invalid_argument("concat_rows: column mismatch");
    rows += p->val.dim(0);
  }
  Tensor out({rows, cols});
  int r = 0;
  for (auto& p : parts) {
    out.mat().middleRows(r, p->val.dim(0)) = p->val.mat();
    r += p->val.dim(0);
  }
  return make_op(std::move(out), parts, [](Node& n) {
    int r = 0;
    for (auto& p : n.parents) {
      int pr = p->val.dim(0);
      if (p->requires_grad) {
        p->ensure_grad();
        p->grad.mat() += n.grad.mat().middleRows(r, pr);
      }
      r += pr;
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: empty");
  int rows = parts[0]->val.dim(0);
  int cols = 0;
  for (auto& p : parts) {
    check_rank2(p, "concat_cols");
    if (p->val.dim(0) != rows)
      throw std::invalid_argument("concat_cols: row mismatch");
    cols += p->val.dim(1);
  }
  Tensor out({rows, cols});
  int c = 0;
  for (auto& p : parts) {
    out.mat().middleCols(c, p->val.dim(1)) = p->val.mat();
    c += p->val.dim(1);
  }
  return make_op(std::move(out), parts, [](Node& n) {
    int c = 0;
    for (auto& p : n.parents) {
      int pc = p->val.dim(1);
      if (p->requires_grad) {
        p->ensure_grad();
        p->grad.mat() += n.grad.mat().middleCols(c, pc);
      }
      c += pc;
    }
  });
}

Var slice_rows(const Var& a, int row0, int nrows) {
  check_rank2(a, "slice_rows");
  if (row0 < 0 || row0 + nrows > a->val.dim(0))
    throw std::invalid_argument("slice_rows: out of range");
  Tensor out({nrows, a->val.dim(1)});
  out.mat() = a->val.mat().middleRows(row0, nrows);
  return make_op(std::move(out), {a}, [row0, nrows](Node& n) {
    Var& a = n.parents[0];
    if (!a->requires_grad) return;
    a->ensure_grad();
    a->grad.mat().middleRows(row0, nrows) += n.grad.mat();
  });
}

Var slice_cols(const Var& a, int col0, int ncols) {
  check_rank2(a, "slice_cols");
  if (col0 < 0 || col0 + ncols > a->val.dim(1))
    throw std::invalid_argument("slice_cols: out of range");
  Tensor out({a->val.dim(0), ncols});
  out.mat() = a->val.mat().middleCols(col0, ncols);
  return make_op(std::move(out), {a}, [col0, ncols](Node& n) {
    Var& a = n.parents[0];
    if (!a->requires_grad) return;
    a->ensure_grad();
    a->grad.mat().middleCols(col0, ncols) += n.grad.mat();
  });
}

Var matmul(const Var& a, const Var& b) {
  check_rank2(a, "matmul");
  check_rank2(b, "matmul");
  if (a->val.dim(1) != b->val.dim(0))
    throw std::invalid_argument("matmul: inner dimension mismatch");
  Tensor out({a->val.dim(0), b->val.dim(1)});
  out.mat() = a->val.mat() * b->val.mat();
  return make_op(std::move(out), {a, b}, [](Node& n) {
    Var& a = n.parents[0];
    Var& b = n.parents[1];
    if (a->requires_grad) {
      a->ensure_grad();
      a->grad.mat() += n.grad.mat() * b->val.mat().transpose();
    }
    if (b->requires_grad) {
      b->ensure_grad();
      b->grad.mat() += a->val.mat().transpose() * n.grad.mat();
    }
  });
}

Var add_rowvec(const Var& a, const Var& b) {
  check_rank2(a, "add_rowvec");
  int d = a->val.dim(1);
  if (b->val.size() != d)
    throw std::invalid_argument("add_rowvec: width mismatch");
  Tensor out(a->val.shape());
  for (int r = 0; r < a->val.dim(0); ++r)
    for (int c = 0; c < d; ++c)
      out[int64_t(r) * d + c] = a->val[int64_t(r) * d + c] + b->val[c];
  return make_op(std::move(out), {a, b}, [d](Node& n) {
    Var& a = n.parents[0];
    Var& b = n.parents[1];
    if (a->requires_grad) {
      a->ensure_grad();
      for (int64_t i = 0; i < n.grad.size(); ++i) a->grad[i] += n.grad[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      int rows = n.val.dim(0);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < d; ++c) b->grad[c] += n.grad[int64_t(r) * d + c];
    }
  });
}

Var gather_rows(const Var& a, std::vector<int> idx) {
  check_rank2(a, "gather_rows");
  int P = a->val.dim(0), d = a->val.dim(1);
  for (int i : idx)
    if (i < 0 || i >= P)
      throw std::out_of_range("gather_rows: index out of range");
  Tensor out({int(idx.size()), d});
  for (size_t s = 0; s < idx.size(); ++s)
    out.mat().row(int(s)) = a->val.mat().row(idx[s]);
  return make_op(std::move(out), {a}, [idx = std::move(idx)](Node& n) {
    Var& a = n.parents[0];
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (size_t s = 0; s < idx.size(); ++s)
      a->grad.mat().row(idx[s]) += n.grad.mat().row(int(s));
  });
}

Var weighted_gather_rows(const Var& a, std::vector<int> idx,
                         std::vector<double> w, std::vector<int> offsets) {
  check_rank2(a, "weighted_gather_rows");
  if (idx.size() != w.size())
    throw std::invalid_argument("weighted_gather_rows: idx/w size mismatch");
  if (offsets.empty() || offsets.back() != int(idx.size()))
    throw std::invalid_argument("weighted_gather_rows: bad offsets");
  int P = a->val.dim(0), d = a->val.dim(1);
  int S = int(offsets.size()) - 1;
  for (int i : idx)
    if (i < 0 || i >= P)
      throw std::out_of_range("weighted_gather_rows: index out of range");
  Tensor out({S, d});
  for (int s = 0; s < S; ++s)
    for (int j = offsets[s]; j < offsets[s + 1]; ++j)
      out.mat().row(s) += w[size_t(j)] * a->val.mat().row(idx[size_t(j)]);
  return make_op(std::move(out), {a},
                 [idx = std::move(idx), w = std::move(w),
                  offsets = std::move(offsets)](Node& n) {
                   Var& a = n.parents[0];
                   if (!a->requires_grad) return;
                   a->ensure_grad();
                   int S = int(offsets.size()) - 1;
                   for (int s = 0; s < S; ++s)
                     for (int j = offsets[s]; j < offsets[s + 1]; ++j)
                       a->grad.mat().row(idx[size_t(j)]) +=
                           w[size_t(j)] * n.grad.mat().row(s);
                 });
}

Var log_softmax_rows(const Var& a) {
  check_rank2(a, "log_softmax_rows");
  const double neg_inf = -std::numeric_limits<double>::infinity();
  int rows = a->val.dim(0), cols = a->val.dim(1);
  Tensor out(a->val.shape());
  for (int r = 0; r < rows; ++r) {
    double m = neg_inf;
    for (int c = 0; c < cols; ++c)
      m = std::max(m, a->val[int64_t(r) * cols + c]);
    if (m == neg_inf)
      throw std::invalid_argument("log_softmax_rows: fully masked row");
    double z = 0.0;
    for (int c = 0; c < cols; ++c) {
      double x = a->val[int64_t(r) * cols + c];
      if (x != neg_inf) z += std::exp(x - m);
    }
    double lse = m + std::log(z);
    for (int c = 0; c < cols; ++c) {
      double x = a->val[int64_t(r) * cols + c];
      out[int64_t(r) * cols + c] = (x == neg_inf) ? neg_inf : x - lse;
    }
  }
  return make_op(std::move(out), {a}, [rows, cols, neg_inf](Node& n) {
    Var& a = n.parents[0];
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (int r = 0; r < rows; ++r) {
      double gsum = 0.0;
      for (int c = 0; c < cols; ++c)
        if (n.val[int64_t(r) * cols + c] != neg_inf)
          gsum += n.grad[int64_t(r) * cols + c];
      for (int c = 0; c < cols; ++c) {
        int64_t i = int64_t(r) * cols + c;
        if (n.val[i] == neg_inf) continue;
        double p = std::exp(n.val[i]);
        a->grad[i] += n.grad[i] - p * gsum;
      }
    }
  });
}

Var softmax_rows(const Var& a) {
  check_rank2(a, "softmax_rows");
  const double neg_inf = -std::numeric_limits<double>::infinity();
  int rows = a->val.dim(0), cols = a->val.dim(1);
  Tensor out(a->val.shape());
  for (int r = 0; r < rows; ++r) {
    double m = neg_inf;
    for (int c = 0; c < cols; ++c)
      m = std::max(m, a->val[int64_t(r) * cols + c]);
    if (m == neg_inf)
      throw std::invalid_argument("softmax_rows: fully masked row");
    double z = 0.0;
    for (int c = 0; c < cols; ++c) {
      double x = a->val[int64_t(r) * cols + c];
      double e = (x == neg_inf) ? 0.0 : std::exp(x - m);
      out[int64_t(r) * cols + c] = e;
      z += e;
    }
    for (int c = 0; c < cols; ++c) out[int64_t(r) * cols + c] /= z;
  }
  return make_op(std::move(out), {a}, [rows, cols](Node& n) {
    Var& a = n.parents[0];
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (int r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (int c = 0; c < cols; ++c) {
        int64_t i = int64_t(r) * cols + c;
        dot += n.grad[i] * n.val[i];
      }
      for (int c = 0; c < cols; ++c) {
        int64_t i = int64_t(r) * cols + c;
        a->grad[i] += n.val[i] * (n.grad[i] - dot);
      }
    }
  });
}

Var layer_norm_rows(const Var& a, const Var& gain, const Var& bias,
                    double eps) {
  check_rank2(a, "layer_norm_rows");
  int rows = a->val.dim(0), d = a->val.dim(1);
  if (gain->val.size() != d || bias->val.size() != d)
    throw std::invalid_argument("layer_norm_rows: gain/bias width mismatch");
  Tensor out(a->val.shape());
  for (int r = 0; r < rows; ++r) {
    const double* x = a->val.data() + int64_t(r) * d;
    double mu = 0.0;
    for (int c = 0; c < d; ++c) mu += x[c];
    mu /= d;
    double var = 0.0;
    for (int c = 0; c < d; ++c) var += (x[c] - mu) * (x[c] - mu);
    var /= d;
    double inv = 1.0 / std::sqrt(var + eps);
    for (int c = 0; c < d; ++c)
      out[int64_t(r) * d + c] =
          (x[c] - mu) * inv * gain->val[c] + bias->val[c];
  }
  return make_op(std::move(out), {a, gain, bias}, [rows, d, eps](Node& n) {
    Var& a = n.parents[0];
    Var& gain = n.parents[1];
    Var& bias = n.parents[2];
    for (int r = 0; r < rows; ++r) {
      const double* x = a->val.data() + int64_t(r) * d;
      const double* g = n.grad.data() + int64_t(r) * d;
      double mu = 0.0;
      for (int c = 0; c < d; ++c) mu += x[c];
      mu /= d;
      double var = 0.0;
      for (int c = 0; c < d; ++c) var += (x[c] - mu) * (x[c] - mu);
      var /= d;
      double inv = 1.0 / std::sqrt(var + eps);
      if (gain->requires_grad) {
        gain->ensure_grad();
        for (int c = 0; c < d; ++c)
          gain->grad[c] += g[c] * (x[c] - mu) * inv;
      }
      if (bias->requires_grad) {
        bias->ensure_grad();
        for (int c = 0; c < d; ++c) bias->grad[c] += g[c];
      }
      if (a->requires_grad) {
        a->ensure_grad();
        // dxhat_c = g_c * gain_c
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (int c = 0; c < d; ++c) {
          double xhat = (x[c] - mu) * inv;
          double dxhat = g[c] * gain->val[c];
          sum_dxhat += dxhat;
          sum_dxhat_xhat += dxhat * xhat;
        }
        for (int c = 0; c < d; ++c) {
          double xhat = (x[c] - mu) * inv;
          double dxhat = g[c] * gain->val[c];
          a->grad[int64_t(r) * d + c] +=
              inv * (dxhat - sum_dxhat / d - xhat * sum_dxhat_xhat / d);
        }
      }
    }
  });
}

namespace {

// cols is [C*kh*kw, OH*OW] row-major.
void im2col(const double* x, int C, int H, int W, int kh, int kw, int stride,
            int pad, int OH, int OW, double* cols) {
  for (int c = 0; c < C; ++c)
    for (int ky = 0; ky < kh; ++ky)
      for (int kx = 0; kx < kw; ++kx) {
        double* row = cols + (int64_t(c) * kh * kw + ky * kw + kx) * OH * OW;
        for (int oy = 0; oy < OH; ++oy) {
          int iy = oy * stride + ky - pad;
          for (int ox = 0; ox < OW; ++ox) {
            int ix = ox * stride + kx - pad;
            row[oy * OW + ox] =
                (iy >= 0 && iy < H && ix >= 0 && ix < W)
                    ? x[int64_t(c) * H * W + int64_t(iy) * W + ix]
                    : 0.0;
          }
        }
      }
}

void col2im_accum(const double* cols, int C, int H, int W, int kh, int kw,
                  int stride, int pad, int OH, int OW, double* dx) {
  for (int c = 0; c < C; ++c)
    for (int ky = 0; ky < kh; ++ky)
      for (int kx = 0; kx < kw; ++kx) {
        const double* row =
            cols + (int64_t(c) * kh * kw + ky * kw + kx) * OH * OW;
        for (int oy = 0; oy < OH; ++oy) {
          int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= H) continue;
          for (int ox = 0; ox < OW; ++ox) {
            int ix = ox * stride + kx - pad;
            if (ix < 0 || ix >= W) continue;
            dx[int64_t(c) * H * W + int64_t(iy) * W + ix] += row[oy * OW + ox];
          }
        }
      }
}

}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  if (x->val.rank() != 4 || w->val.rank() != 4)
    throw std::invalid_argument("conv2d: x and w must be rank-4");
  int N = x->val.dim(0), C = x->val.dim(1), H = x->val.dim(2),
      W = x->val.dim(3);
  int OC = w->val.dim(0), kh = w->val.dim(2), kw = w->val.dim(3);
  if (w->val.dim(1) != C) throw std::invalid_argument("conv2d: channel mismatch");
  if (b->val.size() != OC) throw std::invalid_argument("conv2d: bias mismatch");
  int OH = (H + 2 * pad - kh) / stride + 1;
  int OW = (W + 2 * pad - kw) / stride + 1;
  if (OH <= 0 || OW <= 0) throw std::invalid_argument("conv2d: empty output");

  Tensor out({N, OC, OH, OW});
  Eigen::Map<const MatrixRM> Wm(w->val.data(), OC, C * kh * kw);
  Tensor cols({C * kh * kw, OH * OW});
  for (int n = 0; n < N; ++n) {
    im2col(x->val.data() + int64_t(n) * C * H * W, C, H, W, kh, kw, stride,
           pad, OH, OW, cols.data());
    Eigen::Map<MatrixRM> On(out.data() + int64_t(n) * OC * OH * OW, OC,
                            OH * OW);
    On.noalias() = Wm * cols.mat();
    for (int oc = 0; oc < OC; ++oc)
      On.row(oc).array() += b->val[oc];
  }

  return make_op(std::move(out), {x, w, b},
                 [N, C, H, W, OC, kh, kw, stride, pad, OH, OW](Node& n) {
    Var& x = n.parents[0];
    Var& w = n.parents[1];
    Var& b = n.parents[2];
    Eigen::Map<const MatrixRM> Wm(w->val.data(), OC, C * kh * kw);
    Tensor cols({C * kh * kw, OH * OW});
    Tensor dcols({C * kh * kw, OH * OW});
    if (x->requires_grad) x->ensure_grad();
    if (w->requires_grad) w->ensure_grad();
    if (b->requires_grad) b->ensure_grad();
    for (int s = 0; s < N; ++s) {
      Eigen::Map<const MatrixRM> Gn(n.grad.data() + int64_t(s) * OC * OH * OW,
                                    OC, OH * OW);
      if (b->requires_grad)
        for (int oc = 0; oc < OC; ++oc) b->grad[oc] += Gn.row(oc).sum();
      if (w->requires_grad || x->requires_grad)
        im2col(x->val.data() + int64_t(s) * C * H * W, C, H, W, kh, kw,
               stride, pad, OH, OW, cols.data());
      if (w->requires_grad) {
        Eigen::Map<MatrixRM> dWm(w->grad.data(), OC, C * kh * kw);
        dWm.noalias() += Gn * cols.mat().transpose();
      }
      if (x->requires_grad) {
        dcols.mat().noalias() = Wm.transpose() * Gn;
        col2im_accum(dcols.data(), C, H, W, kh, kw, stride, pad, OH, OW,
                     x->grad.data() + int64_t(s) * C * H * W);
      }
    }
  });
}

Var upsample_nearest2(const Var& x) {
  if (x->val.rank() != 4)
    throw std::invalid_argument("upsample_nearest2: rank-4 required");
  int N = x->val.dim(0), C = x->val.dim(1), H = x->val.dim(2),
      W = x->val.dim(3);
  Tensor out({N, C, 2 * H, 2 * W});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const double* src =
          x->val.data() + (int64_t(n) * C + c) * H * W;
      double* dst = out.data() + (int64_t(n) * C + c) * 4 * H * W;
      for (int y = 0; y < 2 * H; ++y)
        for (int xx = 0; xx < 2 * W; ++xx)
          dst[int64_t(y) * 2 * W + xx] = src[int64_t(y / 2) * W + xx / 2];
    }
  return make_op(std::move(out), {x}, [N, C, H, W](Node& n) {
    Var& x = n.parents[0];
    if (!x->requires_grad) return;
    x->ensure_grad();
    for (int s = 0; s < N; ++s)
      for (int c = 0; c < C; ++c) {
        const double* g = n.grad.data() + (int64_t(s) * C + c) * 4 * H * W;
        double* dx = x->grad.data() + (int64_t(s) * C + c) * H * W;
        for (int y = 0; y < 2 * H; ++y)
          for (int xx = 0; xx < 2 * W; ++xx)
            dx[int64_t(y / 2) * W + xx / 2] += g[int64_t(y) * 2 * W + xx];
      }
  });
}

}  // namespace sgnv
