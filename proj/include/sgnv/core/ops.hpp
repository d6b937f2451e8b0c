#pragma once

#include "sgnv/core/autodiff.hpp"

namespace sgnv {

// Elementwise / scalar
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, double c);

// Nonlinearities
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var softplus(const Var& a);
Var exp_v(const Var& a);
Var log_v(const Var& a);

// Reductions
Var sum(const Var& a);   // -> [1]
Var mean(const Var& a);  // -> [1]

// Shape
Var reshape(const Var& a, std::vector<int> shape);
Var transpose(const Var& a);  // rank-2
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var slice_rows(const Var& a, int row0, int nrows);
Var slice_cols(const Var& a, int col0, int ncols);

// Linear algebra
Var matmul(const Var& a, const Var& b);       // [m,k] x [k,n]
Var add_rowvec(const Var& a, const Var& b);   // [m,n] + broadcast [1,n]

// Rows of a as a lookup table; idx entries may repeat.
Var gather_rows(const Var& a, std::vector<int> idx);

// out.row(s) = sum_{j in [offsets[s], offsets[s+1])} w[j] * a.row(idx[j]).
// Rows with an empty range come out zero.
Var weighted_gather_rows(const Var& a, std::vector<int> idx,
                         std::vector<double> w, std::vector<int> offsets);

// Softmax family (row-wise over the last dim of a rank-2 tensor).
// Entries equal to -inf are treated as masked and get probability exactly 0.
Var log_softmax_rows(const Var& a);
Var softmax_rows(const Var& a);

// Row-wise layer norm with learned gain/bias of shape [1,d].
Var layer_norm_rows(const Var& a, const Var& gain, const Var& bias,
                    double eps = 1e-6);

// x [N,C,H,W], w [OC,C,kh,kw], b [OC]; zero padding.
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
Var upsample_nearest2(const Var& x);  // [N,C,H,W] -> [N,C,2H,2W]

}  // namespace sgnv
