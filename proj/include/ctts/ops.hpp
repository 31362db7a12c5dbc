#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ctts/tensor.hpp"

namespace ctts {

// Tape-recording tensor operations. Every op takes the tape as its first
// argument; pass nullptr to run forward-only (no gradient bookkeeping).
// An op records a backward rule only when a tape is given and at least one
// input tracks gradients.

// (m,k) x (k,n) -> (m,n)
Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b);

// (m,k) x (n,k) -> (m,n), computes a * transpose(b)
Tensor matmul_bt(Tape* tape, const Tensor& a, const Tensor& b);

// Same-length 1-D cross-correlation with zero padding: x (T,c_in),
// w (k,c_in,c_out), b (c_out) -> (T,c_out). Pad (k-1)/2 left, rest right.
Tensor conv1d_same(Tape* tape, const Tensor& x, const Tensor& w, const Tensor& b);

// elementwise max(0, x); subgradient at 0 is 0
Tensor relu(Tape* tape, const Tensor& x);

// per-row softmax with max subtraction, x (m,n) -> (m,n)
Tensor softmax_rows(Tape* tape, const Tensor& x);

// -log(probs[label]); probs is a probability vector of length C
// (shape (C) or (1,C), entries >= 0 and summing to 1 within 1e-9).
// A zero at the label index is clamped to 1e-12 and counted.
Tensor cross_entropy(Tape* tape, const Tensor& probs, int label_index);

std::int64_t cross_entropy_clamp_count();
void reset_cross_entropy_clamp_count();

// elementwise sum, same shapes
Tensor add(Tape* tape, const Tensor& a, const Tensor& b);

// x (m,n) + bias (n) added to every row
Tensor add_row_broadcast(Tape* tape, const Tensor& x, const Tensor& bias);

// multiply by a compile-time constant (not a tracked tensor)
Tensor scale(Tape* tape, const Tensor& x, double c);

// mean of rows [row_begin, row_end) of x (m,n) -> (1,n)
Tensor mean_rows_slice(Tape* tape, const Tensor& x, int row_begin, int row_end);

// average-pool rows in non-overlapping blocks of len `stride`; a shorter
// tail block is pooled as-is. x (T,d) -> (ceil(T/stride), d)
Tensor avgpool_rows(Tape* tape, const Tensor& x, int stride);

// stack single-row tensors (1,n) into (K,n)
Tensor concat_rows(Tape* tape, const std::vector<Tensor>& rows);

// Scalar loss as a function of the current parameter values. The tape
// argument is nullptr during finite-difference evaluations.
using LossFn = std::function<Tensor(Tape*)>;

// Compares tape gradients of f against central differences for every
// entry of every parameter; returns the maximum relative error
// |g - g_fd| / max(1e-8, |g| + |g_fd|).
double grad_check(const LossFn& f, const std::vector<Tensor>& params, double step);

}  // namespace ctts
