#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "kgaug/numerics/graph.hpp"

namespace kgaug::num {

// Differentiable operations. Every op appends one node to the graph of its
// first argument; all arguments must belong to the same graph.

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
// a[p x q] + bias broadcast over rows (bias has q elements).
Var add_row(Var a, Var bias);

Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);

Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
// Rows of `table` selected by ids; backward scatter-adds.
Var gather_rows(Var table, std::span<const std::size_t> ids);

// Row-wise softmax with max subtraction. Rank 1 inputs are one row.
Var softmax(Var z);
// Mean over rows of -log p[row, label[row]].
Var cross_entropy(Var probs, std::span<const std::size_t> labels);
Var sum(Var a);
Var mean(Var a);

// Average of steps[t] (each B x n) over the steps where mask[b][t] is 1.
// Rows with no real steps are a domain error.
Var masked_mean(std::span<const Var> steps, const std::vector<std::vector<bool>>& mask);

// Row-validity mask carried through the cluster convolution stack.
struct MaskedVar {
  Var value;
  std::vector<bool> valid;
};

// Column-wise 1-D convolution: out(i, j) = sum_k w[k] * x(i*stride + k, j).
// Output rows whose window holds no valid input row are zero and invalid.
MaskedVar conv1d_col(Var x, const std::vector<bool>& valid, Var filter, std::size_t stride);
Var conv1d_col(Var x, Var filter, std::size_t stride);
std::size_t conv_output_rows(std::size_t rows, std::size_t kernel, std::size_t stride);

// Column-wise max over windows starting every `stride` rows; a trailing
// partial window is pooled as-is. Invalid rows never win the max.
MaskedVar maxpool_col(Var x, const std::vector<bool>& valid, std::size_t window, std::size_t stride);
Var maxpool_col(Var x, std::size_t window);
std::size_t pool_output_rows(std::size_t rows, std::size_t window, std::size_t stride);

}  // namespace kgaug::num
