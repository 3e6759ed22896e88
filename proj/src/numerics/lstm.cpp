#include "kgaug/numerics/lstm.hpp"

#include <cmath>

#include "kgaug/error.hpp"
#include "kgaug/numerics/ops.hpp"

namespace kgaug::num {

LstmParams LstmParams::zeros(const std::string& name, std::size_t d, std::size_t n) {
  return LstmParams{Parameter(name + ".W", Tensor({d, 4 * n})),
                    Parameter(name + ".U", Tensor({n, 4 * n})),
                    Parameter(name + ".b", Tensor({4 * n}))};
}

LstmParams LstmParams::random(const std::string& name, std::size_t d, std::size_t n,
                              std::mt19937_64& rng) {
  LstmParams p = zeros(name, d, n);
  const double bound = 1.0 / std::sqrt(static_cast<double>(n));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : p.input_weights.value.data()) v = dist(rng);
  for (double& v : p.recurrent_weights.value.data()) v = dist(rng);
  for (std::size_t j = n; j < 2 * n; ++j) p.bias.value[j] = 1.0;
  return p;
}

LstmVars bind(Graph& g, LstmParams& params) {
  return {g.param(params.input_weights), g.param(params.recurrent_weights), g.param(params.bias)};
}

LstmState lstm_zero_state(Graph& g, std::size_t rows, std::size_t hidden_dim) {
  return {g.constant(Tensor({rows, hidden_dim})), g.constant(Tensor({rows, hidden_dim}))};
}

LstmState lstm_cell(Var x, const LstmState& state, const LstmVars& p) {
  const std::size_t n = p.recurrent_weights.rows();
  if (p.recurrent_weights.cols() != 4 * n || p.input_weights.cols() != 4 * n ||
      p.bias.value().size() != 4 * n) {
    throw DimensionError("lstm_cell: inconsistent parameter shapes " +
                         shape_string(p.input_weights.shape()) + ", " +
                         shape_string(p.recurrent_weights.shape()) + ", " +
                         shape_string(p.bias.shape()));
  }
  if (x.cols() != p.input_weights.rows()) {
    throw DimensionError("lstm_cell: input " + shape_string(x.shape()) + " vs weights " +
                         shape_string(p.input_weights.shape()));
  }
  if (state.h.cols() != n || state.c.cols() != n || state.h.rows() != x.rows()) {
    throw DimensionError("lstm_cell: state " + shape_string(state.h.shape()) +
                         " does not match hidden size " + std::to_string(n));
  }
  Var z = add_row(add(matmul(x, p.input_weights), matmul(state.h, p.recurrent_weights)), p.bias);
  Var in_gate = sigmoid(slice_cols(z, 0, n));
  Var forget_gate = sigmoid(slice_cols(z, n, n));
  Var candidate = tanh(slice_cols(z, 2 * n, n));
  Var out_gate = sigmoid(slice_cols(z, 3 * n, n));
  Var c = add(mul(forget_gate, state.c), mul(in_gate, candidate));
  Var h = mul(out_gate, tanh(c));
  return {h, c};
}

}  // namespace kgaug::num
