#pragma once

#include <cstddef>
#include <random>
#include <string>

#include "kgaug/numerics/graph.hpp"

namespace kgaug::num {

// Standard LSTM (no peepholes). Gate blocks along the 4n axis are ordered
// input, forget, candidate, output.
struct LstmParams {
  Parameter input_weights;      // d x 4n
  Parameter recurrent_weights;  // n x 4n
  Parameter bias;               // 4n

  std::size_t input_dim() const { return input_weights.value.rows(); }
  std::size_t hidden_dim() const { return recurrent_weights.value.rows(); }

  static LstmParams zeros(const std::string& name, std::size_t input_dim, std::size_t hidden_dim);
  // Uniform(-1/sqrt(n), 1/sqrt(n)) weights, forget-gate bias 1.
  static LstmParams random(const std::string& name, std::size_t input_dim,
                           std::size_t hidden_dim, std::mt19937_64& rng);
};

struct LstmVars {
  Var input_weights;
  Var recurrent_weights;
  Var bias;
};

struct LstmState {
  Var h;
  Var c;
};

LstmVars bind(Graph& g, LstmParams& params);

// Zero initial state for a batch of `rows` sequences.
LstmState lstm_zero_state(Graph& g, std::size_t rows, std::size_t hidden_dim);

// One step for a batch: x is B x d, state tensors are B x n.
LstmState lstm_cell(Var x, const LstmState& state, const LstmVars& params);

}  // namespace kgaug::num
