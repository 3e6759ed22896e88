#pragma once

// Central finite-difference oracle. It only ever runs forward passes on
// fresh non-recording graphs, so it shares no code path with backward().

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "kgaug/numerics/graph.hpp"
#include "kgaug/numerics/ops.hpp"

namespace testing {

using kgaug::num::Graph;
using kgaug::num::Parameter;
using kgaug::num::Tensor;
using kgaug::num::Var;

// ||a - n|| / max(||a||, ||n||, floor). The floor keeps all-zero gradients
// (unused parameters, inactive hinges) from dividing by zero.
inline double relative_error(const Tensor& analytic, const Tensor& numeric, double floor = 1e-6) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), floor});
}

struct GradCheck {
  double worst = 0.0;
  std::string worst_param;
};

template <typename Build>
Tensor numeric_gradient(Parameter& p, Build&& build, double step = 1e-5) {
  Tensor out(p.value.shape());
  for (std::size_t i = 0; i < p.value.size(); ++i) {
    const double saved = p.value[i];
    p.value[i] = saved + step;
    double up;
    {
      Graph g(false);
      up = build(g).value().item();
    }
    p.value[i] = saved - step;
    double down;
    {
      Graph g(false);
      down = build(g).value().item();
    }
    p.value[i] = saved;
    out[i] = (up - down) / (2.0 * step);
  }
  return out;
}

// `build` must create every parameter in `params` through g.param().
template <typename Build>
GradCheck check_gradients(const std::vector<Parameter*>& params, Build&& build,
                          double step = 1e-5) {
  for (Parameter* p : params) p->zero_grad();
  {
    Graph g;
    Var loss = build(g);
    g.backward(loss);
  }
  GradCheck result;
  for (Parameter* p : params) {
    const Tensor analytic = p->grad;
    const Tensor numeric = numeric_gradient(*p, build, step);
    const double err = relative_error(analytic, numeric);
    if (err >= result.worst) {
      result.worst = err;
      result.worst_param = p->name;
    }
  }
  return result;
}

inline Tensor random_tensor(std::mt19937_64& rng, kgaug::num::Shape shape, double scale = 1.0) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, scale);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

// Fixed random weights so that a vector-valued output can be reduced to a
// scalar loss with a non-degenerate gradient.
inline Var weighted_sum(Graph& g, Var y, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  Var w = g.constant(random_tensor(rng, y.value().shape()));
  return kgaug::num::sum(kgaug::num::mul(y, w));
}

}  // namespace testing
