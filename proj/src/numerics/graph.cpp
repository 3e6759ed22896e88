#include "kgaug/numerics/graph.hpp"

#include <algorithm>

#include "kgaug/error.hpp"

namespace kgaug::num {

Parameter::Parameter(std::string n, Tensor v)
    : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

void Parameter::zero_grad() {
  if (grad.shape() != value.shape()) grad = Tensor(value.shape());
  grad.fill(0.0);
}

const Tensor& Var::value() const { return graph_->value(id_); }

Tensor Var::grad() const { return graph_->grad(id_); }

Var Graph::constant(Tensor value) {
  if (!value.all_finite()) throw DomainError("non-finite constant");
  nodes_.push_back(Node{std::move(value), {}, {}, {}, nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Graph::param(Parameter& p) {
  if (!p.value.all_finite()) throw DomainError("non-finite parameter " + p.name);
  nodes_.push_back(Node{p.value, {}, {}, {}, &p, record_ && p.trainable});
  return Var(this, nodes_.size() - 1);
}

Var Graph::variable(Tensor value) {
  if (!value.all_finite()) throw DomainError("non-finite variable");
  nodes_.push_back(Node{std::move(value), {}, {}, {}, nullptr, record_});
  return Var(this, nodes_.size() - 1);
}

Tensor Graph::grad(std::size_t id) const {
  const Node& n = nodes_[id];
  if (n.grad.empty() && n.value.size() != 0) return Tensor(n.value.shape());
  return n.grad;
}

Tensor& Graph::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

Var Graph::push(const char* op, Tensor value, std::vector<std::size_t> inputs, Backward backward) {
  if (!value.all_finite()) {
    throw DomainError(std::string("non-finite output from ") + op);
  }
  bool needs = false;
  if (record_) {
    needs = std::any_of(inputs.begin(), inputs.end(),
                        [this](std::size_t i) { return nodes_[i].requires_grad; });
  }
  Node node{std::move(value), {}, {}, {}, nullptr, needs};
  if (needs) {
    node.inputs = std::move(inputs);
    node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Graph::backward(Var loss) {
  if (&loss.graph() != this) throw Error("backward: loss belongs to another graph");
  if (backward_done_) throw Error("backward called twice on one graph");
  if (!record_) throw Error("backward on a non-recording graph");
  if (value(loss.id()).size() != 1) {
    throw DimensionError("backward needs a scalar loss, got " +
                         shape_string(value(loss.id()).shape()));
  }
  backward_done_ = true;
  grad_buffer(loss.id())[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, i);
  }
  for (Node& n : nodes_) {
    if (n.param == nullptr || !n.requires_grad || n.grad.empty()) continue;
    Parameter& p = *n.param;
    if (p.grad.shape() != p.value.shape()) p.grad = Tensor(p.value.shape());
    auto dst = p.grad.data();
    auto src = n.grad.data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }
}

}  // namespace kgaug::num
