#include "resae/tape.hpp"

#include <stdexcept>

#include "resae/errors.hpp"

namespace resae::ad {

const Tensor& Var::value() const { return tape_->value(id_); }

const Tensor& Var::grad() const { return tape_->grad(id_); }

bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Tape::Tape(Mode mode, std::uint64_t seed) : mode_(mode), rng_(seed) {}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, false, false, {}, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
  nodes_.push_back(Node{p.value, {}, true, false, {}, &p});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn) {
  return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                std::move(fn));
}

Var Tape::record(Tensor value, std::span<const Var> parents, BackwardFn fn) {
  bool needs = false;
  for (const auto& p : parents) {
    if (p.tape() != this) throw std::logic_error("Tape::record: operand from another tape");
    needs = needs || nodes_[p.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs, false,
                        needs ? std::move(fn) : BackwardFn{}, nullptr});
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::grad(std::size_t id) const {
  const Node& n = nodes_[id];
  if (!n.has_grad) {
    // Lazily report zeros without mutating the node.
    const_cast<Tape*>(this)->empty_ = Tensor(n.value.shape());
    return empty_;
  }
  return n.grad;
}

Tensor* Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return nullptr;
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape());
    n.has_grad = true;
  }
  return &n.grad;
}

void Tape::backward(const Var& root) {
  if (root.tape() != this) throw std::logic_error("Tape::backward: root from another tape");
  if (value(root.id()).size() != 1) {
    throw ShapeError("Tape::backward: root must be a single element, got " +
                     shape_str(value(root.id()).shape()));
  }
  for (auto& n : nodes_) {
    if (n.has_grad) n.grad.fill(0.0);
  }
  Tensor* seed = grad_buffer(root.id());
  if (seed == nullptr) return;
  (*seed)[0] = 1.0;
  for (std::size_t id = root.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.has_grad) continue;
    if (n.backward) n.backward(*this, id);
    if (n.param != nullptr) {
      double* dst = n.param->grad.raw();
      const double* src = n.grad.raw();
      for (std::size_t i = 0; i < n.grad.size(); ++i) dst[i] += src[i];
    }
  }
}

}  // namespace resae::ad
