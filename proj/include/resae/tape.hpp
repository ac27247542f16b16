#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <random>
#include <span>

#include "resae/param_store.hpp"
#include "resae/tensor.hpp"

namespace resae::ad {

enum class Mode { kEval, kTrain };

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
// owning Tape is alive.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  // Gradient accumulated by the last backward(); zeros if none flowed here.
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;

  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Ordered record of forward ops. Node ids increase in creation order, which is
// a topological order, so backward() walks ids from the root downwards.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape& tape, std::size_t self)>;

  explicit Tape(Mode mode = Mode::kEval, std::uint64_t seed = 0);
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Leaf bound to a parameter. backward() adds its gradient into p.grad.
  Var param(Parameter& p);

  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn);
  Var record(Tensor value, std::span<const Var> parents, BackwardFn fn);

  // Seeds d(root) = 1; root must hold a single element.
  void backward(const Var& root);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  // Upstream gradient of a node during backward.
  const Tensor& grad(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  // Accumulator of a node, allocated on first use; nullptr when the node does
  // not lead to any parameter.
  Tensor* grad_buffer(std::size_t id);

  Mode mode() const noexcept { return mode_; }
  bool training() const noexcept { return mode_ == Mode::kTrain; }
  std::mt19937_64& rng() noexcept { return rng_; }
  // Set by ops that sample randomness (dropout in train mode).
  void mark_stochastic() noexcept { stochastic_ = true; }
  bool stochastic() const noexcept { return stochastic_; }
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
    Parameter* param = nullptr;
  };

  Mode mode_;
  std::mt19937_64 rng_;
  bool stochastic_ = false;
  std::deque<Node> nodes_;
  Tensor empty_;
};

}  // namespace resae::ad
