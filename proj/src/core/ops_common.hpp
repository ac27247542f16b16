#pragma once

#include <string>
#include <string_view>

#include "resae/errors.hpp"
#include "resae/simd/kernels.hpp"
#include "resae/tape.hpp"

namespace resae::ad::detail {

inline Tape& tape_of(const Var& a) {
  if (!a.valid()) throw std::logic_error("op on an unbound Var");
  return *a.tape();
}

[[noreturn]] inline void shape_fail(std::string_view op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " +
                   shape_str(b));
}

inline void require_rank2(std::string_view op, const Tensor& t) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a rank-2 operand, got " +
                     shape_str(t.shape()));
  }
}

inline void accumulate(Tensor* dst, const Tensor& src) {
  if (!dst) return;
  simd::active().axpy(1.0, src.raw(), dst->raw(), src.size());
}

}  // namespace resae::ad::detail
