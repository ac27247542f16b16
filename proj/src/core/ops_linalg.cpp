#include <cmath>

#include "ops_common.hpp"
#include "resae/ops.hpp"

namespace resae::ad {

using detail::accumulate;
using detail::require_rank2;
using detail::shape_fail;
using detail::tape_of;

Var matmul(const Var& a, const Var& b) {
  Tape& tape = tape_of(a);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2("matmul", av);
  require_rank2("matmul", bv);
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  if (bv.dim(0) != k) shape_fail("matmul", av.shape(), bv.shape());
  Tensor out({m, n});
  simd::active().gemm_nn(m, n, k, av.raw(), bv.raw(), out.raw());
  return tape.record(std::move(out), {a, b}, [ia = a.id(), ib = b.id(), m, n, k](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const auto& kern = simd::active();
    if (Tensor* ga = t.grad_buffer(ia)) kern.gemm_nt(m, k, n, g.raw(), t.value(ib).raw(), ga->raw());
    if (Tensor* gb = t.grad_buffer(ib)) kern.gemm_tn(k, n, m, t.value(ia).raw(), g.raw(), gb->raw());
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  Tape& tape = tape_of(a);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2("matmul_nt", av);
  require_rank2("matmul_nt", bv);
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(0);
  if (bv.dim(1) != k) shape_fail("matmul_nt", av.shape(), bv.shape());
  Tensor out({m, n});
  simd::active().gemm_nt(m, n, k, av.raw(), bv.raw(), out.raw());
  return tape.record(std::move(out), {a, b}, [ia = a.id(), ib = b.id(), m, n, k](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const auto& kern = simd::active();
    // dA = G B, dB = G^T A
    if (Tensor* ga = t.grad_buffer(ia)) kern.gemm_nn(m, k, n, g.raw(), t.value(ib).raw(), ga->raw());
    if (Tensor* gb = t.grad_buffer(ib)) kern.gemm_tn(n, k, m, g.raw(), t.value(ia).raw(), gb->raw());
  });
}

Var transpose(const Var& a) {
  Tape& tape = tape_of(a);
  const Tensor& av = a.value();
  require_rank2("transpose", av);
  const std::size_t m = av.dim(0), n = av.dim(1);
  Tensor out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(j, i) = av.at(i, j);
  return tape.record(std::move(out), {a}, [ia = a.id(), m, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (Tensor* ga = t.grad_buffer(ia)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) ga->at(i, j) += g.at(j, i);
    }
  });
}

namespace {

void require_same(std::string_view op, const Var& a, const Var& b) {
  if (a.shape() != b.shape()) shape_fail(op, a.shape(), b.shape());
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same("add", a, b);
  Tensor out = a.value();
  simd::active().axpy(1.0, b.value().raw(), out.raw(), out.size());
  return tape_of(a).record(std::move(out), {a, b}, [ia = a.id(), ib = b.id()](Tape& t, std::size_t self) {
    accumulate(t.grad_buffer(ia), t.grad(self));
    accumulate(t.grad_buffer(ib), t.grad(self));
  });
}

Var sub(const Var& a, const Var& b) {
  require_same("sub", a, b);
  Tensor out = a.value();
  simd::active().axpy(-1.0, b.value().raw(), out.raw(), out.size());
  return tape_of(a).record(std::move(out), {a, b}, [ia = a.id(), ib = b.id()](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    accumulate(t.grad_buffer(ia), g);
    if (Tensor* gb = t.grad_buffer(ib)) simd::active().axpy(-1.0, g.raw(), gb->raw(), g.size());
  });
}

Var mul(const Var& a, const Var& b) {
  require_same("mul", a, b);
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return tape_of(a).record(std::move(out), {a, b}, [ia = a.id(), ib = b.id()](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (Tensor* ga = t.grad_buffer(ia)) {
      const Tensor& bv = t.value(ib);
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * bv[i];
    }
    if (Tensor* gb = t.grad_buffer(ib)) {
      const Tensor& av = t.value(ia);
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * av[i];
    }
  });
}

Var scale(const Var& a, double c) {
  Tensor out = a.value();
  for (auto& v : out.values()) v *= c;
  return tape_of(a).record(std::move(out), {a}, [ia = a.id(), c](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (Tensor* ga = t.grad_buffer(ia)) simd::active().axpy(c, g.raw(), ga->raw(), g.size());
  });
}

Var scale_by(const Var& a, const Var& s) {
  if (s.value().size() != 1) shape_fail("scale_by", a.shape(), s.shape());
  const double c = s.value()[0];
  Tensor out = a.value();
  for (auto& v : out.values()) v *= c;
  return tape_of(a).record(std::move(out), {a, s}, [ia = a.id(), is = s.id()](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (Tensor* ga = t.grad_buffer(ia)) simd::active().axpy(t.value(is)[0], g.raw(), ga->raw(), g.size());
    if (Tensor* gs = t.grad_buffer(is)) {
      (*gs)[0] += simd::active().dot(g.raw(), t.value(ia).raw(), g.size());
    }
  });
}

Var add_bias(const Var& x, const Var& bias) {
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  if (xv.rank() > 2 || bv.size() != xv.cols()) shape_fail("add_bias", xv.shape(), bv.shape());
  Tensor out = xv;
  const std::size_t m = out.rows(), n = out.cols();
  for (std::size_t i = 0; i < m; ++i) simd::active().axpy(1.0, bv.raw(), out.raw() + i * n, n);
  return tape_of(x).record(std::move(out), {x, bias}, [ix = x.id(), ib = bias.id(), m, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    accumulate(t.grad_buffer(ix), g);
    if (Tensor* gb = t.grad_buffer(ib)) {
      for (std::size_t i = 0; i < m; ++i) simd::active().axpy(1.0, g.raw() + i * n, gb->raw(), n);
    }
  });
}

Var reshape(const Var& x, Shape shape) {
  Tensor out = x.value();
  out.reshape(std::move(shape));
  return tape_of(x).record(std::move(out), {x}, [ix = x.id()](Tape& t, std::size_t self) {
    if (Tensor* gx = t.grad_buffer(ix)) {
      simd::active().axpy(1.0, t.grad(self).raw(), gx->raw(), gx->size());
    }
  });
}

namespace {

Var reduce_axis(const Var& x, std::size_t axis, bool average, std::string_view op) {
  const Tensor& xv = x.value();
  if (xv.rank() == 0 || xv.rank() > 2 || axis >= xv.rank()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " invalid for " +
                     shape_str(xv.shape()));
  }
  const std::size_t m = xv.rows(), n = xv.cols();
  // Rank-1 inputs reduce along their only axis to a scalar.
  const bool along_cols = xv.rank() == 1 || axis == 1;
  const std::size_t extent = along_cols ? n : m;
  const double factor = average ? 1.0 / static_cast<double>(extent) : 1.0;
  Tensor out = xv.rank() == 1 ? Tensor(Shape{}) : Tensor(along_cols ? Shape{m} : Shape{n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[along_cols ? i : j] += xv[i * n + j] * factor;
  return tape_of(x).record(std::move(out), {x}, [ix = x.id(), m, n, along_cols, factor](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (Tensor* gx = t.grad_buffer(ix)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) (*gx)[i * n + j] += g[along_cols ? i : j] * factor;
    }
  });
}

Var reduce_all(const Var& x, bool average) {
  const Tensor& xv = x.value();
  double total = 0.0;
  for (double v : xv.values()) total += v;
  const double factor = average && xv.size() > 0 ? 1.0 / static_cast<double>(xv.size()) : 1.0;
  return tape_of(x).record(Tensor::scalar(total * factor), {x}, [ix = x.id(), factor](Tape& t, std::size_t self) {
    if (Tensor* gx = t.grad_buffer(ix)) {
      const double g = t.grad(self)[0] * factor;
      for (auto& v : gx->values()) v += g;
    }
  });
}

}  // namespace

Var sum(const Var& x, std::size_t axis) { return reduce_axis(x, axis, false, "sum"); }
Var mean(const Var& x, std::size_t axis) { return reduce_axis(x, axis, true, "mean"); }
Var sum_all(const Var& x) { return reduce_all(x, false); }
Var mean_all(const Var& x) { return reduce_all(x, true); }

}  // namespace resae::ad
