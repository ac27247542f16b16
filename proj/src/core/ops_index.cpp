#include <algorithm>
#include <limits>

#include "ops_common.hpp"
#include "resae/ops.hpp"

namespace resae::ad {

using detail::accumulate;
using detail::require_rank2;
using detail::shape_fail;
using detail::tape_of;

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  if (axis > 1) throw ShapeError("concat: axis must be 0 or 1");
  const Tensor& first = parts[0].value();
  require_rank2("concat", first);
  const std::size_t fixed = axis == 0 ? first.dim(1) : first.dim(0);
  std::vector<std::size_t> extents;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const Tensor& v = p.value();
    require_rank2("concat", v);
    if ((axis == 0 ? v.dim(1) : v.dim(0)) != fixed) shape_fail("concat", first.shape(), v.shape());
    extents.push_back(v.dim(axis));
    total += v.dim(axis);
  }
  const std::size_t rows = axis == 0 ? total : fixed;
  const std::size_t cols = axis == 0 ? fixed : total;
  Tensor out({rows, cols});
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Tensor& v = parts[p].value();
    if (axis == 0) {
      std::copy(v.raw(), v.raw() + v.size(), out.raw() + offset * cols);
    } else {
      for (std::size_t r = 0; r < rows; ++r)
        std::copy(v.raw() + r * extents[p], v.raw() + (r + 1) * extents[p],
                  out.raw() + r * cols + offset);
    }
    offset += extents[p];
  }
  std::vector<std::size_t> ids;
  for (const auto& p : parts) ids.push_back(p.id());
  return tape_of(parts[0]).record(std::move(out), parts,
      [ids, extents, axis, rows, cols](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        std::size_t offset = 0;
        for (std::size_t p = 0; p < ids.size(); ++p) {
          if (Tensor* gp = t.grad_buffer(ids[p])) {
            if (axis == 0) {
              simd::active().axpy(1.0, g.raw() + offset * cols, gp->raw(), gp->size());
            } else {
              for (std::size_t r = 0; r < rows; ++r)
                simd::active().axpy(1.0, g.raw() + r * cols + offset,
                                    gp->raw() + r * extents[p], extents[p]);
            }
          }
          offset += extents[p];
        }
      });
}

Var slice(const Var& x, std::size_t axis, std::size_t begin, std::size_t length) {
  const Tensor& xv = x.value();
  require_rank2("slice", xv);
  if (axis > 1 || begin + length > xv.dim(axis)) {
    throw ShapeError("slice: range [" + std::to_string(begin) + ", " +
                     std::to_string(begin + length) + ") on axis " + std::to_string(axis) +
                     " exceeds " + shape_str(xv.shape()));
  }
  const std::size_t rows = xv.dim(0), cols = xv.dim(1);
  const std::size_t out_rows = axis == 0 ? length : rows;
  const std::size_t out_cols = axis == 0 ? cols : length;
  Tensor out({out_rows, out_cols});
  for (std::size_t r = 0; r < out_rows; ++r) {
    const double* src = axis == 0 ? xv.raw() + (begin + r) * cols : xv.raw() + r * cols + begin;
    std::copy(src, src + out_cols, out.raw() + r * out_cols);
  }
  return tape_of(x).record(std::move(out), {x},
      [ix = x.id(), axis, begin, cols, out_rows, out_cols](Tape& t, std::size_t self) {
        Tensor* gx = t.grad_buffer(ix);
        if (!gx) return;
        const Tensor& g = t.grad(self);
        for (std::size_t r = 0; r < out_rows; ++r) {
          double* dst = axis == 0 ? gx->raw() + (begin + r) * cols : gx->raw() + r * cols + begin;
          simd::active().axpy(1.0, g.raw() + r * out_cols, dst, out_cols);
        }
      });
}

std::vector<Var> split(const Var& x, std::size_t axis, std::span<const std::size_t> sizes) {
  std::size_t total = 0;
  for (auto s : sizes) total += s;
  require_rank2("split", x.value());
  if (axis > 1 || total != x.value().dim(axis)) {
    throw ShapeError("split: sizes sum to " + std::to_string(total) + " but axis " +
                     std::to_string(axis) + " of " + shape_str(x.shape()) + " differs");
  }
  std::vector<Var> out;
  std::size_t offset = 0;
  for (auto s : sizes) {
    out.push_back(slice(x, axis, offset, s));
    offset += s;
  }
  return out;
}

Var gather_rows(const Var& table, std::span<const std::size_t> index) {
  const Tensor& tv = table.value();
  require_rank2("gather_rows", tv);
  const std::size_t n = tv.dim(1), rows = tv.dim(0);
  Tensor out({index.size(), n});
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= rows) {
      throw ShapeError("gather_rows: index " + std::to_string(index[i]) +
                       " out of range for " + shape_str(tv.shape()));
    }
    std::copy(tv.raw() + index[i] * n, tv.raw() + (index[i] + 1) * n, out.raw() + i * n);
  }
  return tape_of(table).record(std::move(out), {table},
      [it = table.id(), idx = std::vector<std::size_t>(index.begin(), index.end()), n](Tape& t, std::size_t self) {
        Tensor* gt = t.grad_buffer(it);
        if (!gt) return;
        const Tensor& g = t.grad(self);
        for (std::size_t i = 0; i < idx.size(); ++i)
          simd::active().axpy(1.0, g.raw() + i * n, gt->raw() + idx[i] * n, n);
      });
}

Var scatter_add_rows(const Var& src, std::span<const std::size_t> index, std::size_t n_rows) {
  const Tensor& sv = src.value();
  require_rank2("scatter_add_rows", sv);
  if (index.size() != sv.dim(0)) {
    throw ShapeError("scatter_add_rows: " + std::to_string(index.size()) +
                     " indices for source " + shape_str(sv.shape()));
  }
  const std::size_t n = sv.dim(1);
  Tensor out({n_rows, n});
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= n_rows) {
      throw ShapeError("scatter_add_rows: index " + std::to_string(index[i]) +
                       " out of range for " + std::to_string(n_rows) + " rows");
    }
    simd::active().axpy(1.0, sv.raw() + i * n, out.raw() + index[i] * n, n);
  }
  return tape_of(src).record(std::move(out), {src},
      [is = src.id(), idx = std::vector<std::size_t>(index.begin(), index.end()), n](Tape& t, std::size_t self) {
        Tensor* gs = t.grad_buffer(is);
        if (!gs) return;
        const Tensor& g = t.grad(self);
        for (std::size_t i = 0; i < idx.size(); ++i)
          simd::active().axpy(1.0, g.raw() + idx[i] * n, gs->raw() + i * n, n);
      });
}

Var gather_elements(const Var& x, std::span<const std::size_t> rows,
                    std::span<const std::size_t> cols) {
  const Tensor& xv = x.value();
  require_rank2("gather_elements", xv);
  if (rows.size() != cols.size()) {
    throw ShapeError("gather_elements: " + std::to_string(rows.size()) + " rows vs " +
                     std::to_string(cols.size()) + " cols");
  }
  const std::size_t n = xv.dim(1);
  Tensor out({rows.size()});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= xv.dim(0) || cols[i] >= n) {
      throw ShapeError("gather_elements: index out of range for " + shape_str(xv.shape()));
    }
    out[i] = xv[rows[i] * n + cols[i]];
  }
  std::vector<std::size_t> flat(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) flat[i] = rows[i] * n + cols[i];
  return tape_of(x).record(std::move(out), {x}, [ix = x.id(), flat = std::move(flat)](Tape& t, std::size_t self) {
    Tensor* gx = t.grad_buffer(ix);
    if (!gx) return;
    const Tensor& g = t.grad(self);
    for (std::size_t i = 0; i < flat.size(); ++i) (*gx)[flat[i]] += g[i];
  });
}

Var scale_rows(const Var& x, const Var& weights) {
  const Tensor& xv = x.value();
  const Tensor& wv = weights.value();
  require_rank2("scale_rows", xv);
  if (wv.size() != xv.dim(0)) shape_fail("scale_rows", xv.shape(), wv.shape());
  const std::size_t m = xv.dim(0), n = xv.dim(1);
  Tensor out = xv;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] *= wv[i];
  return tape_of(x).record(std::move(out), {x, weights}, [ix = x.id(), iw = weights.id(), m, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (Tensor* gx = t.grad_buffer(ix)) {
      const Tensor& wv = t.value(iw);
      for (std::size_t i = 0; i < m; ++i) simd::active().axpy(wv[i], g.raw() + i * n, gx->raw() + i * n, n);
    }
    if (Tensor* gw = t.grad_buffer(iw)) {
      const Tensor& xv = t.value(ix);
      for (std::size_t i = 0; i < m; ++i) (*gw)[i] += simd::active().dot(g.raw() + i * n, xv.raw() + i * n, n);
    }
  });
}

Var scale_rows(const Var& x, std::span<const double> weights) {
  Tensor w({weights.size()}, std::vector<double>(weights.begin(), weights.end()));
  return scale_rows(x, tape_of(x).constant(std::move(w)));
}

Var segment_pool(const Var& x, std::span<const std::int64_t> segment, std::size_t n_segments,
                 Pool pool) {
  const Tensor& xv = x.value();
  require_rank2("segment_pool", xv);
  if (segment.size() != xv.dim(0)) {
    throw ShapeError("segment_pool: " + std::to_string(segment.size()) +
                     " segment ids for " + shape_str(xv.shape()));
  }
  const std::size_t m = xv.dim(0), n = xv.dim(1);
  std::vector<std::size_t> count(n_segments, 0);
  for (auto s : segment) {
    if (s >= static_cast<std::int64_t>(n_segments)) {
      throw ShapeError("segment_pool: segment id " + std::to_string(s) + " >= " +
                       std::to_string(n_segments));
    }
    if (s >= 0) ++count[s];
  }
  Tensor out({n_segments, n});
  std::vector<std::size_t> argmax;  // per output element, source row (max pool)
  if (pool == Pool::kMax) {
    argmax.assign(n_segments * n, std::numeric_limits<std::size_t>::max());
    for (std::size_t i = 0; i < m; ++i) {
      if (segment[i] < 0) continue;
      const std::size_t s = segment[i];
      for (std::size_t j = 0; j < n; ++j) {
        std::size_t& best = argmax[s * n + j];
        if (best == std::numeric_limits<std::size_t>::max() || xv[i * n + j] > xv[best * n + j]) best = i;
      }
    }
    for (std::size_t k = 0; k < argmax.size(); ++k)
      if (argmax[k] != std::numeric_limits<std::size_t>::max()) out[k] = xv[argmax[k] * n + k % n];
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      if (segment[i] < 0) continue;
      const double w = pool == Pool::kMean ? 1.0 / static_cast<double>(count[segment[i]]) : 1.0;
      simd::active().axpy(w, xv.raw() + i * n, out.raw() + segment[i] * n, n);
    }
  }
  return tape_of(x).record(std::move(out), {x},
      [ix = x.id(), seg = std::vector<std::int64_t>(segment.begin(), segment.end()),
       count = std::move(count), argmax = std::move(argmax), pool, m, n](Tape& t, std::size_t self) {
        Tensor* gx = t.grad_buffer(ix);
        if (!gx) return;
        const Tensor& g = t.grad(self);
        if (pool == Pool::kMax) {
          for (std::size_t k = 0; k < argmax.size(); ++k)
            if (argmax[k] != std::numeric_limits<std::size_t>::max()) (*gx)[argmax[k] * n + k % n] += g[k];
          return;
        }
        for (std::size_t i = 0; i < m; ++i) {
          if (seg[i] < 0) continue;
          const double w = pool == Pool::kMean ? 1.0 / static_cast<double>(count[seg[i]]) : 1.0;
          simd::active().axpy(w, g.raw() + seg[i] * n, gx->raw() + i * n, n);
        }
      });
}

}  // namespace resae::ad
