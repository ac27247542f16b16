#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <string>

#include "ops_common.hpp"
#include "resae/ops.hpp"

namespace resae::ad {

using detail::accumulate;
using detail::require_rank2;
using detail::shape_fail;
using detail::tape_of;

Activation parse_activation(std::string_view name) {
  if (name == "identity" || name == "none" || name == "linear") return Activation::kIdentity;
  if (name == "tanh") return Activation::kTanh;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "relu") return Activation::kRelu;
  if (name == "gelu") return Activation::kGelu;
  if (name == "elu") return Activation::kElu;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view activation_name(Activation act) {
  switch (act) {
    case Activation::kIdentity: return "identity";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kRelu: return "relu";
    case Activation::kGelu: return "gelu";
    case Activation::kElu: return "elu";
  }
  return "identity";
}

Pool parse_pool(std::string_view name) {
  if (name == "mean") return Pool::kMean;
  if (name == "sum") return Pool::kSum;
  if (name == "max") return Pool::kMax;
  throw ConfigError("unknown pooling '" + std::string(name) + "'");
}

std::string_view pool_name(Pool pool) {
  switch (pool) {
    case Pool::kMean: return "mean";
    case Pool::kSum: return "sum";
    case Pool::kMax: return "max";
  }
  return "mean";
}

Var softmax(const Var& x, std::size_t axis) {
  const Tensor& xv = x.value();
  if (xv.rank() == 0 || xv.rank() > 2 || axis >= xv.rank()) {
    throw ShapeError("softmax: axis " + std::to_string(axis) + " invalid for " + shape_str(xv.shape()));
  }
  const std::size_t m = xv.rows(), n = xv.cols();
  const bool along_cols = xv.rank() == 1 || axis == 1;
  const std::size_t groups = along_cols ? m : n;
  const std::size_t extent = along_cols ? n : m;
  const std::size_t stride = along_cols ? 1 : n;
  const std::size_t step = along_cols ? n : 1;
  if (extent == 0) throw ShapeError("softmax: empty axis in " + shape_str(xv.shape()));
  Tensor out(xv.shape());
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t base = g * step;
    double top = xv[base];
    for (std::size_t e = 1; e < extent; ++e) top = std::max(top, xv[base + e * stride]);
    double total = 0.0;
    for (std::size_t e = 0; e < extent; ++e) {
      const double v = std::exp(xv[base + e * stride] - top);
      out[base + e * stride] = v;
      total += v;
    }
    for (std::size_t e = 0; e < extent; ++e) out[base + e * stride] /= total;
  }
  // Backward reads its own output: dx = y * (g - <g, y>) per group.
  return tape_of(x).record(std::move(out), {x}, [ix = x.id(), groups, extent, stride, step](Tape& t, std::size_t self) {
    Tensor* gx = t.grad_buffer(ix);
    if (!gx) return;
    const Tensor& y = t.value(self);
    const Tensor& g = t.grad(self);
    for (std::size_t grp = 0; grp < groups; ++grp) {
      const std::size_t base = grp * step;
      double inner = 0.0;
      for (std::size_t e = 0; e < extent; ++e) inner += g[base + e * stride] * y[base + e * stride];
      for (std::size_t e = 0; e < extent; ++e) {
        const std::size_t k = base + e * stride;
        (*gx)[k] += y[k] * (g[k] - inner);
      }
    }
  });
}

namespace {

double act_forward(Activation act, double v) {
  switch (act) {
    case Activation::kIdentity: return v;
    case Activation::kTanh: return std::tanh(v);
    case Activation::kSigmoid: return 1.0 / (1.0 + std::exp(-v));
    case Activation::kRelu: return v > 0.0 ? v : 0.0;
    case Activation::kGelu: return 0.5 * v * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
    case Activation::kElu: return v > 0.0 ? v : std::expm1(v);
  }
  return v;
}

// Derivative from input v and output y.
double act_derivative(Activation act, double v, double y) {
  switch (act) {
    case Activation::kIdentity: return 1.0;
    case Activation::kTanh: return 1.0 - y * y;
    case Activation::kSigmoid: return y * (1.0 - y);
    case Activation::kRelu: return v > 0.0 ? 1.0 : 0.0;
    case Activation::kGelu: {
      const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
      const double pdf = std::exp(-0.5 * v * v) / std::sqrt(2.0 * std::numbers::pi);
      return cdf + v * pdf;
    }
    case Activation::kElu: return v > 0.0 ? 1.0 : y + 1.0;
  }
  return 1.0;
}

}  // namespace

Var activation(const Var& x, Activation act) {
  if (act == Activation::kIdentity) return x;
  Tensor out = x.value();
  for (auto& v : out.values()) v = act_forward(act, v);
  return tape_of(x).record(std::move(out), {x}, [ix = x.id(), act](Tape& t, std::size_t self) {
    Tensor* gx = t.grad_buffer(ix);
    if (!gx) return;
    const Tensor& in = t.value(ix);
    const Tensor& y = t.value(self);
    const Tensor& g = t.grad(self);
    for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] * act_derivative(act, in[i], y[i]);
  });
}

Var tanh(const Var& x) { return activation(x, Activation::kTanh); }
Var sigmoid(const Var& x) { return activation(x, Activation::kSigmoid); }
Var relu(const Var& x) { return activation(x, Activation::kRelu); }
Var gelu(const Var& x) { return activation(x, Activation::kGelu); }
Var elu(const Var& x) { return activation(x, Activation::kElu); }

Var dropout(const Var& x, double p) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw PreconditionError("dropout: p must lie in [0, 1), got " + std::to_string(p));
  }
  Tape& tape = tape_of(x);
  if (!tape.training() || p == 0.0) return x;
  tape.mark_stochastic();
  const double keep_scale = 1.0 / (1.0 - p);
  Tensor mask(x.shape());
  auto& rng = tape.rng();
  for (auto& m : mask.values()) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    m = u >= p ? keep_scale : 0.0;
  }
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return tape.record(std::move(out), {x}, [ix = x.id(), mask = std::move(mask)](Tape& t, std::size_t self) {
    Tensor* gx = t.grad_buffer(ix);
    if (!gx) return;
    const Tensor& g = t.grad(self);
    for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] * mask[i];
  });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  const Tensor& xv = x.value();
  require_rank2("layer_norm", xv);
  const std::size_t m = xv.dim(0), n = xv.dim(1);
  if (gain.value().size() != n) shape_fail("layer_norm", xv.shape(), gain.shape());
  if (bias.value().size() != n) shape_fail("layer_norm", xv.shape(), bias.shape());
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  Tensor normalized({m, n});
  std::vector<double> inv_std(m);
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = xv.raw() + i * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      const double z = (row[j] - mu) * inv_std[i];
      normalized[i * n + j] = z;
      out[i * n + j] = z * gv[j] + bv[j];
    }
  }
  return tape_of(x).record(std::move(out), {x, gain, bias},
      [ix = x.id(), ig = gain.id(), ib = bias.id(), normalized = std::move(normalized),
       inv_std = std::move(inv_std), m, n](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& gv = t.value(ig);
        if (Tensor* gg = t.grad_buffer(ig)) {
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) (*gg)[j] += g[i * n + j] * normalized[i * n + j];
        }
        if (Tensor* gb = t.grad_buffer(ib)) {
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) (*gb)[j] += g[i * n + j];
        }
        if (Tensor* gx = t.grad_buffer(ix)) {
          const double inv_n = 1.0 / static_cast<double>(n);
          for (std::size_t i = 0; i < m; ++i) {
            double mean_dz = 0.0, mean_dz_z = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              const double dz = g[i * n + j] * gv[j];
              mean_dz += dz;
              mean_dz_z += dz * normalized[i * n + j];
            }
            mean_dz *= inv_n;
            mean_dz_z *= inv_n;
            for (std::size_t j = 0; j < n; ++j) {
              const double dz = g[i * n + j] * gv[j];
              (*gx)[i * n + j] += inv_std[i] * (dz - mean_dz - normalized[i * n + j] * mean_dz_z);
            }
          }
        }
      });
}

Var attention(const Var& q, const Var& k, const Var& v, std::span<const bool> key_mask,
              std::size_t block, std::size_t heads) {
  const Tensor& qv = q.value();
  const Tensor& kv = k.value();
  const Tensor& vv = v.value();
  require_rank2("attention", qv);
  if (kv.shape() != qv.shape()) shape_fail("attention", qv.shape(), kv.shape());
  if (vv.shape() != qv.shape()) shape_fail("attention", qv.shape(), vv.shape());
  const std::size_t rows = qv.dim(0), d = qv.dim(1);
  if (block == 0 || rows % block != 0) {
    throw ShapeError("attention: " + std::to_string(rows) + " rows not divisible into blocks of " +
                     std::to_string(block));
  }
  if (heads == 0 || d % heads != 0) {
    throw ShapeError("attention: width " + std::to_string(d) + " not divisible by " +
                     std::to_string(heads) + " heads");
  }
  if (key_mask.size() != rows) {
    throw ShapeError("attention: mask length " + std::to_string(key_mask.size()) + " vs " +
                     std::to_string(rows) + " rows");
  }
  const std::size_t blocks = rows / block, dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  // probs[((b * heads + h) * block + i) * block + j]
  std::vector<double> probs(blocks * heads * block * block);
  Tensor out({rows, d});
  std::vector<double> logits(block);
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < block; ++i) {
        const double* qi = qv.raw() + (b * block + i) * d + h * dh;
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < block; ++j) {
          const double* kj = kv.raw() + (b * block + j) * d + h * dh;
          double s = 0.0;
          for (std::size_t c = 0; c < dh; ++c) s += qi[c] * kj[c];
          s *= inv_sqrt;
          if (!key_mask[b * block + j]) s += kMaskedLogit;
          logits[j] = s;
          top = std::max(top, s);
        }
        double total = 0.0;
        for (std::size_t j = 0; j < block; ++j) {
          logits[j] = std::exp(logits[j] - top);
          total += logits[j];
        }
        double* p = probs.data() + ((b * heads + h) * block + i) * block;
        double* oi = out.raw() + (b * block + i) * d + h * dh;
        for (std::size_t j = 0; j < block; ++j) {
          p[j] = logits[j] / total;
          const double* vj = vv.raw() + (b * block + j) * d + h * dh;
          for (std::size_t c = 0; c < dh; ++c) oi[c] += p[j] * vj[c];
        }
      }
    }
  }
  return tape_of(q).record(std::move(out), {q, k, v},
      [iq = q.id(), ik = k.id(), iv = v.id(), probs = std::move(probs), blocks, heads, block, d, dh,
       inv_sqrt](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& qv = t.value(iq);
        const Tensor& kv = t.value(ik);
        const Tensor& vv = t.value(iv);
        Tensor* gq = t.grad_buffer(iq);
        Tensor* gk = t.grad_buffer(ik);
        Tensor* gv = t.grad_buffer(iv);
        std::vector<double> dp(block);
        for (std::size_t b = 0; b < blocks; ++b) {
          for (std::size_t h = 0; h < heads; ++h) {
            for (std::size_t i = 0; i < block; ++i) {
              const double* p = probs.data() + ((b * heads + h) * block + i) * block;
              const double* gi = g.raw() + (b * block + i) * d + h * dh;
              double inner = 0.0;
              for (std::size_t j = 0; j < block; ++j) {
                const double* vj = vv.raw() + (b * block + j) * d + h * dh;
                double s = 0.0;
                for (std::size_t c = 0; c < dh; ++c) s += gi[c] * vj[c];
                dp[j] = s;
                inner += s * p[j];
                if (gv) {
                  double* gvj = gv->raw() + (b * block + j) * d + h * dh;
                  for (std::size_t c = 0; c < dh; ++c) gvj[c] += p[j] * gi[c];
                }
              }
              const double* qi = qv.raw() + (b * block + i) * d + h * dh;
              for (std::size_t j = 0; j < block; ++j) {
                const double dlogit = p[j] * (dp[j] - inner) * inv_sqrt;
                if (dlogit == 0.0) continue;
                const double* kj = kv.raw() + (b * block + j) * d + h * dh;
                if (gq) {
                  double* gqi = gq->raw() + (b * block + i) * d + h * dh;
                  for (std::size_t c = 0; c < dh; ++c) gqi[c] += dlogit * kj[c];
                }
                if (gk) {
                  double* gkj = gk->raw() + (b * block + j) * d + h * dh;
                  for (std::size_t c = 0; c < dh; ++c) gkj[c] += dlogit * qi[c];
                }
              }
            }
          }
        }
      });
}

Var l2_normalize_rows(const Var& x, double eps) {
  const Tensor& xv = x.value();
  require_rank2("l2_normalize_rows", xv);
  const std::size_t m = xv.dim(0), n = xv.dim(1);
  std::vector<double> norms(m);
  Tensor out = xv;
  for (std::size_t i = 0; i < m; ++i) {
    const double nrm = std::sqrt(simd::active().dot(xv.raw() + i * n, xv.raw() + i * n, n));
    norms[i] = std::max(nrm, eps);
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= norms[i];
  }
  return tape_of(x).record(std::move(out), {x}, [ix = x.id(), norms = std::move(norms), m, n](Tape& t, std::size_t self) {
    Tensor* gx = t.grad_buffer(ix);
    if (!gx) return;
    const Tensor& y = t.value(self);
    const Tensor& g = t.grad(self);
    for (std::size_t i = 0; i < m; ++i) {
      const double proj = simd::active().dot(g.raw() + i * n, y.raw() + i * n, n);
      for (std::size_t j = 0; j < n; ++j)
        (*gx)[i * n + j] += (g[i * n + j] - y[i * n + j] * proj) / norms[i];
    }
  });
}

Var bce_with_logits(const Var& scores, const Tensor& targets) {
  const Tensor& sv = scores.value();
  if (sv.shape() != targets.shape()) shape_fail("bce_with_logits", sv.shape(), targets.shape());
  if (sv.size() == 0) throw ShapeError("bce_with_logits: empty scores");
  const double inv = 1.0 / static_cast<double>(sv.size());
  // Extended-precision accumulator keeps summation noise below the
  // finite-difference resolution of the gradient checker.
  long double total = 0.0L;
  for (std::size_t i = 0; i < sv.size(); ++i) {
    const double s = sv[i];
    total += std::max(s, 0.0) - s * targets[i] + std::log1p(std::exp(-std::abs(s)));
  }
  return tape_of(scores).record(Tensor::scalar(static_cast<double>(total) * inv), {scores},
      [is = scores.id(), targets, inv](Tape& t, std::size_t self) {
        Tensor* gs = t.grad_buffer(is);
        if (!gs) return;
        const double g = t.grad(self)[0] * inv;
        const Tensor& sv = t.value(is);
        for (std::size_t i = 0; i < sv.size(); ++i) {
          const double s = sv[i];
          const double p = s >= 0.0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
          (*gs)[i] += g * (p - targets[i]);
        }
      });
}

}  // namespace resae::ad
