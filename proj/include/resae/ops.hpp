#pragma once

// Differentiable ops recorded on a Tape. Matrix ops take rank-2 operands;
// rank-1 operands are accepted where noted and behave as a single row.
// Shape mismatches throw ShapeError naming the op and both shapes.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "resae/tape.hpp"

namespace resae::ad {

enum class Activation { kIdentity, kTanh, kSigmoid, kRelu, kGelu, kElu };
enum class Pool { kMean, kSum, kMax };

Activation parse_activation(std::string_view name);
std::string_view activation_name(Activation act);
Pool parse_pool(std::string_view name);
std::string_view pool_name(Pool pool);

// Additive bias applied to masked attention logits.
inline constexpr double kMaskedLogit = -1e9;

// ---- linear algebra ----
Var matmul(const Var& a, const Var& b);     // [m,k] x [k,n]
Var matmul_nt(const Var& a, const Var& b);  // [m,k] x [n,k]^T
Var transpose(const Var& a);

// ---- elementwise ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var scale_by(const Var& a, const Var& s);     // s holds one element
Var add_bias(const Var& x, const Var& bias);  // x[m,n] + bias[n] on every row

// ---- shape ----
Var concat(std::span<const Var> parts, std::size_t axis);
Var slice(const Var& x, std::size_t axis, std::size_t begin, std::size_t length);
std::vector<Var> split(const Var& x, std::size_t axis, std::span<const std::size_t> sizes);
Var reshape(const Var& x, Shape shape);

// ---- reductions ----
Var sum(const Var& x, std::size_t axis);
Var mean(const Var& x, std::size_t axis);
Var sum_all(const Var& x);
Var mean_all(const Var& x);
Var softmax(const Var& x, std::size_t axis);

// ---- indexing ----
Var gather_rows(const Var& table, std::span<const std::size_t> index);
Var scatter_add_rows(const Var& src, std::span<const std::size_t> index,
                     std::size_t n_rows);
// out[i] = x[rows[i], cols[i]]
Var gather_elements(const Var& x, std::span<const std::size_t> rows,
                    std::span<const std::size_t> cols);
Var scale_rows(const Var& x, const Var& weights);  // x[m,n] * w[m]
Var scale_rows(const Var& x, std::span<const double> weights);
// Pools rows of x into n_segments rows. Rows with a negative segment id are
// ignored. Empty segments produce zero rows for every pool type.
Var segment_pool(const Var& x, std::span<const std::int64_t> segment,
                 std::size_t n_segments, Pool pool);

// ---- nonlinearities ----
Var activation(const Var& x, Activation act);
Var tanh(const Var& x);
Var sigmoid(const Var& x);
Var relu(const Var& x);
Var gelu(const Var& x);
Var elu(const Var& x);

// Inverted dropout. Identity in eval mode and for p == 0.
Var dropout(const Var& x, double p);

// Row-wise normalization over the last axis with per-column gain and bias.
Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);

// Multi-head scaled dot-product attention over independent blocks of `block`
// consecutive rows (one statement per block). q, k, v are [blocks*block, d];
// key_mask marks rows that may be attended to.
Var attention(const Var& q, const Var& k, const Var& v, std::span<const bool> key_mask,
              std::size_t block, std::size_t heads);

Var l2_normalize_rows(const Var& x, double eps = 1e-12);

// Mean over all entries of the binary cross-entropy between sigmoid(scores)
// and targets.
Var bce_with_logits(const Var& scores, const Tensor& targets);

}  // namespace resae::ad
