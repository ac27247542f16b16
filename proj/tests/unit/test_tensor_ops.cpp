#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "resae/errors.hpp"
#include "resae/ops.hpp"
#include "resae/simd/kernels.hpp"
#include "test_util.hpp"

namespace {

using namespace resae;
using resae::tu::op_gradient_error;
using resae::tu::random_tensor;

constexpr double kOpTol = 1e-4;

TEST(Tensor, ConstructionAndShapeChecks) {
  Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  Tensor v = Tensor::vector({1, 2, 3});
  EXPECT_EQ(v.rows(), 1u);
  EXPECT_EQ(v.cols(), 3u);
  EXPECT_DOUBLE_EQ(Tensor::scalar(4.0).item(), 4.0);
  EXPECT_THROW(t.item(), ShapeError);
}

TEST(Ops, SoftmaxOfEqualLogitsIsUniform) {
  ad::Tape tape;
  auto out = ad::softmax(tape.constant(Tensor::matrix(1, 3, {0, 0, 0})), 1);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(out.value()[i], 1.0 / 3.0, 1e-15);
}

TEST(Ops, MatmulWithIdentity) {
  std::mt19937_64 rng(1);
  ad::Tape tape;
  Tensor x = random_tensor({3, 4}, rng);
  Tensor eye({3, 3});
  for (int i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
  EXPECT_EQ(ad::matmul(tape.constant(eye), tape.constant(x)).value(), x);
}

TEST(Ops, GradientOfSumOfSquares) {
  Parameter p{"x", Tensor::vector({1, 2}), Tensor({2})};
  ad::Tape tape;
  auto x = tape.param(p);
  tape.backward(ad::sum_all(ad::mul(x, x)));
  EXPECT_DOUBLE_EQ(p.grad[0], 2.0);
  EXPECT_DOUBLE_EQ(p.grad[1], 4.0);
}

TEST(Ops, GradientsAccumulateAcrossReuse) {
  Parameter p{"x", Tensor::vector({3}), Tensor({1})};
  ad::Tape tape;
  auto x = tape.param(p);
  tape.backward(ad::sum_all(ad::add(ad::scale(x, 2.0), ad::mul(x, x))));
  EXPECT_DOUBLE_EQ(p.grad[0], 2.0 + 6.0);
}

TEST(Ops, ShapeMismatchNamesOpAndShapes) {
  ad::Tape tape;
  auto a = tape.constant(Tensor({2, 3}));
  auto b = tape.constant(Tensor({2, 3}));
  try {
    ad::matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("matmul"), std::string::npos);
    EXPECT_NE(what.find("[2, 3]"), std::string::npos) << what;
  }
  EXPECT_THROW(ad::add(a, tape.constant(Tensor({3, 2}))), ShapeError);
}

TEST(Ops, ConcatThenSplitIsIdentity) {
  std::mt19937_64 rng(2);
  for (std::size_t axis : {0u, 1u}) {
    ad::Tape tape;
    Tensor a = random_tensor({2, 3}, rng), b = random_tensor(axis == 0 ? Shape{4, 3} : Shape{2, 5}, rng);
    const ad::Var parts[] = {tape.constant(a), tape.constant(b)};
    auto joined = ad::concat(parts, axis);
    const std::size_t sizes[] = {axis == 0 ? 2u : 3u, axis == 0 ? 4u : 5u};
    auto back = ad::split(joined, axis, sizes);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].value(), a);
    EXPECT_EQ(back[1].value(), b);
  }
}

TEST(Ops, SoftmaxRowsSumToOne) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    ad::Tape tape;
    auto out = ad::softmax(tape.constant(random_tensor({5, 7}, rng, -30, 30)), 1);
    for (std::size_t r = 0; r < 5; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < 7; ++c) {
        const double p = out.value().at(r, c);
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, 1.0);
        s += p;
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Ops, DropoutEvalIsIdentityAndTrainIsSeeded) {
  std::mt19937_64 rng(4);
  Tensor x = random_tensor({6, 6}, rng);
  {
    ad::Tape tape(ad::Mode::kEval);
    EXPECT_EQ(ad::dropout(tape.constant(x), 0.5).value(), x);
    EXPECT_FALSE(tape.stochastic());
  }
  ad::Tape t1(ad::Mode::kTrain, 9), t2(ad::Mode::kTrain, 9);
  auto a = ad::dropout(t1.constant(x), 0.5).value();
  auto b = ad::dropout(t2.constant(x), 0.5).value();
  EXPECT_EQ(a, b);
  EXPECT_TRUE(t1.stochastic());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_TRUE(a[i] == 0.0 || std::abs(a[i] - 2 * x[i]) < 1e-15);
  ad::Tape t3(ad::Mode::kTrain, 9);
  EXPECT_THROW(ad::dropout(t3.constant(x), 1.0), PreconditionError);
}

TEST(Ops, SegmentPoolIgnoresNegativeIdsAndZeroFillsEmpty) {
  ad::Tape tape;
  auto x = tape.constant(Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6}));
  const std::int64_t seg[] = {0, -1, 0};
  auto mean = ad::segment_pool(x, seg, 2, ad::Pool::kMean).value();
  EXPECT_DOUBLE_EQ(mean.at(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(mean.at(0, 1), 4.0);
  EXPECT_DOUBLE_EQ(mean.at(1, 0), 0.0);
  auto mx = ad::segment_pool(x, seg, 2, ad::Pool::kMax).value();
  EXPECT_DOUBLE_EQ(mx.at(0, 1), 6.0);
  EXPECT_DOUBLE_EQ(mx.at(1, 1), 0.0);
}

TEST(Ops, AttentionMasksKeys) {
  std::mt19937_64 rng(5);
  ad::Tape tape;
  auto q = tape.constant(random_tensor({3, 4}, rng));
  auto k = tape.constant(random_tensor({3, 4}, rng));
  Tensor vt = random_tensor({3, 4}, rng);
  const bool mask[] = {true, false, false};
  auto out = ad::attention(q, k, tape.constant(vt), mask, 3, 2).value();
  // Only key 0 is visible, so every query reads value row 0.
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(out.at(r, c), vt.at(0, c), 1e-12);
}

struct OpCase {
  const char* name;
  tu::OpFn fn;
  std::vector<Shape> shapes;
};

class OpGradient : public ::testing::TestWithParam<int> {};

std::vector<OpCase> op_cases() {
  using V = std::vector<ad::Var>;
  static const std::size_t idx[] = {2, 0, 2, 1};
  static const std::size_t cols[] = {1, 0, 2, 1};
  static const std::int64_t seg[] = {1, 0, -1, 1, 2};
  static const double row_w[] = {0.5, -2.0, 1.5};
  static const bool mask[] = {true, true, false, true, false, true};
  return {
      {"matmul", [](V& v) { return ad::matmul(v[0], v[1]); }, {{3, 4}, {4, 2}}},
      {"matmul_nt", [](V& v) { return ad::matmul_nt(v[0], v[1]); }, {{3, 4}, {5, 4}}},
      {"transpose", [](V& v) { return ad::transpose(v[0]); }, {{3, 4}}},
      {"add", [](V& v) { return ad::add(v[0], v[1]); }, {{2, 3}, {2, 3}}},
      {"sub", [](V& v) { return ad::sub(v[0], v[1]); }, {{2, 3}, {2, 3}}},
      {"mul", [](V& v) { return ad::mul(v[0], v[1]); }, {{2, 3}, {2, 3}}},
      {"scale_by", [](V& v) { return ad::scale_by(v[0], v[1]); }, {{2, 3}, {1}}},
      {"add_bias", [](V& v) { return ad::add_bias(v[0], v[1]); }, {{3, 4}, {4}}},
      {"concat0", [](V& v) { const ad::Var p[] = {v[0], v[1]}; return ad::concat(p, 0); }, {{2, 3}, {1, 3}}},
      {"concat1", [](V& v) { const ad::Var p[] = {v[0], v[1]}; return ad::concat(p, 1); }, {{2, 3}, {2, 2}}},
      {"split", [](V& v) { const std::size_t s[] = {1, 3}; return ad::split(v[0], 1, s)[1]; }, {{2, 4}}},
      {"slice", [](V& v) { return ad::slice(v[0], 0, 1, 2); }, {{4, 3}}},
      {"reshape", [](V& v) { return ad::reshape(v[0], {3, 2}); }, {{2, 3}}},
      {"sum0", [](V& v) { return ad::sum(v[0], 0); }, {{3, 4}}},
      {"mean1", [](V& v) { return ad::mean(v[0], 1); }, {{3, 4}}},
      {"mean_all", [](V& v) { return ad::mean_all(v[0]); }, {{3, 4}}},
      {"softmax0", [](V& v) { return ad::softmax(v[0], 0); }, {{3, 4}}},
      {"softmax1", [](V& v) { return ad::softmax(v[0], 1); }, {{3, 4}}},
      {"gather_rows", [](V& v) { return ad::gather_rows(v[0], idx); }, {{3, 2}}},
      {"scatter_add_rows", [](V& v) { return ad::scatter_add_rows(v[0], idx, 3); }, {{4, 2}}},
      {"gather_elements", [](V& v) { return ad::gather_elements(v[0], idx, cols); }, {{3, 3}}},
      {"scale_rows_var", [](V& v) { return ad::scale_rows(v[0], v[1]); }, {{3, 2}, {3}}},
      {"scale_rows_const", [](V& v) { return ad::scale_rows(v[0], row_w); }, {{3, 2}}},
      {"segment_mean", [](V& v) { return ad::segment_pool(v[0], seg, 4, ad::Pool::kMean); }, {{5, 3}}},
      {"segment_sum", [](V& v) { return ad::segment_pool(v[0], seg, 4, ad::Pool::kSum); }, {{5, 3}}},
      {"segment_max", [](V& v) { return ad::segment_pool(v[0], seg, 4, ad::Pool::kMax); }, {{5, 3}}},
      {"tanh", [](V& v) { return ad::tanh(v[0]); }, {{3, 3}}},
      {"sigmoid", [](V& v) { return ad::sigmoid(v[0]); }, {{3, 3}}},
      {"relu", [](V& v) { return ad::relu(ad::add(v[0], v[0])); }, {{3, 3}}},
      {"gelu", [](V& v) { return ad::gelu(v[0]); }, {{3, 3}}},
      {"elu", [](V& v) { return ad::elu(v[0]); }, {{3, 3}}},
      {"layer_norm", [](V& v) { return ad::layer_norm(v[0], v[1], v[2]); }, {{3, 5}, {5}, {5}}},
      {"attention", [](V& v) { return ad::attention(v[0], v[1], v[2], mask, 3, 2); }, {{6, 4}, {6, 4}, {6, 4}}},
      {"l2_normalize_rows", [](V& v) { return ad::l2_normalize_rows(v[0]); }, {{3, 4}}},
      {"bce_with_logits",
       [](V& v) { return ad::bce_with_logits(v[0], Tensor::matrix(2, 2, {1.0, 0.0, 0.25, 0.75})); },
       {{2, 2}}},
  };
}

TEST_P(OpGradient, MatchesCentralDifferences) {
  const auto cases = op_cases();
  const auto& c = cases[static_cast<std::size_t>(GetParam())];
  std::mt19937_64 rng(100 + GetParam());
  std::vector<Tensor> inputs;
  for (const auto& s : c.shapes) inputs.push_back(random_tensor(s, rng));
  EXPECT_LT(op_gradient_error(c.fn, inputs), kOpTol) << c.name;
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient, ::testing::Range(0, static_cast<int>(op_cases().size())),
                         [](const ::testing::TestParamInfo<int>& info) {
                           return std::string(op_cases()[static_cast<std::size_t>(info.param)].name);
                         });

TEST(Ops, KernelBackendsAgreeOnMatmulGradient) {
  std::mt19937_64 rng(6);
  const Tensor a = random_tensor({7, 9}, rng), b = random_tensor({9, 5}, rng);
  auto run = [&] {
    Parameter pa{"a", a, Tensor::zeros_like(a)}, pb{"b", b, Tensor::zeros_like(b)};
    ad::Tape tape;
    auto y = ad::matmul(tape.param(pa), tape.param(pb));
    tape.backward(ad::sum_all(ad::mul(y, y)));
    return std::make_pair(pa.grad, pb.grad);
  };
  const auto before = simd::active_backend();
  simd::select(simd::Backend::kScalar);
  auto ref = run();
  simd::select(before);
  auto now = run();
  EXPECT_LT(tu::max_abs_diff(ref.first, now.first), 1e-12);
  EXPECT_LT(tu::max_abs_diff(ref.second, now.second), 1e-12);
}

}  // namespace
