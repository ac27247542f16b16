#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "resae/adam.hpp"
#include "resae/checkpoint.hpp"
#include "resae/errors.hpp"
#include "resae/grad_check.hpp"
#include "resae/ops.hpp"
#include "test_util.hpp"

namespace {

using namespace resae;

ParamStore quadratic_store() {
  ParamStore store(1);
  std::mt19937_64 rng(1);
  store.add("x", tu::random_tensor({4}, rng));
  store.add("A", tu::random_tensor({4, 4}, rng));
  return store;
}

TEST(GradCheck, QuadraticFormIsExactUpToRounding) {
  ParamStore store = quadratic_store();
  auto f = [&](ad::Tape& t) {
    auto x = ad::reshape(t.param(store.get("x")), {1, 4});
    auto a = t.param(store.get("A"));
    return ad::sum_all(ad::mul(ad::matmul(x, a), x));
  };
  GradCheckOptions opts;
  opts.max_coords_per_param = 0;
  const auto report = grad_check(store, f, opts);
  EXPECT_TRUE(report.passed);
  EXPECT_LT(report.max_rel_error, 1e-8);
  ASSERT_EQ(report.params.size(), 2u);
  EXPECT_EQ(report.params[1].checked, 16u);
}

TEST(GradCheck, RejectsStochasticObjective) {
  ParamStore store = quadratic_store();
  auto f = [&](ad::Tape& t) { return ad::sum_all(ad::dropout(t.param(store.get("A")), 0.5)); };
  GradCheckOptions opts;
  opts.mode = ad::Mode::kTrain;
  EXPECT_THROW(grad_check(store, f, opts), PreconditionError);
}

TEST(GradCheck, RejectsEpsOutsideRangeAndNonFiniteObjective) {
  ParamStore store = quadratic_store();
  auto f = [&](ad::Tape& t) { return ad::sum_all(t.param(store.get("x"))); };
  GradCheckOptions opts;
  opts.eps = 1e-2;
  EXPECT_THROW(grad_check(store, f, opts), PreconditionError);
  auto bad = [&](ad::Tape& t) {
    return ad::scale(ad::sum_all(t.param(store.get("x"))), std::numeric_limits<double>::infinity());
  };
  EXPECT_THROW(grad_check(store, bad), std::runtime_error);
}

TEST(GradCheck, DetectsAWrongGradient) {
  ParamStore store = quadratic_store();
  // Forward doubles x but the recorded backward passes the gradient through unchanged.
  auto f = [&](ad::Tape& t) {
    auto x = t.param(store.get("x"));
    Tensor doubled = x.value();
    for (auto& v : doubled.values()) v *= 2;
    auto y = t.record(doubled, {x}, [id = x.id()](ad::Tape& tape, std::size_t self) {
      if (auto* g = tape.grad_buffer(id))
        for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += tape.grad(self)[i];
    });
    return ad::sum_all(ad::mul(y, y));
  };
  EXPECT_FALSE(grad_check(store, f).passed);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  ParamStore store = quadratic_store();
  const ParamStore before = store;
  Adam adam(store, {});
  store.zero_grad();
  adam.step(store);
  for (const auto& p : store) EXPECT_EQ(p.value, before.get(p.name).value);
}

TEST(Adam, FirstStepMagnitudeIsLearningRate) {
  ParamStore store;
  store.add("w", Tensor({1}, 0.5));
  Adam adam(store, AdamConfig{1e-3});
  for (int step = 0; step < 3; ++step) {
    const double before = store.get("w").value[0];
    store.get("w").grad[0] = 1.0;
    adam.step(store);
    EXPECT_NEAR(before - store.get("w").value[0], 1e-3, 1e-9);
  }
  EXPECT_EQ(adam.steps(), 3u);
}

TEST(Adam, IdenticalRunsGiveIdenticalParameters) {
  auto run = [] {
    ParamStore store = quadratic_store();
    Adam adam(store, AdamConfig{1e-2});
    for (int i = 0; i < 20; ++i) {
      store.zero_grad();
      ad::Tape t;
      auto x = t.param(store.get("x"));
      auto a = t.param(store.get("A"));
      t.backward(ad::sum_all(ad::mul(ad::matmul(ad::reshape(x, {1, 4}), a), ad::reshape(x, {1, 4}))));
      adam.step(store);
    }
    return store;
  };
  const auto a = run(), b = run();
  for (const auto& p : a) EXPECT_EQ(p.value, b.get(p.name).value);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  ParamStore store(77);
  std::mt19937_64 rng(3);
  store.add("a.b", tu::random_tensor({3, 2}, rng, -1e300, 1e300));
  store.add("scalar", Tensor({1}, -0.0));
  store.add("tiny", Tensor({2}, std::vector<double>{4.9e-324, std::nextafter(1.0, 2.0)}));
  const auto path = std::filesystem::temp_directory_path() / "resae_ckpt_roundtrip.bin";
  save_checkpoint(store, path);
  const ParamStore back = load_checkpoint(path);
  EXPECT_EQ(back.seed(), 77u);
  EXPECT_EQ(back.names(), store.names());
  for (const auto& p : store) {
    const auto& q = back.get(p.name).value;
    ASSERT_EQ(q.shape(), p.value.shape());
    for (std::size_t i = 0; i < q.size(); ++i)
      EXPECT_EQ(std::bit_cast<std::uint64_t>(q[i]), std::bit_cast<std::uint64_t>(p.value[i]));
  }
  EXPECT_EQ(serialize_checkpoint(back), serialize_checkpoint(store));
  std::filesystem::remove(path);
}

TEST(Checkpoint, RestoreNamesMismatchedParameter) {
  ParamStore target;
  target.add("encoder.layer0.alpha", Tensor({1}));
  target.add("decoder.readout.w", Tensor({4, 2}));
  ParamStore loaded;
  loaded.add("encoder.layer0.alpha", Tensor({1}, 3.0));
  loaded.add("decoder.readout.w", Tensor({2, 2}));
  try {
    restore_checkpoint(target, loaded);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("decoder.readout.w"), std::string::npos);
  }
  EXPECT_THROW(parse_checkpoint("not a checkpoint"), std::runtime_error);
}

}  // namespace
