#include <gtest/gtest.h>

#include <cmath>

#include "fcsum/tensor/adam.hpp"
#include "fcsum/tensor/gradcheck.hpp"
#include "fcsum/tensor/init.hpp"

using namespace fcsum;

namespace {

Matrix<double> naive_matmul(const Matrix<double>& a, const Matrix<double>& b) {
  Matrix<double> out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

GruParams<double> zero_gru(std::size_t in, std::size_t hid) { return GruParams<double>(in, hid); }

GruParams<double> random_gru(std::size_t in, std::size_t hid, Rng& rng) {
  GruParams<double> p(in, hid);
  for (auto* f : p.fields()) *f = random_matrix(f->rows(), f->cols(), rng, 0.05, 0.8);
  return p;
}

// Scalar reference GRU for hidden width 1, written from the gate equations.
double scalar_gru(double x, double h, const GruParams<double>& p) {
  const auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  const double z = sig(x * p.W_z[0] + h * p.U_z[0] + p.b_z[0]);
  const double r = sig(x * p.W_r[0] + h * p.U_r[0] + p.b_r[0]);
  const double c = std::tanh(x * p.W_h[0] + (r * h) * p.U_h[0] + p.b_h[0]);
  return (1 - z) * h + z * c;
}

}  // namespace

TEST(Matrix, IdentityTimesMatrixIsMatrix) {
  Rng rng(1);
  for (std::size_t k = 1; k <= 6; ++k) {
    const auto m = random_matrix(3, k, rng);
    EXPECT_EQ(multiply(Matrix<double>::identity(3), m), m);
  }
  const Matrix<double> a{{1, 2}, {3, 4}};
  EXPECT_EQ(multiply(a, Matrix<double>::identity(2)), a);
}

TEST(Matrix, ShapeMismatchNamesBothShapes) {
  try {
    multiply(Matrix<double>(2, 3), Matrix<double>(4, 2));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("2x3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("4x2"), std::string::npos);
  }
}

TEST(Matrix, KernelsMatchNaiveTripleLoop) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t r = 1 + rng.below(8), k = 1 + rng.below(8), c = 1 + rng.below(8);
    const auto a = random_matrix(r, k, rng), b = random_matrix(k, c, rng);
    const auto ref = naive_matmul(a, b);
    EXPECT_LT(max_abs_diff(multiply(a, b), ref), 1e-12);
    Matrix<double> nt(r, c);
    kernels::gemm_nt(a, transpose(b), nt);
    EXPECT_LT(max_abs_diff(nt, ref), 1e-12);
    Matrix<double> tn(r, c);
    kernels::gemm_tn(transpose(a), b, tn);
    EXPECT_LT(max_abs_diff(tn, ref), 1e-12);
  }
}

TEST(Matrix, MatmulAssociativityOnRandom4x4) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_matrix(4, 4, rng), b = random_matrix(4, 4, rng), c = random_matrix(4, 4, rng);
    EXPECT_LT(max_abs_diff(multiply(multiply(a, b), c), multiply(a, multiply(b, c))), 1e-9);
  }
}

TEST(Softmax, ZeroRowIsUniform) {
  const auto s = softmax_rows(Matrix<double>(1, 4));
  for (const double v : s.values()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Softmax, LargeLogitsDoNotOverflow) {
  const auto s = softmax_rows(Matrix<double>{{1000.0, 0.0}});
  EXPECT_NEAR(s(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(s(0, 1), 0.0, 1e-12);
  EXPECT_TRUE(s.all_finite());
}

TEST(Softmax, RowsAreStochasticOnRandomInputs) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t r = 1 + rng.below(8), c = 1 + rng.below(8);
    Matrix<double> m(r, c);
    for (auto& v : m.values()) v = rng.uniform(-30, 30);
    const auto s = softmax_rows(m);
    for (std::size_t i = 0; i < r; ++i) {
      double total = 0;
      for (std::size_t j = 0; j < c; ++j) {
        EXPECT_GE(s(i, j), 0.0);
        EXPECT_LE(s(i, j), 1.0);
        total += s(i, j);
      }
      EXPECT_NEAR(total, 1.0, 1e-6);
    }
  }
}

TEST(Softmax, ShiftInvariantPerRow) {
  Rng rng(5);
  const auto m = random_matrix(3, 5, rng);
  auto shifted = m;
  for (std::size_t j = 0; j < 5; ++j) shifted(1, j) += 7.0;
  EXPECT_LT(max_abs_diff(softmax_rows(m), softmax_rows(shifted)), 1e-12);
}

TEST(GradCheck, EveryOperationPassesAtDoublePrecision) {
  for (const std::uint64_t seed : {0ULL, 1ULL, 2ULL}) {
    for (const auto& r : op_gradient_suite(seed)) {
      EXPECT_TRUE(r.passed(1e-4)) << r.name << " seed " << seed << " rel err " << r.max_rel_error;
    }
  }
}

TEST(GradCheck, MatmulOfRandomShapesUpTo8x8) {
  Rng rng(6);
  for (int trial = 0; trial < 15; ++trial) {
    const std::size_t r = 1 + rng.below(8), k = 1 + rng.below(8), c = 1 + rng.below(8);
    const auto res = check_gradients("matmul", {random_matrix(r, k, rng), random_matrix(k, c, rng)},
                                     [](Tape<double>&, const std::vector<Var<double>>& v) {
                                       return sum(matmul(v[0], v[1]));
                                     });
    EXPECT_TRUE(res.passed(1e-4)) << r << "x" << k << "x" << c << ": " << res.max_rel_error;
  }
}

TEST(GradCheck, ElementwiseOpsOfRandomShapes) {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t r = 1 + rng.below(8), c = 1 + rng.below(8);
    const auto w = random_matrix(r, c, rng);
    const auto res = check_gradients("chain", {random_matrix(r, c, rng), random_matrix(r, c, rng)},
                                     [w](Tape<double>&, const std::vector<Var<double>>& v) {
                                       auto y = hadamard(sigmoid(v[0]), tanh(add(v[0], v[1])));
                                       return project(softmax_rows(relu(affine(y, 2.0, 0.5))), w);
                                     });
    EXPECT_TRUE(res.passed(1e-4)) << r << "x" << c << ": " << res.max_rel_error;
  }
}

TEST(Tape, LossEqualToOneParameterEntry) {
  Matrix<double> p{{3.0, 4.0}, {5.0, 6.0}};
  Tape<double> tape;
  const auto v = tape.parameter("p", p);
  tape.backward(slice_rows(reshape(v, 4, 1), 2, 1));
  const auto g = tape.parameter_gradients().at("p");
  EXPECT_EQ(g, (Matrix<double>{{0, 0}, {1, 0}}));
}

TEST(Tape, ReusedNodeSumsPathGradients) {
  // loss = sum(x . x) + sum(3x): d/dx = 2x + 3
  Matrix<double> x{{1.0, -2.0, 0.5}};
  Tape<double> tape;
  const auto v = tape.parameter("x", x);
  const std::vector<Var<double>> parts{sum(hadamard(v, v)), sum(affine(v, 3.0))};
  tape.backward(scaled_sum(std::span<const Var<double>>(parts), 1.0));
  const auto g = tape.parameter_gradients().at("x");
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(g[i], 2 * x[i] + 3);
}

TEST(Tape, SameParameterNameRegisteredOnce) {
  Matrix<double> p(1, 1, 2.0);
  Tape<double> tape;
  const auto a = tape.parameter("p", p);
  const auto b = tape.parameter("p", p);
  EXPECT_EQ(a.id, b.id);
  tape.backward(sum(add(a, b)));
  EXPECT_DOUBLE_EQ(tape.parameter_gradients().at("p")[0], 2.0);
}

TEST(Tape, UnreachedParameterGetsZeros) {
  Matrix<double> used(1, 2, 1.0), unused(3, 3, 1.0);
  Tape<double> tape;
  const auto u = tape.parameter("used", used);
  tape.parameter("unused", unused);
  tape.backward(sum(u));
  EXPECT_EQ(tape.parameter_gradients().at("unused"), Matrix<double>(3, 3));
}

TEST(Tape, BackwardNeedsScalar) {
  Matrix<double> p(2, 2, 1.0);
  Tape<double> tape;
  EXPECT_THROW(tape.backward(tape.parameter("p", p)), DimensionError);
}

TEST(Tape, ValidateModeRejectsNonFinite) {
  Tape<double> tape;
  tape.set_validate(true);
  const auto x = tape.constant(Matrix<double>{{std::numeric_limits<double>::infinity()}});
  EXPECT_THROW(affine(x, 0.0), NumericError);
}

TEST(Tape, FirstNonFiniteNamesTheNode) {
  Tape<double> tape;
  const auto x = tape.constant(Matrix<double>{{1.0}});
  affine(x, std::numeric_limits<double>::quiet_NaN());
  const auto where = tape.first_non_finite();
  ASSERT_TRUE(where.has_value());
  EXPECT_NE(where->find("affine"), std::string::npos);
}

TEST(Tape, NoGradTapeKeepsValues) {
  Matrix<double> p{{1.0, 2.0}};
  Tape<double> tape(false);
  const auto v = tape.parameter("p", p);
  const auto y = affine(v, 2.0);
  EXPECT_FALSE(tape.requires_grad(y.id));
  EXPECT_EQ(y.value(), (Matrix<double>{{2.0, 4.0}}));
}

TEST(Embedding, RepeatedIdsGiveIdenticalRows) {
  Rng rng(8);
  const auto table = random_matrix(5, 3, rng);
  Tape<double> tape;
  const std::vector<std::int32_t> ids{0, 0};
  const auto out = embedding(tape.parameter("t", table), std::span<const std::int32_t>(ids));
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(out.value()(0, j), out.value()(1, j));
}

TEST(Embedding, GradientCountsOccurrences) {
  Matrix<double> table(5, 3, 0.5);
  Tape<double> tape;
  const std::vector<std::int32_t> ids{4, 1, 4, 4, 0};
  tape.backward(sum(embedding(tape.parameter("t", table), std::span<const std::int32_t>(ids))));
  const auto g = tape.parameter_gradients().at("t");
  const double expected[5] = {1, 1, 0, 0, 3};
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(g(r, c), expected[r]);
}

TEST(Embedding, OutOfRangeIdNamesTheId) {
  Matrix<double> table(5, 3);
  Tape<double> tape;
  const std::vector<std::int32_t> ids{2, 9};
  try {
    embedding(tape.parameter("t", table), std::span<const std::int32_t>(ids));
    FAIL() << "expected IndexError";
  } catch (const IndexError& e) {
    EXPECT_NE(std::string(e.what()).find("9"), std::string::npos);
  }
}

TEST(Dense, ReluOfNegativePreactivationIsZero) {
  Tape<double> tape;
  const auto x = tape.constant(Matrix<double>{{1.0, 2.0}});
  const auto w = tape.constant(Matrix<double>{{-1.0, -3.0}, {-2.0, -1.0}});
  const auto b = tape.constant(Matrix<double>{{-0.5, -0.5}});
  EXPECT_EQ(dense(x, w, b, Activation::relu).value(), Matrix<double>(1, 2));
}

TEST(Dense, IdentityWeightsReturnInput) {
  Rng rng(9);
  const auto xm = random_matrix(3, 4, rng);
  Tape<double> tape;
  const auto y = dense(tape.constant(xm), tape.constant(Matrix<double>::identity(4)), tape.constant(Matrix<double>(1, 4)),
                       Activation::none);
  EXPECT_EQ(y.value(), xm);
}

TEST(CrossEntropy, CertainTargetCostsNothing) {
  Tape<double> tape;
  EXPECT_DOUBLE_EQ(cross_entropy(tape.constant(Matrix<double>{{0.0, 1.0, 0.0}}), 1).value()[0], 0.0);
}

TEST(CrossEntropy, UniformOverFourIsLn4) {
  Tape<double> tape;
  EXPECT_NEAR(cross_entropy(tape.constant(Matrix<double>(1, 4, 0.25)), 2).value()[0], std::log(4.0), 1e-12);
  EXPECT_NEAR(std::log(4.0), 1.3863, 1e-4);
}

TEST(CrossEntropy, ZeroProbabilityIsFloored) {
  Tape<double> tape;
  const double loss = cross_entropy(tape.constant(Matrix<double>{{1.0, 0.0}}), 1).value()[0];
  EXPECT_NEAR(loss, -std::log(kCrossEntropyFloor), 1e-9);
}

TEST(CrossEntropy, FusedGradientIsProbabilitiesMinusOneHot) {
  Rng rng(10);
  const auto logits = random_matrix(1, 6, rng);
  Tape<double> tape;
  const auto v = tape.parameter("l", logits);
  const auto loss = softmax_cross_entropy(v, 3);
  tape.backward(loss);
  const auto g = tape.parameter_gradients().at("l");
  const auto p = softmax_rows(logits);
  for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(g[j], p[j] - (j == 3 ? 1.0 : 0.0), 1e-12);
  EXPECT_NEAR(loss.value()[0], -std::log(p[3]), 1e-12);
}

TEST(Gru, ZeroWeightsHalveTheState) {
  Tape<double> tape;
  const auto p = zero_gru(3, 4);
  const auto vars = register_gru(tape, "g", p);
  const Matrix<double> h{{0.8, -0.4, 2.0, 0.0}};
  const auto out = gru_step(tape.constant(Matrix<double>(1, 3, 1.0)), tape.constant(h), vars);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(out.value()[j], 0.5 * h[j]);
}

TEST(Gru, ZeroStateAndZeroWeightsStayZero) {
  Tape<double> tape;
  const auto p = zero_gru(3, 4);
  const auto vars = register_gru(tape, "g", p);
  const auto out = gru_step(tape.constant(Matrix<double>(1, 3, 1.0)), tape.constant(Matrix<double>(1, 4)), vars);
  EXPECT_EQ(out.value(), Matrix<double>(1, 4));
}

TEST(Gru, ZeroWeightsOverThreeStepsScaleByEighth) {
  Tape<double> tape;
  const auto p = zero_gru(2, 3);
  const auto vars = register_gru(tape, "g", p);
  const Matrix<double> h0{{8.0, -4.0, 1.0}};
  const auto res = gru_sequence(tape.constant(Matrix<double>(3, 2, 0.3)), tape.constant(h0), vars, false);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(res.final.value()[j], h0[j] / 8);
  EXPECT_FALSE(res.states.has_value());
}

TEST(Gru, MatchesScalarReferenceForWidthOne) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_gru(1, 1, rng);
    const double x = rng.uniform(-2, 2), h = rng.uniform(-1, 1);
    Tape<double> tape;
    const auto vars = register_gru(tape, "g", p);
    const auto out = gru_step(tape.constant(Matrix<double>{{x}}), tape.constant(Matrix<double>{{h}}), vars);
    EXPECT_NEAR(out.value()[0], scalar_gru(x, h, p), 1e-14);
  }
}

TEST(Gru, OneStepSequenceEqualsStep) {
  Rng rng(12);
  const auto p = random_gru(3, 4, rng);
  const auto x = random_matrix(1, 3, rng), h = random_matrix(1, 4, rng);
  Tape<double> tape;
  const auto vars = register_gru(tape, "g", p);
  const auto step = gru_step(tape.constant(x), tape.constant(h), vars);
  const auto seq = gru_sequence(tape.constant(x), tape.constant(h), vars, true);
  EXPECT_LT(max_abs_diff(step.value(), seq.final.value()), 1e-14);
  EXPECT_LT(max_abs_diff(step.value(), seq.states->value()), 1e-14);
}

TEST(Gru, FusedSequenceMatchesComposedStepsForBatches) {
  Rng rng(13);
  for (const std::size_t batch : {1, 2, 5}) {
    const std::size_t steps = 1 + rng.below(6);
    const auto p = random_gru(3, 4, rng);
    const auto xs = random_matrix(steps * batch, 3, rng);
    const auto h0 = random_matrix(batch, 4, rng);
    Tape<double> tape;
    const auto vars = register_gru(tape, "g", p);
    const auto fused = gru_sequence_states(tape.constant(xs), tape.constant(h0), vars, batch);
    auto h = tape.constant(h0);
    for (std::size_t t = 0; t < steps; ++t) {
      h = gru_step(slice_rows(tape.constant(xs), t * batch, batch), h, vars);
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(fused.value()(t * batch + b, j), h.value()(b, j), 1e-13);
    }
  }
}

TEST(Gru, FinalStateGradientWrtH0OnLength4) {
  Rng rng(14);
  const auto p = random_gru(2, 3, rng);
  const auto xs = random_matrix(4, 2, rng);
  const auto w = random_matrix(1, 3, rng);
  const auto res = check_gradients("gru final wrt h0", {random_matrix(1, 3, rng)},
                                   [&](Tape<double>& tape, const std::vector<Var<double>>& v) {
                                     const auto vars = register_gru(tape, "g", p);
                                     return project(gru_sequence(tape.constant(xs), v[0], vars, false).final, w);
                                   });
  EXPECT_TRUE(res.passed(1e-4)) << res.max_rel_error;
}

TEST(Gru, EmptySequenceReturnsInitialState) {
  Tape<double> tape;
  const auto p = zero_gru(2, 3);
  const auto vars = register_gru(tape, "g", p);
  const auto h0 = tape.constant(Matrix<double>{{1.0, 2.0, 3.0}});
  const auto res = gru_sequence(tape.constant(Matrix<double>(0, 2)), h0, vars, true);
  EXPECT_EQ(res.final.id, h0.id);
  EXPECT_FALSE(res.states.has_value());
}

TEST(Gru, MisshapedParametersAreRejected) {
  auto p = zero_gru(2, 3);
  p.U_r = Matrix<double>(2, 3);
  Tape<double> tape;
  EXPECT_THROW(register_gru(tape, "g", p), DimensionError);
}

TEST(Adam, ZeroGradientLeavesParamsAndCountsStep) {
  ParamMap<double> params{{"w", Matrix<double>{{1.5, -2.0}}}};
  const ParamMap<double> grads{{"w", Matrix<double>(1, 2)}};
  OptimizerState<double> st;
  optimizer_step(params, grads, st);
  EXPECT_EQ(params.at("w"), (Matrix<double>{{1.5, -2.0}}));
  EXPECT_EQ(st.step, 1);
}

TEST(Adam, FirstUpdateMagnitudeIsLearningRate) {
  ParamMap<double> params{{"w", Matrix<double>{{0.3}}}};
  const ParamMap<double> grads{{"w", Matrix<double>{{1.0}}}};
  OptimizerState<double> st;
  optimizer_step(params, grads, st);
  EXPECT_NEAR(0.3 - params.at("w")[0], st.config.learning_rate, 1e-10);
}

TEST(Adam, MatchesScalarSimulationOnSquare) {
  // Independent scalar Adam loop on f(w) = w^2.
  double w_ref = 1.0, m = 0, v = 0;
  const double lr = 0.05;
  ParamMap<double> params{{"w", Matrix<double>{{1.0}}}};
  OptimizerState<double> st;
  st.config.learning_rate = lr;
  for (int t = 1; t <= 100; ++t) {
    const double g = 2 * w_ref;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    w_ref -= lr * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    optimizer_step(params, ParamMap<double>{{"w", Matrix<double>{{2 * params.at("w")[0]}}}}, st);
    EXPECT_NEAR(params.at("w")[0], w_ref, 1e-12);
  }
  EXPECT_LT(std::abs(params.at("w")[0]), 0.05);
}

TEST(Adam, RejectsMismatchedGradients) {
  ParamMap<double> params{{"w", Matrix<double>(2, 2)}};
  OptimizerState<double> st;
  EXPECT_THROW(optimizer_step(params, ParamMap<double>{{"v", Matrix<double>(2, 2)}}, st), DataError);
  EXPECT_THROW(optimizer_step(params, ParamMap<double>{{"w", Matrix<double>(2, 3)}}, st), DimensionError);
  EXPECT_EQ(st.step, 0);
}

TEST(Init, GlorotBoundsAndDeterminism) {
  Rng a(42), b(42);
  Matrix<float> m1(30, 10), m2(30, 10);
  init_glorot(m1, a);
  init_glorot(m2, b);
  EXPECT_EQ(m1, m2);
  const double limit = std::sqrt(6.0 / 40.0);
  for (const float v : m1.values()) EXPECT_LE(std::abs(v), limit);
}

TEST(Rng, BelowStaysInRangeAndCoversIt) {
  Rng rng(15);
  std::vector<int> seen(7, 0);
  for (int i = 0; i < 7000; ++i) ++seen[rng.below(7)];
  for (const int c : seen) EXPECT_GT(c, 800);
}

TEST(Rng, ShuffleIsAPermutation) {
  Rng rng(16);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  rng.shuffle(std::span<int>(v));
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
  EXPECT_NE(v, sorted);
}
