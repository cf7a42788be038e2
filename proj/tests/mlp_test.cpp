#include "ipdnet/mlp.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <sstream>

namespace ipdnet {
namespace {

using Input = std::array<double, kInputSize>;

MlpParams sine_params() {
  MlpParams p;
  auto flat = p.flat();
  for (std::size_t k = 0; k < flat.size(); ++k) flat[k] = 0.5 * std::sin(0.37 * double(k) + 0.1);
  return p;
}

Input random_input(Rng& rng) {
  Input x;
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  return x;
}

TEST(MlpParams, LayoutHas450Parameters) {
  EXPECT_EQ(MlpParams::kSize, 8u * 16 + 16 + 16 * 16 + 16 + 16 * 2 + 2);
  EXPECT_EQ(MlpParams::kB1, 128u);
  EXPECT_EQ(MlpParams::kW2, 144u);
  EXPECT_EQ(MlpParams::kB2, 400u);
  EXPECT_EQ(MlpParams::kW3, 416u);
  EXPECT_EQ(MlpParams::kB3, 448u);
}

TEST(MlpParams, AccessorsAddressFlatLayout) {
  MlpParams p;
  p.w1(3, 5) = 1.0;
  p.w2(2, 7) = 2.0;
  p.w3(15, 1) = 3.0;
  p.b3(1) = 4.0;
  EXPECT_EQ(p.flat()[3 * 16 + 5], 1.0);
  EXPECT_EQ(p.flat()[144 + 2 * 16 + 7], 2.0);
  EXPECT_EQ(p.flat()[416 + 15 * 2 + 1], 3.0);
  EXPECT_EQ(p.flat()[449], 4.0);
}

TEST(Forward, ZeroParamsGiveZero) {
  const Input x{1, 0, 0, 1, 1, 0, 0, 1};
  EXPECT_EQ(forward(MlpParams{}, x), (QValues{0.0, 0.0}));
}

TEST(Forward, OutputBiasPassesThrough) {
  MlpParams p;
  p.b3(0) = 1.0;
  p.b3(1) = -1.0;
  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    const Input x = random_input(rng);
    EXPECT_EQ(forward(p, x), (QValues{1.0, -1.0}));
  }
}

TEST(Forward, MatchesMatrixOracle) {
  // Expected values from an independent numpy evaluation of the same
  // parameters: q = tanh(tanh(x W1 + b1) W2 + b2) W3 + b3.
  const MlpParams p = sine_params();
  struct Case {
    Input x;
    QValues q;
  };
  const Case cases[] = {
      {{1, 0, 0, 1, 1, 0, 0, 1}, {0.563308104520474, 0.25823820211380266}},
      {{0, 0, 0, 0, 1, 0, 0, 1}, {0.6059663458428035, 0.27869589513280524}},
      {{1, 0, 1, 0, 0, 1, 1, 0}, {0.5411022906973484, 0.2464000362350844}},
  };
  for (const Case& c : cases) {
    const QValues q = forward(p, c.x);
    for (std::size_t a = 0; a < 2; ++a) {
      EXPECT_NEAR(q[a], c.q[a], 1e-12 * std::abs(c.q[a]));
    }
  }
}

TEST(Forward, IsPureAndDeterministic) {
  const MlpParams p = sine_params();
  Rng rng(5);
  const Input x = random_input(rng);
  const QValues a = forward(p, x);
  const QValues b = forward(p, x);
  EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0);
}

TEST(Forward, HiddenActivationsStayInsideOpenInterval) {
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    const MlpParams p = i % 2 == 0 ? sine_params() : initialize_params(rng);
    const Input x = random_input(rng);
    const ForwardTrace t = forward_trace(p, x);
    for (double h : t.h1) EXPECT_LT(std::abs(h), 1.0);
    for (double h : t.h2) EXPECT_LT(std::abs(h), 1.0);
  }
}

TEST(Forward, NonFiniteParamsFault) {
  MlpParams p;
  p.w2(0, 0) = std::nan("");
  const Input x{};
  EXPECT_THROW(forward(p, x), NumericalFault);
}

TEST(Forward, UncheckedAgreesWithChecked) {
  const MlpParams p = sine_params();
  const Input x{0, 1, 1, 0, 0, 1, 1, 0};
  EXPECT_EQ(forward_trace_unchecked(p, x).q, forward(p, x));
}

// Loss as a function of the parameters with the regression target held
// fixed: L = w * (Q_a - y)^2 / 2.
double loss(const MlpParams& p, const Input& x, std::size_t action, double target, double w) {
  const double d = forward(p, x)[action] - target;
  return 0.5 * w * d * d;
}

TEST(Backward, MatchesCentralFiniteDifferences) {
  Rng rng(2024);
  constexpr double h = 1e-5;
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    MlpParams p = initialize_params(rng);
    for (std::size_t i = MlpParams::kB1; i < MlpParams::kB1 + kHidden1; ++i) {
      p.flat()[i] = rng.uniform(-0.5, 0.5);
    }
    const Input x = random_input(rng);
    const std::size_t action = rng.below(2);
    const double td = rng.uniform(-3.0, 3.0);
    const double w = rng.uniform(0.1, 1.0);
    const double target = forward(p, x)[action] - td;

    const MlpParams grad = backward(p, x, action, td, w);
    for (std::size_t k = 0; k < MlpParams::kSize; ++k) {
      MlpParams plus = p;
      MlpParams minus = p;
      plus.flat()[k] += h;
      minus.flat()[k] -= h;
      const double numeric =
          (loss(plus, x, action, target, w) - loss(minus, x, action, target, w)) / (2 * h);
      const double analytic = grad.flat()[k];
      ASSERT_NEAR(analytic, numeric, 1e-4 * std::max(1.0, std::abs(numeric)))
          << "trial " << trial << " param " << k;
      ++checked;
    }
  }
  EXPECT_EQ(checked, 100 * 450);
}

TEST(Backward, ZeroTdGivesZeroGradient) {
  const Input x{1, 0, 0, 1, 1, 0, 0, 1};
  const MlpParams grad = backward(sine_params(), x, 1, 0.0, 0.7);
  EXPECT_EQ(grad.squared_norm(), 0.0);
}

TEST(Backward, LinearInImportanceWeight) {
  const Input x{0, 1, 1, 0, 1, 0, 1, 0};
  const MlpParams g1 = backward(sine_params(), x, 0, 0.8, 0.25);
  const MlpParams g2 = backward(sine_params(), x, 0, 0.8, 0.5);
  for (std::size_t k = 0; k < MlpParams::kSize; ++k) {
    EXPECT_DOUBLE_EQ(g2.flat()[k], 2.0 * g1.flat()[k]);
  }
}

TEST(Backward, OnlyTouchesChosenOutput) {
  const Input x{0, 1, 1, 0, 1, 0, 1, 0};
  const MlpParams g = backward(sine_params(), x, 1, 1.0, 1.0);
  EXPECT_EQ(g.b3(0), 0.0);
  for (std::size_t j = 0; j < kHidden2; ++j) EXPECT_EQ(g.w3(j, 0), 0.0);
  EXPECT_EQ(g.b3(1), 1.0);
}

TEST(Backward, RejectsBadArguments) {
  const Input x{};
  EXPECT_THROW(backward(MlpParams{}, x, 2, 1.0, 1.0), std::out_of_range);
  EXPECT_THROW(backward(MlpParams{}, x, 0, 1.0, 0.0), std::invalid_argument);
}

TEST(OutputGradient, EqualsSumOfPerActionGradients) {
  const MlpParams p = sine_params();
  const Input x{1, 0, 0, 1, 0, 1, 1, 0};
  const ForwardTrace t = forward_trace(p, x);
  MlpParams fused;
  accumulate_output_gradient(p, x, t, {0.3, -0.7}, fused);
  MlpParams split;
  accumulate_q_gradient(p, x, t, 0, 0.3, split);
  accumulate_q_gradient(p, x, t, 1, -0.7, split);
  for (std::size_t k = 0; k < MlpParams::kSize; ++k) {
    EXPECT_NEAR(fused.flat()[k], split.flat()[k], 1e-15);
  }
}

TEST(Initialize, WeightsWithinFanInBoundsAndBiasesZero) {
  Rng rng(11);
  const MlpParams p = initialize_params(rng);
  for (std::size_t i = 0; i < kInputSize; ++i)
    for (std::size_t o = 0; o < kHidden1; ++o) EXPECT_LE(std::abs(p.w1(i, o)), 1.0 / std::sqrt(8.0));
  for (std::size_t i = 0; i < kHidden1; ++i)
    for (std::size_t o = 0; o < kHidden2; ++o) EXPECT_LE(std::abs(p.w2(i, o)), 0.25);
  for (std::size_t o = 0; o < kHidden1; ++o) EXPECT_EQ(p.b1(o), 0.0);
  for (std::size_t o = 0; o < kHidden2; ++o) EXPECT_EQ(p.b2(o), 0.0);
  EXPECT_EQ(p.b3(0), 0.0);
  EXPECT_EQ(p.b3(1), 0.0);
}

TEST(Initialize, SameSeedSameParams) {
  Rng a(77), b(77), c(78);
  const MlpParams pa = initialize_params(a);
  EXPECT_EQ(pa, initialize_params(b));
  EXPECT_NE(pa, initialize_params(c));
}

TEST(Adam, ThreeStepsMatchHandRecurrence) {
  double w = 0.5, m = 0.0, v = 0.0;
  const AdamConfig cfg;
  const double grads[] = {0.3, -1.2, 2.5};
  const double expect_w[] = {0.49900000003333334, 0.49955950352097567, 0.49917859400800074};
  const double expect_m[] = {0.03, -0.093, 0.1663};
  const double expect_v[] = {9e-05, 0.00152991, 0.00777838009};
  for (int t = 0; t < 3; ++t) {
    adam_step(std::span(&w, 1), std::span(&m, 1), std::span(&v, 1),
              std::span<const double>(&grads[t], 1), t + 1, cfg);
    EXPECT_NEAR(w, expect_w[t], 1e-15);
    EXPECT_NEAR(m, expect_m[t], 1e-15);
    EXPECT_NEAR(v, expect_v[t], 1e-15);
  }
}

TEST(Adam, ConvergesOnQuadratic) {
  double w = 1.0, m = 0.0, v = 0.0;
  const AdamConfig cfg;
  int first_below = 0;
  for (int t = 1; t <= 10'000; ++t) {
    const double g = 2.0 * w;
    adam_step(std::span(&w, 1), std::span(&m, 1), std::span(&v, 1), std::span<const double>(&g, 1),
              t, cfg);
    if (first_below == 0 && std::abs(w) < 1e-3) first_below = t;
  }
  EXPECT_GT(first_below, 0);
  EXPECT_LE(first_below, 10'000);
  EXPECT_LT(std::abs(w), 1e-3);
}

TEST(Adam, RejectsMismatchedSpansAndZeroStep) {
  double a[2]{}, b[2]{}, c[2]{}, g[1]{};
  EXPECT_THROW(adam_step(a, b, c, std::span<const double>(g, 1), 1, {}), std::invalid_argument);
  EXPECT_THROW(adam_step(std::span(a, 1), std::span(b, 1), std::span(c, 1),
                         std::span<const double>(g, 1), 0, {}),
               std::invalid_argument);
}

TEST(ApplyUpdate, ZeroGradientLeavesParamsAndDecaysMoments) {
  MlpParams p = sine_params();
  OptimizerState opt;
  opt.first_moment.flat()[0] = 1.0;
  opt.second_moment.flat()[0] = 1.0;
  MlpParams grad;
  const MlpParams before = p;
  apply_update(p, opt, grad);
  EXPECT_EQ(opt.step, 1);
  EXPECT_DOUBLE_EQ(opt.first_moment.flat()[0], 0.9);
  EXPECT_DOUBLE_EQ(opt.second_moment.flat()[0], 0.999);
  // Only the parameter with a non-zero moment moves.
  for (std::size_t k = 1; k < MlpParams::kSize; ++k) EXPECT_EQ(p.flat()[k], before.flat()[k]);
}

TEST(ApplyUpdate, ExactZeroGradientFromZeroMomentsIsFixedPoint) {
  MlpParams p = sine_params();
  OptimizerState opt;
  apply_update(p, opt, MlpParams{});
  EXPECT_EQ(p, sine_params());
}

TEST(ApplyUpdate, NonFiniteResultFaults) {
  MlpParams p;
  OptimizerState opt;
  MlpParams grad;
  grad.flat()[0] = std::nan("");
  EXPECT_THROW(apply_update(p, opt, grad), NumericalFault);
}

TEST(QNetworkPair, SyncCopiesExactly) {
  QNetworkPair pair;
  pair.online = sine_params();
  pair.sync_target();
  EXPECT_EQ(pair.target, pair.online);
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const Input x = random_input(rng);
    EXPECT_EQ(forward(pair.target, x), forward(pair.online, x));
  }
}

TEST(QNetworkPair, TargetIsolatedFromLaterUpdates) {
  QNetworkPair pair;
  pair.online = sine_params();
  pair.sync_target();
  const std::uint64_t snapshot = pair.target.fingerprint();
  OptimizerState opt;
  const Input x{1, 0, 0, 1, 1, 0, 0, 1};
  apply_update(pair.online, opt, backward(pair.online, x, 0, 1.0, 1.0));
  EXPECT_NE(pair.online.fingerprint(), snapshot);
  EXPECT_EQ(pair.target.fingerprint(), snapshot);
}

TEST(QNetworkPair, RepeatedSyncIsIdempotent) {
  QNetworkPair pair;
  pair.online = sine_params();
  pair.sync_target();
  const MlpParams once = pair.target;
  pair.sync_target();
  EXPECT_EQ(pair.target, once);
}

TEST(Serialization, RoundTripIsBitExact) {
  MlpParams p = sine_params();
  p.flat()[7] = -0.0;
  p.flat()[8] = 1e-310;
  std::stringstream buf;
  write_params(buf, p);
  EXPECT_EQ(buf.str().size(), 450u * 8);
  const MlpParams q = read_params(buf);
  EXPECT_EQ(q.fingerprint(), p.fingerprint());
}

TEST(Serialization, LittleEndianLayout) {
  MlpParams p;
  p.flat()[0] = 1.0;  // 0x3FF0000000000000
  std::stringstream buf;
  write_params(buf, p);
  const std::string bytes = buf.str();
  EXPECT_EQ(static_cast<unsigned char>(bytes[6]), 0xF0);
  EXPECT_EQ(static_cast<unsigned char>(bytes[7]), 0x3F);
}

TEST(Serialization, TruncatedInputThrows) {
  std::stringstream buf(std::string(100, '\0'));
  EXPECT_THROW(read_params(buf), std::runtime_error);
}

}  // namespace
}  // namespace ipdnet
