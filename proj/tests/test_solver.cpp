#include <gtest/gtest.h>

#include <random>

#include "derain/metrics.hpp"
#include "derain/rain_synth.hpp"
#include "derain/scenes.hpp"
#include "derain/solver.hpp"
#include "support/oracles.hpp"

using namespace derain;

namespace {

SplitState random_state(const Shape& s, std::mt19937_64& rng) {
  SplitState st(s);
  for (VideoTensor* v : {&st.R, &st.D, &st.S, &st.X, &st.Y, &st.T, &st.L}) {
    *v = oracle::random_tensor(s, rng);
  }
  for (auto& l : st.lambda) l = oracle::random_tensor(s, rng);
  return st;
}

SolverConfig random_config(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> a(0.0, 2.0), b(0.5, 3.0), th(-80.0, 80.0);
  SolverConfig c;
  for (double& v : c.alpha) v = a(rng);
  for (double& v : c.beta) v = b(rng);
  c.theta = RainAngle(th(rng));
  c.clamp_rain = false;
  return c;
}

double objective_oracle(const VideoTensor& o, const VideoTensor& r, const SolverConfig& c) {
  const VideoTensor b = o - r;
  double f = c.alpha[0] * oracle::l1(oracle::directional_diff(r, c.angle().degrees())) +
             c.alpha[1] * oracle::l1(r) + c.alpha[2] * oracle::l1(oracle::forward_diff(b, 1)) +
             c.alpha[3] * oracle::l1(oracle::forward_diff(b, 0)) +
             c.alpha[4] * oracle::l1(oracle::forward_diff(b, 2));
  for (int mode = 1; mode <= 3; ++mode) f += oracle::nuclear(oracle::unfold(b, mode));
  return f;
}

}  // namespace

TEST(SolverConfig, Validation) {
  SolverConfig c;
  EXPECT_NO_THROW(c.validate());
  c.alpha[2] = -1.0;
  EXPECT_THROW(c.validate(), UsageError);
  c = SolverConfig{};
  c.beta[5] = 0.0;
  EXPECT_THROW(c.validate(), UsageError);
  c = SolverConfig{};
  c.max_outer = 0;
  EXPECT_THROW(c.validate(), UsageError);
  c = SolverConfig{};
  c.tol = 0.0;
  EXPECT_THROW(c.validate(), UsageError);
  c.theta.reset();
  EXPECT_THROW(c.angle(), UsageError);
}

TEST(Objective, ConstantVideoHasOnlyNuclearTerm) {
  const double c = 0.7;
  const VideoTensor o(4, 5, 3, c);
  SolverConfig cfg;
  const double n = 60.0;
  EXPECT_NEAR(objective(o, VideoTensor(o.shape()), cfg), 3.0 * c * std::sqrt(n), 1e-12);
}

TEST(Objective, MatchesTermwiseOracle) {
  std::mt19937_64 rng(20);
  for (int trial = 0; trial < 5; ++trial) {
    const SolverConfig cfg = random_config(rng);
    const VideoTensor o = oracle::random_tensor({5, 4, 3}, rng, 0.0, 1.0);
    const VideoTensor r = oracle::random_tensor({5, 4, 3}, rng, 0.0, 0.3);
    const double want = objective_oracle(o, r, cfg);
    EXPECT_NEAR(objective(o, r, cfg), want, 1e-10 * want);
  }
}

TEST(Updates, DWithZeroWeightIsShiftedR) {
  std::mt19937_64 rng(21);
  const SplitState s = random_state({4, 4, 2}, rng);
  SolverConfig cfg = random_config(rng);
  cfg.alpha[0] = 0.0;
  VideoTensor want = s.R;
  want.add_scaled(s.lambda[0], 1.0 / cfg.beta[0]);
  EXPECT_LE(max_abs(update_D(s, cfg) - want), 1e-15);
}

TEST(Updates, SAndGradientShrinkage) {
  std::mt19937_64 rng(22);
  const Shape shape{5, 4, 3};
  const SplitState s = random_state(shape, rng);
  const SolverConfig cfg = random_config(rng);
  const VideoTensor o = oracle::random_tensor(shape, rng, 0.0, 1.0);
  const VideoTensor b = o - s.R;
  auto shrink = [](VideoTensor v, double tau) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = oracle::scalar_l1_prox(v[i], tau);
    return v;
  };
  auto expect_near = [](const VideoTensor& a, const VideoTensor& b) {
    EXPECT_LE(max_abs(a - b), 1e-6);
  };
  VideoTensor sv = s.R;
  sv.add_scaled(s.lambda[1], 1.0 / cfg.beta[1]);
  expect_near(update_S(s, cfg), shrink(sv, cfg.alpha[1] / cfg.beta[1]));

  const std::pair<int, int> slots[] = {{2, 1}, {3, 0}, {4, 2}};  // X: width, Y: height, T: frames
  const VideoTensor got[] = {update_X(s, cfg, o), update_Y(s, cfg, o), update_T(s, cfg, o)};
  for (int n = 0; n < 3; ++n) {
    const auto [slot, axis] = slots[n];
    VideoTensor v = oracle::forward_diff(b, axis);
    v.add_scaled(s.lambda[static_cast<std::size_t>(slot)], 1.0 / cfg.beta[static_cast<std::size_t>(slot)]);
    expect_near(got[n], shrink(v, cfg.alpha[static_cast<std::size_t>(slot)] /
                                      cfg.beta[static_cast<std::size_t>(slot)]));
  }
}

TEST(Updates, GradientOfZeroBackgroundThresholdsToZero) {
  std::mt19937_64 rng(23);
  const Shape shape{4, 4, 2};
  SplitState s = random_state(shape, rng);
  const VideoTensor o = s.R;
  s.lambda[2] = VideoTensor(shape);
  EXPECT_EQ(max_abs(update_X(s, random_config(rng), o)), 0.0);
}

TEST(Updates, LMatchesModeCompositionOracle) {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 10; ++trial) {
    const Shape shape{4, 4, 3};
    const SplitState s = random_state(shape, rng);
    const SolverConfig cfg = random_config(rng);
    const VideoTensor o = oracle::random_tensor(shape, rng, 0.0, 1.0);
    VideoTensor target = o - s.R;
    target.add_scaled(s.lambda[5], 1.0 / cfg.beta[5]);
    VideoTensor want(shape);
    for (int mode = 1; mode <= 3; ++mode) {
      want.add_scaled(oracle::fold(oracle::svt(oracle::unfold(target, mode), 1.0 / cfg.beta[5]),
                                   mode, shape),
                      1.0 / 3.0);
    }
    EXPECT_LE(max_abs(update_L(s, cfg, o) - want), 1e-10);
  }
}

TEST(Updates, RMatchesDenseSolve) {
  std::mt19937_64 rng(25);
  for (const Shape shape : {Shape{2, 2, 2}, Shape{3, 3, 2}, Shape{4, 3, 3}}) {
    const SplitState s = random_state(shape, rng);
    const SolverConfig cfg = random_config(rng);
    const VideoTensor o = oracle::random_tensor(shape, rng, 0.0, 1.0);
    const auto& b = cfg.beta;
    const Eigen::MatrixXd dx = oracle::diff_matrix(shape, 1), dy = oracle::diff_matrix(shape, 0),
                          dt = oracle::diff_matrix(shape, 2);
    const Eigen::VectorXd ov = oracle::as_vector(o);
    Eigen::VectorXd rhs = b[0] * oracle::as_vector(s.D) - oracle::as_vector(s.lambda[0]) +
                          b[1] * oracle::as_vector(s.S) - oracle::as_vector(s.lambda[1]) +
                          dx.transpose() * (b[2] * dx * ov - b[2] * oracle::as_vector(s.X) + oracle::as_vector(s.lambda[2])) +
                          dy.transpose() * (b[3] * dy * ov - b[3] * oracle::as_vector(s.Y) + oracle::as_vector(s.lambda[3])) +
                          dt.transpose() * (b[4] * dt * ov - b[4] * oracle::as_vector(s.T) + oracle::as_vector(s.lambda[4])) +
                          b[5] * (ov - oracle::as_vector(s.L)) + oracle::as_vector(s.lambda[5]);
    const Eigen::VectorXd want = oracle::r_system_matrix(shape, b).partialPivLu().solve(rhs);
    const Eigen::VectorXd got = oracle::as_vector(update_R(s, cfg, o));
    EXPECT_LE((got - want).norm(), 1e-8 * want.norm()) << to_string(shape);
  }
}

TEST(Updates, RIsStationaryForAugmentedLagrangian) {
  std::mt19937_64 rng(26);
  for (int trial = 0; trial < 20; ++trial) {
    const Shape shape{5, 4, 3};
    SplitState s = random_state(shape, rng);
    const SolverConfig cfg = random_config(rng);
    const VideoTensor o = oracle::random_tensor(shape, rng, 0.0, 1.0);
    s.R = update_R(s, cfg, o);
    const auto& b = cfg.beta;
    const VideoTensor bg = o - s.R;
    // Gradient in R of the augmented Lagrangian.
    VideoTensor g = s.lambda[0] + b[0] * (s.R - s.D);
    g += s.lambda[1] + b[1] * (s.R - s.S);
    const std::pair<int, const VideoTensor*> terms[] = {{1, &s.X}, {0, &s.Y}, {2, &s.T}};
    for (int a = 0; a < 3; ++a) {
      const auto [axis, z] = terms[a];
      const std::size_t slot = 2 + static_cast<std::size_t>(a);
      VideoTensor inner = s.lambda[slot] + b[slot] * (oracle::forward_diff(bg, axis) - *z);
      g -= oracle::forward_diff_transpose(inner, axis);
    }
    g -= s.lambda[5] + b[5] * (bg - s.L);
    const double scale = frobenius_norm(assemble_r_rhs(s, cfg, o));
    EXPECT_LE(frobenius_norm(g), 1e-8 * scale);
  }
}

TEST(Updates, RProjectionKeepsRainInsideObservation) {
  std::mt19937_64 rng(27);
  const Shape shape{6, 6, 2};
  const SplitState s = random_state(shape, rng);
  SolverConfig cfg = random_config(rng);
  cfg.clamp_rain = true;
  const VideoTensor o = oracle::random_tensor(shape, rng, 0.0, 1.0);
  const VideoTensor r = update_R(s, cfg, o);
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_GE(r[i], 0.0);
    EXPECT_LE(r[i], o[i]);
  }
}

TEST(Updates, Multipliers) {
  std::mt19937_64 rng(28);
  const Shape shape{4, 5, 2};
  SplitState s = random_state(shape, rng);
  const SolverConfig cfg = random_config(rng);
  const VideoTensor o = oracle::random_tensor(shape, rng, 0.0, 1.0);
  const SplitState before = s;
  update_multipliers(s, cfg, o);
  const auto& b = cfg.beta;
  const VideoTensor bg = o - before.R;
  const VideoTensor want[] = {
      before.lambda[0] + b[0] * (before.R - before.D),
      before.lambda[1] + b[1] * (before.R - before.S),
      before.lambda[2] + b[2] * (oracle::forward_diff(bg, 1) - before.X),
      before.lambda[3] + b[3] * (oracle::forward_diff(bg, 0) - before.Y),
      before.lambda[4] + b[4] * (oracle::forward_diff(bg, 2) - before.T),
      before.lambda[5] + b[5] * (bg - before.L)};
  for (std::size_t i = 0; i < 6; ++i) EXPECT_LE(max_abs(s.lambda[i] - want[i]), 1e-12) << i;
}

TEST(Decompose, ZeroInputConvergesImmediately) {
  const VideoTensor o(8, 8, 3);
  const DecompositionResult r = decompose(o, SolverConfig{});
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.iterations_run, 2);
  EXPECT_EQ(max_abs(r.rain), 0.0);
}

TEST(Decompose, ConstantVideoHasNoRain) {
  const VideoTensor o(16, 16, 4, 0.5);
  const DecompositionResult r = decompose(o, SolverConfig{});
  EXPECT_LE(frobenius_norm(r.rain), 0.01 * frobenius_norm(o));
}

TEST(Decompose, RejectsOutOfRangeInput) {
  VideoTensor o(4, 4, 2, 0.5);
  o[3] = 1.5;
  EXPECT_THROW(decompose(o, SolverConfig{}), DataError);
  SolverConfig bad;
  bad.beta[0] = -1.0;
  EXPECT_THROW(decompose(VideoTensor(4, 4, 2), bad), UsageError);
}

TEST(Decompose, ScaleParameterActsLikePenaltyScaling) {
  // Every term is 1-homogeneous, so iterating on s * O with penalties beta
  // is s times the iteration on O with penalties s * beta.
  const VideoTensor clean = textured_scene({16, 16, 4}, 3);
  const SynthResult s = synthesize(clean, rain_preset(RainIntensity::heavy, 30.0, 1));
  SolverConfig a;
  a.theta = RainAngle(30.0);
  a.max_outer = 5;
  SolverConfig b = a;
  b.intensity_scale = 1.0;
  for (double& v : b.beta) v *= 255.0;
  const auto ra = decompose(s.observed, a), rb = decompose(s.observed, b);
  EXPECT_LE(max_abs(ra.rain - rb.rain), 1e-9);
}

TEST(Decompose, RemovesSyntheticRain) {
  const VideoTensor clean = textured_scene({32, 32, 8}, 4);
  const SynthResult s = synthesize(clean, rain_preset(RainIntensity::heavy, 45.0, 2));
  SolverConfig cfg;
  cfg.theta = RainAngle(45.0);
  cfg.max_outer = 30;
  int calls = 0;
  const DecompositionResult r = decompose(s.observed, cfg, [&](const IterationRecord&) { ++calls; });
  EXPECT_EQ(calls, r.iterations_run);
  EXPECT_EQ(r.diagnostics.size(), static_cast<std::size_t>(r.iterations_run));
  EXPECT_GT(psnr(r.background, clean), psnr(s.observed, clean) + 1.0);
  EXPECT_DOUBLE_EQ(r.angle.degrees(), 45.0);
}
