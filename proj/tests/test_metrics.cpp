#include <gtest/gtest.h>

#include <random>

#include "derain/metrics.hpp"
#include "support/oracles.hpp"

using namespace derain;

TEST(Metrics, PsnrOfHalfOffset) {
  const VideoTensor a(8, 8, 2, 0.5), b(8, 8, 2, 0.0);
  EXPECT_NEAR(psnr(a, b), 6.0206, 1e-4);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
}

TEST(Metrics, SsimIdentityAndOracle) {
  VideoTensor board(16, 20, 2), shifted(16, 20, 2);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t j = 0; j < 20; ++j)
      for (std::size_t i = 0; i < 16; ++i) {
        board(i, j, k) = ((i / 2 + j / 2 + k) % 2) ? 0.8 : 0.2;
        shifted(i, j, k) = 0.9 * board(i, j, k) + 0.05 * std::sin(0.3 * static_cast<double>(i * j));
      }
  EXPECT_NEAR(ssim(board, board), 1.0, 1e-12);
  const double want = 0.5 * (oracle::ssim_frame(shifted, board, 0) + oracle::ssim_frame(shifted, board, 1));
  EXPECT_NEAR(ssim(shifted, board), want, 1e-6);
}

TEST(Metrics, SsimRejectsTinyFrames) {
  EXPECT_THROW(ssim(VideoTensor(8, 8, 1), VideoTensor(8, 8, 1)), UsageError);
}

TEST(Metrics, ResOfConstantOffset) {
  const double c = 0.1;
  const VideoTensor a(6, 7, 3, 0.3 + c), b(6, 7, 3, 0.3);
  EXPECT_NEAR(res(a, b), 255.0 * c * std::sqrt(42.0), 1e-9);
}

TEST(Metrics, NoiseLadderIsMonotone) {
  std::mt19937_64 rng(30);
  const VideoTensor clean = oracle::random_tensor({32, 32, 3}, rng, 0.2, 0.8);
  const VideoTensor noise = oracle::random_tensor({32, 32, 3}, rng, -1.0, 1.0);
  double prev_psnr = std::numeric_limits<double>::infinity(), prev_ssim = 1.0, prev_res = 0.0;
  for (double sigma : {0.01, 0.02, 0.05, 0.1}) {
    VideoTensor noisy = clean;
    noisy.add_scaled(noise, sigma);
    const MetricsReport r = evaluate(noisy, clean);
    EXPECT_LT(r.psnr_b, prev_psnr);
    EXPECT_LT(r.ssim_b, prev_ssim);
    EXPECT_GT(r.res_b, prev_res);
    EXPECT_TRUE(std::isnan(r.ssim_r));
    prev_psnr = r.psnr_b;
    prev_ssim = r.ssim_b;
    prev_res = r.res_b;
  }
}

TEST(Metrics, EvaluateWithRainLayers) {
  const VideoTensor b(12, 12, 1, 0.5), r(12, 12, 1, 0.1);
  const MetricsReport m = evaluate(b, b, &r, &r);
  EXPECT_NEAR(m.ssim_r, 1.0, 1e-12);
  EXPECT_EQ(m.res_b, 0.0);
}
