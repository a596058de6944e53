#include <gtest/gtest.h>

#include <random>

#include "derain/fft.hpp"
#include "support/oracles.hpp"

using namespace derain;

TEST(Fft, DeltaHasFlatSpectrum) {
  VideoTensor x(4, 6, 3);
  x(0, 0, 0) = 1.0;
  const ComplexTensor s = fft3(x);
  for (const auto& c : s.data) {
    EXPECT_NEAR(c.real(), 1.0, 1e-14);
    EXPECT_NEAR(c.imag(), 0.0, 1e-14);
  }
}

TEST(Fft, ConstantConcentratesAtZero) {
  const VideoTensor x(4, 5, 2, 2.0);
  const ComplexTensor s = fft3(x);
  EXPECT_NEAR(s(0, 0, 0).real(), 80.0, 1e-12);
  for (std::size_t i = 1; i < s.data.size(); ++i) EXPECT_NEAR(std::abs(s.data[i]), 0.0, 1e-12);
}

TEST(Fft, RoundTrip) {
  std::mt19937_64 rng(7);
  const VideoTensor x = oracle::random_tensor({7, 6, 5}, rng);
  const VideoTensor y = ifft3(fft3(x));
  EXPECT_LE(max_abs(y - x), 1e-10);
}

TEST(Fft, RealTransformRoundTrip) {
  std::mt19937_64 rng(8);
  const VideoTensor x = oracle::random_tensor({5, 8, 3}, rng);
  RealFft3 f(x.shape());
  std::vector<std::complex<double>> spec;
  f.forward(x, spec);
  VideoTensor y;
  f.inverse(spec, y);
  EXPECT_LE(max_abs(y - x), 1e-10);
  EXPECT_THROW(f.forward(VideoTensor(5, 8, 2), spec), UsageError);
}

TEST(Fft, DifferencesAreDiagonal) {
  std::mt19937_64 rng(9);
  const VideoTensor x = oracle::random_tensor({6, 5, 4}, rng);
  const ComplexTensor sx = fft3(x);
  const std::pair<Axis, int> cases[] = {{Axis::y, 0}, {Axis::x, 1}, {Axis::t, 2}};
  for (const auto& [axis, dim] : cases) {
    const ComplexTensor sd = fft3(diff(x, axis));
    for (std::size_t w = 0; w < 4; ++w)
      for (std::size_t v = 0; v < 5; ++v)
        for (std::size_t u = 0; u < 6; ++u) {
          const std::size_t freq = dim == 0 ? u : dim == 1 ? v : w;
          const std::size_t extent = dim == 0 ? 6 : dim == 1 ? 5 : 4;
          const auto want = difference_eigenvalue(freq, extent) * sx(u, v, w);
          EXPECT_LE(std::abs(sd(u, v, w) - want), 1e-8);
        }
  }
}

TEST(Fft, LaplacianSymbol) {
  for (std::size_t n : {2u, 5u, 8u})
    for (std::size_t f = 0; f < n; ++f) {
      EXPECT_NEAR(laplacian_eigenvalue(f, n), std::norm(difference_eigenvalue(f, n)), 1e-12);
    }
}

TEST(Fft, RejectsNonHermitianSpectrum) {
  ComplexTensor s{{4, 4, 1}, std::vector<std::complex<double>>(16)};
  s(1, 0, 0) = {0.0, 1.0};
  EXPECT_THROW(ifft3(s), NumericalError);
}
