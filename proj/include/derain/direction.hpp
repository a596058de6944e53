#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "derain/fft.hpp"
#include "derain/operators.hpp"
#include "derain/tensor.hpp"

namespace derain {

// Rain-direction estimation from the Fourier magnitude spectrum.
//
// Streaks are thin and elongated along (cos theta, sin theta), so their
// spectral energy concentrates on the line through the origin perpendicular
// to that direction. The estimator isolates the rain component, averages
// windowed power spectra over frames, averages the log spectrum along lines
// through the origin and reports the orientation perpendicular to the
// strongest line. The log keeps a few strong isolated peaks (moving
// background texture) from outweighing a ridge that spans all radii.

struct DirectionOptions {
  /// Angular step of the line sweep, degrees.
  double step_deg = 0.5;
  /// Radial band used for integration, in cycles per pixel.
  double min_radius = 0.06;
  double max_radius = 0.45;
  /// Gaussian width of the background estimate used for clips with < 3 frames.
  double blur_sigma = 2.0;
};

namespace detail {

inline double median_of(std::vector<double>& v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

// Separable Gaussian blur of every frame, replicate-edge boundaries.
inline VideoTensor gaussian_blur_frames(const VideoTensor& x, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int r = -radius; r <= radius; ++r) {
    kernel[r + radius] = std::exp(-0.5 * r * r / (sigma * sigma));
    sum += kernel[r + radius];
  }
  for (double& k : kernel) k /= sum;

  const auto m = static_cast<long>(x.height()), n = static_cast<long>(x.width());
  VideoTensor tmp(x.shape()), out(x.shape());
  for (std::size_t k = 0; k < x.frames(); ++k) {
    for (long j = 0; j < n; ++j)
      for (long i = 0; i < m; ++i) {
        double acc = 0.0;
        for (int r = -radius; r <= radius; ++r) {
          acc += kernel[r + radius] * x(std::clamp(i + r, 0L, m - 1), j, k);
        }
        tmp(i, j, k) = acc;
      }
    for (long j = 0; j < n; ++j)
      for (long i = 0; i < m; ++i) {
        double acc = 0.0;
        for (int r = -radius; r <= radius; ++r) {
          acc += kernel[r + radius] * tmp(i, std::clamp(j + r, 0L, n - 1), k);
        }
        out(i, j, k) = acc;
      }
  }
  return out;
}

}  // namespace detail

/// Rain-dominant residual: each frame minus the per-pixel temporal median, or
/// minus a blurred copy of itself when there are fewer than three frames.
inline VideoTensor rain_residual(const VideoTensor& observed, double blur_sigma = 2.0) {
  const std::size_t t = observed.frames(), px = observed.shape().frame_size();
  if (t < 3) return observed - detail::gaussian_blur_frames(observed, blur_sigma);
  VideoTensor out(observed.shape());
  std::vector<double> series(t);
  for (std::size_t p = 0; p < px; ++p) {
    for (std::size_t k = 0; k < t; ++k) series[k] = observed[p + px * k];
    const double med = detail::median_of(series);
    for (std::size_t k = 0; k < t; ++k) out[p + px * k] = observed[p + px * k] - med;
  }
  return out;
}

/// Hann-windowed power spectrum of each residual frame, averaged over frames
/// and centred (zero frequency at (m/2, n/2)). Returned as an m x n x 1 tensor.
inline VideoTensor mean_power_spectrum(const VideoTensor& residual) {
  const std::size_t m = residual.height(), n = residual.width();
  const Shape frame_shape{m, n, 1};
  std::vector<double> wy(m), wx(n);
  for (std::size_t i = 0; i < m; ++i)
    wy[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (i + 0.5) / static_cast<double>(m));
  for (std::size_t j = 0; j < n; ++j)
    wx[j] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (j + 0.5) / static_cast<double>(n));

  VideoTensor power(frame_shape);
  VideoTensor windowed(frame_shape);
  for (std::size_t k = 0; k < residual.frames(); ++k) {
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < m; ++i) windowed(i, j, 0) = residual(i, j, k) * wy[i] * wx[j];
    const ComplexTensor spec = fft3(windowed);
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t u = 0; u < m; ++u) {
        power((u + m / 2) % m, (v + n / 2) % n, 0) += std::norm(spec(u, v, 0));
      }
  }
  power *= 1.0 / static_cast<double>(residual.frames());
  return power;
}

/// Mean of a centred spectrum sampled along the line through the origin
/// at angle phi (degrees from the vertical frequency axis toward +kx), over
/// the radial band [min_radius, max_radius] cycles/pixel on both sides.
inline double line_energy(const VideoTensor& spectrum, double phi_deg,
                          const DirectionOptions& opts = {}) {
  const auto m = static_cast<double>(spectrum.height()), n = static_cast<double>(spectrum.width());
  const double cy = std::floor(m / 2.0), cx = std::floor(n / 2.0);
  const double phi = phi_deg * std::numbers::pi / 180.0;
  const double dy = std::cos(phi), dx = std::sin(phi);
  // One sample per half pixel along the longer frequency axis.
  const double dr = 0.5 / std::max(m, n);
  auto sample = [&](double y, double x) {
    const double fy = std::floor(y), fx = std::floor(x);
    const double ay = y - fy, ax = x - fx;
    const auto y0 = static_cast<std::size_t>(fy), x0 = static_cast<std::size_t>(fx);
    const std::size_t y1 = std::min(y0 + 1, spectrum.height() - 1);
    const std::size_t x1 = std::min(x0 + 1, spectrum.width() - 1);
    return (1 - ay) * (1 - ax) * spectrum(y0, x0, 0) + ay * (1 - ax) * spectrum(y1, x0, 0) +
           (1 - ay) * ax * spectrum(y0, x1, 0) + ay * ax * spectrum(y1, x1, 0);
  };
  double energy = 0.0;
  std::size_t count = 0;
  for (double r = opts.min_radius; r <= opts.max_radius; r += dr) {
    for (double sgn : {1.0, -1.0}) {
      const double y = cy + sgn * r * dy * m, x = cx + sgn * r * dx * n;
      if (y < 0.0 || x < 0.0 || y > m - 1.0 || x > n - 1.0) continue;
      energy += sample(y, x);
      ++count;
    }
  }
  return count > 0 ? energy / static_cast<double>(count) : 0.0;
}

/// Estimates the dominant rain angle of a video. A constant (or otherwise
/// residual-free) video yields theta = 0 with confidence 0.
inline RainAngle estimate_angle(const VideoTensor& observed, const DirectionOptions& opts = {}) {
  const VideoTensor residual = rain_residual(observed, opts.blur_sigma);
  if (max_abs(residual) <= 1e-12 * std::max(1.0, max_abs(observed))) return RainAngle(0.0, 0.0);

  VideoTensor spectrum = mean_power_spectrum(residual);
  const double eps = 1e-12 * max_abs(spectrum);
  for (std::size_t i = 0; i < spectrum.size(); ++i) spectrum[i] = std::log(spectrum[i] + eps);
  const int steps = static_cast<int>(std::lround(180.0 / opts.step_deg));
  std::vector<double> profile(steps);
  std::vector<double> angles(steps);
  for (int s = 0; s < steps; ++s) {
    // Symmetric grid over (-90, 90]: -90 + step, ..., 90.
    angles[s] = -90.0 + (s + 1) * opts.step_deg;
    profile[s] = line_energy(spectrum, angles[s], opts);
  }
  const auto best = std::max_element(profile.begin(), profile.end());
  const auto [lo, hi] = std::minmax_element(profile.begin(), profile.end());
  double mean = 0.0;
  for (double e : profile) mean += e;
  mean /= static_cast<double>(profile.size());

  const double spread = *hi - *lo;
  if (!(spread > 0.0)) return RainAngle(0.0, 0.0);
  const double confidence = std::clamp((*best - mean) / spread, 0.0, 1.0);
  double theta = wrap_orientation(angles[best - profile.begin()] + 90.0);
  // Horizontal streaks sit on the excluded endpoint of the angle range.
  if (theta >= 90.0) theta = std::nextafter(90.0, 0.0);
  return RainAngle(theta, confidence);
}

}  // namespace derain
