#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "derain/error.hpp"
#include "derain/tensor.hpp"

namespace derain {

/// PSNR/SSIM of the background, SSIM of the rain layer and the background
/// residual error, in the column order of the usual deraining result tables.
struct MetricsReport {
  double psnr_b = 0.0;
  double ssim_b = 0.0;
  double ssim_r = 0.0;
  double res_b = 0.0;
};

/// 10 log10(1 / MSE) with peak value 1. Identical inputs give +infinity.
inline double psnr(const VideoTensor& a, const VideoTensor& ref) {
  a.require_same_shape(ref, "psnr");
  double sse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - ref[i];
    sse += d * d;
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(static_cast<double>(a.size()) / sse);
}

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

namespace detail {

// 'valid' separable filtering of one m x n column-major frame with a
// normalized 1-D kernel; the result is (m - w + 1) x (n - w + 1).
inline std::vector<double> filter_valid(std::span<const double> img, std::size_t m,
                                        std::size_t n, const std::vector<double>& kernel) {
  const std::size_t w = kernel.size(), om = m - w + 1, on = n - w + 1;
  std::vector<double> rows(om * n), out(om * on);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < om; ++i) {
      double acc = 0.0;
      for (std::size_t r = 0; r < w; ++r) acc += kernel[r] * img[i + r + m * j];
      rows[i + om * j] = acc;
    }
  for (std::size_t j = 0; j < on; ++j)
    for (std::size_t i = 0; i < om; ++i) {
      double acc = 0.0;
      for (std::size_t r = 0; r < w; ++r) acc += kernel[r] * rows[i + om * (j + r)];
      out[i + om * j] = acc;
    }
  return out;
}

}  // namespace detail

/// Single-scale SSIM (Gaussian window, valid region), mean over frames.
inline double ssim(const VideoTensor& a, const VideoTensor& ref, const SsimOptions& opts = {}) {
  a.require_same_shape(ref, "ssim");
  const std::size_t m = a.height(), n = a.width(), w = static_cast<std::size_t>(opts.window);
  if (m < w || n < w) {
    throw UsageError("ssim: frames of " + std::to_string(m) + "x" + std::to_string(n) +
                     " are smaller than the " + std::to_string(w) + "x" + std::to_string(w) +
                     " window");
  }
  std::vector<double> kernel(w);
  double sum = 0.0;
  for (std::size_t r = 0; r < w; ++r) {
    const double d = static_cast<double>(r) - 0.5 * static_cast<double>(w - 1);
    kernel[r] = std::exp(-0.5 * d * d / (opts.sigma * opts.sigma));
    sum += kernel[r];
  }
  for (double& k : kernel) k /= sum;

  const double c1 = std::pow(opts.k1 * opts.dynamic_range, 2);
  const double c2 = std::pow(opts.k2 * opts.dynamic_range, 2);
  const std::size_t px = m * n;
  std::vector<double> aa(px), rr(px), ar(px);
  double total = 0.0;
  for (std::size_t k = 0; k < a.frames(); ++k) {
    const auto fa = a.frame(k), fr = ref.frame(k);
    for (std::size_t p = 0; p < px; ++p) {
      aa[p] = fa[p] * fa[p];
      rr[p] = fr[p] * fr[p];
      ar[p] = fa[p] * fr[p];
    }
    const auto mu_a = detail::filter_valid(fa, m, n, kernel);
    const auto mu_r = detail::filter_valid(fr, m, n, kernel);
    const auto e_aa = detail::filter_valid(aa, m, n, kernel);
    const auto e_rr = detail::filter_valid(rr, m, n, kernel);
    const auto e_ar = detail::filter_valid(ar, m, n, kernel);
    double frame_sum = 0.0;
    for (std::size_t q = 0; q < mu_a.size(); ++q) {
      const double ma = mu_a[q], mr = mu_r[q];
      const double va = e_aa[q] - ma * ma, vr = e_rr[q] - mr * mr, cov = e_ar[q] - ma * mr;
      frame_sum += ((2.0 * ma * mr + c1) * (2.0 * cov + c2)) /
                   ((ma * ma + mr * mr + c1) * (va + vr + c2));
    }
    total += frame_sum / static_cast<double>(mu_a.size());
  }
  return total / static_cast<double>(a.frames());
}

/// Residual error: mean over frames of ||A_k - Ref_k||_F with intensities on
/// the 0..255 scale. Lower is better.
inline double res(const VideoTensor& a, const VideoTensor& ref) {
  a.require_same_shape(ref, "res");
  double total = 0.0;
  for (std::size_t k = 0; k < a.frames(); ++k) {
    const auto fa = a.frame(k), fr = ref.frame(k);
    double s = 0.0;
    for (std::size_t p = 0; p < fa.size(); ++p) {
      const double d = 255.0 * (fa[p] - fr[p]);
      s += d * d;
    }
    total += std::sqrt(s);
  }
  return total / static_cast<double>(a.frames());
}

/// Scores an estimated background (and optionally rain layer) against ground
/// truth. ssim_r is NaN when no rain layers are given.
inline MetricsReport evaluate(const VideoTensor& background, const VideoTensor& background_truth,
                              const VideoTensor* rain = nullptr,
                              const VideoTensor* rain_truth = nullptr) {
  MetricsReport r;
  r.psnr_b = psnr(background, background_truth);
  r.ssim_b = ssim(background, background_truth);
  r.res_b = res(background, background_truth);
  r.ssim_r = (rain != nullptr && rain_truth != nullptr)
                 ? ssim(*rain, *rain_truth)
                 : std::numeric_limits<double>::quiet_NaN();
  return r;
}

}  // namespace derain
