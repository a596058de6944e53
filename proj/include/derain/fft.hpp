#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <vector>

#include "derain/error.hpp"
#include "derain/tensor.hpp"

namespace derain {

// 3-D DFT helpers backed by FFTW.
//
// Convention: the forward transform is unnormalized,
//   F[u,v,w] = sum_{i,j,k} x[i,j,k] exp(-2 pi I (u i / m + v j / n + w k / t)),
// and the inverse carries the 1/(m n t) factor, so ifft3(fft3(x)) = x.
// Spectra use the same column-major (u fastest) layout as VideoTensor.
//
// Plans are created with FFTW_ESTIMATE so results do not depend on timing
// measurements. FFTW's planner is not re-entrant: create plans from one thread
// at a time.

struct ComplexTensor {
  Shape shape;
  std::vector<std::complex<double>> data;

  std::complex<double>& operator()(std::size_t u, std::size_t v, std::size_t w) {
    return data[u + shape.height * (v + shape.width * w)];
  }
  std::complex<double> operator()(std::size_t u, std::size_t v, std::size_t w) const {
    return data[u + shape.height * (v + shape.width * w)];
  }
};

namespace detail {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
struct FftwPlanDestroy {
  void operator()(fftw_plan p) const { fftw_destroy_plan(p); }
};
using FftwPlan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, FftwPlanDestroy>;

template <typename T>
std::unique_ptr<T[], FftwFree> fftw_buffer(std::size_t count) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * count));
  if (p == nullptr) throw std::bad_alloc();
  return std::unique_ptr<T[], FftwFree>(p);
}

inline ComplexTensor complex_dft(const Shape& shape,
                                 const std::vector<std::complex<double>>& in,
                                 int sign) {
  const std::size_t total = shape.size();
  auto buf = fftw_buffer<fftw_complex>(total);
  // FFTW is row-major with the last dimension fastest, so the dims are listed
  // slowest first: (t, n, m).
  FftwPlan plan(fftw_plan_dft_3d(static_cast<int>(shape.frames),
                                 static_cast<int>(shape.width),
                                 static_cast<int>(shape.height), buf.get(),
                                 buf.get(), sign, FFTW_ESTIMATE));
  if (!plan) throw NumericalError("fftw: failed to create 3-D plan");
  for (std::size_t i = 0; i < total; ++i) {
    buf[i][0] = in[i].real();
    buf[i][1] = in[i].imag();
  }
  fftw_execute(plan.get());
  ComplexTensor out{shape, std::vector<std::complex<double>>(total)};
  for (std::size_t i = 0; i < total; ++i) out.data[i] = {buf[i][0], buf[i][1]};
  return out;
}

}  // namespace detail

inline ComplexTensor fft3(const VideoTensor& x) {
  std::vector<std::complex<double>> in(x.values().begin(), x.values().end());
  return detail::complex_dft(x.shape(), in, FFTW_FORWARD);
}

/// Inverse transform of a spectrum that should be conjugate-symmetric. Throws
/// NumericalError when the imaginary residue exceeds 1e-8 (relative to the
/// largest real magnitude, floored at 1).
inline VideoTensor ifft3(const ComplexTensor& spectrum) {
  const ComplexTensor c = detail::complex_dft(spectrum.shape, spectrum.data, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(spectrum.shape.size());
  VideoTensor out(spectrum.shape);
  double max_imag = 0.0, max_real = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = c.data[i].real() * scale;
    max_real = std::max(max_real, std::abs(out[i]));
    max_imag = std::max(max_imag, std::abs(c.data[i].imag() * scale));
  }
  if (max_imag > 1e-8 * std::max(1.0, max_real)) {
    throw NumericalError("ifft3: imaginary residue " + std::to_string(max_imag) +
                         " exceeds 1e-8; spectrum is not conjugate-symmetric");
  }
  return out;
}

/// DFT eigenvalue of the periodic forward difference along one axis at
/// frequency index `freq` out of `extent`: exp(2 pi I freq / extent) - 1.
inline std::complex<double> difference_eigenvalue(std::size_t freq, std::size_t extent) {
  const double w = 2.0 * std::numbers::pi * static_cast<double>(freq) /
                   static_cast<double>(extent);
  return {std::cos(w) - 1.0, std::sin(w)};
}

/// |exp(2 pi I freq / extent) - 1|^2 = 2 - 2 cos(2 pi freq / extent), the
/// symbol of D^T D for the periodic forward difference D.
inline double laplacian_eigenvalue(std::size_t freq, std::size_t extent) {
  const double w = 2.0 * std::numbers::pi * static_cast<double>(freq) /
                   static_cast<double>(extent);
  return 2.0 - 2.0 * std::cos(w);
}

/// Reusable real-to-complex transform pair for one tensor shape. Only the
/// non-redundant half spectrum (m/2 + 1 entries along the height axis) is
/// stored. Not copyable; one instance per thread.
class RealFft3 {
 public:
  explicit RealFft3(const Shape& shape)
      : shape_(shape),
        half_height_(shape.height / 2 + 1),
        real_(detail::fftw_buffer<double>(shape.size())),
        spec_(detail::fftw_buffer<fftw_complex>(half_height_ * shape.width * shape.frames)) {
    const int t = static_cast<int>(shape.frames), n = static_cast<int>(shape.width),
              m = static_cast<int>(shape.height);
    forward_.reset(fftw_plan_dft_r2c_3d(t, n, m, real_.get(), spec_.get(), FFTW_ESTIMATE));
    backward_.reset(fftw_plan_dft_c2r_3d(t, n, m, spec_.get(), real_.get(), FFTW_ESTIMATE));
    if (!forward_ || !backward_) throw NumericalError("fftw: failed to create r2c plans");
  }

  const Shape& shape() const { return shape_; }
  std::size_t half_height() const { return half_height_; }
  std::size_t spectrum_size() const { return half_height_ * shape_.width * shape_.frames; }

  /// Half spectrum of x; entry (u, v, w) sits at u + half_height * (v + n * w).
  void forward(const VideoTensor& x, std::vector<std::complex<double>>& out) {
    if (x.shape() != shape_) {
      throw UsageError("RealFft3::forward: expected " + to_string(shape_) +
                       ", got " + to_string(x.shape()));
    }
    std::copy(x.values().begin(), x.values().end(), real_.get());
    fftw_execute(forward_.get());
    out.resize(spectrum_size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = {spec_[i][0], spec_[i][1]};
  }

  /// Normalized inverse of forward().
  void inverse(const std::vector<std::complex<double>>& in, VideoTensor& out) {
    if (out.shape() != shape_) out = VideoTensor(shape_);
    for (std::size_t i = 0; i < in.size(); ++i) {
      spec_[i][0] = in[i].real();
      spec_[i][1] = in[i].imag();
    }
    fftw_execute(backward_.get());
    const double scale = 1.0 / static_cast<double>(shape_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = real_[i] * scale;
  }

 private:
  Shape shape_;
  std::size_t half_height_;
  std::unique_ptr<double[], detail::FftwFree> real_;
  std::unique_ptr<fftw_complex[], detail::FftwFree> spec_;
  detail::FftwPlan forward_;
  detail::FftwPlan backward_;
};

}  // namespace derain
