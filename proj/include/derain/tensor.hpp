#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "derain/error.hpp"

namespace derain {

/// Extents of a video volume: height (rows), width (columns), frame count.
struct Shape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t frames = 0;

  std::size_t size() const { return height * width * frames; }
  std::size_t frame_size() const { return height * width; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

inline std::string to_string(const Shape& s) {
  return std::to_string(s.height) + "x" + std::to_string(s.width) + "x" +
         std::to_string(s.frames);
}

/// Dense real m x n x t volume.
///
/// Storage is a single contiguous buffer in column-major order: the height
/// index varies fastest, then width, then frame, so element (i, j, k) lives at
/// i + m * (j + n * k). Each frame is therefore a contiguous m x n column-major
/// image, which is what the FFT and unfolding code rely on.
///
/// A default constructed tensor is empty and only useful as a placeholder.
/// Sized tensors require m >= 2, n >= 2 and t >= 1.
class VideoTensor {
 public:
  VideoTensor() = default;

  explicit VideoTensor(const Shape& shape, double fill = 0.0)
      : shape_(checked(shape)), data_(shape.size(), fill) {}

  VideoTensor(std::size_t height, std::size_t width, std::size_t frames,
              double fill = 0.0)
      : VideoTensor(Shape{height, width, frames}, fill) {}

  VideoTensor(const Shape& shape, std::vector<double> data)
      : shape_(checked(shape)), data_(std::move(data)) {
    if (data_.size() != shape_.size()) {
      throw UsageError("VideoTensor: data length " +
                       std::to_string(data_.size()) + " does not match shape " +
                       to_string(shape_));
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t height() const { return shape_.height; }
  std::size_t width() const { return shape_.width; }
  std::size_t frames() const { return shape_.frames; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[i + shape_.height * (j + shape_.width * k)];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[i + shape_.height * (j + shape_.width * k)];
  }

  double& operator[](std::size_t idx) { return data_[idx]; }
  double operator[](std::size_t idx) const { return data_[idx]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  std::span<double> frame(std::size_t k) {
    return {data_.data() + k * shape_.frame_size(), shape_.frame_size()};
  }
  std::span<const double> frame(std::size_t k) const {
    return {data_.data() + k * shape_.frame_size(), shape_.frame_size()};
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  VideoTensor& operator+=(const VideoTensor& o) {
    require_same_shape(o, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  VideoTensor& operator-=(const VideoTensor& o) {
    require_same_shape(o, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  VideoTensor& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  /// this += s * o
  VideoTensor& add_scaled(const VideoTensor& o, double s) {
    require_same_shape(o, "add_scaled");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
    return *this;
  }

  friend VideoTensor operator+(VideoTensor a, const VideoTensor& b) {
    return a += b;
  }
  friend VideoTensor operator-(VideoTensor a, const VideoTensor& b) {
    return a -= b;
  }
  friend VideoTensor operator*(double s, VideoTensor a) { return a *= s; }
  friend VideoTensor operator*(VideoTensor a, double s) { return a *= s; }

  friend bool operator==(const VideoTensor&, const VideoTensor&) = default;

  void require_same_shape(const VideoTensor& o, const char* where) const {
    if (o.shape_ != shape_) {
      throw UsageError(std::string(where) + ": shape mismatch " +
                       to_string(shape_) + " vs " + to_string(o.shape_));
    }
  }

 private:
  static Shape checked(const Shape& s) {
    if (s.height < 2 || s.width < 2 || s.frames < 1) {
      throw UsageError("VideoTensor: invalid shape " + to_string(s) +
                       " (need height >= 2, width >= 2, frames >= 1)");
    }
    return s;
  }

  Shape shape_{};
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Reductions

inline double dot(const VideoTensor& a, const VideoTensor& b) {
  a.require_same_shape(b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double frobenius_norm(const VideoTensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s);
}

inline double l1_norm(const VideoTensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += std::abs(v);
  return s;
}

inline double max_abs(const VideoTensor& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

inline bool all_finite(const VideoTensor& a) {
  return std::all_of(a.values().begin(), a.values().end(),
                     [](double v) { return std::isfinite(v); });
}

/// Elementwise clamp into [lo, hi].
inline VideoTensor clamped(VideoTensor a, double lo, double hi) {
  for (double& v : a.values()) v = std::clamp(v, lo, hi);
  return a;
}

// ---------------------------------------------------------------------------
// Mode unfolding

/// Tensor mode: 1 = height, 2 = width, 3 = time.
class Mode {
 public:
  explicit Mode(int index) : index_(index) {
    if (index < 1 || index > 3) {
      throw UsageError("Mode: index must be 1, 2 or 3, got " +
                       std::to_string(index));
    }
  }
  int index() const { return index_; }
  friend bool operator==(const Mode&, const Mode&) = default;

 private:
  int index_;
};

inline constexpr std::array<int, 3> kAllModes{1, 2, 3};

namespace detail {

inline std::size_t mode_extent(const Shape& s, int mode) {
  return mode == 1 ? s.height : mode == 2 ? s.width : s.frames;
}

}  // namespace detail

/// Mode-k matricization.
///
/// Row index is the mode-k coordinate. Columns enumerate the two remaining
/// coordinates in ascending axis order with the first remaining axis varying
/// fastest:
///   mode 1: column = j + n * k
///   mode 2: column = i + m * k
///   mode 3: column = i + m * j
inline Eigen::MatrixXd unfold(const VideoTensor& x, Mode mode) {
  const std::size_t m = x.height(), n = x.width(), t = x.frames();
  switch (mode.index()) {
    case 1: {
      // Column-major storage is already the mode-1 unfolding.
      return Eigen::Map<const Eigen::MatrixXd>(x.data(), m, n * t);
    }
    case 2: {
      Eigen::MatrixXd out(n, m * t);
      for (std::size_t k = 0; k < t; ++k)
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t i = 0; i < m; ++i) out(j, i + m * k) = x(i, j, k);
      return out;
    }
    default: {
      // Frame k is a contiguous block of m*n values: the mode-3 unfolding is
      // the transpose of the (mn) x t column-major view.
      return Eigen::Map<const Eigen::MatrixXd>(x.data(), m * n, t).transpose();
    }
  }
}

/// Inverse of unfold for a tensor of the given shape.
inline VideoTensor fold(const Eigen::MatrixXd& mat, Mode mode,
                        const Shape& shape) {
  const std::size_t m = shape.height, n = shape.width, t = shape.frames;
  const auto rows = static_cast<Eigen::Index>(detail::mode_extent(shape, mode.index()));
  const auto cols = static_cast<Eigen::Index>(shape.size()) / std::max<Eigen::Index>(rows, 1);
  if (mat.rows() != rows || mat.cols() != cols) {
    throw UsageError("fold: matrix is " + std::to_string(mat.rows()) + "x" +
                     std::to_string(mat.cols()) + " but mode " +
                     std::to_string(mode.index()) + " of shape " +
                     to_string(shape) + " needs " + std::to_string(rows) +
                     "x" + std::to_string(cols));
  }
  VideoTensor out(shape);
  switch (mode.index()) {
    case 1:
      Eigen::Map<Eigen::MatrixXd>(out.data(), m, n * t) = mat;
      break;
    case 2:
      for (std::size_t k = 0; k < t; ++k)
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t i = 0; i < m; ++i) out(i, j, k) = mat(j, i + m * k);
      break;
    default:
      Eigen::Map<Eigen::MatrixXd>(out.data(), m * n, t) = mat.transpose();
      break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Finite differences
//
// Forward differences with periodic wrap-around. x is the horizontal (width)
// axis, y the vertical (height) axis, t the frame axis. With periodic
// boundaries every operator is a circulant convolution and is diagonalized by
// the 3-D DFT.

enum class Axis { x, y, t };

inline const char* to_string(Axis a) {
  return a == Axis::x ? "x" : a == Axis::y ? "y" : "t";
}

namespace detail {

// Calls f(idx, neighbour_idx) for every voxel, where neighbour is the voxel at
// +step (forward) or -step (backward) along the axis, wrapping at the edge.
template <typename F>
void for_each_neighbour(const Shape& s, Axis axis, bool forward, F&& f) {
  const std::size_t m = s.height, n = s.width, t = s.frames;
  for (std::size_t k = 0; k < t; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < m; ++i) {
        std::size_t ii = i, jj = j, kk = k;
        switch (axis) {
          case Axis::y: ii = forward ? (i + 1 == m ? 0 : i + 1) : (i == 0 ? m - 1 : i - 1); break;
          case Axis::x: jj = forward ? (j + 1 == n ? 0 : j + 1) : (j == 0 ? n - 1 : j - 1); break;
          case Axis::t: kk = forward ? (k + 1 == t ? 0 : k + 1) : (k == 0 ? t - 1 : k - 1); break;
        }
        f(i + m * (j + n * k), ii + m * (jj + n * kk));
      }
    }
  }
}

}  // namespace detail

/// out = forward periodic difference of x along axis. For a single-frame
/// tensor the temporal difference is identically zero.
inline void diff_into(const VideoTensor& x, Axis axis, VideoTensor& out) {
  if (out.shape() != x.shape()) out = VideoTensor(x.shape());
  detail::for_each_neighbour(x.shape(), axis, true,
                             [&](std::size_t p, std::size_t q) { out[p] = x[q] - x[p]; });
}

/// out = adjoint of the forward difference (negative backward difference).
inline void adjoint_diff_into(const VideoTensor& x, Axis axis, VideoTensor& out) {
  if (out.shape() != x.shape()) out = VideoTensor(x.shape());
  detail::for_each_neighbour(x.shape(), axis, false,
                             [&](std::size_t p, std::size_t q) { out[p] = x[q] - x[p]; });
}

inline VideoTensor diff(const VideoTensor& x, Axis axis) {
  VideoTensor out(x.shape());
  diff_into(x, axis, out);
  return out;
}

inline VideoTensor adjoint_diff(const VideoTensor& x, Axis axis) {
  VideoTensor out(x.shape());
  adjoint_diff_into(x, axis, out);
  return out;
}

}  // namespace derain
