#pragma once

#include <Eigen/Core>
#include <Eigen/SVD>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numbers>

#include "derain/error.hpp"
#include "derain/tensor.hpp"

namespace derain {

/// Dominant rain-streak falling direction.
///
/// theta is in degrees from the vertical axis (0 = rain falling straight
/// down), positive toward +x, so a streak runs along (dy, dx) = (cos, sin).
/// Valid range is (-90, 90). confidence is a [0, 1] score attached by the
/// estimator; hand-specified angles carry confidence 1.
class RainAngle {
 public:
  RainAngle() = default;
  explicit RainAngle(double theta_deg, double confidence = 1.0)
      : theta_(theta_deg), confidence_(confidence) {
    if (!(std::abs(theta_deg) < 90.0)) {
      throw UsageError("RainAngle: theta must lie in (-90, 90) degrees, got " +
                       std::to_string(theta_deg));
    }
    if (!(confidence >= 0.0 && confidence <= 1.0)) {
      throw UsageError("RainAngle: confidence must lie in [0, 1], got " +
                       std::to_string(confidence));
    }
  }

  double degrees() const { return theta_; }
  double radians() const { return theta_ * std::numbers::pi / 180.0; }
  double confidence() const { return confidence_; }

  /// Weight of the vertical difference in the directional derivative.
  double cos_weight() const { return std::cos(radians()); }
  /// Weight of the horizontal difference in the directional derivative.
  double sin_weight() const { return std::sin(radians()); }

 private:
  double theta_ = 0.0;
  double confidence_ = 1.0;
};

/// Wraps any angle in degrees into the half-open interval (-90, 90]. Line
/// orientations are 180-degree periodic.
inline double wrap_orientation(double deg) {
  double r = std::fmod(deg, 180.0);
  if (r <= -90.0) r += 180.0;
  if (r > 90.0) r -= 180.0;
  return r;
}

// ---------------------------------------------------------------------------
// Shrinkage

inline double soft_threshold(double x, double tau) {
  const double mag = std::abs(x) - tau;
  return mag > 0.0 ? std::copysign(mag, x) : 0.0;
}

/// Elementwise sign(x) * max(|x| - tau, 0); the prox of tau * ||.||_1.
inline VideoTensor soft_threshold(VideoTensor x, double tau) {
  if (!(tau >= 0.0)) {
    throw UsageError("soft_threshold: tau must be nonnegative, got " + std::to_string(tau));
  }
  for (double& v : x.values()) v = soft_threshold(v, tau);
  return x;
}

/// Singular value thresholding: U * max(S - tau, 0) * V^T, the prox of
/// tau * ||.||_*.
inline Eigen::MatrixXd svt(const Eigen::MatrixXd& m, double tau) {
  if (!(tau >= 0.0)) {
    throw UsageError("svt: tau must be nonnegative, got " + std::to_string(tau));
  }
  if (!m.allFinite()) throw NumericalError("svt: input matrix has non-finite entries");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalError("svt: SVD did not converge");
  const Eigen::VectorXd shrunk =
      (svd.singularValues().array() - tau).max(0.0).matrix();
  Eigen::Index keep = 0;
  while (keep < shrunk.size() && shrunk(keep) > 0.0) ++keep;
  if (keep == 0) return Eigen::MatrixXd::Zero(m.rows(), m.cols());
  return svd.matrixU().leftCols(keep) * shrunk.head(keep).asDiagonal() *
         svd.matrixV().leftCols(keep).transpose();
}

/// Sum of singular values.
inline double nuclear_norm(const Eigen::MatrixXd& m) {
  if (!m.allFinite()) throw NumericalError("nuclear_norm: non-finite input");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues().sum();
}

/// Sum of the nuclear norms of the three mode unfoldings.
inline double tensor_nuclear_norm(const VideoTensor& x) {
  double s = 0.0;
  for (int mode : kAllModes) s += nuclear_norm(unfold(x, Mode(mode)));
  return s;
}

// ---------------------------------------------------------------------------
// Directional derivative

/// Directional forward difference cos(theta) * D_y + sin(theta) * D_x, applied
/// frame by frame with periodic boundaries. theta = 0 reduces to D_y.
inline void dtv_apply_into(const VideoTensor& x, const RainAngle& theta, VideoTensor& out) {
  if (out.shape() != x.shape()) out = VideoTensor(x.shape());
  const double c = theta.cos_weight(), s = theta.sin_weight();
  const std::size_t m = x.height(), n = x.width(), t = x.frames();
  for (std::size_t k = 0; k < t; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t jn = j + 1 == n ? 0 : j + 1;
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t in = i + 1 == m ? 0 : i + 1;
        const double u = x(i, j, k);
        out(i, j, k) = c * (x(in, j, k) - u) + s * (x(i, jn, k) - u);
      }
    }
  }
}

/// Adjoint of dtv_apply_into.
inline void dtv_adjoint_into(const VideoTensor& x, const RainAngle& theta, VideoTensor& out) {
  if (out.shape() != x.shape()) out = VideoTensor(x.shape());
  const double c = theta.cos_weight(), s = theta.sin_weight();
  const std::size_t m = x.height(), n = x.width(), t = x.frames();
  for (std::size_t k = 0; k < t; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t jp = j == 0 ? n - 1 : j - 1;
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t ip = i == 0 ? m - 1 : i - 1;
        const double u = x(i, j, k);
        out(i, j, k) = c * (x(ip, j, k) - u) + s * (x(i, jp, k) - u);
      }
    }
  }
}

inline VideoTensor dtv_apply(const VideoTensor& x, const RainAngle& theta) {
  VideoTensor out(x.shape());
  dtv_apply_into(x, theta, out);
  return out;
}

inline VideoTensor dtv_adjoint(const VideoTensor& x, const RainAngle& theta) {
  VideoTensor out(x.shape());
  dtv_adjoint_into(x, theta, out);
  return out;
}

/// lambda * ||grad_d d||_1 + 0.5 * ||d - v||_F^2
inline double dtv_prox_objective(const VideoTensor& d, const VideoTensor& v,
                                 double lambda, const RainAngle& theta) {
  double fit = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) fit += (d[i] - v[i]) * (d[i] - v[i]);
  return lambda * l1_norm(dtv_apply(d, theta)) + 0.5 * fit;
}

struct DtvProxOptions {
  int max_iterations = 20;
  /// Stop once ||d_k - d_{k-1}||_F <= tolerance * ||d_k||_F.
  double tolerance = 1e-4;
};

/// Approximate prox of lambda * ||grad_d .||_1 at v.
///
/// Solves the dual problem
///   min_{|p| <= 1} 0.5 * ||v - lambda * A^T p||^2,   A = grad_d,
/// by accelerated projected gradient (FGP), with primal d = v - lambda A^T p.
/// ||A||^2 <= 4 (|cos| + |sin|)^2 <= 8 for every theta, so the step 1/8 in the
/// scaled variable is admissible. The primal objective of every iterate is
/// evaluated and the best one is kept, which makes the returned objective
/// monotone in the iteration budget and never larger than at d = v.
inline VideoTensor dtv_prox(const VideoTensor& v, double lambda, const RainAngle& theta,
                            DtvProxOptions opts = {}) {
  if (!(lambda >= 0.0)) {
    throw UsageError("dtv_prox: lambda must be nonnegative, got " + std::to_string(lambda));
  }
  if (opts.max_iterations < 1) throw UsageError("dtv_prox: iteration budget must be >= 1");
  if (lambda == 0.0) return v;

  const Shape shape = v.shape();
  VideoTensor p(shape), q(shape), p_prev(shape);
  VideoTensor d = v, d_prev = v, dq(shape), grad(shape), atq(shape);
  VideoTensor best = v;
  double best_obj = dtv_prox_objective(v, v, lambda, theta);
  [[maybe_unused]] double last_best = best_obj;

  const double step = 1.0 / (8.0 * lambda);
  double momentum = 1.0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    // d(q) = v - lambda A^T q; ascent direction on q is A d(q).
    dtv_adjoint_into(q, theta, atq);
    for (std::size_t i = 0; i < dq.size(); ++i) dq[i] = v[i] - lambda * atq[i];
    dtv_apply_into(dq, theta, grad);
    p_prev = p;
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = std::clamp(q[i] + step * grad[i], -1.0, 1.0);
    }
    const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    const double beta = (momentum - 1.0) / next;
    momentum = next;
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = p[i] + beta * (p[i] - p_prev[i]);

    // Primal iterate attached to the projected dual point.
    std::swap(d, d_prev);
    dtv_adjoint_into(p, theta, atq);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = v[i] - lambda * atq[i];
    const double obj = dtv_prox_objective(d, v, lambda, theta);
    if (obj < best_obj) {
      best_obj = obj;
      best = d;
    }
    assert(best_obj <= last_best);
    last_best = best_obj;

    double change = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) change += (d[i] - d_prev[i]) * (d[i] - d_prev[i]);
    if (std::sqrt(change) <= opts.tolerance * std::max(frobenius_norm(d), 1e-300)) break;
  }
  return best;
}

}  // namespace derain
