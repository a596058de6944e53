#pragma once

#include <array>
#include <chrono>
#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "derain/direction.hpp"
#include "derain/error.hpp"
#include "derain/fft.hpp"
#include "derain/operators.hpp"
#include "derain/tensor.hpp"

namespace derain {

// Rain/background separation by ADMM.
//
// Model, with B = O - R:
//   min  a1 |grad_d R|_1 + a2 |R|_1 + a3 |D_x B|_1 + a4 |D_y B|_1
//        + a5 |D_t B|_1 + sum_i ||unfold_i(B)||_*        s.t. 0 <= R <= O
//
// Splitting: D = R, S = R, X = D_x(O-R), Y = D_y(O-R), T = D_t(O-R), L = O-R,
// with multipliers Lambda_1..Lambda_6 and penalties beta_1..beta_6.

struct SolverConfig {
  /// Weights of |grad_d R|_1, |R|_1, |D_x B|_1, |D_y B|_1, |D_t B|_1.
  std::array<double, 5> alpha{100.0, 10.0, 100.0, 100.0, 100.0};
  /// Penalties of the six splitting constraints, in the order above.
  std::array<double, 6> beta{50.0, 50.0, 50.0, 50.0, 50.0, 50.0};
  /// Rain direction; empty means "estimate from the input".
  std::optional<RainAngle> theta = RainAngle(0.0);
  int max_outer = 50;
  /// Stop when ||R_new - R_old||_F / max(||R_old||_F, eps) <= tol.
  double tol = 1e-3;
  /// Iteration budget of the directional TV prox in the D-update.
  int inner_prox = 20;
  /// Project R onto [0, O] after each R-update.
  bool clamp_rain = true;
  /// Intensity scale of the iteration: decompose() runs on
  /// intensity_scale * O and divides the rain layer by it afterwards. Every
  /// term of the model is positively homogeneous, so this leaves the
  /// minimizer unchanged and acts like multiplying every beta by the scale.
  /// With the default, beta = 50 refers to 8-bit intensities.
  double intensity_scale = 255.0;

  void validate() const {
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      if (!(alpha[i] >= 0.0) || !std::isfinite(alpha[i])) {
        throw UsageError("alpha" + std::to_string(i + 1) + " must be a finite nonnegative value");
      }
    }
    for (std::size_t i = 0; i < beta.size(); ++i) {
      if (!(beta[i] > 0.0) || !std::isfinite(beta[i])) {
        throw UsageError("beta" + std::to_string(i + 1) + " must be a finite positive value");
      }
    }
    if (max_outer < 1) throw UsageError("max_outer must be >= 1");
    if (!(tol > 0.0)) throw UsageError("tol must be positive");
    if (inner_prox < 1) throw UsageError("inner_prox must be >= 1");
    if (!(intensity_scale > 0.0) || !std::isfinite(intensity_scale)) {
      throw UsageError("intensity_scale must be a finite positive value");
    }
  }

  const RainAngle& angle() const {
    if (!theta) throw UsageError("solver: rain angle is unresolved (auto) at this point");
    return *theta;
  }
};

/// Splitting variables and multipliers of one solve.
struct SplitState {
  VideoTensor R, D, S, X, Y, T, L;
  std::array<VideoTensor, 6> lambda;

  explicit SplitState(const Shape& shape)
      : R(shape), D(shape), S(shape), X(shape), Y(shape), T(shape), L(shape),
        lambda{VideoTensor(shape), VideoTensor(shape), VideoTensor(shape),
               VideoTensor(shape), VideoTensor(shape), VideoTensor(shape)} {}

  const Shape& shape() const { return R.shape(); }

  bool all_finite() const {
    for (const VideoTensor* v : {&R, &D, &S, &X, &Y, &T, &L}) {
      if (!derain::all_finite(*v)) return false;
    }
    for (const auto& l : lambda) {
      if (!derain::all_finite(l)) return false;
    }
    return true;
  }
};

struct IterationRecord {
  int iteration = 0;
  /// ||D-R||, ||S-R||, ||X-D_x(O-R)||, ||Y-D_y(O-R)||, ||T-D_t(O-R)||,
  /// ||L-(O-R)||, each divided by ||O||_F.
  std::array<double, 6> residuals{};
  double objective = 0.0;
  double relative_change = 0.0;
  double seconds = 0.0;
};

struct DecompositionResult {
  VideoTensor background;  // O - R clamped to [0, 1]
  VideoTensor rain;
  RainAngle angle;
  std::vector<IterationRecord> diagnostics;
  int iterations_run = 0;
  bool converged = false;
};

/// Thrown when the iteration produces non-finite values. Carries the
/// diagnostics gathered before the failure.
class SolverDiverged : public NumericalError {
 public:
  SolverDiverged(const std::string& what, std::vector<IterationRecord> records)
      : NumericalError(what), diagnostics(std::move(records)) {}
  std::vector<IterationRecord> diagnostics;
};

// ---------------------------------------------------------------------------
// Objective

inline double objective(const VideoTensor& observed, const VideoTensor& rain,
                        const SolverConfig& config) {
  observed.require_same_shape(rain, "objective");
  const auto& a = config.alpha;
  const VideoTensor background = observed - rain;
  double value = 0.0;
  if (a[0] != 0.0) value += a[0] * l1_norm(dtv_apply(rain, config.angle()));
  value += a[1] * l1_norm(rain);
  if (a[2] != 0.0) value += a[2] * l1_norm(diff(background, Axis::x));
  if (a[3] != 0.0) value += a[3] * l1_norm(diff(background, Axis::y));
  if (a[4] != 0.0) value += a[4] * l1_norm(diff(background, Axis::t));
  return value + tensor_nuclear_norm(background);
}

// ---------------------------------------------------------------------------
// Subproblem updates. Each reads the current state and returns the new value
// of one variable; decompose() applies them in order.

inline VideoTensor update_D(const SplitState& s, const SolverConfig& config) {
  const double b1 = config.beta[0];
  VideoTensor v = s.R;
  v.add_scaled(s.lambda[0], 1.0 / b1);
  return dtv_prox(v, config.alpha[0] / b1, config.angle(),
                  DtvProxOptions{config.inner_prox, 1e-4});
}

inline VideoTensor update_S(const SplitState& s, const SolverConfig& config) {
  const double b2 = config.beta[1];
  VideoTensor v = s.R;
  v.add_scaled(s.lambda[1], 1.0 / b2);
  return soft_threshold(std::move(v), config.alpha[1] / b2);
}

namespace detail {

inline VideoTensor shrink_background_gradient(const SplitState& s, const SolverConfig& config,
                                              const VideoTensor& observed, Axis axis,
                                              std::size_t slot) {
  const double b = config.beta[slot];
  VideoTensor v = diff(observed - s.R, axis);
  v.add_scaled(s.lambda[slot], 1.0 / b);
  return soft_threshold(std::move(v), config.alpha[slot] / b);
}

}  // namespace detail

inline VideoTensor update_X(const SplitState& s, const SolverConfig& config,
                            const VideoTensor& observed) {
  return detail::shrink_background_gradient(s, config, observed, Axis::x, 2);
}

inline VideoTensor update_Y(const SplitState& s, const SolverConfig& config,
                            const VideoTensor& observed) {
  return detail::shrink_background_gradient(s, config, observed, Axis::y, 3);
}

inline VideoTensor update_T(const SplitState& s, const SolverConfig& config,
                            const VideoTensor& observed) {
  return detail::shrink_background_gradient(s, config, observed, Axis::t, 4);
}

/// Mean over the three modes of fold(svt(unfold(O - R + Lambda_6 / beta_6))).
inline VideoTensor update_L(const SplitState& s, const SolverConfig& config,
                            const VideoTensor& observed) {
  const double b6 = config.beta[5];
  VideoTensor target = observed - s.R;
  target.add_scaled(s.lambda[5], 1.0 / b6);
  VideoTensor out(target.shape());
  for (int mode : kAllModes) {
    out.add_scaled(fold(svt(unfold(target, Mode(mode)), 1.0 / b6), Mode(mode), target.shape()),
                   1.0 / 3.0);
  }
  return out;
}

/// Right-hand side of the R normal equations:
///   b1 D - L1 + b2 S - L2 + sum_{a in x,y,t} D_a^T (b_a D_a O - b_a Z_a + L_a)
///   + b6 (O - L) + L6
/// where Z_x = X, Z_y = Y, Z_t = T.
inline VideoTensor assemble_r_rhs(const SplitState& s, const SolverConfig& config,
                                  const VideoTensor& observed) {
  const auto& b = config.beta;
  VideoTensor rhs = b[0] * s.D;
  rhs -= s.lambda[0];
  rhs.add_scaled(s.S, b[1]);
  rhs -= s.lambda[1];

  const std::array<std::pair<Axis, const VideoTensor*>, 3> terms{
      {{Axis::x, &s.X}, {Axis::y, &s.Y}, {Axis::t, &s.T}}};
  VideoTensor inner(observed.shape()), back(observed.shape());
  for (std::size_t a = 0; a < 3; ++a) {
    const auto [axis, z] = terms[a];
    const std::size_t slot = 2 + a;
    diff_into(observed, axis, inner);
    inner *= b[slot];
    inner.add_scaled(*z, -b[slot]);
    inner += s.lambda[slot];
    adjoint_diff_into(inner, axis, back);
    rhs += back;
  }
  rhs.add_scaled(observed, b[5]);
  rhs.add_scaled(s.L, -b[5]);
  rhs += s.lambda[5];
  return rhs;
}

/// Solves (b1 + b2 + b6) R + b3 D_x^T D_x R + b4 D_y^T D_y R + b5 D_t^T D_t R = K
/// by diagonalization in the 3-D DFT basis. The symbol is real and at least
/// b1 + b2 + b6 > 0 everywhere.
class FourierRSolver {
 public:
  FourierRSolver(const Shape& shape, const std::array<double, 6>& beta)
      : fft_(shape), symbol_(fft_.spectrum_size()) {
    const std::size_t hm = fft_.half_height();
    const double diag = beta[0] + beta[1] + beta[5];
    for (std::size_t w = 0; w < shape.frames; ++w) {
      const double lt = laplacian_eigenvalue(w, shape.frames);
      for (std::size_t v = 0; v < shape.width; ++v) {
        const double lx = laplacian_eigenvalue(v, shape.width);
        for (std::size_t u = 0; u < hm; ++u) {
          const double ly = laplacian_eigenvalue(u, shape.height);
          symbol_[u + hm * (v + shape.width * w)] =
              diag + beta[2] * lx + beta[3] * ly + beta[4] * lt;
        }
      }
    }
  }

  VideoTensor solve(const VideoTensor& rhs) {
    fft_.forward(rhs, spectrum_);
    for (std::size_t i = 0; i < spectrum_.size(); ++i) spectrum_[i] /= symbol_[i];
    VideoTensor out(rhs.shape());
    fft_.inverse(spectrum_, out);
    return out;
  }

 private:
  RealFft3 fft_;
  std::vector<double> symbol_;
  std::vector<std::complex<double>> spectrum_;
};

/// Projects R onto [0, O] (O is nonnegative for valid inputs).
inline void project_rain(VideoTensor& rain, const VideoTensor& observed) {
  for (std::size_t i = 0; i < rain.size(); ++i) {
    rain[i] = std::clamp(rain[i], 0.0, std::max(observed[i], 0.0));
  }
}

inline VideoTensor update_R(const SplitState& s, const SolverConfig& config,
                            const VideoTensor& observed, FourierRSolver& solver) {
  VideoTensor rain = solver.solve(assemble_r_rhs(s, config, observed));
  if (!all_finite(rain)) throw NumericalError("update_R: non-finite solution");
  if (config.clamp_rain) project_rain(rain, observed);
  return rain;
}

inline VideoTensor update_R(const SplitState& s, const SolverConfig& config,
                            const VideoTensor& observed) {
  FourierRSolver solver(observed.shape(), config.beta);
  return update_R(s, config, observed, solver);
}

/// Multiplier ascent, in place:
///   L1 += b1 (R - D), L2 += b2 (R - S), L3 += b3 (D_x(O-R) - X),
///   L4 += b4 (D_y(O-R) - Y), L5 += b5 (D_t(O-R) - T), L6 += b6 (O - R - L).
inline void update_multipliers(SplitState& s, const SolverConfig& config,
                               const VideoTensor& observed) {
  const auto& b = config.beta;
  const VideoTensor background = observed - s.R;
  s.lambda[0].add_scaled(s.R - s.D, b[0]);
  s.lambda[1].add_scaled(s.R - s.S, b[1]);
  s.lambda[2].add_scaled(diff(background, Axis::x) - s.X, b[2]);
  s.lambda[3].add_scaled(diff(background, Axis::y) - s.Y, b[3]);
  s.lambda[4].add_scaled(diff(background, Axis::t) - s.T, b[4]);
  s.lambda[5].add_scaled(background - s.L, b[5]);
}

/// Constraint violations of the current state, relative to ||O||_F (or
/// absolute when O = 0).
inline std::array<double, 6> feasibility_residuals(const SplitState& s,
                                                   const VideoTensor& observed) {
  const double norm_o = frobenius_norm(observed);
  const double denom = norm_o > 0.0 ? norm_o : 1.0;
  const VideoTensor background = observed - s.R;
  return {frobenius_norm(s.D - s.R) / denom,
          frobenius_norm(s.S - s.R) / denom,
          frobenius_norm(s.X - diff(background, Axis::x)) / denom,
          frobenius_norm(s.Y - diff(background, Axis::y)) / denom,
          frobenius_norm(s.T - diff(background, Axis::t)) / denom,
          frobenius_norm(s.L - background) / denom};
}

using IterationCallback = std::function<void(const IterationRecord&)>;

/// Runs the full ADMM decomposition of an observed rainy video O with values
/// in [0, 1]. When config.theta is empty the rain angle is estimated first.
///
/// Starts from R = 0 with all splitting variables and multipliers zero and
/// runs D, S, X, Y, T, L, R updates followed by the multiplier ascent until
/// the relative change of R drops to config.tol or config.max_outer is hit.
inline DecompositionResult decompose(const VideoTensor& input, SolverConfig config,
                                     const IterationCallback& on_iteration = {}) {
  config.validate();
  if (input.empty()) throw UsageError("decompose: empty input");
  for (double v : input.values()) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw DataError("decompose: input values must be finite and inside [0, 1]");
    }
  }
  if (!config.theta) config.theta = estimate_angle(input);

  const double scale = config.intensity_scale;
  const VideoTensor observed = scale * input;
  const Shape shape = observed.shape();
  SplitState state(shape);
  FourierRSolver r_solver(shape, config.beta);
  DecompositionResult result;
  result.angle = *config.theta;

  using clock = std::chrono::steady_clock;
  for (int it = 1; it <= config.max_outer; ++it) {
    const auto start = clock::now();
    state.D = update_D(state, config);
    state.S = update_S(state, config);
    state.X = update_X(state, config, observed);
    state.Y = update_Y(state, config, observed);
    state.T = update_T(state, config, observed);
    state.L = update_L(state, config, observed);
    VideoTensor previous = std::move(state.R);
    try {
      state.R = update_R(state, config, observed, r_solver);
    } catch (const NumericalError& e) {
      throw SolverDiverged("decompose: iteration " + std::to_string(it) + ": " + e.what(),
                           std::move(result.diagnostics));
    }
    update_multipliers(state, config, observed);
    if (!state.all_finite()) {
      throw SolverDiverged("decompose: non-finite state at iteration " + std::to_string(it),
                           std::move(result.diagnostics));
    }

    IterationRecord rec;
    rec.iteration = it;
    rec.residuals = feasibility_residuals(state, observed);
    rec.objective = objective(observed, state.R, config) / scale;
    rec.relative_change =
        frobenius_norm(state.R - previous) / std::max(frobenius_norm(previous), 1e-12);
    rec.seconds = std::chrono::duration<double>(clock::now() - start).count();
    result.diagnostics.push_back(rec);
    if (on_iteration) on_iteration(rec);
    result.iterations_run = it;
    if (rec.relative_change <= config.tol) {
      result.converged = true;
      break;
    }
  }

  result.rain = (1.0 / scale) * std::move(state.R);
  result.background = clamped(input - result.rain, 0.0, 1.0);
  return result;
}

}  // namespace derain
