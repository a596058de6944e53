#pragma once

#include <array>
#include <cstdio>
#include <sstream>
#include <string>

#include "derain/kv.hpp"
#include "derain/rain_synth.hpp"
#include "derain/solver.hpp"

namespace derain {

/// Weight profiles for light and heavy rain, picked by a small sweep over
/// {10, 100, 1000} per weight on procedural 64x64x20 clips.
inline std::array<double, 5> alpha_preset(RainIntensity kind) {
  if (kind == RainIntensity::heavy) return {100.0, 10.0, 100.0, 100.0, 100.0};
  return {100.0, 10.0, 10.0, 10.0, 100.0};
}

inline std::string format_list(const double* v, std::size_t count) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < count; ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

template <std::size_t N>
std::array<double, N> parse_fixed_list(const std::string& s, const std::string& what) {
  const auto v = KeyValueFile::parse_list(s, what);
  if (v.size() != N) {
    throw UsageError(what + ": expected " + std::to_string(N) + " comma separated values, got " +
                     std::to_string(v.size()));
  }
  std::array<double, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

/// "auto" or a number of degrees.
inline std::optional<RainAngle> parse_theta(const std::string& s) {
  if (s == "auto") return std::nullopt;
  return RainAngle(KeyValueFile::to_double(s, "theta"));
}

inline std::string format_theta(const std::optional<RainAngle>& theta) {
  if (!theta) return "auto";
  std::ostringstream os;
  os.precision(17);
  os << theta->degrees();
  return os.str();
}

/// Keys understood by apply_solver_settings().
inline bool is_solver_key(const std::string& key) {
  return key == "alpha" || key == "beta" || key == "theta" || key == "tol" ||
         key == "max_iters" || key == "inner_prox" || key == "clamp_rain" ||
         key == "intensity_scale" || key == "preset";
}

/// Applies the solver keys present in kv. A `preset` key is applied before an
/// explicit `alpha` regardless of order in the file.
inline void apply_solver_settings(SolverConfig& c, const KeyValueFile& kv) {
  if (kv.has("preset")) c.alpha = alpha_preset(parse_intensity(kv.get("preset")));
  if (kv.has("alpha")) c.alpha = parse_fixed_list<5>(kv.get("alpha"), "alpha");
  if (kv.has("beta")) c.beta = parse_fixed_list<6>(kv.get("beta"), "beta");
  if (kv.has("theta")) c.theta = parse_theta(kv.get("theta"));
  if (kv.has("tol")) c.tol = kv.get_double("tol");
  if (kv.has("max_iters")) c.max_outer = static_cast<int>(kv.get_int("max_iters"));
  if (kv.has("inner_prox")) c.inner_prox = static_cast<int>(kv.get_int("inner_prox"));
  if (kv.has("clamp_rain")) c.clamp_rain = kv.get_bool("clamp_rain");
  if (kv.has("intensity_scale")) c.intensity_scale = kv.get_double("intensity_scale");
}

inline void write_solver_settings(const SolverConfig& c, KeyValueFile& kv) {
  kv.set("alpha", format_list(c.alpha.data(), c.alpha.size()));
  kv.set("beta", format_list(c.beta.data(), c.beta.size()));
  kv.set("theta", format_theta(c.theta));
  kv.set("tol", c.tol);
  kv.set("max_iters", c.max_outer);
  kv.set("inner_prox", c.inner_prox);
  kv.set("clamp_rain", c.clamp_rain ? "true" : "false");
  kv.set("intensity_scale", c.intensity_scale);
}

}  // namespace derain
