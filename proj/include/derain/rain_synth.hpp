#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "derain/error.hpp"
#include "derain/kv.hpp"
#include "derain/tensor.hpp"

namespace derain {

/// Parameters of the additive streak renderer. Angles follow the RainAngle
/// convention: degrees from vertical, positive toward +x.
struct RainSynthConfig {
  double angle_mean = 45.0;
  /// Each streak's angle is drawn uniformly from angle_mean +- angle_jitter.
  double angle_jitter = 5.0;
  /// Expected streaks per frame per 1000 pixels.
  double density = 2.0;
  double length_mean = 14.0;
  double length_jitter = 4.0;
  /// Line width is drawn uniformly from [width_min, width_max] pixels.
  double width_min = 1.0;
  double width_max = 1.5;
  double intensity_mean = 0.3;
  double intensity_jitter = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(density >= 0.0)) throw UsageError("rain density must be >= 0");
    if (!(std::abs(angle_mean) < 90.0)) throw UsageError("rain angle must lie in (-90, 90)");
    if (!(angle_jitter >= 0.0)) throw UsageError("angle jitter must be >= 0");
    if (!(intensity_mean > 0.0 && intensity_mean <= 1.0)) {
      throw UsageError("rain intensity must lie in (0, 1]");
    }
    if (!(intensity_jitter >= 0.0 && intensity_jitter < intensity_mean)) {
      throw UsageError("intensity jitter must lie in [0, intensity)");
    }
    if (!(length_mean > 0.0 && length_jitter >= 0.0 && length_jitter < length_mean)) {
      throw UsageError("streak length must be positive with jitter below the mean");
    }
    if (!(width_min > 0.0 && width_max >= width_min)) throw UsageError("invalid streak width range");
  }

  KeyValueFile to_kv() const {
    KeyValueFile kv;
    kv.set("angle_mean", angle_mean);
    kv.set("angle_jitter", angle_jitter);
    kv.set("density", density);
    kv.set("length_mean", length_mean);
    kv.set("length_jitter", length_jitter);
    kv.set("width_min", width_min);
    kv.set("width_max", width_max);
    kv.set("intensity_mean", intensity_mean);
    kv.set("intensity_jitter", intensity_jitter);
    kv.set("seed", seed);
    return kv;
  }

  /// Overrides the fields present in kv; unknown keys are rejected.
  void apply(const KeyValueFile& kv) {
    for (const auto& key : kv.keys()) {
      if (key == "angle_mean") angle_mean = kv.get_double(key);
      else if (key == "angle_jitter") angle_jitter = kv.get_double(key);
      else if (key == "density") density = kv.get_double(key);
      else if (key == "length_mean") length_mean = kv.get_double(key);
      else if (key == "length_jitter") length_jitter = kv.get_double(key);
      else if (key == "width_min") width_min = kv.get_double(key);
      else if (key == "width_max") width_max = kv.get_double(key);
      else if (key == "intensity_mean") intensity_mean = kv.get_double(key);
      else if (key == "intensity_jitter") intensity_jitter = kv.get_double(key);
      else if (key == "seed") seed = static_cast<std::uint64_t>(kv.get_int(key));
      else throw UsageError("unknown rain setting '" + key + "'");
    }
  }
};

enum class RainIntensity { light, heavy };

inline RainIntensity parse_intensity(const std::string& s) {
  if (s == "light") return RainIntensity::light;
  if (s == "heavy") return RainIntensity::heavy;
  throw UsageError("rain density must be 'light' or 'heavy', got '" + s + "'");
}

inline const char* to_string(RainIntensity r) {
  return r == RainIntensity::light ? "light" : "heavy";
}

/// Preset renderer settings. Heavy rain differs from light mostly in streak
/// count, secondarily in brightness.
inline RainSynthConfig rain_preset(RainIntensity kind, double angle_deg, std::uint64_t seed) {
  RainSynthConfig c;
  c.angle_mean = angle_deg;
  c.seed = seed;
  if (kind == RainIntensity::heavy) {
    c.density = 2.5;
    c.intensity_mean = 0.22;
    c.intensity_jitter = 0.06;
  } else {
    c.density = 0.6;
    c.intensity_mean = 0.15;
    c.intensity_jitter = 0.04;
  }
  return c;
}

/// One rendered streak: a segment from (y0, x0) to (y1, x1) in pixel
/// coordinates (pixel centres at integer positions).
struct Streak {
  std::size_t frame = 0;
  double y0 = 0, x0 = 0, y1 = 0, x1 = 0;
  double angle_deg = 0;
  double width = 1;
  double intensity = 0;
};

struct SynthResult {
  VideoTensor observed;  // min(B + R, 1)
  VideoTensor rain;      // R before clipping, >= 0
  std::vector<Streak> streaks;
};

/// Adds one anti-aliased streak into an m x n column-major frame. Coverage of
/// a pixel is clamp(width / 2 + 0.5 - distance to the segment, 0, 1).
inline void render_streak(std::span<double> frame, std::size_t m, std::size_t n,
                          const Streak& s) {
  const double reach = 0.5 * s.width + 0.5;
  const auto lo_i = static_cast<long>(std::floor(std::min(s.y0, s.y1) - reach));
  const auto hi_i = static_cast<long>(std::ceil(std::max(s.y0, s.y1) + reach));
  const auto lo_j = static_cast<long>(std::floor(std::min(s.x0, s.x1) - reach));
  const auto hi_j = static_cast<long>(std::ceil(std::max(s.x0, s.x1) + reach));
  const double vy = s.y1 - s.y0, vx = s.x1 - s.x0;
  const double len2 = vy * vy + vx * vx;
  for (long j = std::max(lo_j, 0L); j <= std::min(hi_j, static_cast<long>(n) - 1); ++j) {
    for (long i = std::max(lo_i, 0L); i <= std::min(hi_i, static_cast<long>(m) - 1); ++i) {
      const double py = static_cast<double>(i) - s.y0, px = static_cast<double>(j) - s.x0;
      const double u = len2 > 0.0 ? std::clamp((py * vy + px * vx) / len2, 0.0, 1.0) : 0.0;
      const double dy = py - u * vy, dx = px - u * vx;
      const double coverage = std::clamp(reach - std::sqrt(dy * dy + dx * dx), 0.0, 1.0);
      if (coverage > 0.0) frame[static_cast<std::size_t>(i) + m * static_cast<std::size_t>(j)] += s.intensity * coverage;
    }
  }
}

/// Draws streaks for every frame of a clean video B and returns
/// O = min(B + R, 1) together with the unclipped rain layer R. Frame k uses
/// its own generator seeded from (seed, k), so output is reproducible.
inline SynthResult synthesize(const VideoTensor& background, const RainSynthConfig& config) {
  config.validate();
  const std::size_t m = background.height(), n = background.width();
  SynthResult out{VideoTensor(background.shape()), VideoTensor(background.shape()), {}};
  const double expected = config.density * static_cast<double>(m * n) / 1000.0;
  for (std::size_t k = 0; k < background.frames(); ++k) {
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                      static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(k), 0x7261696eU};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    const long count = expected > 0.0 ? std::poisson_distribution<long>(expected)(rng) : 0;
    auto frame = out.rain.frame(k);
    for (long s = 0; s < count; ++s) {
      Streak st;
      st.frame = k;
      const double cy = uniform(-0.5, static_cast<double>(m) - 0.5);
      const double cx = uniform(-0.5, static_cast<double>(n) - 0.5);
      st.angle_deg = uniform(config.angle_mean - config.angle_jitter,
                             config.angle_mean + config.angle_jitter);
      const double length = uniform(config.length_mean - config.length_jitter,
                                    config.length_mean + config.length_jitter);
      st.width = uniform(config.width_min, config.width_max);
      st.intensity = std::min(1.0, uniform(config.intensity_mean - config.intensity_jitter,
                                           config.intensity_mean + config.intensity_jitter));
      const double a = st.angle_deg * std::numbers::pi / 180.0;
      const double hy = 0.5 * length * std::cos(a), hx = 0.5 * length * std::sin(a);
      st.y0 = cy - hy;
      st.x0 = cx - hx;
      st.y1 = cy + hy;
      st.x1 = cx + hx;
      render_streak(frame, m, n, st);
      out.streaks.push_back(st);
    }
  }
  for (std::size_t i = 0; i < out.observed.size(); ++i) {
    out.observed[i] = std::min(background[i] + out.rain[i], 1.0);
  }
  return out;
}

}  // namespace derain
