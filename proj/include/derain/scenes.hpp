#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "derain/tensor.hpp"

namespace derain {

// Procedural clean clips for demos, benchmarks and tests: a smooth textured
// scene (random plane waves plus soft-edged blocks) that drifts slowly across
// the frame. Values stay inside [0.05, 0.8] so added rain rarely saturates.

struct SceneOptions {
  int waves = 6;
  int blocks = 5;
  /// Drift per frame in pixels, (dy, dx).
  double drift_y = 0.15;
  double drift_x = 0.25;
};

inline VideoTensor textured_scene(const Shape& shape, std::uint64_t seed,
                                  const SceneOptions& opts = {}) {
  std::mt19937_64 rng(seed ^ 0x5ce7e5ce7eULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  struct Wave { double fy, fx, phase, amp; };
  struct Block { double cy, cx, hy, hx, level; };
  std::vector<Wave> waves;
  std::vector<Block> blocks;
  const double m = static_cast<double>(shape.height), n = static_cast<double>(shape.width);
  for (int w = 0; w < opts.waves; ++w) {
    const double freq = 0.01 + 0.07 * unit(rng);  // cycles per pixel
    const double dir = 2.0 * std::numbers::pi * unit(rng);
    waves.push_back({freq * std::cos(dir), freq * std::sin(dir),
                     2.0 * std::numbers::pi * unit(rng), 0.04 + 0.05 * unit(rng)});
  }
  for (int b = 0; b < opts.blocks; ++b) {
    blocks.push_back({m * unit(rng), n * unit(rng), 3.0 + 0.2 * m * unit(rng),
                      3.0 + 0.2 * n * unit(rng), 0.2 * (unit(rng) - 0.5)});
  }
  VideoTensor out(shape);
  for (std::size_t k = 0; k < shape.frames; ++k) {
    const double oy = opts.drift_y * static_cast<double>(k), ox = opts.drift_x * static_cast<double>(k);
    for (std::size_t j = 0; j < shape.width; ++j) {
      for (std::size_t i = 0; i < shape.height; ++i) {
        const double y = static_cast<double>(i) + oy, x = static_cast<double>(j) + ox;
        double v = 0.42;
        for (const auto& w : waves) {
          v += w.amp * std::sin(2.0 * std::numbers::pi * (w.fy * y + w.fx * x) + w.phase);
        }
        for (const auto& b : blocks) {
          // Soft box: product of two logistic ramps per axis.
          const double ey = (b.hy - std::abs(y - b.cy)) / 1.2, ex = (b.hx - std::abs(x - b.cx)) / 1.2;
          v += b.level / ((1.0 + std::exp(-ey)) * (1.0 + std::exp(-ex)));
        }
        out(i, j, k) = std::clamp(v, 0.05, 0.8);
      }
    }
  }
  return out;
}

}  // namespace derain
