#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "isr/video.hpp"

namespace isr {

enum class MotionClass { translate_left, translate_right, approach, recede, rotate_oscillate };

inline constexpr std::array<MotionClass, 5> kMotionClasses{
    MotionClass::translate_left, MotionClass::translate_right, MotionClass::approach,
    MotionClass::recede, MotionClass::rotate_oscillate};

inline std::string to_string(MotionClass m) {
  switch (m) {
    case MotionClass::translate_left: return "translate-left";
    case MotionClass::translate_right: return "translate-right";
    case MotionClass::approach: return "approach";
    case MotionClass::recede: return "recede";
    case MotionClass::rotate_oscillate: return "rotate-oscillate";
  }
  return "unknown";
}

/// Desk-scale stand-in for a real activity dataset. Every video shows one
/// bright bar on a textured background; the class is the bar's motion. Each
/// video also gets a random static camera pose (offset, zoom, roll), which
/// is the nuisance that HR-side motion transforms can emulate.
struct SynthConfig {
  std::size_t class_count = 5;
  std::size_t videos_per_class = 20;
  std::size_t width = 64;
  std::size_t height = 48;
  std::size_t frames = 12;
  std::uint64_t seed = 7;

  // Per-video jitter ranges (HR pixels, radians, per-frame rates).
  double shape_size_min = 5.0;   // bar half-length
  double shape_size_max = 9.0;
  double bar_aspect = 0.45;      // half-width / half-length
  double speed_min = 0.6;        // translate classes, px/frame
  double speed_max = 1.4;
  double zoom_rate_min = 0.025;  // approach/recede, fractional size change per frame
  double zoom_rate_max = 0.05;
  double oscillation_amplitude = 0.35;  // rotate class, radians
  double start_jitter = 2.0;     // start position spread around center, px
  double camera_offset = 1.0;    // px
  double camera_zoom = 0.10;     // fractional
  double camera_roll = 0.087;    // radians
  double texture_contrast = 0.12;
  double shape_intensity = 0.85;
  double background_level = 0.25;
  double noise_sigma = 0.005;
  std::size_t supersample = 3;
};

namespace detail {

struct Grating {
  double fx, fy, phase, amp;
};

struct SceneParams {
  MotionClass motion;
  double cx0, cy0;     // world start position
  double size;         // bar half-length
  double orientation;  // radians
  double speed;
  double zoom_rate;
  double osc_phase;
  double osc_period;
  double cam_dx, cam_dy, cam_zoom, cam_roll;
  std::array<Grating, 3> texture;
  std::uint64_t noise_seed;
};

inline double texture_at(const SceneParams& p, double x, double y, double base) {
  double v = base;
  for (const auto& g : p.texture) v += g.amp * std::sin(g.fx * x + g.fy * y + g.phase);
  return v;
}

}  // namespace detail

/// Renders one video of the given motion class. Deterministic in `rng` state.
inline Video render_synthetic_video(const SynthConfig& cfg, MotionClass motion, std::mt19937_64& rng) {
  auto uni = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const double w = static_cast<double>(cfg.width);
  const double h = static_cast<double>(cfg.height);
  const double frames = static_cast<double>(cfg.frames);

  detail::SceneParams p{};
  p.motion = motion;
  p.size = uni(cfg.shape_size_min, cfg.shape_size_max);
  p.orientation = uni(0.0, std::numbers::pi);
  p.speed = uni(cfg.speed_min, cfg.speed_max);
  p.zoom_rate = uni(cfg.zoom_rate_min, cfg.zoom_rate_max);
  p.osc_phase = uni(0.0, 2.0 * std::numbers::pi);
  p.osc_period = uni(6.0, 10.0);
  p.cx0 = (w - 1.0) / 2.0 + uni(-cfg.start_jitter, cfg.start_jitter);
  p.cy0 = (h - 1.0) / 2.0 + uni(-cfg.start_jitter, cfg.start_jitter) * 0.75;
  // Keep translating shapes inside the frame for the whole clip.
  const double travel = p.speed * (frames - 1.0) / 2.0;
  if (motion == MotionClass::translate_left) p.cx0 += travel;
  if (motion == MotionClass::translate_right) p.cx0 -= travel;
  p.cam_dx = uni(-cfg.camera_offset, cfg.camera_offset);
  p.cam_dy = uni(-cfg.camera_offset, cfg.camera_offset);
  p.cam_zoom = 1.0 + uni(-cfg.camera_zoom, cfg.camera_zoom);
  p.cam_roll = uni(-cfg.camera_roll, cfg.camera_roll);
  for (auto& g : p.texture) {
    const double freq = uni(0.15, 0.6);
    const double dir = uni(0.0, std::numbers::pi);
    g = {freq * std::cos(dir), freq * std::sin(dir), uni(0.0, 2.0 * std::numbers::pi),
         cfg.texture_contrast * uni(0.5, 1.0) / 2.0};
  }
  p.noise_seed = rng();

  std::mt19937_64 noise_rng(p.noise_seed);
  std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
  const double ccx = (w - 1.0) / 2.0;
  const double ccy = (h - 1.0) / 2.0;
  const double cr = std::cos(p.cam_roll);
  const double sr = std::sin(p.cam_roll);
  const std::size_t ss = std::max<std::size_t>(1, cfg.supersample);

  std::vector<Frame> out;
  out.reserve(cfg.frames);
  for (std::size_t f = 0; f < cfg.frames; ++f) {
    const double t = static_cast<double>(f);
    double cx = p.cx0, cy = p.cy0, size = p.size, angle = p.orientation;
    switch (motion) {
      case MotionClass::translate_left: cx -= p.speed * t; break;
      case MotionClass::translate_right: cx += p.speed * t; break;
      case MotionClass::approach: size *= std::pow(1.0 + p.zoom_rate, t); break;
      case MotionClass::recede: size *= 1.5 * std::pow(1.0 + p.zoom_rate, -t); break;
      case MotionClass::rotate_oscillate:
        angle += cfg.oscillation_amplitude * std::sin(2.0 * std::numbers::pi * t / p.osc_period + p.osc_phase);
        break;
    }
    const double ca = std::cos(angle);
    const double sa = std::sin(angle);
    const double half_len = size;
    const double half_wid = size * cfg.bar_aspect;

    std::vector<double> px(cfg.width * cfg.height);
    for (std::size_t y = 0; y < cfg.height; ++y) {
      for (std::size_t x = 0; x < cfg.width; ++x) {
        double acc = 0.0;
        for (std::size_t sy = 0; sy < ss; ++sy) {
          for (std::size_t sx = 0; sx < ss; ++sx) {
            const double ix = static_cast<double>(x) + (static_cast<double>(sx) + 0.5) / static_cast<double>(ss) - 0.5;
            const double iy = static_cast<double>(y) + (static_cast<double>(sy) + 0.5) / static_cast<double>(ss) - 0.5;
            // image -> world through the camera pose
            const double qx = (ix - ccx - p.cam_dx) / p.cam_zoom;
            const double qy = (iy - ccy - p.cam_dy) / p.cam_zoom;
            const double wx = cr * qx + sr * qy + ccx;
            const double wy = -sr * qx + cr * qy + ccy;
            const double lx = ca * (wx - cx) + sa * (wy - cy);
            const double ly = -sa * (wx - cx) + ca * (wy - cy);
            const bool inside = std::abs(lx) <= half_len && std::abs(ly) <= half_wid;
            acc += inside ? cfg.shape_intensity : detail::texture_at(p, wx, wy, cfg.background_level);
          }
        }
        const double v = acc / static_cast<double>(ss * ss) + noise(noise_rng);
        px[y * cfg.width + x] = std::clamp(v, 0.0, 1.0);
      }
    }
    out.emplace_back(cfg.width, cfg.height, std::move(px));
  }
  return Video(std::move(out));
}

/// videos_per_class videos for each of the first class_count motion classes.
/// Source ids are "synth_<class>_<index>".
inline Dataset generate_synthetic_dataset(const SynthConfig& cfg) {
  if (cfg.class_count < 1 || cfg.class_count > kMotionClasses.size())
    throw std::invalid_argument("synth: class count must be in 1.." + std::to_string(kMotionClasses.size()));
  if (cfg.videos_per_class == 0 || cfg.frames < 2 || cfg.width == 0 || cfg.height == 0)
    throw std::invalid_argument("synth: counts and dimensions must be positive (frames >= 2)");
  Dataset d;
  for (std::size_t c = 0; c < cfg.class_count; ++c) d.class_names.push_back(to_string(kMotionClasses[c]));
  for (std::size_t c = 0; c < cfg.class_count; ++c) {
    for (std::size_t i = 0; i < cfg.videos_per_class; ++i) {
      std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                        static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(i)};
      std::mt19937_64 rng(seq);
      char id[64];
      std::snprintf(id, sizeof id, "synth_%zu_%03zu", c, i);
      d.items.push_back({render_synthetic_video(cfg, kMotionClasses[c], rng), c, id});
    }
  }
  return d;
}

}  // namespace isr
