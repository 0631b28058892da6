#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "isr/video.hpp"

namespace isr {

struct HogConfig {
  std::size_t bins = 8;
  std::size_t cell_size = 4;
  double epsilon = 1e-6;

  friend bool operator==(const HogConfig&, const HogConfig&) = default;
};

struct FlowConfig {
  std::size_t iterations = 50;
  double alpha = 1.0;

  friend bool operator==(const FlowConfig&, const FlowConfig&) = default;
};

struct HofConfig {
  std::size_t bins = 8;
  double no_motion_threshold = 0.1;  // pixels
  double epsilon = 1e-6;

  friend bool operator==(const HofConfig&, const HofConfig&) = default;
};

struct PotConfig {
  std::size_t level = 1;
  double gradient_threshold = 1e-4;
  double epsilon = 1e-6;

  friend bool operator==(const PotConfig&, const PotConfig&) = default;
};

struct FeatureConfig {
  HogConfig hog;
  FlowConfig flow;
  HofConfig hof;
  PotConfig pot;

  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

/// Per-frame (or per-frame-pair) descriptors of one channel, in time order.
struct DescriptorSeries {
  std::string channel_name;
  std::vector<std::vector<double>> vectors;

  std::size_t dim() const noexcept { return vectors.empty() ? 0 : vectors.front().size(); }
};

struct FeatureChannel {
  std::string name;
  std::vector<double> values;

  friend bool operator==(const FeatureChannel&, const FeatureChannel&) = default;
};

/// Multi-channel video representation. Channels keep insertion order, so two
/// vectors built by the same pipeline line up channel by channel.
struct FeatureVector {
  std::vector<FeatureChannel> channels;

  std::size_t total_dim() const noexcept {
    std::size_t n = 0;
    for (const auto& c : channels) n += c.values.size();
    return n;
  }

  const std::vector<double>& channel(const std::string& name) const {
    for (const auto& c : channels)
      if (c.name == name) return c.values;
    throw std::out_of_range("feature vector has no channel '" + name + "'");
  }

  bool same_structure(const FeatureVector& o) const noexcept {
    if (channels.size() != o.channels.size()) return false;
    for (std::size_t i = 0; i < channels.size(); ++i)
      if (channels[i].name != o.channels[i].name ||
          channels[i].values.size() != o.channels[i].values.size())
        return false;
    return true;
  }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

namespace detail {

inline void l1_normalize(std::vector<double>::iterator first, std::vector<double>::iterator last,
                         double eps) {
  double sum = 0.0;
  for (auto it = first; it != last; ++it) sum += *it;
  if (sum <= 0.0) return;
  for (auto it = first; it != last; ++it) *it /= (sum + eps);
}

/// Central difference with clamped border.
inline void gradients(const Frame& f, std::vector<double>& gx, std::vector<double>& gy) {
  const std::size_t w = f.width();
  const std::size_t h = f.height();
  gx.assign(w * h, 0.0);
  gy.assign(w * h, 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const long lx = static_cast<long>(x);
      const long ly = static_cast<long>(y);
      gx[y * w + x] = 0.5 * (f.clamped(lx + 1, ly) - f.clamped(lx - 1, ly));
      gy[y * w + x] = 0.5 * (f.clamped(lx, ly + 1) - f.clamped(lx, ly - 1));
    }
  }
}

/// Direction bin of an angle; unsigned folds into [0, pi).
inline std::size_t orientation_bin(double angle, std::size_t bins, bool is_signed) {
  const double period = is_signed ? 2.0 * std::numbers::pi : std::numbers::pi;
  double a = std::fmod(angle, period);
  if (a < 0.0) a += period;
  auto b = static_cast<std::size_t>(std::floor(a / period * static_cast<double>(bins)));
  return b >= bins ? bins - 1 : b;
}

}  // namespace detail

/// Cell histograms of unsigned gradient orientation, magnitude weighted, then
/// L1-normalized over the whole frame. Length = cells * bins.
inline std::vector<double> hog_frame(const Frame& f, const HogConfig& cfg = {}) {
  if (cfg.bins == 0 || cfg.cell_size == 0) throw std::invalid_argument("hog: bins and cell size must be positive");
  if (f.width() < cfg.cell_size || f.height() < cfg.cell_size)
    throw std::invalid_argument("hog: frame smaller than one cell");
  const std::size_t cells_x = f.width() / cfg.cell_size;
  const std::size_t cells_y = f.height() / cfg.cell_size;
  std::vector<double> gx, gy;
  detail::gradients(f, gx, gy);

  std::vector<double> hist(cells_x * cells_y * cfg.bins, 0.0);
  for (std::size_t y = 0; y < cells_y * cfg.cell_size; ++y) {
    for (std::size_t x = 0; x < cells_x * cfg.cell_size; ++x) {
      const std::size_t i = y * f.width() + x;
      const double mag = std::hypot(gx[i], gy[i]);
      if (mag == 0.0) continue;
      const std::size_t cell = (y / cfg.cell_size) * cells_x + x / cfg.cell_size;
      hist[cell * cfg.bins + detail::orientation_bin(std::atan2(gy[i], gx[i]), cfg.bins, false)] += mag;
    }
  }
  detail::l1_normalize(hist.begin(), hist.end(), cfg.epsilon);
  return hist;
}

/// Dense per-pixel flow (u, v) in LR pixels.
struct FlowField {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> u;
  std::vector<double> v;
};

/// Horn-Schunck with Jacobi updates, clamped borders, zero initialization.
inline FlowField optical_flow(const Frame& prev, const Frame& next, const FlowConfig& cfg = {}) {
  if (prev.width() != next.width() || prev.height() != next.height())
    throw std::invalid_argument("optical_flow: frame dimensions differ");
  const std::size_t w = prev.width();
  const std::size_t h = prev.height();
  const std::size_t n = w * h;

  std::vector<double> ax, ay, bx, by;
  detail::gradients(prev, ax, ay);
  detail::gradients(next, bx, by);
  std::vector<double> ix(n), iy(n), it(n), denom(n);
  const double alpha2 = cfg.alpha * cfg.alpha;
  for (std::size_t i = 0; i < n; ++i) {
    ix[i] = 0.5 * (ax[i] + bx[i]);
    iy[i] = 0.5 * (ay[i] + by[i]);
    it[i] = next.pixels()[i] - prev.pixels()[i];
    denom[i] = alpha2 + ix[i] * ix[i] + iy[i] * iy[i];
  }

  FlowField flow{w, h, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  std::vector<double> u_next(n), v_next(n);
  auto at = [w, h](const std::vector<double>& field, long x, long y) {
    x = std::clamp(x, 0L, static_cast<long>(w) - 1);
    y = std::clamp(y, 0L, static_cast<long>(h) - 1);
    return field[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
  };
  auto local_mean = [&](const std::vector<double>& field, long x, long y) {
    return (at(field, x - 1, y) + at(field, x + 1, y) + at(field, x, y - 1) + at(field, x, y + 1)) / 6.0 +
           (at(field, x - 1, y - 1) + at(field, x + 1, y - 1) + at(field, x - 1, y + 1) +
            at(field, x + 1, y + 1)) / 12.0;
  };
  for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t i = y * w + x;
        const double ub = local_mean(flow.u, static_cast<long>(x), static_cast<long>(y));
        const double vb = local_mean(flow.v, static_cast<long>(x), static_cast<long>(y));
        const double t = (ix[i] * ub + iy[i] * vb + it[i]) / denom[i];
        u_next[i] = ub - ix[i] * t;
        v_next[i] = vb - iy[i] * t;
      }
    }
    flow.u.swap(u_next);
    flow.v.swap(v_next);
  }
  return flow;
}

/// Global histogram of flow directions plus a trailing no-motion bin.
/// Direction bins are magnitude weighted; the no-motion bin counts pixels.
inline std::vector<double> hof_frame_pair(const FlowField& flow, const HofConfig& cfg = {}) {
  std::vector<double> hist(cfg.bins + 1, 0.0);
  for (std::size_t i = 0; i < flow.u.size(); ++i) {
    const double mag = std::hypot(flow.u[i], flow.v[i]);
    if (mag < cfg.no_motion_threshold) {
      hist[cfg.bins] += 1.0;
    } else {
      hist[detail::orientation_bin(std::atan2(flow.v[i], flow.u[i]), cfg.bins, true)] += mag;
    }
  }
  detail::l1_normalize(hist.begin(), hist.end(), cfg.epsilon);
  return hist;
}

/// Frame range [first, last) of segment `s` when the timeline of length
/// `frames` is split into `parts` equal contiguous pieces.
inline std::pair<std::size_t, std::size_t> pyramid_segment(std::size_t frames, std::size_t parts,
                                                           std::size_t s) {
  return {s * frames / parts, (s + 1) * frames / parts};
}

inline std::size_t pyramid_segment_count(std::size_t level) { return level * (level + 1) / 2; }

/// Pooled time series over a temporal pyramid. For each segment (partitions
/// 1..level, in order) emits four blocks of length dim: sum, max, count of
/// increases, count of decreases. Each block is L1-normalized on its own.
inline std::vector<double> pot_represent(const DescriptorSeries& series, std::size_t level,
                                         const PotConfig& cfg = {}, bool normalize = true) {
  if (level < 1 || level > 4) throw std::invalid_argument("pot: pyramid level must be in 1..4");
  if (series.vectors.empty()) throw std::invalid_argument("pot: empty descriptor series");
  const std::size_t dim = series.dim();
  for (const auto& v : series.vectors)
    if (v.size() != dim) throw std::invalid_argument("pot: descriptor length varies within series");
  const std::size_t frames = series.vectors.size();

  std::vector<double> out;
  out.reserve(pyramid_segment_count(level) * dim * 4);
  for (std::size_t parts = 1; parts <= level; ++parts) {
    for (std::size_t s = 0; s < parts; ++s) {
      const auto [first, last] = pyramid_segment(frames, parts, s);
      const std::size_t base = out.size();
      out.resize(base + 4 * dim, 0.0);
      double* sum = out.data() + base;
      double* mx = sum + dim;
      double* inc = mx + dim;
      double* dec = inc + dim;
      for (std::size_t t = first; t < last; ++t) {
        const auto& x = series.vectors[t];
        for (std::size_t d = 0; d < dim; ++d) {
          sum[d] += x[d];
          mx[d] = std::max(mx[d], x[d]);
          if (t + 1 < last) {
            const double step = series.vectors[t + 1][d] - x[d];
            if (step >= cfg.gradient_threshold) inc[d] += 1.0;
            if (-step >= cfg.gradient_threshold) dec[d] += 1.0;
          }
        }
      }
      if (normalize) {
        for (std::size_t b = 0; b < 4; ++b) {
          auto first_it = out.begin() + static_cast<std::ptrdiff_t>(base + b * dim);
          detail::l1_normalize(first_it, first_it + static_cast<std::ptrdiff_t>(dim), cfg.epsilon);
        }
      }
    }
  }
  return out;
}

inline DescriptorSeries hog_series(const Video& v, const HogConfig& cfg = {}) {
  DescriptorSeries s{"hog", {}};
  s.vectors.reserve(v.frame_count());
  for (const auto& f : v.frames()) s.vectors.push_back(hog_frame(f, cfg));
  return s;
}

inline DescriptorSeries hof_series(const Video& v, const FlowConfig& flow_cfg = {},
                                   const HofConfig& hof_cfg = {}) {
  DescriptorSeries s{"hof", {}};
  for (std::size_t i = 0; i + 1 < v.frame_count(); ++i)
    s.vectors.push_back(hof_frame_pair(optical_flow(v[i], v[i + 1], flow_cfg), hof_cfg));
  return s;
}

/// Full LR descriptor pipeline: PoT over per-frame HOG and per-pair HOF.
inline FeatureVector extract_features(const Video& v, const FeatureConfig& cfg = {}) {
  FeatureVector fv;
  fv.channels.push_back({"hog", pot_represent(hog_series(v, cfg.hog), cfg.pot.level, cfg.pot)});
  fv.channels.push_back(
      {"hof", pot_represent(hof_series(v, cfg.flow, cfg.hof), cfg.pot.level, cfg.pot)});
  return fv;
}

}  // namespace isr
