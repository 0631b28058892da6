#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "isr/video.hpp"

namespace isr {

/// Camera-motion emulation applied at high resolution: isotropic scale and
/// rotation about the frame center, then a translation in HR pixels.
struct MotionTransform {
  double dx = 0.0;
  double dy = 0.0;
  double scale = 1.0;
  double rotation = 0.0;  // radians

  static constexpr MotionTransform identity() noexcept { return {}; }

  bool is_identity() const noexcept {
    return dx == 0.0 && dy == 0.0 && scale == 1.0 && rotation == 0.0;
  }

  bool approx_equal(const MotionTransform& o, double tol = 1e-9) const noexcept {
    return std::abs(dx - o.dx) <= tol && std::abs(dy - o.dy) <= tol &&
           std::abs(scale - o.scale) <= tol && std::abs(rotation - o.rotation) <= tol;
  }

  friend bool operator==(const MotionTransform&, const MotionTransform&) = default;
  friend auto operator<=>(const MotionTransform&, const MotionTransform&) = default;
};

struct DownsampleSpec {
  std::size_t target_width = 16;
  std::size_t target_height = 12;

  friend bool operator==(const DownsampleSpec&, const DownsampleSpec&) = default;
};

/// Learned set S. The identity sample is implicit and never stored here.
class TransformSet {
 public:
  TransformSet() = default;

  explicit TransformSet(std::vector<MotionTransform> transforms)
      : transforms_(std::move(transforms)) {
    for (std::size_t i = 0; i < transforms_.size(); ++i)
      for (std::size_t j = i + 1; j < transforms_.size(); ++j)
        if (transforms_[i].approx_equal(transforms_[j]))
          throw std::invalid_argument("transform set contains duplicate transforms at " +
                                      std::to_string(i) + " and " + std::to_string(j));
  }

  std::size_t size() const noexcept { return transforms_.size(); }
  bool empty() const noexcept { return transforms_.empty(); }
  const std::vector<MotionTransform>& transforms() const noexcept { return transforms_; }
  auto begin() const noexcept { return transforms_.begin(); }
  auto end() const noexcept { return transforms_.end(); }

  friend bool operator==(const TransformSet&, const TransformSet&) = default;

 private:
  std::vector<MotionTransform> transforms_;
};

inline double degrees(double deg) noexcept { return deg * std::numbers::pi / 180.0; }

/// Grids whose Cartesian product forms the candidate pool.
struct PoolGrid {
  std::vector<double> shifts_x{-1.0, -0.5, 0.0, 0.5, 1.0};
  std::vector<double> shifts_y{-1.0, -0.5, 0.0, 0.5, 1.0};
  std::vector<double> scales{0.9, 1.0, 1.1};
  std::vector<double> rotations{degrees(-5.0), 0.0, degrees(5.0)};
  double scale_min = 0.85;
  double scale_max = 1.15;
  double rotation_max = std::numbers::pi / 12.0;

  friend bool operator==(const PoolGrid&, const PoolGrid&) = default;
};

/// Candidate pool S_L in lexicographic grid order (shift x, shift y, scale, rotation).
struct TransformPool {
  std::vector<MotionTransform> candidates;
  PoolGrid grid;

  std::size_t size() const noexcept { return candidates.size(); }
  const MotionTransform& operator[](std::size_t i) const { return candidates[i]; }
};

inline TransformPool build_pool(const PoolGrid& grid) {
  auto contains = [](const std::vector<double>& v, double x) {
    for (double e : v)
      if (e == x) return true;
    return false;
  };
  if (grid.shifts_x.empty() || grid.shifts_y.empty() || grid.scales.empty() ||
      grid.rotations.empty())
    throw std::invalid_argument("pool grid: every axis needs at least one value");
  if (!contains(grid.shifts_x, 0.0) || !contains(grid.shifts_y, 0.0))
    throw std::invalid_argument("pool grid: shift grids must contain 0");
  if (!contains(grid.scales, 1.0)) throw std::invalid_argument("pool grid: scale grid must contain 1");
  if (!contains(grid.rotations, 0.0))
    throw std::invalid_argument("pool grid: rotation grid must contain 0");
  for (double s : grid.scales)
    if (!(s > 0.0) || s < grid.scale_min || s > grid.scale_max)
      throw std::invalid_argument("pool grid: scale " + std::to_string(s) + " outside bounds");
  for (double r : grid.rotations)
    if (!std::isfinite(r) || std::abs(r) > grid.rotation_max)
      throw std::invalid_argument("pool grid: rotation " + std::to_string(r) + " outside bounds");

  TransformPool pool;
  pool.grid = grid;
  pool.candidates.reserve(grid.shifts_x.size() * grid.shifts_y.size() * grid.scales.size() *
                          grid.rotations.size());
  for (double sx : grid.shifts_x)
    for (double sy : grid.shifts_y)
      for (double s : grid.scales)
        for (double r : grid.rotations) pool.candidates.push_back({sx, sy, s, r});
  return pool;
}

// ---------------------------------------------------------------------------
// Warp audit. Counts non-identity warps per dataset role so that callers can
// assert test data never passes through a motion transform.

enum class DataRole { unspecified, train, validation, test };

struct WarpAudit {
  std::array<std::size_t, 4> non_identity_warps{};

  static WarpAudit& instance() {
    thread_local WarpAudit audit;
    return audit;
  }
  static DataRole& current_role() {
    thread_local DataRole role = DataRole::unspecified;
    return role;
  }
  std::size_t count(DataRole r) const { return non_identity_warps[static_cast<std::size_t>(r)]; }
  void reset() { non_identity_warps.fill(0); }
};

/// Tags every warp issued on this thread within its lifetime with a role.
class RoleScope {
 public:
  explicit RoleScope(DataRole role) : saved_(WarpAudit::current_role()) {
    WarpAudit::current_role() = role;
  }
  ~RoleScope() { WarpAudit::current_role() = saved_; }
  RoleScope(const RoleScope&) = delete;
  RoleScope& operator=(const RoleScope&) = delete;

 private:
  DataRole saved_;
};

// ---------------------------------------------------------------------------

/// Bilinear sample with edge clamping.
inline double sample_bilinear(const Frame& f, double x, double y) noexcept {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const double ax = x - fx;
  const double ay = y - fy;
  const long x0 = static_cast<long>(fx);
  const long y0 = static_cast<long>(fy);
  const double top = (1.0 - ax) * f.clamped(x0, y0) + ax * f.clamped(x0 + 1, y0);
  const double bottom = (1.0 - ax) * f.clamped(x0, y0 + 1) + ax * f.clamped(x0 + 1, y0 + 1);
  return (1.0 - ay) * top + ay * bottom;
}

/// Inverse-mapped warp. Forward model: p' = R(rotation) * scale * (p - c) + c + (dx, dy),
/// with c the frame center in pixel coordinates.
inline Frame apply_motion_transform(const Frame& f, const MotionTransform& t) {
  if (t.is_identity()) return f;
  ++WarpAudit::instance().non_identity_warps[static_cast<std::size_t>(WarpAudit::current_role())];

  const double cx = (static_cast<double>(f.width()) - 1.0) / 2.0;
  const double cy = (static_cast<double>(f.height()) - 1.0) / 2.0;
  const double c = std::cos(t.rotation);
  const double s = std::sin(t.rotation);
  const double inv_scale = 1.0 / t.scale;

  std::vector<double> out(f.size());
  for (std::size_t y = 0; y < f.height(); ++y) {
    for (std::size_t x = 0; x < f.width(); ++x) {
      const double px = static_cast<double>(x) - t.dx - cx;
      const double py = static_cast<double>(y) - t.dy - cy;
      // R(-rotation), then 1/scale
      const double sx = (c * px + s * py) * inv_scale + cx;
      const double sy = (-s * px + c * py) * inv_scale + cy;
      double v = sample_bilinear(f, sx, sy);
      out[y * f.width() + x] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    }
  }
  return Frame(f.width(), f.height(), std::move(out));
}

namespace detail {

struct OverlapWeight {
  std::size_t index;
  double weight;
};

/// For each destination cell, the source cells overlapping its back-projected
/// interval and the overlap lengths.
inline std::vector<std::vector<OverlapWeight>> overlap_weights(std::size_t src, std::size_t dst) {
  std::vector<std::vector<OverlapWeight>> out(dst);
  const double ratio = static_cast<double>(src) / static_cast<double>(dst);
  for (std::size_t j = 0; j < dst; ++j) {
    const double lo = static_cast<double>(j) * ratio;
    const double hi = static_cast<double>(j + 1) * ratio;
    const auto first = static_cast<std::size_t>(std::floor(lo));
    for (std::size_t i = first; i < src && static_cast<double>(i) < hi; ++i) {
      const double w = std::min(hi, static_cast<double>(i + 1)) - std::max(lo, static_cast<double>(i));
      if (w > 0.0) out[j].push_back({i, w});
    }
  }
  return out;
}

}  // namespace detail

/// Area-weighted mean of the source pixels under each destination pixel's
/// footprint. Exact block mean for integer ratios.
inline Frame area_downsample(const Frame& f, const DownsampleSpec& d) {
  if (d.target_width == 0 || d.target_height == 0)
    throw std::invalid_argument("downsample target must be positive");
  if (d.target_width >= f.width() || d.target_height >= f.height())
    throw std::invalid_argument("downsample target " + std::to_string(d.target_width) + "x" +
                                std::to_string(d.target_height) + " not smaller than source " +
                                std::to_string(f.width()) + "x" + std::to_string(f.height()));
  const auto wx = detail::overlap_weights(f.width(), d.target_width);
  const auto wy = detail::overlap_weights(f.height(), d.target_height);
  const double area = (static_cast<double>(f.width()) / static_cast<double>(d.target_width)) *
                      (static_cast<double>(f.height()) / static_cast<double>(d.target_height));

  std::vector<double> out(d.target_width * d.target_height);
  for (std::size_t oy = 0; oy < d.target_height; ++oy) {
    for (std::size_t ox = 0; ox < d.target_width; ++ox) {
      double acc = 0.0;
      for (const auto& ry : wy[oy]) {
        double row = 0.0;
        for (const auto& rx : wx[ox]) row += rx.weight * f.at(rx.index, ry.index);
        acc += ry.weight * row;
      }
      double v = acc / area;
      out[oy * d.target_width + ox] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    }
  }
  return Frame(d.target_width, d.target_height, std::move(out));
}

/// Largest centered window of the frame with the target aspect ratio.
inline Frame center_crop_to_aspect(const Frame& f, std::size_t aspect_w, std::size_t aspect_h) {
  const std::size_t w = f.width();
  const std::size_t h = f.height();
  std::size_t cw = w;
  std::size_t ch = h;
  if (w * aspect_h > h * aspect_w) {
    cw = static_cast<std::size_t>(std::llround(static_cast<double>(h * aspect_w) / static_cast<double>(aspect_h)));
  } else if (w * aspect_h < h * aspect_w) {
    ch = static_cast<std::size_t>(std::llround(static_cast<double>(w * aspect_h) / static_cast<double>(aspect_w)));
  }
  if (cw == w && ch == h) return f;
  const std::size_t x0 = (w - cw) / 2;
  const std::size_t y0 = (h - ch) / 2;
  std::vector<double> out;
  out.reserve(cw * ch);
  for (std::size_t y = 0; y < ch; ++y)
    for (std::size_t x = 0; x < cw; ++x) out.push_back(f.at(x0 + x, y0 + y));
  return Frame(cw, ch, std::move(out));
}

/// Warp every frame at full resolution with one transform, then downsample. Frames whose
/// aspect ratio differs from the target are center-cropped after warping.
inline Video isr_generate(const Video& v, const MotionTransform& t, const DownsampleSpec& d) {
  std::vector<Frame> out;
  out.reserve(v.frame_count());
  for (const auto& frame : v.frames()) {
    Frame warped = apply_motion_transform(frame, t);
    if (warped.width() * d.target_height != warped.height() * d.target_width)
      warped = center_crop_to_aspect(warped, d.target_width, d.target_height);
    out.push_back(area_downsample(warped, d));
  }
  return Video(std::move(out));
}

/// Conventional paradigm: crop and resize, no warp.
inline Video hr_resize_baseline(const Video& v, const DownsampleSpec& d) {
  std::vector<Frame> out;
  out.reserve(v.frame_count());
  for (const auto& frame : v.frames())
    out.push_back(area_downsample(center_crop_to_aspect(frame, d.target_width, d.target_height), d));
  return Video(std::move(out));
}

}  // namespace isr
