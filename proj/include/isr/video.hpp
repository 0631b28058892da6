#pragma once

#include <cmath>
#include <cstddef>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace isr {

/// Raised when a frame or video would violate its construction invariants.
class InvalidVideo : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One grayscale time slice, row-major, intensities in [0,1].
class Frame {
 public:
  Frame() = default;

  Frame(std::size_t width, std::size_t height, std::vector<double> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width_ == 0 || height_ == 0) throw InvalidVideo("frame dimensions must be positive");
    if (pixels_.size() != width_ * height_)
      throw InvalidVideo("frame pixel count " + std::to_string(pixels_.size()) + " != " +
                         std::to_string(width_) + "x" + std::to_string(height_));
    for (double p : pixels_) {
      if (!std::isfinite(p) || p < 0.0 || p > 1.0)
        throw InvalidVideo("frame intensity outside [0,1] or non-finite");
    }
  }

  /// Constant frame.
  static Frame filled(std::size_t width, std::size_t height, double value) {
    return Frame(width, height, std::vector<double>(width * height, value));
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return pixels_.size(); }
  const std::vector<double>& pixels() const noexcept { return pixels_; }

  double at(std::size_t x, std::size_t y) const { return pixels_[y * width_ + x]; }

  /// Read with coordinates clamped to the frame border.
  double clamped(long x, long y) const noexcept {
    const long w = static_cast<long>(width_);
    const long h = static_cast<long>(height_);
    x = x < 0 ? 0 : (x >= w ? w - 1 : x);
    y = y < 0 ? 0 : (y >= h ? h - 1 : y);
    return pixels_[static_cast<std::size_t>(y) * width_ + static_cast<std::size_t>(x)];
  }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> pixels_;
};

/// Ordered frames of identical size. At least two frames so flow is defined.
class Video {
 public:
  Video() = default;

  explicit Video(std::vector<Frame> frames) : frames_(std::move(frames)) {
    if (frames_.size() < 2) throw InvalidVideo("video needs at least 2 frames");
    for (const auto& f : frames_) {
      if (f.width() != frames_.front().width() || f.height() != frames_.front().height())
        throw InvalidVideo("video frames have mismatched dimensions");
    }
  }

  /// Builds without the frame-count check. Used by ingestion so that
  /// validate_dataset can report short videos instead of aborting.
  static Video unchecked(std::vector<Frame> frames) {
    Video v;
    v.frames_ = std::move(frames);
    return v;
  }

  std::size_t frame_count() const noexcept { return frames_.size(); }
  std::size_t width() const noexcept { return frames_.empty() ? 0 : frames_.front().width(); }
  std::size_t height() const noexcept { return frames_.empty() ? 0 : frames_.front().height(); }
  const std::vector<Frame>& frames() const noexcept { return frames_; }
  const Frame& operator[](std::size_t i) const { return frames_[i]; }

  friend bool operator==(const Video&, const Video&) = default;

 private:
  std::vector<Frame> frames_;
};

using Label = std::size_t;

struct LabeledVideo {
  Video video;
  Label label = 0;
  std::string source_id;

  friend bool operator==(const LabeledVideo&, const LabeledVideo&) = default;
};

struct Dataset {
  std::vector<LabeledVideo> items;
  std::vector<std::string> class_names;

  std::size_t class_count() const noexcept { return class_names.size(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// ITU-R BT.601 luma of an RGB triple in [0,1].
constexpr double luma(double r, double g, double b) noexcept {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

/// Checks every type invariant; one message per violation, empty when valid.
/// Never throws on malformed content.
inline std::vector<std::string> validate_dataset(const Dataset& d) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& item : d.items) {
    const std::string tag = "video " + item.source_id + ": ";
    if (!seen.insert(item.source_id).second) out.push_back(tag + "duplicate source_id");
    if (item.label >= d.class_count())
      out.push_back(tag + "label out of range (" + std::to_string(item.label) + " >= " +
                    std::to_string(d.class_count()) + ")");
    const auto& frames = item.video.frames();
    if (frames.size() < 2) out.push_back(tag + "frame count < 2");
    bool size_mismatch = false;
    bool bad_pixels = false;
    for (const auto& f : frames) {
      if (!frames.empty() &&
          (f.width() != frames.front().width() || f.height() != frames.front().height()))
        size_mismatch = true;
      if (f.pixels().size() != f.width() * f.height() || f.width() == 0 || f.height() == 0)
        bad_pixels = true;
      for (double p : f.pixels())
        if (!std::isfinite(p) || p < 0.0 || p > 1.0) bad_pixels = true;
    }
    if (size_mismatch) out.push_back(tag + "frames have mismatched dimensions");
    if (bad_pixels) out.push_back(tag + "invalid frame pixels");
  }
  return out;
}

}  // namespace isr
