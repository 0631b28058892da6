#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#ifdef ISR_WITH_PNG
#include <png.h>
#endif

#include "isr/transform.hpp"
#include "isr/video.hpp"

namespace isr {

inline constexpr int kSchemaVersion = 1;

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A manifest or frame path that does not exist.
class MissingFileError : public IngestError {
 public:
  explicit MissingFileError(const std::filesystem::path& p)
      : IngestError("missing file: " + p.string()), path_(p) {}
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

/// Frames of one video disagree on their dimensions.
class FrameSizeError : public IngestError {
 public:
  using IngestError::IngestError;
};

/// A manifest label that names no class.
class UnknownLabelError : public IngestError {
 public:
  using IngestError::IngestError;
};

/// File content that cannot be decoded.
class FormatError : public IngestError {
 public:
  using IngestError::IngestError;
};

namespace detail {

inline void skip_pnm_space(std::istream& in) {
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

inline std::size_t read_pnm_int(std::istream& in, const std::string& path) {
  skip_pnm_space(in);
  long v = -1;
  in >> v;
  if (!in || v < 0) throw FormatError("bad PNM header in " + path);
  return static_cast<std::size_t>(v);
}

}  // namespace detail

/// Reads binary or ASCII PGM (P5/P2) and binary PPM (P6, converted to luma).
inline Frame read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError(path);
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  if (magic != "P5" && magic != "P2" && magic != "P6") throw FormatError("unsupported PNM type in " + path.string());
  const std::size_t w = detail::read_pnm_int(in, path.string());
  const std::size_t h = detail::read_pnm_int(in, path.string());
  const std::size_t maxval = detail::read_pnm_int(in, path.string());
  if (w == 0 || h == 0 || maxval == 0 || maxval > 65535) throw FormatError("bad PNM header in " + path.string());
  const double scale = 1.0 / static_cast<double>(maxval);
  std::vector<double> px(w * h);
  if (magic == "P2") {
    for (auto& p : px) p = static_cast<double>(detail::read_pnm_int(in, path.string())) * scale;
  } else {
    in.get();  // single whitespace after maxval
    const std::size_t channels = magic == "P6" ? 3 : 1;
    const std::size_t bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(w * h * channels * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) throw FormatError("truncated PNM data in " + path.string());
    auto sample = [&](std::size_t i) {
      return bytes == 2 ? static_cast<double>((raw[2 * i] << 8) | raw[2 * i + 1]) : static_cast<double>(raw[i]);
    };
    for (std::size_t i = 0; i < w * h; ++i) {
      px[i] = channels == 3 ? luma(sample(3 * i) * scale, sample(3 * i + 1) * scale, sample(3 * i + 2) * scale)
                            : sample(i) * scale;
    }
  }
  for (auto& p : px) p = std::clamp(p, 0.0, 1.0);
  return Frame(w, h, std::move(px));
}

/// Writes an 8-bit binary PGM.
inline void write_pgm(const std::filesystem::path& path, const Frame& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P5\n" << f.width() << ' ' << f.height() << "\n255\n";
  std::vector<unsigned char> raw(f.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    raw[i] = static_cast<unsigned char>(std::lround(std::clamp(f.pixels()[i], 0.0, 1.0) * 255.0));
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

#ifdef ISR_WITH_PNG
inline Frame read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str()))
    throw FormatError("cannot decode PNG " + path.string() + ": " + image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> raw(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raw.data(), 0, nullptr)) {
    png_image_free(&image);
    throw FormatError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  const std::size_t w = image.width, h = image.height;
  std::vector<double> px(w * h);
  for (std::size_t i = 0; i < w * h; ++i)
    px[i] = std::clamp(luma(raw[3 * i] / 255.0, raw[3 * i + 1] / 255.0, raw[3 * i + 2] / 255.0), 0.0, 1.0);
  return Frame(w, h, std::move(px));
}
#endif

inline Frame read_frame(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingFileError(path);
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(c));
  if (ext == ".png") {
#ifdef ISR_WITH_PNG
    return read_png(path);
#else
    throw FormatError("PNG support not compiled in: " + path.string());
#endif
  }
  return read_pnm(path);
}

/// Reads a dataset manifest:
///   {"schema_version": 1, "kind": "dataset_manifest",
///    "class_names": [...],
///    "videos": [{"id": ..., "label": <name or index>, "frames": [paths...]}]}
/// Frame paths are relative to the manifest's directory. Frames whose aspect
/// ratio differs from aspect_w:aspect_h are center-cropped.
inline Dataset ingest_frames_dir(const std::filesystem::path& manifest_path, std::size_t aspect_w = 4,
                                 std::size_t aspect_h = 3) {
  if (!std::filesystem::exists(manifest_path)) throw MissingFileError(manifest_path);
  std::ifstream in(manifest_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest " + manifest_path.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("class_names") || !j.contains("videos"))
    throw FormatError("manifest " + manifest_path.string() + ": needs class_names and videos");
  if (j.value("schema_version", 0) != kSchemaVersion)
    throw FormatError("manifest " + manifest_path.string() + ": unsupported schema_version");

  const auto base = manifest_path.parent_path();
  Dataset d;
  d.class_names = j.at("class_names").get<std::vector<std::string>>();
  for (const auto& entry : j.at("videos")) {
    const std::string id = entry.at("id").get<std::string>();
    Label label = 0;
    const auto& lj = entry.at("label");
    if (lj.is_number_integer()) {
      const auto v = lj.get<long long>();
      if (v < 0 || static_cast<std::size_t>(v) >= d.class_names.size())
        throw UnknownLabelError("video " + id + ": label index " + std::to_string(v) + " out of range");
      label = static_cast<Label>(v);
    } else {
      const auto name = lj.get<std::string>();
      auto it = std::find(d.class_names.begin(), d.class_names.end(), name);
      if (it == d.class_names.end()) throw UnknownLabelError("video " + id + ": unknown label '" + name + "'");
      label = static_cast<Label>(it - d.class_names.begin());
    }
    std::vector<Frame> frames;
    std::size_t raw_w = 0, raw_h = 0;
    for (const auto& fp : entry.at("frames")) {
      const std::filesystem::path p = base / fp.get<std::string>();
      Frame f = read_frame(p);
      if (frames.empty()) {
        raw_w = f.width();
        raw_h = f.height();
      } else if (f.width() != raw_w || f.height() != raw_h) {
        throw FrameSizeError("video " + id + ": frame " + p.string() + " is " + std::to_string(f.width()) + "x" +
                             std::to_string(f.height()) + ", expected " + std::to_string(raw_w) + "x" +
                             std::to_string(raw_h));
      }
      frames.push_back(center_crop_to_aspect(f, aspect_w, aspect_h));
    }
    d.items.push_back({Video::unchecked(std::move(frames)), label, id});
  }
  return d;
}

/// Writes every frame as PGM under `dir/<source_id>/` and a manifest.json
/// next to them. Returns the manifest path.
inline std::filesystem::path write_dataset(const Dataset& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "dataset_manifest";
  j["class_names"] = d.class_names;
  j["videos"] = nlohmann::json::array();
  for (const auto& item : d.items) {
    std::filesystem::create_directories(dir / item.source_id);
    nlohmann::json v;
    v["id"] = item.source_id;
    v["label"] = d.class_names.at(item.label);
    v["frames"] = nlohmann::json::array();
    for (std::size_t f = 0; f < item.video.frame_count(); ++f) {
      char name[32];
      std::snprintf(name, sizeof name, "frame_%04zu.pgm", f);
      const auto rel = std::filesystem::path(item.source_id) / name;
      write_pgm(dir / rel, item.video[f]);
      v["frames"].push_back(rel.generic_string());
    }
    j["videos"].push_back(std::move(v));
  }
  const auto manifest = dir / "manifest.json";
  std::ofstream(manifest) << j.dump(2) << '\n';
  return manifest;
}

}  // namespace isr
