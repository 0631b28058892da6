#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "isr/experiment.hpp"
#include "isr/io.hpp"

namespace isr {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

using nlohmann::json;

inline void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  require_object(j, where);
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

inline double to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace detail

inline nlohmann::json to_json(const ExperimentConfig& c) {
  using nlohmann::json;
  json j;
  j["schema_version"] = kSchemaVersion;
  j["dataset"]["source"] = c.source == DatasetSource::synthetic ? "synthetic" : "manifest";
  if (!c.manifest.empty()) j["dataset"]["manifest"] = c.manifest;
  const auto& s = c.synth;
  j["dataset"]["synthetic"] = {
      {"class_count", s.class_count},       {"videos_per_class", s.videos_per_class},
      {"width", s.width},                   {"height", s.height},
      {"frames", s.frames},                 {"seed", s.seed},
      {"shape_size_min", s.shape_size_min}, {"shape_size_max", s.shape_size_max},
      {"bar_aspect", s.bar_aspect},         {"speed_min", s.speed_min},
      {"speed_max", s.speed_max},           {"zoom_rate_min", s.zoom_rate_min},
      {"zoom_rate_max", s.zoom_rate_max},   {"oscillation_amplitude", s.oscillation_amplitude},
      {"start_jitter", s.start_jitter},     {"camera_offset", s.camera_offset},
      {"camera_zoom", s.camera_zoom},       {"camera_roll", s.camera_roll},
      {"texture_contrast", s.texture_contrast}, {"shape_intensity", s.shape_intensity},
      {"background_level", s.background_level}, {"noise_sigma", s.noise_sigma},
      {"supersample", s.supersample}};
  j["downsample"] = {{"width", c.downsample.target_width}, {"height", c.downsample.target_height}};
  std::vector<double> rot_deg;
  for (double r : c.pool.rotations) rot_deg.push_back(detail::to_deg(r));
  j["pool"] = {{"shifts_x", c.pool.shifts_x},          {"shifts_y", c.pool.shifts_y},
               {"scales", c.pool.scales},              {"rotations_deg", rot_deg},
               {"scale_min", c.pool.scale_min},        {"scale_max", c.pool.scale_max},
               {"rotation_max_deg", detail::to_deg(c.pool.rotation_max)}};
  const auto& f = c.features;
  j["features"] = {{"hog_bins", f.hog.bins},
                   {"cell_size", f.hog.cell_size},
                   {"flow_iterations", f.flow.iterations},
                   {"flow_alpha", f.flow.alpha},
                   {"hof_bins", f.hof.bins},
                   {"no_motion_threshold", f.hof.no_motion_threshold},
                   {"pyramid_level", f.pot.level},
                   {"gradient_threshold", f.pot.gradient_threshold}};
  j["classifier"]["kernel"] = to_string(c.kernel.type);
  if (c.kernel.type == KernelType::chi2) {
    if (c.auto_gamma) j["classifier"]["gamma"] = "auto";
    else j["classifier"]["gamma"] = c.kernel.gamma;
  }
  j["classifier"]["c"] = c.c_param;
  j["method"] = to_string(c.method);
  j["n"] = c.n;
  j["split"] = {{"protocol", "half-half"}, {"validation_fraction", c.split.validation_fraction}};
  j["seeds"] = c.seeds;
  j["method1"] = {{"iterations", c.method1.iterations},
                  {"reference_cap", c.method1.reference_cap},
                  {"distance", to_string(c.method1.distance)}};
  if (c.method1.sigma > 0.0) j["method1"]["sigma"] = c.method1.sigma;
  else j["method1"]["sigma"] = "auto";
  j["method2"] = {{"score_on", c.method2.score_on_validation ? "validation" : "train"}};
  return j;
}

/// Parses an experiment config. Every section is optional; unknown keys at
/// any level are rejected.
inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  using detail::check_keys;
  using detail::read;
  ExperimentConfig c;
  check_keys(j, {"schema_version", "dataset", "downsample", "pool", "features", "classifier", "method", "n",
                 "split", "seeds", "method1", "method2"},
             "config");
  int version = kSchemaVersion;
  read(j, "schema_version", version, "config");
  if (version != kSchemaVersion) throw ConfigError("config: unsupported schema_version " + std::to_string(version));

  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    check_keys(d, {"source", "manifest", "synthetic"}, "dataset");
    std::string source = "synthetic";
    read(d, "source", source, "dataset");
    if (source == "synthetic") c.source = DatasetSource::synthetic;
    else if (source == "manifest") c.source = DatasetSource::manifest;
    else throw ConfigError("dataset.source: expected 'synthetic' or 'manifest'");
    read(d, "manifest", c.manifest, "dataset");
    if (c.source == DatasetSource::manifest && c.manifest.empty())
      throw ConfigError("dataset.manifest required for manifest source");
    if (d.contains("synthetic")) {
      const auto& s = d.at("synthetic");
      const std::string w = "dataset.synthetic";
      check_keys(s, {"class_count", "videos_per_class", "width", "height", "frames", "seed", "shape_size_min",
                     "shape_size_max", "bar_aspect", "speed_min", "speed_max", "zoom_rate_min", "zoom_rate_max",
                     "oscillation_amplitude", "start_jitter", "camera_offset", "camera_zoom", "camera_roll",
                     "texture_contrast", "shape_intensity", "background_level", "noise_sigma", "supersample"},
                 w);
      auto& y = c.synth;
      read(s, "class_count", y.class_count, w);
      read(s, "videos_per_class", y.videos_per_class, w);
      read(s, "width", y.width, w);
      read(s, "height", y.height, w);
      read(s, "frames", y.frames, w);
      read(s, "seed", y.seed, w);
      read(s, "shape_size_min", y.shape_size_min, w);
      read(s, "shape_size_max", y.shape_size_max, w);
      read(s, "bar_aspect", y.bar_aspect, w);
      read(s, "speed_min", y.speed_min, w);
      read(s, "speed_max", y.speed_max, w);
      read(s, "zoom_rate_min", y.zoom_rate_min, w);
      read(s, "zoom_rate_max", y.zoom_rate_max, w);
      read(s, "oscillation_amplitude", y.oscillation_amplitude, w);
      read(s, "start_jitter", y.start_jitter, w);
      read(s, "camera_offset", y.camera_offset, w);
      read(s, "camera_zoom", y.camera_zoom, w);
      read(s, "camera_roll", y.camera_roll, w);
      read(s, "texture_contrast", y.texture_contrast, w);
      read(s, "shape_intensity", y.shape_intensity, w);
      read(s, "background_level", y.background_level, w);
      read(s, "noise_sigma", y.noise_sigma, w);
      read(s, "supersample", y.supersample, w);
    }
  }
  if (j.contains("downsample")) {
    const auto& d = j.at("downsample");
    check_keys(d, {"width", "height"}, "downsample");
    read(d, "width", c.downsample.target_width, "downsample");
    read(d, "height", c.downsample.target_height, "downsample");
  }
  if (j.contains("pool")) {
    const auto& p = j.at("pool");
    check_keys(p, {"shifts_x", "shifts_y", "scales", "rotations_deg", "scale_min", "scale_max", "rotation_max_deg"},
               "pool");
    read(p, "shifts_x", c.pool.shifts_x, "pool");
    read(p, "shifts_y", c.pool.shifts_y, "pool");
    read(p, "scales", c.pool.scales, "pool");
    read(p, "scale_min", c.pool.scale_min, "pool");
    read(p, "scale_max", c.pool.scale_max, "pool");
    if (p.contains("rotations_deg")) {
      std::vector<double> deg;
      read(p, "rotations_deg", deg, "pool");
      c.pool.rotations.clear();
      for (double d : deg) c.pool.rotations.push_back(degrees(d));
    }
    if (p.contains("rotation_max_deg")) {
      double deg = 0.0;
      read(p, "rotation_max_deg", deg, "pool");
      c.pool.rotation_max = degrees(deg);
    }
  }
  if (j.contains("features")) {
    const auto& f = j.at("features");
    check_keys(f, {"hog_bins", "cell_size", "flow_iterations", "flow_alpha", "hof_bins", "no_motion_threshold",
                   "pyramid_level", "gradient_threshold"},
               "features");
    read(f, "hog_bins", c.features.hog.bins, "features");
    read(f, "cell_size", c.features.hog.cell_size, "features");
    read(f, "flow_iterations", c.features.flow.iterations, "features");
    read(f, "flow_alpha", c.features.flow.alpha, "features");
    read(f, "hof_bins", c.features.hof.bins, "features");
    read(f, "no_motion_threshold", c.features.hof.no_motion_threshold, "features");
    read(f, "pyramid_level", c.features.pot.level, "features");
    read(f, "gradient_threshold", c.features.pot.gradient_threshold, "features");
    if (c.features.pot.level < 1 || c.features.pot.level > 4) throw ConfigError("features.pyramid_level must be 1..4");
  }
  if (j.contains("classifier")) {
    const auto& k = j.at("classifier");
    check_keys(k, {"kernel", "gamma", "c"}, "classifier");
    std::string kernel = to_string(c.kernel.type);
    read(k, "kernel", kernel, "classifier");
    try {
      c.kernel.type = kernel_type_from_string(kernel);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("classifier.kernel: ") + e.what());
    }
    if (k.contains("gamma")) {
      const auto& g = k.at("gamma");
      if (g.is_string() && g.get<std::string>() == "auto") {
        c.auto_gamma = true;
      } else if (g.is_number() && g.get<double>() > 0.0 && std::isfinite(g.get<double>())) {
        c.auto_gamma = false;
        c.kernel.gamma = g.get<double>();
      } else {
        throw ConfigError("classifier.gamma: expected \"auto\" or a positive number");
      }
    }
    read(k, "c", c.c_param, "classifier");
    if (!(c.c_param > 0.0)) throw ConfigError("classifier.c must be positive");
  }
  if (j.contains("method")) {
    std::string m;
    read(j, "method", m, "config");
    try {
      c.method = method_from_string(m);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("method: ") + e.what());
    }
  }
  read(j, "n", c.n, "config");
  if (j.contains("split")) {
    const auto& s = j.at("split");
    check_keys(s, {"protocol", "validation_fraction"}, "split");
    std::string protocol = "half-half";
    read(s, "protocol", protocol, "split");
    if (protocol != "half-half") throw ConfigError("split.protocol: only 'half-half' is supported");
    read(s, "validation_fraction", c.split.validation_fraction, "split");
    if (!(c.split.validation_fraction > 0.0 && c.split.validation_fraction < 1.0))
      throw ConfigError("split.validation_fraction must be in (0,1)");
  }
  read(j, "seeds", c.seeds, "config");
  if (c.seeds.empty()) throw ConfigError("seeds: need at least one seed");
  if (j.contains("method1")) {
    const auto& m = j.at("method1");
    check_keys(m, {"iterations", "sigma", "reference_cap", "distance"}, "method1");
    read(m, "iterations", c.method1.iterations, "method1");
    if (m.contains("sigma")) {
      const auto& s = m.at("sigma");
      if (s.is_string() && s.get<std::string>() == "auto") c.method1.sigma = 0.0;
      else if (s.is_number() && s.get<double>() > 0.0) c.method1.sigma = s.get<double>();
      else throw ConfigError("method1.sigma: expected \"auto\" or a positive number");
    }
    read(m, "reference_cap", c.method1.reference_cap, "method1");
    if (m.contains("distance")) {
      std::string d;
      read(m, "distance", d, "method1");
      try {
        c.method1.distance = distance_mode_from_string(d);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("method1.distance: ") + e.what());
      }
    }
    if (c.method1.iterations < 1) throw ConfigError("method1.iterations must be >= 1");
  }
  if (j.contains("method2")) {
    const auto& m = j.at("method2");
    check_keys(m, {"score_on"}, "method2");
    std::string on = "train";
    read(m, "score_on", on, "method2");
    if (on == "train") c.method2.score_on_validation = false;
    else if (on == "validation") c.method2.score_on_validation = true;
    else throw ConfigError("method2.score_on: expected 'train' or 'validation'");
  }
  return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return experiment_config_from_json(j);
}

}  // namespace isr
