#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "isr/classifier.hpp"
#include "isr/config.hpp"
#include "isr/experiment.hpp"
#include "isr/io.hpp"
#include "isr/learn.hpp"
#include "isr/transform.hpp"

// On-disk artifacts. Every file carries "schema_version" and "kind". Doubles
// are written in shortest round-trip form, so a load after a save restores
// every value bit for bit.

namespace isr {

class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void expect_kind(const nlohmann::json& j, const char* kind) {
  if (!j.is_object() || j.value("kind", std::string{}) != kind)
    throw ArtifactError(std::string("expected a '") + kind + "' artifact");
  if (j.value("schema_version", 0) != kSchemaVersion)
    throw ArtifactError(std::string(kind) + ": unsupported schema_version");
}

inline nlohmann::json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ArtifactError("cannot open " + p.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError(p.string() + ": " + e.what());
  }
  return j;
}

inline void write_json_file(const std::filesystem::path& p, const nlohmann::json& j) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw ArtifactError("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

}  // namespace detail

// --- transform sets ---------------------------------------------------------

inline nlohmann::json transform_to_json(const MotionTransform& t) {
  return {{"dx", t.dx}, {"dy", t.dy}, {"scale", t.scale}, {"rotation", t.rotation}};
}

inline MotionTransform transform_from_json(const nlohmann::json& j) {
  return {j.at("dx").get<double>(), j.at("dy").get<double>(), j.at("scale").get<double>(),
          j.at("rotation").get<double>()};
}

inline nlohmann::json to_json(const TransformSet& s, const std::vector<std::size_t>& pool_indices = {}) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "transform_set";
  j["transforms"] = nlohmann::json::array();
  for (const auto& t : s) j["transforms"].push_back(transform_to_json(t));
  if (!pool_indices.empty()) j["pool_indices"] = pool_indices;
  return j;
}

inline TransformSet transform_set_from_json(const nlohmann::json& j) {
  detail::expect_kind(j, "transform_set");
  std::vector<MotionTransform> ts;
  for (const auto& t : j.at("transforms")) ts.push_back(transform_from_json(t));
  return TransformSet(std::move(ts));
}

// --- models -----------------------------------------------------------------

inline nlohmann::json to_json(const FeatureVector& f) {
  auto j = nlohmann::json::array();
  for (const auto& c : f.channels) j.push_back({{"name", c.name}, {"values", c.values}});
  return j;
}

inline FeatureVector feature_vector_from_json(const nlohmann::json& j) {
  FeatureVector f;
  for (const auto& c : j) f.channels.push_back({c.at("name").get<std::string>(), c.at("values").get<std::vector<double>>()});
  return f;
}

inline nlohmann::json to_json(const SvmModel& m) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "svm_model";
  j["kernel"] = {{"type", to_string(m.kernel.type)}, {"gamma", m.kernel.gamma}};
  j["c_param"] = m.c_param;
  j["temperature"] = m.temperature;
  j["class_count"] = m.class_count;
  j["support_vectors"] = nlohmann::json::array();
  for (const auto& sv : m.support_vectors) j["support_vectors"].push_back(to_json(sv));
  j["binary"] = nlohmann::json::array();
  for (const auto& b : m.binary)
    j["binary"].push_back({{"sv_index", b.sv_index}, {"coef", b.coef}, {"bias", b.bias}, {"iterations", b.iterations}});
  return j;
}

inline SvmModel svm_model_from_json(const nlohmann::json& j) {
  detail::expect_kind(j, "svm_model");
  SvmModel m;
  m.kernel.type = kernel_type_from_string(j.at("kernel").at("type").get<std::string>());
  m.kernel.gamma = j.at("kernel").at("gamma").get<double>();
  m.c_param = j.at("c_param").get<double>();
  m.temperature = j.at("temperature").get<double>();
  m.class_count = j.at("class_count").get<std::size_t>();
  for (const auto& sv : j.at("support_vectors")) m.support_vectors.push_back(feature_vector_from_json(sv));
  for (const auto& b : j.at("binary")) {
    BinaryModel bm;
    bm.sv_index = b.at("sv_index").get<std::vector<std::size_t>>();
    bm.coef = b.at("coef").get<std::vector<double>>();
    bm.bias = b.at("bias").get<double>();
    bm.iterations = b.value("iterations", std::size_t{0});
    if (bm.sv_index.size() != bm.coef.size()) throw ArtifactError("svm_model: sv_index/coef length mismatch");
    for (auto i : bm.sv_index)
      if (i >= m.support_vectors.size()) throw ArtifactError("svm_model: support vector index out of range");
    m.binary.push_back(std::move(bm));
  }
  if (m.binary.size() != m.class_count) throw ArtifactError("svm_model: binary model count != class_count");
  return m;
}

inline void save_model(const std::filesystem::path& p, const SvmModel& m) { detail::write_json_file(p, to_json(m)); }
inline SvmModel load_model(const std::filesystem::path& p) { return svm_model_from_json(detail::read_json_file(p)); }

inline void save_transform_set(const std::filesystem::path& p, const TransformSet& s,
                               const std::vector<std::size_t>& pool_indices = {}) {
  detail::write_json_file(p, to_json(s, pool_indices));
}
inline TransformSet load_transform_set(const std::filesystem::path& p) {
  return transform_set_from_json(detail::read_json_file(p));
}

// --- traces -----------------------------------------------------------------

inline nlohmann::json to_json(const TraceRecord& r) {
  return {{"iteration", r.iteration},
          {"action", r.add ? "add" : "remove"},
          {"transform", r.transform_index},
          {"log_pi_current", r.log_pi_current},
          {"log_pi_proposed", r.log_pi_proposed},
          {"log_acceptance", r.log_acceptance},
          {"acceptance", r.acceptance},
          {"uniform", r.uniform},
          {"accepted", r.accepted},
          {"set_size", r.set_size}};
}

/// Line-delimited: a header object, then one object per iteration.
inline void write_trace(std::ostream& out, const SearchTrace& t) {
  out << nlohmann::json{{"schema_version", kSchemaVersion},
                        {"kind", "search_trace"},
                        {"reference_cap", t.reference_cap},
                        {"reference_samples", t.reference_samples},
                        {"iterations", t.records.size()}}
             .dump()
      << '\n';
  for (const auto& r : t.records) out << to_json(r).dump() << '\n';
}

inline SearchTrace read_trace(std::istream& in) {
  SearchTrace t;
  std::string line;
  if (!std::getline(in, line)) throw ArtifactError("search_trace: empty");
  const auto header = nlohmann::json::parse(line);
  detail::expect_kind(header, "search_trace");
  t.reference_cap = header.at("reference_cap").get<std::size_t>();
  t.reference_samples = header.at("reference_samples").get<std::size_t>();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    TraceRecord r;
    r.iteration = j.at("iteration").get<std::size_t>();
    r.add = j.at("action").get<std::string>() == "add";
    r.transform_index = j.at("transform").get<std::size_t>();
    r.log_pi_current = j.at("log_pi_current").get<double>();
    r.log_pi_proposed = j.at("log_pi_proposed").get<double>();
    r.log_acceptance = j.at("log_acceptance").get<double>();
    r.acceptance = j.at("acceptance").get<double>();
    r.uniform = j.at("uniform").get<double>();
    r.accepted = j.at("accepted").get<bool>();
    r.set_size = j.at("set_size").get<std::size_t>();
    t.records.push_back(r);
  }
  return t;
}

// --- reports ----------------------------------------------------------------

/// Keys whose values legitimately differ between identical reruns.
inline const std::vector<std::string>& volatile_report_keys() {
  static const std::vector<std::string> keys{"wall_seconds", "timestamp"};
  return keys;
}

/// `trace_files` maps seed position to a trace file name, when traces were written.
inline nlohmann::json to_json(const EvalReport& r, const ExperimentConfig& cfg,
                              const std::vector<std::string>& trace_files = {}) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "eval_report";
  j["method"] = to_string(r.method);
  j["n"] = r.n;
  j["class_names"] = r.class_names;
  j["mean_accuracy"] = r.mean_accuracy;
  j["std_accuracy"] = r.std_accuracy;
  j["confusion"] = r.confusion;
  j["test_warps"] = r.test_warps;
  j["seeds"] = nlohmann::json::array();
  for (std::size_t i = 0; i < r.seeds.size(); ++i) {
    const auto& s = r.seeds[i];
    nlohmann::json sj{{"seed", s.seed},
                      {"accuracy", s.accuracy},
                      {"confusion", s.confusion},
                      {"transform_indices", s.transform_indices},
                      {"transforms", to_json(s.transforms).at("transforms")},
                      {"train_videos", s.train_videos},
                      {"validation_videos", s.validation_videos},
                      {"test_videos", s.test_videos},
                      {"training_samples", s.training_samples},
                      {"gamma", s.gamma},
                      {"wall_seconds", s.wall_seconds}};
    if (i < trace_files.size() && !trace_files[i].empty()) sj["trace"] = trace_files[i];
    if (s.greedy_rounds) {
      auto rounds = nlohmann::json::array();
      for (const auto& g : *s.greedy_rounds) {
        nlohmann::json scores = nlohmann::json::array();
        for (double v : g.scores) scores.push_back(std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v));
        rounds.push_back({{"selected", g.selected}, {"scores", scores}});
      }
      sj["greedy_rounds"] = rounds;
    }
    j["seeds"].push_back(std::move(sj));
  }
  j["config"] = to_json(cfg);
  j["wall_seconds"] = r.wall_seconds;
  j["timestamp"] = static_cast<long long>(std::time(nullptr));
  return j;
}

/// Copy of a report with run-dependent timing fields removed at every depth.
inline nlohmann::json strip_volatile(nlohmann::json j) {
  if (j.is_object()) {
    for (const auto& k : volatile_report_keys()) j.erase(k);
    for (auto& [_, v] : j.items()) v = strip_volatile(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = strip_volatile(v);
  }
  return j;
}

}  // namespace isr
