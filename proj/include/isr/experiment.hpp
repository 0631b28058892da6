#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "isr/classifier.hpp"
#include "isr/learn.hpp"
#include "isr/synth.hpp"
#include "isr/transform.hpp"
#include "isr/video.hpp"

namespace isr {

/// Error raised by run_experiment, prefixed with the failing stage.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

enum class Method { baseline, da, da_rotation, uniform, isr_method1, isr_method2 };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::baseline: return "baseline";
    case Method::da: return "DA";
    case Method::da_rotation: return "DA+rotation";
    case Method::uniform: return "uniform";
    case Method::isr_method1: return "isr-method1";
    case Method::isr_method2: return "isr-method2";
  }
  return "unknown";
}

inline Method method_from_string(const std::string& s) {
  for (Method m : {Method::baseline, Method::da, Method::da_rotation, Method::uniform,
                   Method::isr_method1, Method::isr_method2})
    if (to_string(m) == s) return m;
  throw std::invalid_argument("unknown method '" + s + "'");
}

// ---------------------------------------------------------------------------
// Splits

struct SplitProtocol {
  bool carve_validation = false;
  double validation_fraction = 0.25;

  friend bool operator==(const SplitProtocol&, const SplitProtocol&) = default;
};

struct Split {
  std::vector<LabeledVideo> train;
  std::vector<LabeledVideo> validation;
  std::vector<LabeledVideo> test;
};

/// Stratified half-half split. Odd class sizes give the extra video to
/// train. When requested, validation is round(fraction * train) videos of
/// each class's train share (at least one, never all).
inline Split split_dataset(const Dataset& d, const SplitProtocol& protocol, std::uint64_t seed) {
  std::map<Label, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < d.items.size(); ++i) by_class[d.items[i].label].push_back(i);
  std::mt19937_64 rng(seed);
  Split s;
  for (auto& [label, idx] : by_class) {
    if (idx.size() < 3)
      throw std::invalid_argument("split: class " + std::to_string(label) + " has fewer than 3 videos");
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t n_train = (idx.size() + 1) / 2;
    std::size_t n_val = 0;
    if (protocol.carve_validation) {
      n_val = static_cast<std::size_t>(std::floor(protocol.validation_fraction * static_cast<double>(n_train) + 0.5));
      n_val = std::clamp<std::size_t>(n_val, 1, n_train - 1);
    }
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto& item = d.items[idx[k]];
      if (k < n_val) s.validation.push_back(item);
      else if (k < n_train) s.train.push_back(item);
      else s.test.push_back(item);
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalFragment {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

/// Accuracy on resize-only features of the test videos. Runs under the test
/// role so the warp audit can confirm no motion transform touched them.
inline EvalFragment evaluate(const SvmModel& m, std::span<const LabeledVideo> test, FeatureCache& cache) {
  if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
  RoleScope role(DataRole::test);
  EvalFragment r;
  r.confusion.assign(m.class_count, std::vector<std::size_t>(m.class_count, 0));
  for (const auto& v : test) {
    if (v.label >= m.class_count) throw std::invalid_argument("evaluate: test label outside model classes");
    const auto p = svm_predict(m, cache.resized(v));
    ++r.confusion[v.label][p.label];
    if (p.label == v.label) ++r.correct;
    ++r.total;
  }
  r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.total);
  return r;
}

inline EvalFragment evaluate(const SvmModel& m, std::span<const LabeledVideo> test, const PipelineConfig& cfg) {
  FeatureCache cache(cfg.downsample, cfg.features);
  return evaluate(m, test, cache);
}

// ---------------------------------------------------------------------------
// Experiments

enum class DatasetSource { synthetic, manifest };

struct Method1Params {
  std::size_t iterations = 300;
  double sigma = 0.0;  // <= 0: max(1, n/4)
  std::size_t reference_cap = 64;
  DistanceMode distance = DistanceMode::disagreement;
};

struct Method2Params {
  /// Score candidates on the carved validation videos (labels unused)
  /// instead of the training videos.
  bool score_on_validation = false;
};

struct ExperimentConfig {
  DatasetSource source = DatasetSource::synthetic;
  SynthConfig synth;
  std::string manifest;
  DownsampleSpec downsample;
  PoolGrid pool;
  FeatureConfig features;
  Kernel kernel;
  bool auto_gamma = true;
  double c_param = 10.0;
  Method method = Method::baseline;
  std::size_t n = 8;
  SplitProtocol split;  // carve_validation is forced on for method 1
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  Method1Params method1;
  Method2Params method2;

  PipelineConfig pipeline() const {
    PipelineConfig p;
    p.downsample = downsample;
    p.features = features;
    p.kernel = kernel;
    p.auto_gamma = auto_gamma;
    p.c_param = c_param;
    return p;
  }
};

struct SeedResult {
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  std::vector<std::vector<std::size_t>> confusion;
  std::vector<std::size_t> transform_indices;
  TransformSet transforms;
  std::size_t train_videos = 0;
  std::size_t validation_videos = 0;
  std::size_t test_videos = 0;
  std::size_t training_samples = 0;
  double gamma = 0.0;
  std::optional<SearchTrace> trace;
  std::optional<std::vector<GreedyRound>> greedy_rounds;
  double wall_seconds = 0.0;
};

struct EvalReport {
  Method method = Method::baseline;
  std::size_t n = 0;
  std::vector<SeedResult> seeds;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // sample standard deviation, 0 for one seed
  std::vector<std::vector<std::size_t>> confusion;  // summed over seeds
  std::vector<std::string> class_names;
  double wall_seconds = 0.0;
  std::size_t test_warps = 0;  // non-identity warps observed under the test role
};

inline double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Dataset loader hook so the harness does not depend on file I/O.
using DatasetLoader = std::function<Dataset(const std::string&)>;

/// The learned transform set for one seed and method.
struct MethodOutcome {
  TransformSet set;
  std::vector<std::size_t> indices;
  std::optional<SearchTrace> trace;
  std::optional<std::vector<GreedyRound>> greedy_rounds;
};

inline MethodOutcome select_transforms(const ExperimentConfig& cfg, const TransformPool& pool,
                                       const Split& split, FeatureCache& cache, std::uint64_t seed) {
  const auto pipeline = cfg.pipeline();
  MethodOutcome out;
  switch (cfg.method) {
    case Method::baseline:
      break;
    case Method::da:
    case Method::da_rotation: {
      auto sel = random_augmentation_baseline(pool, cfg.n, cfg.method == Method::da_rotation, derive_seed(seed, 1));
      out.set = sel.set;
      out.indices = sel.indices;
      break;
    }
    case Method::uniform: {
      auto sel = uniform_selection_baseline(pool, cfg.n);
      out.set = sel.set;
      out.indices = sel.indices;
      break;
    }
    case Method::isr_method1: {
      McmcConfig mc;
      mc.pool = pool;
      mc.n_target = cfg.n;
      mc.iterations = cfg.method1.iterations;
      mc.sigma = cfg.method1.sigma;
      mc.seed = derive_seed(seed, 2);
      mc.validation = split.validation;
      mc.reference_cap = cfg.method1.reference_cap;
      mc.distance = cfg.method1.distance;
      RoleScope role(DataRole::train);
      auto res = mcmc_search_method1(mc, split.train, pipeline, cache);
      out.set = res.set;
      out.indices = res.indices;
      out.trace = std::move(res.trace);
      break;
    }
    case Method::isr_method2: {
      RoleScope role(DataRole::train);
      std::vector<LabeledVideo> train = split.train;
      train.insert(train.end(), split.validation.begin(), split.validation.end());
      std::span<const LabeledVideo> scoring;
      if (cfg.method2.score_on_validation) scoring = split.validation;
      auto res = greedy_search_method2(pool, cfg.n, train, pipeline, cache, scoring);
      out.set = res.set;
      out.indices = res.indices;
      out.greedy_rounds = std::move(res.rounds);
      break;
    }
  }
  return out;
}

/// Split, learn transforms, train on T(S), evaluate, for every seed.
inline EvalReport run_experiment(const ExperimentConfig& cfg, const DatasetLoader& loader = {},
                                 FeatureCache* shared_cache = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  Dataset data;
  try {
    if (cfg.source == DatasetSource::synthetic) {
      data = generate_synthetic_dataset(cfg.synth);
    } else {
      if (!loader) throw std::invalid_argument("no dataset loader for manifest source");
      data = loader(cfg.manifest);
    }
    const auto problems = validate_dataset(data);
    if (!problems.empty()) throw std::invalid_argument("invalid dataset: " + problems.front());
  } catch (const std::exception& e) {
    throw StageError("dataset", e.what());
  }

  TransformPool pool;
  try {
    pool = build_pool(cfg.pool);
    if (cfg.n > pool.size()) throw std::invalid_argument("n exceeds pool size");
  } catch (const std::exception& e) {
    throw StageError("pool", e.what());
  }

  const auto pipeline = cfg.pipeline();
  std::optional<FeatureCache> own_cache;
  if (!shared_cache) own_cache.emplace(cfg.downsample, cfg.features);
  FeatureCache& cache = shared_cache ? *shared_cache : *own_cache;

  WarpAudit::instance().reset();
  EvalReport report;
  report.method = cfg.method;
  report.n = cfg.method == Method::baseline ? 0 : cfg.n;
  report.class_names = data.class_names;
  report.confusion.assign(data.class_count(), std::vector<std::size_t>(data.class_count(), 0));
  std::vector<double> accs;

  for (std::uint64_t seed : cfg.seeds) {
    const auto s0 = std::chrono::steady_clock::now();
    const std::string tag = "seed " + std::to_string(seed) + " ";
    SeedResult r;
    r.seed = seed;

    Split split;
    try {
      SplitProtocol protocol = cfg.split;
      protocol.carve_validation = cfg.split.carve_validation || cfg.method == Method::isr_method1 ||
                                  (cfg.method == Method::isr_method2 && cfg.method2.score_on_validation);
      split = split_dataset(data, protocol, derive_seed(seed, 0));
    } catch (const std::exception& e) {
      throw StageError(tag + "split", e.what());
    }
    std::vector<LabeledVideo> full_train = split.train;
    full_train.insert(full_train.end(), split.validation.begin(), split.validation.end());

    MethodOutcome outcome;
    try {
      outcome = select_transforms(cfg, pool, split, cache, seed);
    } catch (const std::exception& e) {
      throw StageError(tag + "learn-transforms", e.what());
    }

    SvmModel model;
    try {
      RoleScope role(DataRole::train);
      const Kernel kernel = resolve_kernel(pipeline, full_train, cache);
      r.gamma = kernel.type == KernelType::chi2 ? kernel.gamma : 0.0;
      auto spec = make_spec(full_train, outcome.set, pipeline, kernel, data.class_count());
      r.training_samples = full_train.size() * (outcome.set.size() + 1);
      model = train_with_transforms(spec, cache);
    } catch (const std::exception& e) {
      throw StageError(tag + "train", e.what());
    }

    EvalFragment ev;
    try {
      ev = evaluate(model, split.test, cache);
    } catch (const std::exception& e) {
      throw StageError(tag + "eval", e.what());
    }

    r.accuracy = ev.accuracy;
    r.confusion = ev.confusion;
    r.transform_indices = outcome.indices;
    r.transforms = outcome.set;
    r.train_videos = split.train.size();
    r.validation_videos = split.validation.size();
    r.test_videos = split.test.size();
    r.trace = std::move(outcome.trace);
    r.greedy_rounds = std::move(outcome.greedy_rounds);
    for (std::size_t a = 0; a < ev.confusion.size(); ++a)
      for (std::size_t b = 0; b < ev.confusion.size(); ++b) report.confusion[a][b] += ev.confusion[a][b];
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - s0).count();
    accs.push_back(r.accuracy);
    report.seeds.push_back(std::move(r));
  }

  report.mean_accuracy = mean_of(accs);
  report.std_accuracy = sample_std(accs);
  report.test_warps = WarpAudit::instance().count(DataRole::test);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace isr
