#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "isr/classifier.hpp"
#include "isr/features.hpp"
#include "isr/transform.hpp"
#include "isr/video.hpp"

namespace isr {

/// Everything needed to turn a video into a classifier input and to train.
/// With auto_gamma set, the chi2 gamma is derived from the training samples.
struct PipelineConfig {
  DownsampleSpec downsample;
  FeatureConfig features;
  Kernel kernel;
  bool auto_gamma = true;
  double c_param = 10.0;
};

inline constexpr std::uint64_t kGammaSeed = 0x5eed;

/// Memoizes LR features per (source video, transform). Entries are never
/// invalidated, so the cache must not outlive a change of pipeline settings.
class FeatureCache {
 public:
  FeatureCache(DownsampleSpec downsample, FeatureConfig features)
      : downsample_(downsample), features_(std::move(features)) {}

  const FeatureVector& get(const LabeledVideo& v, const MotionTransform& t) {
    auto key = std::make_pair(v.source_id, t);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    ++misses_;
    auto fv = extract_features(isr_generate(v.video, t, downsample_), features_);
    return cache_.emplace(std::move(key), std::move(fv)).first->second;
  }

  const FeatureVector& resized(const LabeledVideo& v) { return get(v, MotionTransform::identity()); }

  std::size_t size() const noexcept { return cache_.size(); }
  std::size_t misses() const noexcept { return misses_; }
  const DownsampleSpec& downsample() const noexcept { return downsample_; }
  const FeatureConfig& features() const noexcept { return features_; }

 private:
  DownsampleSpec downsample_;
  FeatureConfig features_;
  std::map<std::pair<std::string, MotionTransform>, FeatureVector> cache_;
  std::size_t misses_ = 0;
};

/// Inputs of T(S). hr_videos is a non-owning view.
struct TrainingSetSpec {
  std::span<const LabeledVideo> hr_videos;
  TransformSet transform_set;
  DownsampleSpec downsample;
  FeatureConfig features;
  Kernel kernel;
  double c_param = 10.0;
  std::size_t class_count = 0;
  std::size_t max_transforms = 4096;
};

/// Identity sample x_i0 plus one sample per transform, all labeled y_i.
inline std::vector<Sample> build_training_set(const TrainingSetSpec& spec, FeatureCache& cache) {
  if (spec.transform_set.size() > spec.max_transforms)
    throw std::invalid_argument("training set: too many transforms");
  if (!(cache.downsample() == spec.downsample) || !(cache.features() == spec.features))
    throw std::invalid_argument("training set: feature cache was built for different settings");
  std::vector<Sample> out;
  out.reserve(spec.hr_videos.size() * (spec.transform_set.size() + 1));
  for (const auto& v : spec.hr_videos) {
    out.push_back({cache.resized(v), v.label});
    for (const auto& t : spec.transform_set) out.push_back({cache.get(v, t), v.label});
  }
  return out;
}

inline std::vector<Sample> build_training_set(const TrainingSetSpec& spec) {
  FeatureCache cache(spec.downsample, spec.features);
  return build_training_set(spec, cache);
}

inline SvmModel train_with_transforms(const TrainingSetSpec& spec, FeatureCache& cache) {
  const auto samples = build_training_set(spec, cache);
  SvmOptions opts;
  opts.class_count = spec.class_count;
  return svm_train(samples, spec.kernel, spec.c_param, opts);
}

inline SvmModel train_with_transforms(const TrainingSetSpec& spec) {
  FeatureCache cache(spec.downsample, spec.features);
  return train_with_transforms(spec, cache);
}

/// Kernel with gamma fixed from the resize-only samples of `videos` when the
/// pipeline asks for it.
inline Kernel resolve_kernel(const PipelineConfig& cfg, std::span<const LabeledVideo> videos,
                             FeatureCache& cache) {
  if (cfg.kernel.type != KernelType::chi2 || !cfg.auto_gamma) return cfg.kernel;
  std::vector<Sample> base;
  base.reserve(videos.size());
  for (const auto& v : videos) base.push_back({cache.resized(v), v.label});
  return Kernel::chi2(chi2_gamma_heuristic(base, kGammaSeed));
}

inline std::size_t class_count_of(std::span<const LabeledVideo> videos) {
  Label mx = 0;
  for (const auto& v : videos) mx = std::max(mx, v.label);
  return videos.empty() ? 0 : mx + 1;
}

inline TrainingSetSpec make_spec(std::span<const LabeledVideo> videos, TransformSet set,
                                 const PipelineConfig& cfg, const Kernel& kernel,
                                 std::size_t class_count) {
  TrainingSetSpec s;
  s.hr_videos = videos;
  s.transform_set = std::move(set);
  s.downsample = cfg.downsample;
  s.features = cfg.features;
  s.kernel = kernel;
  s.c_param = cfg.c_param;
  s.class_count = class_count;
  return s;
}

// ---------------------------------------------------------------------------
// Method 1: decision boundary matching

enum class DistanceMode { disagreement, decision_l1 };

inline std::string to_string(DistanceMode m) {
  return m == DistanceMode::disagreement ? "disagreement" : "decision_l1";
}

inline DistanceMode distance_mode_from_string(const std::string& s) {
  if (s == "disagreement") return DistanceMode::disagreement;
  if (s == "decision_l1") return DistanceMode::decision_l1;
  throw std::invalid_argument("unknown distance mode '" + s + "'");
}

/// Mean disagreement of two models over A. In decision_l1 mode, the mean L1
/// difference of decision vectors instead.
inline double boundary_distance(const SvmModel& reference, const SvmModel& candidate,
                                std::span<const FeatureVector> a_set,
                                DistanceMode mode = DistanceMode::disagreement) {
  if (a_set.empty()) throw std::invalid_argument("boundary_distance: empty validation set");
  double total = 0.0;
  for (const auto& x : a_set) {
    const auto r = svm_predict(reference, x);
    const auto c = svm_predict(candidate, x);
    if (mode == DistanceMode::disagreement) {
      total += r.label != c.label ? 1.0 : 0.0;
    } else {
      for (std::size_t k = 0; k < r.decision_values.size(); ++k)
        total += std::abs(r.decision_values[k] - c.decision_values[k]);
    }
  }
  return total / static_cast<double>(a_set.size());
}

inline double boundary_distance(const SvmModel& reference, const SvmModel& candidate,
                                std::span<const Video> a_set, const PipelineConfig& cfg,
                                DistanceMode mode = DistanceMode::disagreement) {
  std::vector<FeatureVector> feats;
  feats.reserve(a_set.size());
  for (const auto& v : a_set) feats.push_back(extract_features(hr_resize_baseline(v, cfg.downsample), cfg.features));
  return boundary_distance(reference, candidate, feats, mode);
}

struct McmcConfig {
  TransformPool pool;
  std::size_t n_target = 8;
  std::size_t iterations = 300;
  /// <= 0 selects max(1, n_target / 4).
  double sigma = 0.0;
  std::uint64_t seed = 1;
  std::span<const LabeledVideo> validation;
  std::size_t reference_cap = 64;
  DistanceMode distance = DistanceMode::disagreement;

  double effective_sigma() const {
    return sigma > 0.0 ? sigma : std::max(1.0, static_cast<double>(n_target) / 4.0);
  }
};

struct TraceRecord {
  std::size_t iteration = 0;
  bool add = true;
  std::size_t transform_index = 0;
  double log_pi_current = 0.0;
  double log_pi_proposed = 0.0;
  double log_acceptance = 0.0;
  double acceptance = 0.0;  // a, unclipped
  double uniform = 0.0;
  bool accepted = false;
  std::size_t set_size = 0;  // |S^{t+1}|
};

struct SearchTrace {
  std::size_t reference_cap = 0;
  std::size_t reference_samples = 0;
  std::vector<TraceRecord> records;
};

/// The Method 1 objective: log pi(S) = -|A| * boundary_distance(f_ref, f_S, A),
/// with f_ref trained on the pool (capped per video). Memoized per subset.
class BoundaryObjective {
 public:
  BoundaryObjective(std::span<const LabeledVideo> train, std::span<const LabeledVideo> validation,
                    const TransformPool& pool, const PipelineConfig& cfg, FeatureCache& cache,
                    std::size_t reference_cap, std::uint64_t seed,
                    DistanceMode mode = DistanceMode::disagreement)
      : train_(train), pool_(pool), cfg_(cfg), cache_(cache), mode_(mode) {
    if (pool.candidates.empty()) throw std::invalid_argument("method1: empty transform pool");
    if (validation.empty()) throw std::invalid_argument("method1: empty validation set");
    classes_ = std::max(class_count_of(train), class_count_of(validation));
    kernel_ = resolve_kernel(cfg, train, cache);
    for (const auto& v : validation) a_features_.push_back(cache.resized(v));

    std::mt19937_64 rng(seed ^ 0x7265666572656e63ULL);
    std::vector<Sample> ref_samples;
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    reference_cap_ = std::min(reference_cap, pool.size());
    for (const auto& v : train) {
      ref_samples.push_back({cache.resized(v), v.label});
      std::vector<std::size_t> chosen = order;
      if (chosen.size() > reference_cap_) {
        std::shuffle(chosen.begin(), chosen.end(), rng);
        chosen.resize(reference_cap_);
        std::sort(chosen.begin(), chosen.end());
      }
      for (std::size_t k : chosen) ref_samples.push_back({cache.get(v, pool[k]), v.label});
    }
    reference_samples_ = ref_samples.size();
    SvmOptions opts;
    opts.class_count = classes_;
    reference_ = svm_train(ref_samples, kernel_, cfg.c_param, opts);
  }

  double log_pi(std::vector<std::size_t> subset) {
    std::sort(subset.begin(), subset.end());
    auto it = memo_.find(subset);
    if (it != memo_.end()) return it->second;
    const SvmModel m = train_subset(subset);
    const double d = boundary_distance(reference_, m, a_features_, mode_);
    const double lp = -d * static_cast<double>(a_features_.size());
    memo_.emplace(std::move(subset), lp);
    return lp;
  }

  SvmModel train_subset(const std::vector<std::size_t>& subset) const {
    std::vector<MotionTransform> ts;
    for (std::size_t k : subset) ts.push_back(pool_[k]);
    return train_with_transforms(make_spec(train_, TransformSet(std::move(ts)), cfg_, kernel_, classes_), cache_);
  }

  const SvmModel& reference() const noexcept { return reference_; }
  const Kernel& kernel() const noexcept { return kernel_; }
  std::size_t reference_cap() const noexcept { return reference_cap_; }
  std::size_t reference_samples() const noexcept { return reference_samples_; }
  std::size_t evaluations() const noexcept { return memo_.size(); }

 private:
  std::span<const LabeledVideo> train_;
  const TransformPool& pool_;
  PipelineConfig cfg_;
  FeatureCache& cache_;
  DistanceMode mode_;
  std::size_t classes_ = 0;
  Kernel kernel_;
  std::vector<FeatureVector> a_features_;
  SvmModel reference_;
  std::size_t reference_cap_ = 0;
  std::size_t reference_samples_ = 0;
  std::map<std::vector<std::size_t>, double> memo_;
};

/// log of the unnormalized N(k; n, sigma^2).
inline double log_size_density(std::size_t k, std::size_t n, double sigma) {
  const double d = static_cast<double>(k) - static_cast<double>(n);
  return -d * d / (2.0 * sigma * sigma);
}

/// Metropolis-Hastings log acceptance ratio for one add/remove move. Target
/// is pi(S) * N(|S|; n, sigma^2); the discrete move probabilities enter as
/// the usual Hastings correction.
inline double log_acceptance_ratio(double log_pi_current, double log_pi_proposed,
                                   std::size_t size_current, bool add, std::size_t pool_size,
                                   std::size_t n_target, double sigma) {
  auto move_prob = [pool_size](std::size_t size, bool is_add) {
    double p_type = 0.5;
    if (size == 0) p_type = is_add ? 1.0 : 0.0;
    if (size == pool_size) p_type = is_add ? 0.0 : 1.0;
    const double choices = is_add ? static_cast<double>(pool_size - size) : static_cast<double>(size);
    return p_type / choices;
  };
  const std::size_t size_proposed = add ? size_current + 1 : size_current - 1;
  const double forward = move_prob(size_current, add);
  const double backward = move_prob(size_proposed, !add);
  return (log_pi_proposed - log_pi_current) +
         (log_size_density(size_proposed, n_target, sigma) - log_size_density(size_current, n_target, sigma)) +
         (std::log(backward) - std::log(forward));
}

struct McmcResult {
  TransformSet set;
  std::vector<std::size_t> indices;
  double best_log_pi = 0.0;
  SearchTrace trace;
};

/// Runs the chain against an already-built objective.
inline McmcResult run_mcmc_chain(BoundaryObjective& objective, const McmcConfig& cfg) {
  const std::size_t pool_size = cfg.pool.size();
  if (pool_size == 0) throw std::invalid_argument("method1: empty transform pool");
  if (cfg.n_target > pool_size) throw std::invalid_argument("method1: n_target exceeds pool size");
  if (cfg.iterations < 1) throw std::invalid_argument("method1: need at least one iteration");
  const double sigma = cfg.effective_sigma();

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::size_t> state;
  std::vector<bool> member(pool_size, false);
  double current = objective.log_pi(state);

  McmcResult result;
  result.trace.reference_cap = objective.reference_cap();
  result.trace.reference_samples = objective.reference_samples();
  result.indices = state;
  result.best_log_pi = current;

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    bool add = true;
    if (state.size() == pool_size) add = false;
    else if (!state.empty()) add = unit(rng) < 0.5;

    std::size_t pick = 0;
    std::vector<std::size_t> proposal = state;
    if (add) {
      std::vector<std::size_t> outside;
      for (std::size_t k = 0; k < pool_size; ++k)
        if (!member[k]) outside.push_back(k);
      pick = outside[std::uniform_int_distribution<std::size_t>(0, outside.size() - 1)(rng)];
      proposal.insert(std::lower_bound(proposal.begin(), proposal.end(), pick), pick);
    } else {
      const std::size_t pos = std::uniform_int_distribution<std::size_t>(0, state.size() - 1)(rng);
      pick = state[pos];
      proposal.erase(proposal.begin() + static_cast<std::ptrdiff_t>(pos));
    }

    const double proposed = objective.log_pi(proposal);
    TraceRecord rec;
    rec.iteration = it;
    rec.add = add;
    rec.transform_index = pick;
    rec.log_pi_current = current;
    rec.log_pi_proposed = proposed;
    rec.log_acceptance = log_acceptance_ratio(current, proposed, state.size(), add, pool_size, cfg.n_target, sigma);
    rec.acceptance = std::exp(std::min(rec.log_acceptance, 700.0));
    rec.uniform = unit(rng);
    rec.accepted = rec.uniform <= rec.acceptance;
    if (rec.accepted) {
      state = std::move(proposal);
      member[pick] = add;
      current = proposed;
      // Ties on pi prefer the larger set, then the earlier visit.
      if (state.size() <= cfg.n_target &&
          (current > result.best_log_pi ||
           (current == result.best_log_pi && state.size() > result.indices.size()))) {
        result.best_log_pi = current;
        result.indices = state;
      }
    }
    rec.set_size = state.size();
    result.trace.records.push_back(rec);
  }

  std::vector<MotionTransform> ts;
  for (std::size_t k : result.indices) ts.push_back(cfg.pool[k]);
  result.set = TransformSet(std::move(ts));
  return result;
}

/// Method 1: MCMC search for the subset whose classifier best matches the
/// pool-trained reference on the validation set.
inline McmcResult mcmc_search_method1(const McmcConfig& cfg, std::span<const LabeledVideo> hr_train,
                                      const PipelineConfig& pipeline, FeatureCache& cache) {
  if (class_count_of(hr_train) < 2) throw std::invalid_argument("method1: need at least two classes");
  BoundaryObjective objective(hr_train, cfg.validation, cfg.pool, pipeline, cache, cfg.reference_cap,
                              cfg.seed, cfg.distance);
  return run_mcmc_chain(objective, cfg);
}

// ---------------------------------------------------------------------------
// Method 2: maximum entropy

/// Shannon entropy in nats, with 0 log 0 = 0.
inline double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

inline double entropy_of_sample(const SvmModel& m, const FeatureVector& x) {
  const auto p = svm_probabilities(m, x);
  return entropy(p);
}

struct GreedyRound {
  std::size_t selected = 0;
  /// Summed entropy per pool index; NaN for transforms already in the set.
  std::vector<double> scores;
};

struct GreedyResult {
  TransformSet set;
  std::vector<std::size_t> indices;
  std::vector<GreedyRound> rounds;
};

/// Method 2: grow S one transform at a time, adding the candidate whose
/// generated samples the current classifier is least sure about. Scoring uses
/// `scoring_videos` when nonempty, otherwise the training videos. Their labels
/// are never read.
inline GreedyResult greedy_search_method2(const TransformPool& pool, std::size_t n,
                                          std::span<const LabeledVideo> hr_videos,
                                          const PipelineConfig& pipeline, FeatureCache& cache,
                                          std::span<const LabeledVideo> scoring_videos = {}) {
  if (n > pool.size()) throw std::invalid_argument("method2: n exceeds pool size");
  if (class_count_of(hr_videos) < 2) throw std::invalid_argument("method2: need at least two classes");
  const auto score_on = scoring_videos.empty() ? hr_videos : scoring_videos;
  const std::size_t classes = class_count_of(hr_videos);
  const Kernel kernel = resolve_kernel(pipeline, hr_videos, cache);

  GreedyResult result;
  std::vector<bool> member(pool.size(), false);
  std::vector<MotionTransform> chosen;
  for (std::size_t t = 0; t < n; ++t) {
    const SvmModel model =
        train_with_transforms(make_spec(hr_videos, TransformSet(chosen), pipeline, kernel, classes), cache);
    GreedyRound round;
    round.scores.assign(pool.size(), std::numeric_limits<double>::quiet_NaN());
    std::size_t best = pool.size();
    for (std::size_t k = 0; k < pool.size(); ++k) {
      if (member[k]) continue;
      double s = 0.0;
      for (const auto& v : score_on) s += entropy_of_sample(model, cache.get(v, pool[k]));
      round.scores[k] = s;
      if (best == pool.size() || s > round.scores[best]) best = k;
    }
    round.selected = best;
    member[best] = true;
    chosen.push_back(pool[best]);
    result.indices.push_back(best);
    result.rounds.push_back(std::move(round));
  }
  result.set = TransformSet(std::move(chosen));
  return result;
}

// ---------------------------------------------------------------------------
// Baselines

struct Selection {
  TransformSet set;
  std::vector<std::size_t> indices;
};

/// Random data augmentation: n distinct pool members drawn uniformly without
/// replacement; rotated candidates are skipped unless include_rotation.
inline Selection random_augmentation_baseline(const TransformPool& pool, std::size_t n,
                                              bool include_rotation, std::uint64_t seed) {
  std::vector<std::size_t> eligible;
  for (std::size_t k = 0; k < pool.size(); ++k)
    if (include_rotation || pool[k].rotation == 0.0) eligible.push_back(k);
  if (n > eligible.size())
    throw std::invalid_argument("random augmentation: only " + std::to_string(eligible.size()) +
                                " eligible candidates for n=" + std::to_string(n));
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(i, eligible.size() - 1)(rng);
    std::swap(eligible[i], eligible[j]);
  }
  eligible.resize(n);
  std::sort(eligible.begin(), eligible.end());
  Selection sel;
  sel.indices = eligible;
  std::vector<MotionTransform> ts;
  for (std::size_t k : eligible) ts.push_back(pool[k]);
  sel.set = TransformSet(std::move(ts));
  return sel;
}

/// Evenly spaced pool indices floor(i * |pool| / n).
inline Selection uniform_selection_baseline(const TransformPool& pool, std::size_t n) {
  if (n > pool.size()) throw std::invalid_argument("uniform selection: n exceeds pool size");
  Selection sel;
  std::vector<MotionTransform> ts;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i * pool.size() / n;
    sel.indices.push_back(k);
    ts.push_back(pool[k]);
  }
  sel.set = TransformSet(std::move(ts));
  return sel;
}

}  // namespace isr
