#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "isr/features.hpp"
#include "isr/video.hpp"

namespace isr {

enum class KernelType { linear, chi2, histogram_intersection };

inline std::string to_string(KernelType k) {
  switch (k) {
    case KernelType::linear: return "linear";
    case KernelType::chi2: return "chi2";
    case KernelType::histogram_intersection: return "histogram_intersection";
  }
  return "unknown";
}

inline KernelType kernel_type_from_string(const std::string& s) {
  if (s == "linear") return KernelType::linear;
  if (s == "chi2") return KernelType::chi2;
  if (s == "histogram_intersection" || s == "hik") return KernelType::histogram_intersection;
  throw std::invalid_argument("unknown kernel '" + s + "'");
}

/// Kernel choice. Multi-channel inputs combine as the unweighted mean of the
/// per-channel kernel values. gamma is only read by chi2.
struct Kernel {
  KernelType type = KernelType::chi2;
  double gamma = 1.0;

  static Kernel linear() { return {KernelType::linear, 1.0}; }
  static Kernel chi2(double gamma) {
    if (!std::isfinite(gamma) || gamma <= 0.0) throw std::invalid_argument("chi2 gamma must be finite and positive");
    return {KernelType::chi2, gamma};
  }
  static Kernel histogram_intersection() { return {KernelType::histogram_intersection, 1.0}; }

  friend bool operator==(const Kernel&, const Kernel&) = default;
};

inline constexpr double kChi2Epsilon = 1e-10;

namespace detail {

inline double chi2_distance(std::span<const double> x, std::span<const double> z) {
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = x[i] - z[i];
    d += diff * diff / (x[i] + z[i] + kChi2Epsilon);
  }
  return d;
}

inline double channel_kernel(const Kernel& k, std::span<const double> x, std::span<const double> z) {
  switch (k.type) {
    case KernelType::linear: {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * z[i];
      return s;
    }
    case KernelType::chi2: return std::exp(-k.gamma * chi2_distance(x, z));
    case KernelType::histogram_intersection: {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += std::min(x[i], z[i]);
      return s;
    }
  }
  return 0.0;
}

}  // namespace detail

inline double kernel_eval(const Kernel& k, const FeatureVector& x, const FeatureVector& z) {
  if (!x.same_structure(z)) throw std::invalid_argument("kernel_eval: feature channel structure mismatch");
  if (x.channels.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t c = 0; c < x.channels.size(); ++c)
    acc += detail::channel_kernel(k, x.channels[c].values, z.channels[c].values);
  return acc / static_cast<double>(x.channels.size());
}

/// Channel-averaged chi-square distance.
inline double chi2_distance(const FeatureVector& x, const FeatureVector& z) {
  if (!x.same_structure(z)) throw std::invalid_argument("chi2_distance: feature channel structure mismatch");
  if (x.channels.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t c = 0; c < x.channels.size(); ++c)
    acc += detail::chi2_distance(x.channels[c].values, z.channels[c].values);
  return acc / static_cast<double>(x.channels.size());
}

struct Sample {
  FeatureVector features;
  Label label = 0;
};

/// gamma = 1 / mean chi-square distance over `pairs` seeded random pairs.
inline double chi2_gamma_heuristic(std::span<const Sample> samples, std::uint64_t seed,
                                   std::size_t pairs = 200) {
  if (samples.size() < 2) return 1.0;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t p = 0; p < pairs; ++p) {
    const std::size_t i = pick(rng);
    std::size_t j = pick(rng);
    if (i == j) j = (j + 1) % samples.size();
    total += chi2_distance(samples[i].features, samples[j].features);
    ++used;
  }
  const double mean = total / static_cast<double>(used);
  return mean > 0.0 && std::isfinite(mean) ? 1.0 / mean : 1.0;
}

/// One-vs-rest binary machine: f(x) = sum_j coef_j K(x, sv_j) + bias, with
/// coef_j = alpha_j * y_j and sv_j indexing the model's shared support vectors.
struct BinaryModel {
  std::vector<std::size_t> sv_index;
  std::vector<double> coef;
  double bias = 0.0;
  std::size_t iterations = 0;

  friend bool operator==(const BinaryModel&, const BinaryModel&) = default;
};

struct SvmModel {
  Kernel kernel;
  double c_param = 10.0;
  double temperature = 1.0;
  std::size_t class_count = 0;
  std::vector<FeatureVector> support_vectors;
  std::vector<BinaryModel> binary;

  friend bool operator==(const SvmModel&, const SvmModel&) = default;
};

struct SvmOptions {
  double tolerance = 1e-3;
  std::size_t max_iterations = 10'000'000;
  /// 0 infers max label + 1.
  std::size_t class_count = 0;
};

namespace detail {

/// Dense symmetric kernel matrix over a sample list.
class Gram {
 public:
  Gram(const Kernel& k, std::span<const Sample> samples) : n_(samples.size()), k_(n_ * n_) {
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = i; j < n_; ++j) {
        const double v = kernel_eval(k, samples[i].features, samples[j].features);
        k_[i * n_ + j] = v;
        k_[j * n_ + i] = v;
      }
    }
  }
  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return k_[i * n_ + j]; }
  const double* row(std::size_t i) const noexcept { return k_.data() + i * n_; }

 private:
  std::size_t n_;
  std::vector<double> k_;
};

struct DualSolution {
  std::vector<double> alpha;
  double bias = 0.0;
  std::size_t iterations = 0;
};

/// C-SVC dual by SMO with maximal-violating-pair working set selection
/// (ties resolved toward the lower index).
inline DualSolution solve_dual(const Gram& gram, const std::vector<int>& y, double c,
                               double tol, std::size_t max_iter) {
  const std::size_t n = gram.size();
  constexpr double tau = 1e-12;
  DualSolution sol;
  sol.alpha.assign(n, 0.0);
  std::vector<double>& a = sol.alpha;
  std::vector<double> g(n, -1.0);

  auto is_up = [&](std::size_t t) { return (y[t] == 1 && a[t] < c) || (y[t] == -1 && a[t] > 0.0); };
  auto is_low = [&](std::size_t t) { return (y[t] == 1 && a[t] > 0.0) || (y[t] == -1 && a[t] < c); };

  std::size_t iter = 0;
  for (; iter < max_iter; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * g[t];
      if (is_up(t) && v > gmax) { gmax = v; i = t; }
      if (is_low(t) && v < gmin) { gmin = v; j = t; }
    }
    if (i == n || j == n || gmax - gmin < tol) break;

    const double* ki = gram.row(i);
    const double* kj = gram.row(j);
    const double old_ai = a[i];
    const double old_aj = a[j];
    const double qij = y[i] * y[j] * ki[j];
    if (y[i] != y[j]) {
      double quad = ki[i] + kj[j] + 2.0 * qij;
      if (quad <= 0.0) quad = tau;
      const double delta = (-g[i] - g[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0.0) {
        if (a[j] < 0.0) { a[j] = 0.0; a[i] = diff; }
      } else if (a[i] < 0.0) {
        a[i] = 0.0; a[j] = -diff;
      }
      if (diff > 0.0) {
        if (a[i] > c) { a[i] = c; a[j] = c - diff; }
      } else if (a[j] > c) {
        a[j] = c; a[i] = c + diff;
      }
    } else {
      double quad = ki[i] + kj[j] - 2.0 * qij;
      if (quad <= 0.0) quad = tau;
      const double delta = (g[i] - g[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > c) {
        if (a[i] > c) { a[i] = c; a[j] = sum - c; }
      } else if (a[j] < 0.0) {
        a[j] = 0.0; a[i] = sum;
      }
      if (sum > c) {
        if (a[j] > c) { a[j] = c; a[i] = sum - c; }
      } else if (a[i] < 0.0) {
        a[i] = 0.0; a[j] = sum;
      }
    }
    const double dai = a[i] - old_ai;
    const double daj = a[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t)
      g[t] += y[t] * (y[i] * ki[t] * dai + y[j] * kj[t] * daj);
  }
  sol.iterations = iter;

  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * g[t];
    if (a[t] >= c) {
      if (y[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (a[t] <= 0.0) {
      if (y[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
  sol.bias = -rho;
  return sol;
}

inline std::vector<double> softmax(std::span<const double> z, double temperature) {
  std::vector<double> p(z.size());
  if (z.empty()) return p;
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : z) mx = std::max(mx, v / temperature);
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] / temperature - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

/// Temperature minimizing the cross-entropy between the softmax of training
/// decision values and Platt-smoothed targets: the true class gets
/// (n_c + 1) / (n_c + 2), the rest share the remainder. Golden-section search
/// over log T in [log 1e-3, log 1e3].
inline double fit_temperature(const std::vector<std::vector<double>>& decisions,
                              const std::vector<Label>& labels, std::size_t classes) {
  std::vector<double> counts(classes, 0.0);
  for (Label l : labels) counts[l] += 1.0;
  auto nll = [&](double log_t) {
    const double t = std::exp(log_t);
    double total = 0.0;
    for (std::size_t i = 0; i < decisions.size(); ++i) {
      const auto& z = decisions[i];
      double mx = -std::numeric_limits<double>::infinity();
      for (double v : z) mx = std::max(mx, v / t);
      double lse = 0.0;
      for (double v : z) lse += std::exp(v / t - mx);
      lse = mx + std::log(lse);
      const double on = (counts[labels[i]] + 1.0) / (counts[labels[i]] + 2.0);
      const double off = classes > 1 ? (1.0 - on) / static_cast<double>(classes - 1) : 0.0;
      for (std::size_t c = 0; c < classes; ++c)
        total -= (c == labels[i] ? on : off) * (z[c] / t - lse);
    }
    return total;
  };
  constexpr double phi = 0.6180339887498949;
  double lo = std::log(1e-3), hi = std::log(1e3);
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = nll(x1), f2 = nll(x2);
  while (hi - lo > 1e-6) {
    if (f1 <= f2) {
      hi = x2; x2 = x1; f2 = f1;
      x1 = hi - phi * (hi - lo); f1 = nll(x1);
    } else {
      lo = x1; x1 = x2; f1 = f2;
      x2 = lo + phi * (hi - lo); f2 = nll(x2);
    }
  }
  return std::exp(0.5 * (lo + hi));
}

}  // namespace detail

/// One-vs-rest kernel SVM trained by SMO, followed by temperature calibration.
inline SvmModel svm_train(std::span<const Sample> samples, const Kernel& kernel, double c_param,
                          const SvmOptions& opts = {}) {
  if (samples.empty()) throw std::invalid_argument("svm_train: no samples");
  if (!(c_param > 0.0)) throw std::invalid_argument("svm_train: C must be positive");
  std::size_t classes = opts.class_count;
  Label max_label = 0;
  for (const auto& s : samples) {
    max_label = std::max(max_label, s.label);
    if (!s.features.same_structure(samples.front().features))
      throw std::invalid_argument("svm_train: inconsistent feature structure");
  }
  if (classes == 0) classes = max_label + 1;
  if (max_label >= classes) throw std::invalid_argument("svm_train: label exceeds class count");
  std::vector<bool> present(classes, false);
  for (const auto& s : samples) present[s.label] = true;
  if (std::count(present.begin(), present.end(), true) < 2)
    throw std::invalid_argument("svm_train: need at least two classes");

  const detail::Gram gram(kernel, samples);
  const std::size_t n = samples.size();

  SvmModel model;
  model.kernel = kernel;
  model.c_param = c_param;
  model.class_count = classes;
  std::vector<std::size_t> sv_slot(n, SIZE_MAX);
  std::vector<std::vector<double>> train_dec(n, std::vector<double>(classes, 0.0));

  for (std::size_t cls = 0; cls < classes; ++cls) {
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = samples[i].label == cls ? 1 : -1;
    BinaryModel bm;
    if (!present[cls]) {
      bm.bias = -1.0;
    } else {
      auto sol = detail::solve_dual(gram, y, c_param, opts.tolerance, opts.max_iterations);
      bm.bias = sol.bias;
      bm.iterations = sol.iterations;
      for (std::size_t i = 0; i < n; ++i) {
        if (sol.alpha[i] <= 0.0) continue;
        if (sv_slot[i] == SIZE_MAX) {
          sv_slot[i] = model.support_vectors.size();
          model.support_vectors.push_back(samples[i].features);
        }
        bm.sv_index.push_back(sv_slot[i]);
        bm.coef.push_back(sol.alpha[i] * y[i]);
        const double* ki = gram.row(i);
        for (std::size_t t = 0; t < n; ++t) train_dec[t][cls] += sol.alpha[i] * y[i] * ki[t];
      }
    }
    for (std::size_t t = 0; t < n; ++t) train_dec[t][cls] += bm.bias;
    model.binary.push_back(std::move(bm));
  }

  std::vector<Label> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = samples[i].label;
  model.temperature = detail::fit_temperature(train_dec, labels, classes);
  return model;
}

inline std::vector<double> svm_decision_values(const SvmModel& m, const FeatureVector& x) {
  if (!m.support_vectors.empty() && !x.same_structure(m.support_vectors.front()))
    throw std::invalid_argument("svm_predict: feature structure does not match the model");
  std::vector<double> kx(m.support_vectors.size());
  for (std::size_t s = 0; s < kx.size(); ++s) kx[s] = kernel_eval(m.kernel, x, m.support_vectors[s]);
  std::vector<double> out(m.class_count, 0.0);
  for (std::size_t c = 0; c < m.binary.size(); ++c) {
    const auto& bm = m.binary[c];
    double v = bm.bias;
    for (std::size_t j = 0; j < bm.sv_index.size(); ++j) v += bm.coef[j] * kx[bm.sv_index[j]];
    out[c] = v;
  }
  return out;
}

/// Index of the largest value; ties go to the lowest index.
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

struct Prediction {
  Label label = 0;
  std::vector<double> decision_values;
};

inline Prediction svm_predict(const SvmModel& m, const FeatureVector& x) {
  Prediction p;
  p.decision_values = svm_decision_values(m, x);
  p.label = argmax(p.decision_values);
  return p;
}

/// Temperature-scaled softmax over the one-vs-rest decision values.
inline std::vector<double> probabilities_from_decisions(const SvmModel& m, std::span<const double> decisions) {
  return detail::softmax(decisions, m.temperature);
}

inline std::vector<double> svm_probabilities(const SvmModel& m, const FeatureVector& x) {
  const auto d = svm_decision_values(m, x);
  return probabilities_from_decisions(m, d);
}

}  // namespace isr
