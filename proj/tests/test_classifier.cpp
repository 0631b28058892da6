#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "isr/classifier.hpp"
#include "oracles.hpp"

using namespace isr;

namespace {

FeatureVector fv(std::vector<double> a) { return FeatureVector{{{"x", std::move(a)}}}; }

FeatureVector fv2(std::vector<double> a, std::vector<double> b) {
  return FeatureVector{{{"a", std::move(a)}, {"b", std::move(b)}}};
}

FeatureVector random_hist(std::mt19937_64& rng, std::size_t dim) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> a(dim), b(dim);
  for (auto& v : a) v = u(rng) < 0.2 ? 0.0 : u(rng);
  for (auto& v : b) v = u(rng);
  return fv2(a, b);
}

std::vector<Sample> clusters(std::size_t classes, std::size_t per_class, double spread, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, spread);
  std::vector<Sample> out;
  for (std::size_t c = 0; c < classes; ++c) {
    const double angle = 2.0 * 3.141592653589793 * static_cast<double>(c) / static_cast<double>(classes);
    for (std::size_t i = 0; i < per_class; ++i)
      out.push_back({fv({10.0 + 3.0 * std::cos(angle) + noise(rng), 10.0 + 3.0 * std::sin(angle) + noise(rng)}), c});
  }
  return out;
}

void check_dual(const SvmModel& m) {
  for (const auto& b : m.binary) {
    double s = 0.0;
    for (double c : b.coef) {
      s += c;
      CHECK(std::abs(c) <= m.c_param * (1.0 + 1e-12));
      CHECK(c != 0.0);
    }
    CHECK(std::abs(s) <= 1e-6);
  }
}

double training_accuracy(const SvmModel& m, const std::vector<Sample>& s) {
  std::size_t ok = 0;
  for (const auto& x : s) ok += svm_predict(m, x.features).label == x.label;
  return static_cast<double>(ok) / static_cast<double>(s.size());
}

}  // namespace

TEST_CASE("kernel spot values") {
  const auto x = fv({0.2, 0.3, 0.5});
  CHECK(kernel_eval(Kernel::chi2(3.7), x, x) == 1.0);
  CHECK(kernel_eval(Kernel::histogram_intersection(), fv({1, 0}), fv({0, 1})) == 0.0);
  CHECK(kernel_eval(Kernel::histogram_intersection(), x, x) == Catch::Approx(1.0).margin(1e-15));
  CHECK(kernel_eval(Kernel::linear(), fv({1, 2}), fv({3, 4})) == 11.0);
  // chi2 by hand: (0.5-0.25)^2 / (0.75 + 1e-10), about 1/12
  const double d = 0.0625 / (0.75 + 1e-10);
  CHECK(kernel_eval(Kernel::chi2(2.0), fv({0.5}), fv({0.25})) == Catch::Approx(std::exp(-2.0 * d)).epsilon(1e-14));
}

TEST_CASE("multi-channel kernel is the channel mean") {
  const auto x = fv2({1, 2}, {0.5}), z = fv2({3, 1}, {2.0});
  CHECK(kernel_eval(Kernel::linear(), x, z) == Catch::Approx((5.0 + 1.0) / 2.0));
  CHECK_THROWS_AS(kernel_eval(Kernel::linear(), x, fv({1, 2})), std::invalid_argument);
}

TEST_CASE("kernel type names round-trip") {
  for (auto k : {KernelType::linear, KernelType::chi2, KernelType::histogram_intersection})
    CHECK(kernel_type_from_string(to_string(k)) == k);
  CHECK_THROWS(kernel_type_from_string("rbf"));
  CHECK_THROWS(Kernel::chi2(0.0));
  CHECK_THROWS(Kernel::chi2(std::nan("")));
}

TEST_CASE("kernels are symmetric and their Gram matrices PSD") {
  std::mt19937_64 rng(21);
  for (const Kernel& k : {Kernel::chi2(1.5), Kernel::histogram_intersection(), Kernel::linear()}) {
    for (int batch = 0; batch < 10; ++batch) {
      std::vector<FeatureVector> xs;
      for (int i = 0; i < 20; ++i) xs.push_back(random_hist(rng, 12));
      std::vector<std::vector<double>> g(20, std::vector<double>(20));
      for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t j = 0; j < 20; ++j) {
          g[i][j] = kernel_eval(k, xs[i], xs[j]);
          if (k.type == KernelType::chi2) CHECK(std::abs(g[i][j] - kernel_eval(k, xs[j], xs[i])) <= 1e-12);
          else CHECK(g[i][j] == kernel_eval(k, xs[j], xs[i]));
        }
      CHECK(oracle::min_eigenvalue(g) >= -1e-8);
    }
  }
}

TEST_CASE("gamma heuristic is the inverse mean distance and seeded") {
  std::vector<Sample> s{{fv({0.5}), 0}, {fv({0.25}), 1}};
  // only one distinct pair, distance about 1/12
  CHECK(chi2_gamma_heuristic(s, 1) == Catch::Approx((0.75 + 1e-10) / 0.0625).epsilon(1e-14));
  std::mt19937_64 rng(2);
  std::vector<Sample> many;
  for (int i = 0; i < 30; ++i) many.push_back({random_hist(rng, 6), 0});
  CHECK(chi2_gamma_heuristic(many, 5) == chi2_gamma_heuristic(many, 5));
  CHECK(std::isfinite(chi2_gamma_heuristic(many, 5)));
}

TEST_CASE("separable clusters train to full accuracy") {
  const auto s = clusters(2, 15, 0.3, 1);
  const auto m = svm_train(s, Kernel::linear(), 10.0);
  CHECK(training_accuracy(m, s) == 1.0);
  for (const auto& x : s) {
    const auto d = svm_decision_values(m, x.features);
    CHECK(d[x.label] > 0.0);
  }
  check_dual(m);
}

TEST_CASE("three classes give three binary models") {
  const auto s = clusters(3, 10, 0.4, 2);
  const auto m = svm_train(s, Kernel::chi2(1.0), 10.0);
  CHECK(m.binary.size() == 3);
  CHECK(m.class_count == 3);
  check_dual(m);
}

TEST_CASE("contradictory labels still train") {
  std::vector<Sample> s{{fv({0.0, 1.0}), 0}, {fv({0.0, 1.0}), 1}, {fv({1.0, 0.0}), 0}, {fv({0.5, 0.5}), 1}};
  const auto m = svm_train(s, Kernel::linear(), 1.0);
  CHECK(training_accuracy(m, s) < 1.0);
  check_dual(m);
}

TEST_CASE("svm_train preconditions") {
  CHECK_THROWS_AS(svm_train({}, Kernel::linear(), 1.0), std::invalid_argument);
  std::vector<Sample> one{{fv({0.0}), 0}, {fv({1.0}), 0}};
  CHECK_THROWS_AS(svm_train(one, Kernel::linear(), 1.0), std::invalid_argument);
  std::vector<Sample> mixed{{fv({0.0}), 0}, {fv2({1.0}, {1.0}), 1}};
  CHECK_THROWS_AS(svm_train(mixed, Kernel::linear(), 1.0), std::invalid_argument);
}

TEST_CASE("missing classes get a constant negative machine") {
  std::vector<Sample> s{{fv({0.0}), 0}, {fv({1.0}), 2}};
  SvmOptions o;
  o.class_count = 4;
  const auto m = svm_train(s, Kernel::linear(), 1.0, o);
  REQUIRE(m.binary.size() == 4);
  CHECK(m.binary[1].sv_index.empty());
  CHECK(m.binary[3].bias == -1.0);
  CHECK(svm_predict(m, fv({1.0})).label == 2);
}

TEST_CASE("symmetric problem ties at the midpoint and picks class 0") {
  std::vector<Sample> s{{fv({-1.0, 0.0}), 0}, {fv({-1.0, 1.0}), 0}, {fv({1.0, 0.0}), 1}, {fv({1.0, 1.0}), 1}};
  const auto m = svm_train(s, Kernel::linear(), 10.0);
  const auto p = svm_predict(m, fv({0.0, 0.5}));
  CHECK(std::abs(p.decision_values[0] - p.decision_values[1]) < 1e-6);
  CHECK(svm_predict(m, fv({-1.0, 0.0})).decision_values[0] > 0.0);
  const std::vector<double> tie{0.3, 0.3, 0.1};
  CHECK(argmax(tie) == 0);
  const std::vector<double> late{0.1, 0.3, 0.3};
  CHECK(argmax(late) == 1);
}

TEST_CASE("prediction is deterministic and training is reproducible") {
  const auto s = clusters(3, 8, 0.8, 3);
  const auto a = svm_train(s, Kernel::histogram_intersection(), 5.0);
  const auto b = svm_train(s, Kernel::histogram_intersection(), 5.0);
  for (const auto& x : s) {
    CHECK(svm_decision_values(a, x.features) == svm_decision_values(b, x.features));
    CHECK(svm_decision_values(a, x.features) == svm_decision_values(a, x.features));
  }
}

TEST_CASE("probabilities") {
  SvmModel m;
  m.temperature = 0.7;
  const std::vector<double> eq{0.4, 0.4, 0.4, 0.4};
  for (double p : probabilities_from_decisions(m, eq)) CHECK(p == Catch::Approx(0.25).margin(1e-15));
  const std::vector<double> big{1e6, 0.0, -1.0};
  const auto pb = probabilities_from_decisions(m, big);
  CHECK(pb[0] == 1.0);
  const std::vector<double> z{0.3, -1.2, 0.9};
  const auto pz = probabilities_from_decisions(m, z);
  const auto ref = oracle::plain_softmax(z, 0.7);
  for (std::size_t i = 0; i < 3; ++i) CHECK(pz[i] == Catch::Approx(ref[i]).margin(1e-15));

  const auto s = clusters(4, 8, 1.2, 4);
  const auto model = svm_train(s, Kernel::chi2(0.5), 10.0);
  CHECK(model.temperature > 0.0);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> u(0.0, 3.0);
  for (int i = 0; i < 50; ++i) {
    const auto x = fv({10.0 + u(rng), 10.0 + u(rng)});
    const auto p = svm_probabilities(model, x);
    double sum = 0.0;
    for (double v : p) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
    CHECK(argmax(p) == svm_predict(model, x).label);
  }
}

TEST_CASE("temperature fit lands strictly inside the search interval") {
  const auto s = clusters(3, 10, 0.3, 6);
  const auto m = svm_train(s, Kernel::linear(), 10.0);
  CHECK(m.temperature > 1.01e-3);
  CHECK(m.temperature < 0.99e3);
}

TEST_CASE("larger C never violates box constraints on noisy data") {
  for (double c : {0.1, 1.0, 100.0}) {
    const auto s = clusters(3, 12, 2.0, 7);
    check_dual(svm_train(s, Kernel::chi2(0.8), c));
    check_dual(svm_train(s, Kernel::histogram_intersection(), c));
  }
}
