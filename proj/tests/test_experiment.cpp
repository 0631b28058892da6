#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <sstream>

#include "isr/isr.hpp"

using namespace isr;

namespace {

Dataset dataset(std::size_t classes, std::size_t per_class, std::size_t frames = 6) {
  SynthConfig c;
  c.class_count = classes;
  c.videos_per_class = per_class;
  c.frames = frames;
  return generate_synthetic_dataset(c);
}

ExperimentConfig small_config(Method m) {
  ExperimentConfig cfg;
  cfg.synth.class_count = 3;
  cfg.synth.videos_per_class = 6;
  cfg.synth.frames = 6;
  cfg.pool.shifts_x = {-0.5, 0.0, 0.5};
  cfg.pool.shifts_y = {0.0, 0.5};
  cfg.pool.scales = {1.0};
  cfg.pool.rotations = {0.0};
  cfg.method = m;
  cfg.n = 2;
  cfg.seeds = {1, 2};
  cfg.method1.iterations = 20;
  return cfg;
}

std::set<std::string> ids(const std::vector<LabeledVideo>& v) {
  std::set<std::string> out;
  for (const auto& x : v) out.insert(x.source_id);
  return out;
}

double bright_centroid_x(const Frame& f) {
  double sx = 0.0, n = 0.0;
  for (std::size_t y = 0; y < f.height(); ++y)
    for (std::size_t x = 0; x < f.width(); ++x)
      if (f.at(x, y) > 0.65) sx += static_cast<double>(x), n += 1.0;
  return sx / n;
}

}  // namespace

TEST_CASE("synthetic dataset counts, ids and determinism") {
  SynthConfig c;
  c.frames = 4;
  const auto a = generate_synthetic_dataset(c);
  CHECK(a.items.size() == 100);
  CHECK(a.class_names.size() == 5);
  CHECK(validate_dataset(a).empty());
  CHECK(a.items[21].source_id == "synth_1_001");
  CHECK(generate_synthetic_dataset(c) == a);
  c.seed = 8;
  CHECK_FALSE(generate_synthetic_dataset(c) == a);
  CHECK(a.items[0].video.width() == 64);
  CHECK(a.items[0].video.height() == 48);
}

TEST_CASE("translate-right moves the bright shape right") {
  SynthConfig c;
  c.class_count = 2;
  c.videos_per_class = 5;
  for (const auto& item : generate_synthetic_dataset(c).items) {
    if (item.label != 1) continue;
    for (std::size_t t = 0; t + 1 < item.video.frame_count(); ++t)
      CHECK(bright_centroid_x(item.video[t + 1]) > bright_centroid_x(item.video[t]));
  }
}

TEST_CASE("half-half split with a carved validation set") {
  const auto d = dataset(5, 20, 2);
  SplitProtocol p;
  p.carve_validation = true;
  const auto s = split_dataset(d, p, 3);
  CHECK(s.train.size() == 35);
  CHECK(s.validation.size() == 15);
  CHECK(s.test.size() == 50);
  for (Label c = 0; c < 5; ++c) {
    auto count = [c](const std::vector<LabeledVideo>& v) {
      return std::count_if(v.begin(), v.end(), [c](const LabeledVideo& x) { return x.label == c; });
    };
    CHECK(count(s.train) == 7);
    CHECK(count(s.validation) == 3);
    CHECK(count(s.test) == 10);
  }
  const auto tr = ids(s.train), va = ids(s.validation), te = ids(s.test);
  for (const auto& id : te) CHECK((tr.count(id) == 0 && va.count(id) == 0));
  for (const auto& id : va) CHECK(tr.count(id) == 0);
  CHECK(tr.size() + va.size() + te.size() == 100);

  const auto again = split_dataset(d, p, 3);
  CHECK(ids(again.test) == te);
  const auto plain = split_dataset(d, {}, 3);
  CHECK(plain.train.size() == 50);
  CHECK(plain.validation.empty());
}

TEST_CASE("odd classes put the extra video in train; tiny classes are rejected") {
  const auto s = split_dataset(dataset(2, 5, 2), {}, 1);
  CHECK(s.train.size() == 6);
  CHECK(s.test.size() == 4);
  CHECK_THROWS_AS(split_dataset(dataset(2, 2, 2), {}, 1), std::invalid_argument);
}

TEST_CASE("evaluate counts and confusion") {
  const auto d = dataset(2, 2);
  FeatureCache cache({}, {});
  SvmModel always0;
  always0.kernel = Kernel::linear();
  always0.class_count = 2;
  always0.binary = {BinaryModel{{}, {}, 1.0, 0}, BinaryModel{{}, {}, 0.0, 0}};
  std::vector<LabeledVideo> test{d.items[0], d.items[1], d.items[2], d.items[1]};
  const auto r = evaluate(always0, test, cache);
  CHECK(r.accuracy == 0.75);
  CHECK(r.confusion[0][0] == 3);
  CHECK(r.confusion[1][0] == 1);
  std::vector<LabeledVideo> zeros{d.items[0], d.items[1]};
  const auto perfect = evaluate(always0, zeros, cache);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.confusion[1][1] == 0);
  CHECK_THROWS_AS(evaluate(always0, std::vector<LabeledVideo>{}, cache), std::invalid_argument);
}

TEST_CASE("statistics helpers") {
  CHECK(mean_of({0.5, 0.7}) == Catch::Approx(0.6));
  CHECK(sample_std({0.5, 0.7}) == Catch::Approx(std::sqrt(0.02)));
  CHECK(sample_std({0.4}) == 0.0);
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("method names round-trip") {
  for (Method m : {Method::baseline, Method::da, Method::da_rotation, Method::uniform, Method::isr_method1,
                   Method::isr_method2})
    CHECK(method_from_string(to_string(m)) == m);
  CHECK_THROWS(method_from_string("isr"));
}

TEST_CASE("baseline equals DA with n = 0") {
  auto base = small_config(Method::baseline);
  auto da = small_config(Method::da);
  da.n = 0;
  const auto a = run_experiment(base), b = run_experiment(da);
  CHECK(a.mean_accuracy == b.mean_accuracy);
  for (std::size_t i = 0; i < a.seeds.size(); ++i) CHECK(a.seeds[i].confusion == b.seeds[i].confusion);
}

TEST_CASE("every method runs, keeps test data unwarped, and reports consistently") {
  for (Method m : {Method::baseline, Method::da, Method::da_rotation, Method::uniform, Method::isr_method1,
                   Method::isr_method2}) {
    auto cfg = small_config(m);
    if (m == Method::da_rotation) cfg.pool.rotations = {0.0, degrees(5.0)};
    const auto r = run_experiment(cfg);
    CAPTURE(to_string(m));
    CHECK(r.test_warps == 0);
    REQUIRE(r.seeds.size() == 2);
    std::vector<double> accs;
    for (const auto& s : r.seeds) {
      accs.push_back(s.accuracy);
      CHECK((s.accuracy >= 0.0 && s.accuracy <= 1.0));
      std::size_t total = 0;
      for (const auto& row : s.confusion)
        for (auto v : row) total += v;
      CHECK(total == s.test_videos);
      CHECK(s.transforms.size() <= 2);
      CHECK(s.transform_indices.size() == s.transforms.size());
    }
    CHECK(r.mean_accuracy == mean_of(accs));
    CHECK(r.std_accuracy == sample_std(accs));
    if (m == Method::isr_method1) {
      CHECK(r.seeds[0].trace.has_value());
      CHECK(r.seeds[0].validation_videos == 3 * 1);
    }
    if (m == Method::isr_method2) CHECK(r.seeds[0].greedy_rounds->size() == 2);
  }
}

TEST_CASE("stage errors name the failing stage") {
  auto cfg = small_config(Method::da);
  cfg.n = 7;
  try {
    run_experiment(cfg);
    FAIL("expected an error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "pool");
  }
  cfg = small_config(Method::baseline);
  cfg.synth.videos_per_class = 2;
  try {
    run_experiment(cfg);
    FAIL("expected an error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "seed 1 split");
  }
  cfg = small_config(Method::baseline);
  cfg.source = DatasetSource::manifest;
  CHECK_THROWS_AS(run_experiment(cfg), StageError);
}

TEST_CASE("config round-trips and rejects unknown keys") {
  ExperimentConfig c = small_config(Method::isr_method1);
  c.kernel = Kernel::histogram_intersection();
  c.method1.sigma = 1.5;
  c.method2.score_on_validation = true;
  const auto j = to_json(c);
  const auto back = experiment_config_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(back.pool.rotations == c.pool.rotations);

  auto bad = j;
  bad["classifier"]["gama"] = 1.0;
  CHECK_THROWS_AS(experiment_config_from_json(bad), ConfigError);
  bad = j;
  bad["extra"] = true;
  CHECK_THROWS_AS(experiment_config_from_json(bad), ConfigError);
  bad = j;
  bad["dataset"]["synthetic"]["colour"] = 1;
  CHECK_THROWS_AS(experiment_config_from_json(bad), ConfigError);
  bad = j;
  bad["method"] = "magic";
  CHECK_THROWS(experiment_config_from_json(bad));
  bad = j;
  bad["schema_version"] = 99;
  CHECK_THROWS_AS(experiment_config_from_json(bad), ConfigError);

  const auto defaults = experiment_config_from_json(nlohmann::json::object());
  CHECK(to_json(defaults) == to_json(ExperimentConfig{}));
}

TEST_CASE("model files reproduce decision values bit for bit") {
  const auto d = dataset(3, 4);
  FeatureCache cache({}, {});
  const auto pool = build_pool({});
  const auto m = train_with_transforms(
      make_spec(d.items, TransformSet({pool[7], pool[100]}), PipelineConfig{}, Kernel::chi2(0.37), 3), cache);
  const auto back = svm_model_from_json(nlohmann::json::parse(to_json(m).dump()));
  CHECK(back.temperature == m.temperature);
  for (const auto& v : d.items) {
    const auto& x = cache.resized(v);
    CHECK(svm_decision_values(back, x) == svm_decision_values(m, x));
  }
  auto broken = to_json(m);
  broken["kind"] = "transform_set";
  CHECK_THROWS_AS(svm_model_from_json(broken), ArtifactError);
}

TEST_CASE("transform sets and traces round-trip") {
  const TransformSet s({{0.5, -1.0, 1.1, degrees(5.0)}, {0.0, 0.5, 0.9, 0.0}});
  CHECK(transform_set_from_json(nlohmann::json::parse(to_json(s, {3, 9}).dump())) == s);

  SearchTrace t;
  t.reference_cap = 64;
  t.reference_samples = 100;
  t.records.push_back({0, true, 5, 0.0, -1.0, -0.3, std::exp(-0.3), 0.25, true, 1});
  t.records.push_back({1, false, 5, -1.0, 0.0, 0.1, std::exp(0.1), 0.9, true, 0});
  std::stringstream ss;
  write_trace(ss, t);
  const auto back = read_trace(ss);
  CHECK(back.reference_samples == 100);
  REQUIRE(back.records.size() == 2);
  CHECK(back.records[0].acceptance == t.records[0].acceptance);
  CHECK(back.records[1].add == false);
}

TEST_CASE("reports strip to identical content across reruns") {
  const auto cfg = small_config(Method::isr_method2);
  const auto a = strip_volatile(to_json(run_experiment(cfg), cfg));
  const auto b = strip_volatile(to_json(run_experiment(cfg), cfg));
  CHECK(a.dump() == b.dump());
  CHECK_FALSE(a.contains("timestamp"));
  CHECK(a["seeds"][0].contains("greedy_rounds"));
}
