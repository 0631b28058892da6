#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "isr/isr.hpp"

namespace fs = std::filesystem;
using namespace isr;

namespace {

struct Common {
  std::string config;
  std::string manifest;
  std::uint64_t seed = 1;
};

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_experiment_config(c.config);
  if (!c.manifest.empty()) {
    cfg.source = DatasetSource::manifest;
    cfg.manifest = c.manifest;
  }
  return cfg;
}

Dataset load_dataset(const ExperimentConfig& cfg) {
  Dataset d = cfg.source == DatasetSource::synthetic ? generate_synthetic_dataset(cfg.synth)
                                                     : ingest_frames_dir(cfg.manifest, cfg.downsample.target_width,
                                                                         cfg.downsample.target_height);
  const auto problems = validate_dataset(d);
  if (!problems.empty()) {
    for (const auto& p : problems) std::cerr << "dataset: " << p << '\n';
    throw std::runtime_error("dataset failed validation");
  }
  return d;
}

Split split_for(const ExperimentConfig& cfg, const Dataset& d, std::uint64_t seed) {
  SplitProtocol p = cfg.split;
  p.carve_validation = p.carve_validation || cfg.method == Method::isr_method1 ||
                       (cfg.method == Method::isr_method2 && cfg.method2.score_on_validation);
  return split_dataset(d, p, derive_seed(seed, 0));
}

void write_trace_file(const fs::path& p, const SearchTrace& t) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  write_trace(out, t);
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  app->add_option("-m,--manifest", c.manifest, "Dataset manifest; overrides the config's dataset")
      ->check(CLI::ExistingFile);
  app->add_option("-s,--seed", c.seed, "Seed selecting the split and method randomness");
}

int cmd_synth(const Common& c, const std::string& out) {
  const auto cfg = load(c);
  const auto d = generate_synthetic_dataset(cfg.synth);
  const auto manifest = write_dataset(d, out);
  std::cout << "wrote " << d.items.size() << " videos, manifest " << manifest.string() << '\n';
  return 0;
}

int cmd_learn(const Common& c, const std::string& out, const std::string& trace) {
  const auto cfg = load(c);
  const auto d = load_dataset(cfg);
  const auto pool = build_pool(cfg.pool);
  const auto split = split_for(cfg, d, c.seed);
  FeatureCache cache(cfg.downsample, cfg.features);
  const auto outcome = select_transforms(cfg, pool, split, cache, c.seed);
  save_transform_set(out, outcome.set, outcome.indices);
  if (!trace.empty()) {
    if (!outcome.trace) std::cerr << "note: method " << to_string(cfg.method) << " produces no search trace\n";
    else write_trace_file(trace, *outcome.trace);
  }
  std::cout << to_string(cfg.method) << ": " << outcome.set.size() << " transforms -> " << out << '\n';
  return 0;
}

int cmd_train(const Common& c, const std::string& transforms, const std::string& out) {
  const auto cfg = load(c);
  const auto d = load_dataset(cfg);
  const auto split = split_for(cfg, d, c.seed);
  std::vector<LabeledVideo> train = split.train;
  train.insert(train.end(), split.validation.begin(), split.validation.end());
  const TransformSet set = transforms.empty() ? TransformSet{} : load_transform_set(transforms);
  FeatureCache cache(cfg.downsample, cfg.features);
  const auto pipeline = cfg.pipeline();
  const Kernel kernel = resolve_kernel(pipeline, train, cache);
  const auto model = train_with_transforms(make_spec(train, set, pipeline, kernel, d.class_count()), cache);
  save_model(out, model);
  std::cout << "trained on " << train.size() * (set.size() + 1) << " samples -> " << out << '\n';
  return 0;
}

int cmd_eval(const Common& c, const std::string& model_path, const std::string& out) {
  const auto cfg = load(c);
  const auto d = load_dataset(cfg);
  const auto split = split_for(cfg, d, c.seed);
  const auto model = load_model(model_path);
  FeatureCache cache(cfg.downsample, cfg.features);
  const auto ev = evaluate(model, split.test, cache);
  nlohmann::json j{{"schema_version", kSchemaVersion},
                   {"kind", "eval_fragment"},
                   {"seed", c.seed},
                   {"accuracy", ev.accuracy},
                   {"correct", ev.correct},
                   {"total", ev.total},
                   {"confusion", ev.confusion},
                   {"class_names", d.class_names}};
  std::ofstream(out) << j.dump(2) << '\n';
  std::printf("accuracy %.4f (%zu/%zu) -> %s\n", ev.accuracy, ev.correct, ev.total, out.c_str());
  return 0;
}

int cmd_run(const Common& c, const std::string& out, const std::string& trace_dir) {
  const auto cfg = load(c);
  const auto report = run_experiment(cfg, [&](const std::string& m) {
    return ingest_frames_dir(m, cfg.downsample.target_width, cfg.downsample.target_height);
  });
  std::vector<std::string> traces;
  if (!trace_dir.empty()) {
    for (const auto& s : report.seeds) {
      if (!s.trace) {
        traces.emplace_back();
        continue;
      }
      const auto name = "trace_seed" + std::to_string(s.seed) + ".jsonl";
      write_trace_file(fs::path(trace_dir) / name, *s.trace);
      traces.push_back(name);
    }
  }
  const auto j = to_json(report, cfg, traces);
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  std::ofstream(out) << j.dump(2) << '\n';
  std::printf("%s n=%zu mean %.4f std %.4f over %zu seeds (%.1fs) -> %s\n", to_string(report.method).c_str(),
              report.n, report.mean_accuracy, report.std_accuracy, report.seeds.size(), report.wall_seconds,
              out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned low-resolution training augmentation for video classification"};
  app.require_subcommand(1);
  Common common;

  std::string out, trace, transforms, model, trace_dir;

  auto* synth = app.add_subcommand("synth", "Write the synthetic dataset as frame files plus a manifest");
  add_common(synth, common);
  synth->add_option("-o,--out", out, "Output directory")->required();

  auto* learn = app.add_subcommand("learn-transforms", "Select a transform set with the configured method");
  add_common(learn, common);
  learn->add_option("-o,--out", out, "Transform set file")->required();
  learn->add_option("-t,--trace", trace, "Search trace file (method 1)");

  auto* train = app.add_subcommand("train", "Train a classifier on resized plus transformed samples");
  add_common(train, common);
  train->add_option("-T,--transforms", transforms, "Transform set file; omit for resize-only training")
      ->check(CLI::ExistingFile);
  train->add_option("-o,--out", out, "Model file")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a model on the seed's test split");
  add_common(eval, common);
  eval->add_option("-M,--model", model, "Model file")->required()->check(CLI::ExistingFile);
  eval->add_option("-o,--out", out, "Report file")->required();

  auto* run = app.add_subcommand("run", "Run a full experiment over all configured seeds");
  add_common(run, common);
  run->add_option("-o,--out", out, "Report file")->required();
  run->add_option("--trace-dir", trace_dir, "Directory for per-seed search traces");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return cmd_synth(common, out);
    if (*learn) return cmd_learn(common, out, trace);
    if (*train) return cmd_train(common, transforms, out);
    if (*eval) return cmd_eval(common, model, out);
    if (*run) return cmd_run(common, out, trace_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
