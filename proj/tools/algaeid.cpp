// Command-line front end. Configuration precedence, lowest to highest:
// built-in defaults, --config file, --set key=value, dedicated flags.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "algaeid/error.hpp"
#include "algaeid/features.hpp"
#include "algaeid/formats.hpp"
#include "algaeid/model_io.hpp"
#include "algaeid/pipeline.hpp"
#include "algaeid/standardize.hpp"

namespace fs = std::filesystem;
using namespace algaeid;

namespace {

struct Settings {
  std::string config_file;
  std::vector<std::string> sets;
  std::vector<std::pair<std::string, std::string>> flags;

  PipelineConfig resolve() const {
    PipelineConfig cfg;
    if (!config_file.empty()) load_config_file(config_file, cfg);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::ConfigOutOfRange, "--set expects key=value, got '" + s + "'");
      set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    for (const auto& [k, v] : flags) set_config_value(cfg, k, v);
    return cfg;
  }
};

std::string default_of(const std::string& key) {
  static const PipelineConfig defaults;
  for (const auto& k : config_keys()) {
    if (k.name == key) return k.get(defaults);
  }
  return {};
}

std::string help_of(const std::string& key) {
  for (const auto& k : config_keys()) {
    if (k.name == key) return k.help;
  }
  return {};
}

// A flag taking a value that lands in config key `key`.
void key_option(CLI::App* app, Settings& s, const std::string& flag, const std::string& key) {
  app->add_option_function<std::string>(
         flag, [&s, key](const std::string& v) { s.flags.emplace_back(key, v); }, help_of(key) + " (" + key + ")")
      ->default_str(default_of(key));
}

// A switch that sets config key `key` to `value`.
void key_switch(CLI::App* app, Settings& s, const std::string& flag, const std::string& key, const std::string& value,
                const std::string& help) {
  app->add_flag_callback(flag, [&s, key, value] { s.flags.emplace_back(key, value); }, help + " (" + key + "=" + value + ")");
}

void common_options(CLI::App* app, Settings& s) {
  app->add_option("--config", s.config_file, "key=value configuration file");
  app->add_option("--set", s.sets, "override any configuration key, key=value (repeatable)");
  key_option(app, s, "--seed", "seed");
}

void preprocess_options(CLI::App* app, Settings& s) {
  key_option(app, s, "--clahe-tiles", "preprocess.clahe_tiles");
  key_option(app, s, "--clahe-clip", "preprocess.clahe_clip");
  key_option(app, s, "--levels", "preprocess.levels");
  key_switch(app, s, "--no-clahe", "preprocess.clahe", "false", "skip CLAHE");
  key_option(app, s, "--min-area", "segment.min_area");
  key_option(app, s, "--max-area", "segment.max_area");
  key_switch(app, s, "--no-child-rule", "segment.require_child", "false", "accept contours without an inner contour");
  key_switch(app, s, "--no-align", "segment.align", "false", "keep patches in frame orientation");
  key_switch(app, s, "--no-refine", "segment.refine", "false", "skip the active contour");
}

void classifier_options(CLI::App* app, Settings& s, const std::string& kind_flag) {
  key_option(app, s, kind_flag, "classifier");
  key_option(app, s, "--kernel", "svm.kernel");
  key_option(app, s, "--C", "svm.C");
  key_option(app, s, "--gamma", "svm.gamma");
  key_option(app, s, "--tau", "ann.tau");
  key_option(app, s, "--epochs", "ann.epochs");
}

std::vector<int> selection_from(const std::string& ranking_path) {
  if (ranking_path.empty()) {
    std::vector<int> all(kFeatureDim);
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  const auto [ranking, choice] = ranking_from_json(read_json(ranking_path));
  return {ranking.order.begin(), ranking.order.begin() + choice.l};
}

LabeledDataset dataset_from(const std::string& path) {
  LabeledDataset ds = to_dataset(read_features_csv(path), path);
  if (ds.size() == 0) throw Error(ErrorCode::TooFewSamples, path + ": no labelled rows");
  return ds;
}

std::vector<Frame> frames_for(const PipelineConfig& cfg) {
  if (cfg.synth_per_class > 0) return synth_frames(cfg.synth_per_class, cfg.synth, cfg.seed);
  if (cfg.manifest.empty()) throw Error(ErrorCode::ConfigOutOfRange, "give --in manifest.csv or --synth N");
  return load_frames(cfg.manifest);
}

// ---------------------------------------------------------------------------

int cmd_synth(const Settings& s) {
  const PipelineConfig cfg = s.resolve();
  if (cfg.synth_per_class < 1) throw Error(ErrorCode::ConfigOutOfRange, "--per-class must be >= 1");
  const auto rows = write_dataset(generate_frames(cfg.synth_per_class, cfg.synth, cfg.seed), cfg.out_dir);
  std::printf("wrote %zu frames to %s\n", rows.size(), cfg.out_dir.string().c_str());
  return 0;
}

int cmd_segment(const Settings& s) {
  PipelineConfig cfg = s.resolve();
  validate(cfg);
  const auto frames = load_frames(cfg.manifest);
  const auto segs = segment_frames(frames, cfg.segment);
  std::vector<PatchRecord> kept;
  std::vector<PatchDrop> dropped;
  collect_patches(frames, segs, kept, dropped);
  write_patches(cfg.out_dir, kept, dropped);
  std::printf("%zu frames: %zu patches kept, %zu candidates dropped\n", frames.size(), kept.size(), dropped.size());
  return 0;
}

int cmd_features(const std::string& patches, const std::string& out) {
  const auto recs = read_patches(patches);
  std::vector<std::size_t> failed;
  const auto rows = compute_features(recs, &failed);
  for (std::size_t i : failed) std::fprintf(stderr, "skipped %s: descriptor failed\n", recs[i].sample_id.c_str());
  write_features_csv(out, rows);
  std::printf("%zu feature rows written to %s\n", rows.size(), out.c_str());
  return 0;
}

int cmd_select(const Settings& s, const std::string& features, const std::string& out) {
  const PipelineConfig cfg = s.resolve();
  validate_settings(cfg);
  const LabeledDataset ds = dataset_from(features);
  const Eigen::MatrixXd x = to_matrix(ds);
  const SfsRanking r = sfs_rank(Standardizer::fit(x).apply_rows(x), labels_of(ds), cfg.sfs_options());
  const LChoice c = choose_l(r);
  write_json(out, ranking_to_json(r, c));
  std::printf("l = %d, accuracy %.4f +- %.4f\n", c.l, c.accuracy, c.std);
  return 0;
}

int cmd_train(const Settings& s, const std::string& features, const std::string& ranking, const std::string& out) {
  const PipelineConfig cfg = s.resolve();
  validate_settings(cfg);
  const LabeledDataset ds = dataset_from(features);
  const Eigen::MatrixXd x = to_matrix(ds);
  const auto y = labels_of(ds);
  const std::vector<int> selected = selection_from(ranking);
  ClassifierConfig cc = cfg.classifier_config();
  if (cfg.grid) cc = grid_search(select_columns(x, selected), y, cc, cfg.cv_folds, cfg.seed).best;
  save_model(train_full(x, y, selected, cc), out);
  std::printf("%s on %zu features -> %s\n", describe(cc).c_str(), selected.size(), out.c_str());
  return 0;
}

int cmd_evaluate(const Settings& s, const std::string& features, const std::string& ranking, const std::string& out) {
  const PipelineConfig cfg = s.resolve();
  validate_settings(cfg);
  const LabeledDataset ds = dataset_from(features);
  const std::vector<int> selected = selection_from(ranking);
  const CVReport r = kfold_cv(select_columns(to_matrix(ds), selected), labels_of(ds), cfg.cv_folds,
                              cfg.classifier_config(), cfg.seed);
  nlohmann::json rep;
  rep["format_version"] = 1;
  rep["timestamp"] = utc_timestamp();
  rep["seed"] = cfg.seed;
  rep["config"] = config_to_json(cfg);
  rep["features"] = features;
  rep["selected"] = selected;
  rep["classifier"] = describe(cfg.classifier_config());
  rep["classification"] = cv_to_json(r);
  rep["mean_accuracy"] = r.mean;
  rep["std_accuracy"] = r.std;
  write_json(out, rep);
  std::printf("%d-fold accuracy %.4f +- %.4f\n", r.k, r.mean, r.std);
  return 0;
}

int cmd_pipeline(const Settings& s) {
  const PipelineConfig cfg = s.resolve();
  const PipelineOutputs out = run_pipeline_to_disk(cfg);
  std::printf("%s: accuracy %.4f +- %.4f over %d folds; outputs in %s\n", describe(out.experiment.final_config).c_str(),
              out.experiment.cv.mean, out.experiment.cv.std, out.experiment.cv.k, cfg.out_dir.string().c_str());
  return 0;
}

int cmd_timing(const Settings& s, const std::string& model_path, const std::string& out) {
  const PipelineConfig cfg = s.resolve();
  validate(cfg);
  const auto frames = frames_for(cfg);
  TrainedModel model;
  if (!model_path.empty()) {
    model = load_model(model_path);
  } else {
    // No model given: fit one on the same frames so prediction cost is realistic.
    std::vector<PatchRecord> kept;
    std::vector<PatchDrop> dropped;
    collect_patches(frames, segment_frames(frames, cfg.segment), kept, dropped);
    const LabeledDataset ds = to_dataset(compute_features(kept, nullptr), "timing");
    std::vector<int> all(kFeatureDim);
    std::iota(all.begin(), all.end(), 0);
    model = train_full(to_matrix(ds), labels_of(ds), all, cfg.classifier_config());
  }
  const TimingReport t = time_per_alga(frames, cfg.segment, model);
  std::printf("per-alga time: %.4f +- %.4f s over %d patches\n", t.mean_s, t.std_s, t.patches);
  if (!out.empty()) {
    write_json(out, {{"timestamp", utc_timestamp()}, {"patches", t.patches}, {"mean_s", t.mean_s}, {"std_s", t.std_s}});
  }
  return 0;
}

std::string keys_footer() {
  std::string f = "Configuration keys (defaults):\n";
  const PipelineConfig d;
  for (const auto& k : config_keys()) f += "  " + k.name + " = " + k.get(d) + "    " + k.help + "\n";
  return f;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coenobium segmentation, description and classification"};
  app.require_subcommand(1);
  app.footer(keys_footer());
  Settings s;
  std::string patches, features, ranking, model, out_file;

  auto* synth = app.add_subcommand("synth", "render a synthetic labelled corpus");
  common_options(synth, s);
  key_option(synth, s, "--per-class", "synth.per_class");
  key_option(synth, s, "--out", "output.dir");
  key_option(synth, s, "--width", "synth.width");
  key_option(synth, s, "--height", "synth.height");
  key_switch(synth, s, "--grid-lines", "synth.grid_lines", "true", "draw chamber grid lines");

  auto* segment = app.add_subcommand("segment", "cut candidate algae out of every manifest image");
  common_options(segment, s);
  key_option(segment, s, "--in", "input.manifest");
  key_option(segment, s, "--out", "output.dir");
  preprocess_options(segment, s);

  auto* feats = app.add_subcommand("features", "describe every patch with the 215 features");
  feats->add_option("--patches", patches, "directory written by segment")->required();
  feats->add_option("--out", out_file, "features.csv to write")->required();

  auto* select = app.add_subcommand("select", "rank features by forward selection");
  common_options(select, s);
  select->add_option("--features", features, "features.csv")->required();
  key_option(select, s, "--criterion", "select.criterion");
  key_option(select, s, "--folds", "select.folds");
  select->add_option("--out", out_file, "ranking.json to write")->required();

  auto* train = app.add_subcommand("train", "fit a classifier and write model.bin");
  common_options(train, s);
  train->add_option("--features", features, "features.csv")->required();
  train->add_option("--ranking", ranking, "ranking.json; its best prefix becomes the feature subset");
  classifier_options(train, s, "--model");
  key_switch(train, s, "--grid", "train.grid", "true", "grid-search hyperparameters");
  key_switch(train, s, "--no-grid", "train.grid", "false", "use the given hyperparameters");
  key_option(train, s, "--k", "evaluate.folds");
  train->add_option("--out", out_file, "model.bin to write")->required();

  auto* evaluate = app.add_subcommand("evaluate", "k-fold cross-validation of one classifier configuration");
  common_options(evaluate, s);
  evaluate->add_option("--features", features, "features.csv")->required();
  evaluate->add_option("--model-config", s.config_file, "key=value file with classifier settings (same as --config)");
  evaluate->add_option("--ranking", ranking, "ranking.json; its best prefix becomes the feature subset");
  classifier_options(evaluate, s, "--classifier");
  key_option(evaluate, s, "--k", "evaluate.folds");
  evaluate->add_option("--out", out_file, "report.json to write")->default_str("report.json");

  auto* pipeline = app.add_subcommand("pipeline", "segment, describe, select, train and evaluate in one run");
  common_options(pipeline, s);
  key_option(pipeline, s, "--synth", "synth.per_class");
  key_option(pipeline, s, "--in", "input.manifest");
  key_option(pipeline, s, "--out", "output.dir");
  preprocess_options(pipeline, s);
  classifier_options(pipeline, s, "--classifier");
  key_switch(pipeline, s, "--sfs", "select.sfs", "true", "forward selection of the feature subset");
  key_option(pipeline, s, "--sfs-criterion", "select.criterion");
  key_switch(pipeline, s, "--no-grid", "train.grid", "false", "skip the hyperparameter grid");
  key_option(pipeline, s, "--k", "evaluate.folds");

  auto* timing = app.add_subcommand("timing", "per-alga processing time");
  common_options(timing, s);
  key_option(timing, s, "--synth", "synth.per_class");
  key_option(timing, s, "--in", "input.manifest");
  preprocess_options(timing, s);
  timing->add_option("--model", model, "model.bin; without it a default SVM is fitted on the same frames");
  timing->add_option("--out", out_file, "optional JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }

  if (out_file.empty() && evaluate->parsed()) out_file = "report.json";
  try {
    if (synth->parsed()) return cmd_synth(s);
    if (segment->parsed()) return cmd_segment(s);
    if (feats->parsed()) return cmd_features(patches, out_file);
    if (select->parsed()) return cmd_select(s, features, out_file);
    if (train->parsed()) return cmd_train(s, features, ranking, out_file);
    if (evaluate->parsed()) return cmd_evaluate(s, features, ranking, out_file);
    if (pipeline->parsed()) return cmd_pipeline(s);
    if (timing->parsed()) return cmd_timing(s, model, out_file);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 3;
  }
  return 3;
}
