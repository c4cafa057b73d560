#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "algaeid/classifier.hpp"
#include "algaeid/evaluate.hpp"
#include "algaeid/formats.hpp"
#include "algaeid/segment.hpp"
#include "algaeid/select.hpp"
#include "algaeid/synth.hpp"

namespace algaeid {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class ClassifierKind { Svm, Ann };

struct PipelineConfig {
  std::uint64_t seed = 1;
  std::filesystem::path manifest;  // real input; ignored when synth_per_class > 0
  std::filesystem::path out_dir = "out";
  int synth_per_class = 0;
  SynthConfig synth;
  SegmentConfig segment;
  ClassifierKind classifier = ClassifierKind::Svm;
  SvmConfig svm;
  AnnConfig ann;
  bool sfs = false;
  ClassifierKind sfs_criterion = ClassifierKind::Svm;  // linear SVM C=1, or the ANN config
  int sfs_folds = 5;
  bool grid = true;
  int cv_folds = 10;
  double report_tolerance = 0.8;

  /// The classifier the experiment trains, with seeds filled in.
  ClassifierConfig classifier_config() const;
  SfsOptions sfs_options() const;
};

/// One documented key of the flat key=value configuration.
struct ConfigKey {
  std::string name;
  std::string help;
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, const std::string&)> set;  // throws ConfigOutOfRange
};

const std::vector<ConfigKey>& config_keys();
/// Unknown keys and unparsable values throw ConfigOutOfRange.
void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value);
/// `key = value` lines; `#` starts a comment. Later lines win.
void load_config_file(const std::filesystem::path& path, PipelineConfig& cfg);
/// Range checks on every stage setting (C > 0, folds >= 2, ...). Throws ConfigOutOfRange.
void validate_settings(const PipelineConfig& cfg);
/// validate_settings plus the presence of an input source.
void validate(const PipelineConfig& cfg);
/// Every key with its resolved value, as strings.
nlohmann::json config_to_json(const PipelineConfig& cfg);

/// 1 for configuration problems, 2 for bad or missing data, 3 otherwise.
int exit_code_for(ErrorCode code);

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

struct Frame {
  std::string id;  // path as listed, or the generated file name
  GrayImage image;
  std::optional<LabelClass> label;
  std::optional<BinaryMask> truth;
};

/// Loads every manifest image, plus gt_*.pgm ground truth where present.
std::vector<Frame> load_frames(const std::filesystem::path& manifest);
std::vector<Frame> synth_frames(int per_class, const SynthConfig& base, std::uint64_t seed);

/// Frames segmented concurrently; the result does not depend on scheduling.
std::vector<SegmentResult> segment_frames(const std::vector<Frame>& frames, const SegmentConfig& cfg);
std::vector<SegmentResult> segment_frames_serial(const std::vector<Frame>& frames, const SegmentConfig& cfg);

/// Sample ids are "<frame stem>_<k>"; dropped candidates become PatchDrop rows.
void collect_patches(const std::vector<Frame>& frames, const std::vector<SegmentResult>& segs,
                     std::vector<PatchRecord>& kept, std::vector<PatchDrop>& dropped);

/// Feature rows for patches whose descriptors succeeded; `failed` receives the
/// indices (into `patches`) that did not.
std::vector<FeatureRow> compute_features(const std::vector<PatchRecord>& patches, std::vector<std::size_t>* failed);

struct SegmentationEval {
  int frames = 0;  // frames with ground truth
  HooverCurves pooled;      // counts summed over frames
  HooverCurves per_image;   // fractions averaged over frames
  double precision_mean = 0, precision_std = 0;
  double recall_mean = 0, recall_std = 0;
  double f_mean = 0, f_std = 0;
};

SegmentationEval evaluate_segmentation(const std::vector<Frame>& frames, const std::vector<SegmentResult>& segs,
                                       const std::vector<double>& tolerances);

struct TimingReport {
  int patches = 0;
  double mean_s = 0.0;
  double std_s = 0.0;
};

/// Per alga: the frame's segmentation time shared over its patches, plus
/// feature extraction and prediction. Runs single-threaded. Throws
/// TooFewPatches below 30 patches.
TimingReport time_per_alga(const std::vector<Frame>& frames, const SegmentConfig& cfg, const TrainedModel& model);

// ---------------------------------------------------------------------------
// Experiment
// ---------------------------------------------------------------------------

struct ExperimentResult {
  std::optional<SfsRanking> ranking;
  std::optional<LChoice> choice;
  std::vector<int> selected;
  std::optional<GridResult> grid;
  ClassifierConfig final_config;
  CVReport cv;
  TrainedModel model;
};

/// Optional SFS (on globally standardized data), optional grid search, then
/// k-fold CV at the chosen configuration and a final model on all samples.
ExperimentResult run_experiment(const LabeledDataset& data, const PipelineConfig& cfg);

nlohmann::json cv_to_json(const CVReport& r);
nlohmann::json grid_to_json(const GridResult& g);
nlohmann::json segmentation_to_json(const SegmentationEval& e, double tolerance);

struct PipelineOutputs {
  nlohmann::json report;
  HooverCurves hoover;  // pooled; empty without ground truth
  std::vector<FrameCount> counts;
  ExperimentResult experiment;
};

/// Whole chain from frames to report. Writes nothing.
PipelineOutputs run_pipeline(const PipelineConfig& cfg);
/// run_pipeline plus report.json, hoover.csv, model.bin and counts.csv in cfg.out_dir.
PipelineOutputs run_pipeline_to_disk(const PipelineConfig& cfg);

/// ISO-8601 UTC; the only field of report.json that varies between identical runs.
std::string utc_timestamp();

}  // namespace algaeid
